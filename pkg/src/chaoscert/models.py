"""Built-in model systems.

Vector-field models:

* ``example1``: planar limit-cycle normal form with decoupled vertical
  forcing, parameters ``alpha`` in (0,1) and ``gamma`` > 0.  The unit circle
  in the z=0 plane is a hyperbolic periodic orbit of period 2*pi.
* ``example2``: variant whose vertical coordinate feeds back into the planar
  part, parameters ``alpha`` > 0 and a constant (or callable) ``f3``.
* ``mobius``: linear saddle field on the slab [-1,1]^2 x [1,2] with the faces
  z=1 and z=2 glued by (x, y) -> (-x, -y).  Its core periodic orbit has
  negative transversal multipliers (one-sided invariant bands).
* ``degenerate_rotation``: rigid rotation about the z-axis; every circle is a
  non-hyperbolic periodic orbit.  Ships as a negative control.

Map-level models (affine horseshoe, synthetic half-period pair, two-orbit
layout) live further down and build on :mod:`chaoscert.horseshoe`.
"""

import numpy as np

from . import backend
from .flow import ChartRule, SystemDef

__all__ = [
    "make_example1",
    "make_example2",
    "make_mobius",
    "make_degenerate_rotation",
    "make_affine_model",
    "make_synthetic_halfperiod",
    "make_two_orbit_layout",
    "builtin_system",
    "BUILTIN_SYSTEMS",
]


# -- vector-field kernels (nopython convention fn(x, params, out)) ----------


def _example1_field(x, params, out):
    alpha = params[0]
    gamma = params[1]
    r2 = x[0] * x[0] + x[1] * x[1]
    f1 = -alpha * x[0] * r2
    f2 = -alpha * x[1] * r2
    v = r2 - 1.0
    out[0] = -x[1] + v * f1
    out[1] = x[0] + v * f2
    out[2] = (x[2] + v) * gamma


def _example1_jac(x, params, out):
    alpha = params[0]
    gamma = params[1]
    xx = x[0]
    yy = x[1]
    r2 = xx * xx + yy * yy
    v = r2 - 1.0
    f1 = -alpha * xx * r2
    f2 = -alpha * yy * r2
    f1x = -alpha * (3.0 * xx * xx + yy * yy)
    f1y = -2.0 * alpha * xx * yy
    f2x = -2.0 * alpha * xx * yy
    f2y = -alpha * (xx * xx + 3.0 * yy * yy)
    out[0, 0] = 2.0 * xx * f1 + v * f1x
    out[0, 1] = -1.0 + 2.0 * yy * f1 + v * f1y
    out[0, 2] = 0.0
    out[1, 0] = 1.0 + 2.0 * xx * f2 + v * f2x
    out[1, 1] = 2.0 * yy * f2 + v * f2y
    out[1, 2] = 0.0
    out[2, 0] = 2.0 * xx * gamma
    out[2, 1] = 2.0 * yy * gamma
    out[2, 2] = gamma


def _example2_field(x, params, out):
    alpha = params[0]
    f3 = params[1]
    r2 = x[0] * x[0] + x[1] * x[1]
    f1 = -alpha * x[0] * r2
    f2 = -alpha * x[1] * r2
    w = x[2] + r2 - 1.0
    out[0] = -x[1] + w * f1
    out[1] = x[0] + w * f2
    out[2] = w * f3


def _example2_jac(x, params, out):
    alpha = params[0]
    f3 = params[1]
    xx = x[0]
    yy = x[1]
    r2 = xx * xx + yy * yy
    w = x[2] + r2 - 1.0
    f1 = -alpha * xx * r2
    f2 = -alpha * yy * r2
    f1x = -alpha * (3.0 * xx * xx + yy * yy)
    f1y = -2.0 * alpha * xx * yy
    f2x = -2.0 * alpha * xx * yy
    f2y = -alpha * (xx * xx + 3.0 * yy * yy)
    out[0, 0] = 2.0 * xx * f1 + w * f1x
    out[0, 1] = -1.0 + 2.0 * yy * f1 + w * f1y
    out[0, 2] = f1
    out[1, 0] = 1.0 + 2.0 * xx * f2 + w * f2x
    out[1, 1] = 2.0 * yy * f2 + w * f2y
    out[1, 2] = f2
    out[2, 0] = 2.0 * xx * f3
    out[2, 1] = 2.0 * yy * f3
    out[2, 2] = f3


def _mobius_field(x, params, out):
    out[0] = -x[0]
    out[1] = x[1]
    out[2] = 1.0


def _mobius_jac(x, params, out):
    for i in range(3):
        for j in range(3):
            out[i, j] = 0.0
    out[0, 0] = -1.0
    out[1, 1] = 1.0


def _rotation_field(x, params, out):
    out[0] = -x[1]
    out[1] = x[0]
    out[2] = 0.0


def _rotation_jac(x, params, out):
    for i in range(3):
        for j in range(3):
            out[i, j] = 0.0
    out[0, 1] = -1.0
    out[1, 0] = 1.0


_k_example1_field = backend.kernel(_example1_field)
_k_example1_jac = backend.kernel(_example1_jac)
_k_example2_field = backend.kernel(_example2_field)
_k_example2_jac = backend.kernel(_example2_jac)
_k_mobius_field = backend.kernel(_mobius_field)
_k_mobius_jac = backend.kernel(_mobius_jac)
_k_rotation_field = backend.kernel(_rotation_field)
_k_rotation_jac = backend.kernel(_rotation_jac)

_COMPILED = backend.NUMBA_ENABLED


def _example1_F(alpha, gamma):
    def F(point):
        x, y, _ = point
        r2 = x * x + y * y
        return (-alpha * x * r2, -alpha * y * r2, gamma)

    return F


def _example2_F(alpha, f3):
    def F(point):
        x, y, _ = point
        r2 = x * x + y * y
        f3v = f3(point) if callable(f3) else f3
        return (-alpha * x * r2, -alpha * y * r2, f3v)

    return F


def make_example1(alpha=0.5, gamma=0.3):
    """Limit-cycle model; the unit circle at z=0 is periodic with T = 2*pi."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    meta = {
        "kind": "example1",
        "alpha": float(alpha),
        "gamma": float(gamma),
        "F": _example1_F(alpha, gamma),
        "orbit_guess": (np.array([1.05, 0.0, 0.02]), 6.3),
    }
    return SystemDef(
        "example1", _k_example1_field, _k_example1_jac,
        parameters={"alpha": float(alpha), "gamma": float(gamma)},
        params_array=np.array([alpha, gamma], dtype=float),
        compiled=_COMPILED, meta=meta,
    )


def make_example2(alpha=0.5, f3=1.0):
    """Feedback variant; ``f3`` may be a constant or a callable of the point."""
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if callable(f3):
        alpha_c = float(alpha)
        f3_c = f3

        def field(x):
            r2 = x[0] * x[0] + x[1] * x[1]
            w = x[2] + r2 - 1.0
            f1 = -alpha_c * x[0] * r2
            f2 = -alpha_c * x[1] * r2
            return np.array([-x[1] + w * f1, x[0] + w * f2, w * f3_c(x)])

        meta = {"kind": "example2", "alpha": alpha_c, "f3": f3_c,
                "F": _example2_F(alpha_c, f3_c),
                "orbit_guess": (np.array([1.02, 0.0, 0.01]), 6.3)}
        return SystemDef.from_callables("example2", field,
                                        parameters={"alpha": alpha_c}, meta=meta)
    meta = {
        "kind": "example2",
        "alpha": float(alpha),
        "f3": float(f3),
        "F": _example2_F(float(alpha), float(f3)),
        "orbit_guess": (np.array([1.02, 0.0, 0.01]), 6.3),
    }
    return SystemDef(
        "example2", _k_example2_field, _k_example2_jac,
        parameters={"alpha": float(alpha), "f3": float(f3)},
        params_array=np.array([alpha, f3], dtype=float),
        compiled=_COMPILED, meta=meta,
    )


def make_mobius():
    """Quotient slab with glued end faces; core orbit (0,0,t), period 1."""
    glue_lin = np.diag([-1.0, -1.0, 1.0])
    rules = (
        ChartRule((0.0, 0.0, 1.0), 2.0,
                  lambda p: np.array([-p[0], -p[1], 1.0]), glue_lin),
        ChartRule((0.0, 0.0, -1.0), -1.0,
                  lambda p: np.array([-p[0], -p[1], 2.0]), glue_lin),
    )
    domain = np.array([[-1.0, 1.0], [-1.0, 1.0], [1.0, 2.0]])
    meta = {"kind": "mobius", "orbit_guess": (np.array([0.0, 0.0, 1.2]), 1.0)}
    return SystemDef(
        "mobius", _k_mobius_field, _k_mobius_jac,
        parameters={}, params_array=np.zeros(1),
        compiled=_COMPILED, domain=domain, chart_rules=rules, meta=meta,
    )


def make_degenerate_rotation():
    """Rigid rotation; every circle is periodic and non-hyperbolic."""
    meta = {"kind": "degenerate_rotation",
            "orbit_guess": (np.array([1.0, 0.0, 0.0]), 2.0 * np.pi)}
    return SystemDef(
        "degenerate_rotation", _k_rotation_field, _k_rotation_jac,
        parameters={}, params_array=np.zeros(1),
        compiled=_COMPILED, meta=meta,
    )


BUILTIN_SYSTEMS = {
    "example1": make_example1,
    "example2": make_example2,
    "mobius": make_mobius,
    "degenerate_rotation": make_degenerate_rotation,
}


def builtin_system(name, **params):
    """Instantiate a built-in vector-field system by name."""
    try:
        factory = BUILTIN_SYSTEMS[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {sorted(BUILTIN_SYSTEMS)}")
    return factory(**params)
