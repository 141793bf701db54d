"""Flow engine: dense-output integration, variational flow, sections, Poincare maps.

Systems are 3-D autonomous vector fields.  Integration uses the adaptive
Dormand-Prince 5(4) core from :mod:`chaoscert._rk`; systems built from
nopython kernels run on the compiled backend when it is active, everything
else runs the identical source uncompiled.

Quotient charts (the Mobius model) are handled at the driver level: when a
trajectory exits through a declared gluing face, the crossing is localized on
the dense interpolant, the gluing map is applied to the state (and its
linearization to the variational matrix) and integration continues from the
glued point.
"""

import csv
import json
import math

import numpy as np

from . import _rk, backend
from .errors import (
    DomainEscape,
    NonFiniteState,
    NoSectionHit,
    NotOnSection,
    StepLimitExceeded,
    StepUnderflow,
    TangentialCrossing,
)

__all__ = [
    "IntegratorConfig",
    "ChartRule",
    "SystemDef",
    "SectionDef",
    "SectionHit",
    "GlueEvent",
    "Trajectory",
    "integrate",
    "flow",
    "integrate_variational",
    "variational_flow",
    "section_hits",
    "poincare_map",
]

# Accepted hits must satisfy |Phi(x) . n| >= TRANSVERSALITY_REL * |Phi(x)|.
TRANSVERSALITY_REL = 1e-6
PLANE_TOL = 1e-10
EVENT_MAX_ITER = 60


class IntegratorConfig:
    """Tolerances and budgets for one integration run."""

    __slots__ = ("abs_tol", "rel_tol", "max_step", "max_steps", "escape_radius", "first_step")

    def __init__(self, abs_tol=1e-10, rel_tol=1e-10, max_step=math.inf,
                 max_steps=10_000_000, escape_radius=1e6, first_step=0.0):
        if abs_tol <= 0 or rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        self.abs_tol = float(abs_tol)
        self.rel_tol = float(rel_tol)
        self.max_step = float(max_step)
        self.max_steps = int(max_steps)
        self.escape_radius = float(escape_radius)
        self.first_step = float(first_step)

    def replace(self, **kw):
        vals = {k: getattr(self, k) for k in self.__slots__}
        vals.update(kw)
        return IntegratorConfig(**vals)

    def __repr__(self):
        return (f"IntegratorConfig(abs_tol={self.abs_tol}, rel_tol={self.rel_tol}, "
                f"max_step={self.max_step}, max_steps={self.max_steps})")


DEFAULT_CONFIG = IntegratorConfig()


class ChartRule:
    """Gluing rule for one quotient face.

    The face is the plane ``normal . x = offset``; the rule fires when the
    trajectory crosses from ``normal . x < offset`` to ``> offset`` (leaving
    the chart through that face).  ``glue_map`` re-enters the chart and
    ``linear`` is its derivative, applied to variational matrices.
    """

    __slots__ = ("normal", "offset", "glue_map", "linear")

    def __init__(self, normal, offset, glue_map, linear):
        self.normal = np.asarray(normal, dtype=float)
        self.offset = float(offset)
        self.glue_map = glue_map
        self.linear = np.asarray(linear, dtype=float)

    def g(self, x):
        return x[..., 0] * self.normal[0] + x[..., 1] * self.normal[1] \
            + x[..., 2] * self.normal[2] - self.offset


class SystemDef:
    """A named 3-D autonomous vector field.

    ``kernel_field`` / ``kernel_jac`` follow the nopython calling convention
    ``fn(x, params, out)``.  ``compiled`` marks them as numba dispatchers,
    which makes the system eligible for the compiled integration driver.
    """

    def __init__(self, name, kernel_field, kernel_jac=None, parameters=None,
                 params_array=None, compiled=False, domain=None, chart_rules=(),
                 meta=None):
        self.name = name
        self.kernel_field = kernel_field
        self.kernel_jac = kernel_jac
        self.parameters = dict(parameters or {})
        if params_array is None:
            params_array = np.array(sorted(self.parameters.values()), dtype=float)
        self.params_array = np.ascontiguousarray(params_array, dtype=float)
        self.compiled = bool(compiled)
        self.domain = None if domain is None else np.asarray(domain, dtype=float)
        self.chart_rules = tuple(chart_rules)
        self.meta = dict(meta or {})
        self._var_rhs = None
        self._jac_kernel = None

    @classmethod
    def from_callables(cls, name, field, jacobian=None, parameters=None,
                       domain=None, chart_rules=(), meta=None):
        """Wrap plain Python evaluators ``field(x) -> (3,)`` into a system."""

        def kfield(x, params, out):
            out[:] = field(x)

        kjac = None
        if jacobian is not None:
            def kjac(x, params, out):  # noqa: E306
                out[:, :] = jacobian(x)

        return cls(name, kfield, kjac, parameters=parameters,
                   params_array=np.zeros(1), compiled=False, domain=domain,
                   chart_rules=chart_rules, meta=meta)

    # -- evaluation helpers -------------------------------------------------

    def field(self, x):
        out = np.empty(3)
        self.kernel_field(np.asarray(x, dtype=float), self.params_array, out)
        return out

    def _jac_fn(self):
        if self._jac_kernel is None:
            if self.kernel_jac is not None:
                self._jac_kernel = self.kernel_jac
            else:
                self._jac_kernel = _rk.make_fd_jac(self.kernel_field, self.compiled)
        return self._jac_kernel

    def jacobian(self, x):
        out = np.empty((3, 3))
        self._jac_fn()(np.asarray(x, dtype=float), self.params_array, out)
        return out

    def divergence(self, x):
        return float(np.trace(self.jacobian(x)))

    def var_rhs(self):
        if self._var_rhs is None:
            self._var_rhs = _rk.make_var_rhs(self.kernel_field, self._jac_fn(), self.compiled)
        return self._var_rhs

    def __repr__(self):
        return f"SystemDef({self.name!r}, params={self.parameters})"


class SectionDef:
    """Planar cross-section through ``anchor`` with unit ``normal``."""

    __slots__ = ("anchor", "normal", "direction", "in_bounds")

    def __init__(self, anchor, normal, direction="positive", in_bounds=math.inf):
        self.anchor = np.asarray(anchor, dtype=float)
        n = np.asarray(normal, dtype=float)
        nn = np.linalg.norm(n)
        if nn == 0:
            raise ValueError("section normal must be nonzero")
        self.normal = n / nn
        if direction not in ("positive", "negative", "both"):
            raise ValueError("direction must be positive, negative or both")
        self.direction = direction
        self.in_bounds = float(in_bounds)

    def g(self, x):
        return (np.asarray(x) - self.anchor) @ self.normal


class SectionHit:
    __slots__ = ("t", "state", "dot")

    def __init__(self, t, state, dot):
        self.t = float(t)
        self.state = np.asarray(state, dtype=float)
        self.dot = float(dot)

    def __repr__(self):
        return f"SectionHit(t={self.t:.12g}, state={self.state}, dot={self.dot:.3g})"


class GlueEvent:
    __slots__ = ("t", "before", "after", "linear")

    def __init__(self, t, before, after, linear):
        self.t = float(t)
        self.before = np.asarray(before, dtype=float)
        self.after = np.asarray(after, dtype=float)
        self.linear = np.asarray(linear, dtype=float)


class _Segment:
    """Glue-free stretch of dense output.  Valid for times in [ts[0], t_end]."""

    __slots__ = ("ts", "ys", "ks", "t_end", "y_end", "direction")

    def __init__(self, ts, ys, ks, t_end, y_end, direction):
        self.ts = ts
        self.ys = ys
        self.ks = ks
        self.t_end = t_end
        self.y_end = y_end
        self.direction = direction

    def eval(self, t):
        ts = self.ts
        if self.direction > 0:
            idx = int(np.searchsorted(ts, t, side="right")) - 1
        else:
            idx = int(np.searchsorted(-ts, -t, side="right")) - 1
        idx = max(0, min(idx, len(ts) - 2))
        h = ts[idx + 1] - ts[idx]
        return _rk.dense_eval(ts[idx], h, self.ys[idx], self.ks[idx], t)


class Trajectory:
    """Dense-output integration result over one or more glued segments."""

    def __init__(self, segments, glue_events, cfg, n_state=3):
        self.segments = segments
        self.glue_events = glue_events
        self.cfg = cfg
        self.n_state = n_state

    @property
    def t0(self):
        return self.segments[0].ts[0]

    @property
    def t1(self):
        return self.segments[-1].t_end

    @property
    def final_state(self):
        return self.segments[-1].y_end.copy()

    def times(self):
        out = [seg.ts for seg in self.segments]
        return np.concatenate(out)

    def states(self):
        out = [seg.ys for seg in self.segments]
        return np.vstack(out)

    def __call__(self, t):
        direction = self.segments[0].direction
        for seg in self.segments:
            if direction * (t - seg.t_end) <= 0:
                return seg.eval(t)
        return self.segments[-1].eval(t)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "z"])
            for seg in self.segments:
                for t, y in zip(seg.ts, seg.ys):
                    w.writerow([repr(float(t))] + [repr(float(v)) for v in y[:3]])

    def to_json_dict(self):
        rows = []
        for seg in self.segments:
            for t, y in zip(seg.ts, seg.ys):
                rows.append({"t": float(t), "state": [float(v) for v in y[:3]]})
        return {
            "abs_tol": self.cfg.abs_tol,
            "rel_tol": self.cfg.rel_tol,
            "n_glue_events": len(self.glue_events),
            "samples": rows,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- integration driver -----------------------------------------------------


def _core_for(sys_def):
    if backend.NUMBA_ENABLED and sys_def.compiled:
        return _rk.integrate_nb
    return _rk.integrate_py


def _raise_status(status, t, y):
    if status == _rk.STATUS_MAX_STEPS:
        raise StepLimitExceeded("integration step budget exhausted", t=t, state=y[:3])
    if status == _rk.STATUS_NONFINITE:
        raise NonFiniteState("non-finite value during integration", t=t, state=y[:3])
    if status == _rk.STATUS_UNDERFLOW:
        raise StepUnderflow("step size underflow", t=t, state=y[:3])
    if status == _rk.STATUS_ESCAPE:
        raise DomainEscape("state norm exceeded the escape radius", t=t, state=y[:3])


def _glue_state(rule, y, n_state):
    out = np.array(y, dtype=float)
    out[:3] = rule.glue_map(y[:3])
    if n_state == 12:
        M = y[3:].reshape(3, 3)
        out[3:] = (rule.linear @ M).ravel()
    return out


def _first_glue_crossing(sys_def, ts, ys, ks, n_used):
    """Earliest gluing-face crossing among the accepted steps, if any.

    Returns (step_index, rule, t_cross) or None.  A crossing at a step means
    g changes from <= tol to > tol while increasing.
    """
    best = None
    for rule in sys_def.chart_rules:
        gv = ys[: n_used + 1, :3] @ rule.normal - rule.offset
        tol = 1e-11 * max(1.0, abs(rule.offset))
        for i in range(n_used):
            if gv[i] <= tol and gv[i + 1] > tol:
                if best is None or i < best[0]:
                    best = (i, rule)
                break
    if best is None:
        return None
    i, rule = best
    h = ts[i + 1] - ts[i]

    def g_of(t):
        y = _rk.dense_eval(ts[i], h, ys[i], ks[i], t)
        return float(y[:3] @ rule.normal - rule.offset)

    t_cross = _bracketed_root(g_of, ts[i], ts[i + 1], 1e-13 * max(1.0, abs(ts[i + 1])))
    return i, rule, t_cross


def _bracketed_root(fun, ta, tb, tol_t):
    """Bisection safeguarded by Newton (secant) on a scalar bracket."""
    fa = fun(ta)
    fb = fun(tb)
    if fa == 0.0:
        return ta
    if fb == 0.0:
        return tb
    if fa * fb > 0:
        # caller guaranteed a sign change up to noise; fall back to midpoint
        return 0.5 * (ta + tb)
    lo, hi, flo = ta, tb, fa
    t = 0.5 * (lo + hi)
    for _ in range(EVENT_MAX_ITER):
        ft = fun(t)
        if ft == 0.0 or abs(hi - lo) < tol_t:
            return t
        if flo * ft < 0:
            hi = t
        else:
            lo, flo = t, ft
        # secant proposal from current bracket, clipped to remain inside
        fhi = fun(hi) if t == lo else ft
        denom = fhi - flo
        if denom != 0.0:
            prop = hi - fhi * (hi - lo) / denom
        else:
            prop = 0.5 * (lo + hi)
        if not (min(lo, hi) < prop < max(lo, hi)):
            prop = 0.5 * (lo + hi)
        t = prop
    return t


def _check_domain(sys_def, ts, ys, n_used, stop_index):
    """Index of first node outside the declared domain box, or None."""
    if sys_def.domain is None:
        return None
    lo = sys_def.domain[:, 0] - 1e-6
    hi = sys_def.domain[:, 1] + 1e-6
    upto = stop_index if stop_index is not None else n_used
    pts = ys[: upto + 1, :3]
    ok = np.all((pts >= lo) & (pts <= hi), axis=1)
    bad = np.nonzero(~ok)[0]
    if bad.size:
        return int(bad[0])
    return None


def _integrate_driver(sys_def, rhs, y0, t_total, cfg, n_state):
    direction = 1.0 if t_total >= 0 else -1.0
    core = _core_for(sys_def)
    glue_chunk = 2.0 if sys_def.chart_rules else math.inf

    segments = []
    glue_events = []
    t_cur = 0.0
    y_cur = np.ascontiguousarray(y0, dtype=float)
    guard = 0
    while True:
        guard += 1
        if guard > 10_000_000:
            raise StepLimitExceeded("too many gluing segments", t=t_cur, state=y_cur[:3])
        remaining = direction * (t_total - t_cur)
        if remaining <= 0 and segments:
            break
        chunk = min(remaining, glue_chunk)
        t_target = t_cur + direction * chunk
        status, n_used, ts, ys, ks = core(
            rhs, sys_def.params_array, y_cur, t_cur, t_target,
            cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.max_steps,
            cfg.first_step, cfg.escape_radius,
        )
        ts = ts[: n_used + 1]
        ys = ys[: n_used + 1]
        ks = ks[:n_used]

        crossing = _first_glue_crossing(sys_def, ts, ys, ks, n_used) if n_used else None
        bad_idx = _check_domain(sys_def, ts, ys, n_used,
                                crossing[0] if crossing else None)
        if bad_idx is not None:
            seg = _Segment(ts[: bad_idx + 1], ys[: bad_idx + 1], ks[: max(bad_idx, 1)],
                           ts[bad_idx], ys[bad_idx], direction)
            segments.append(seg)
            raise DomainEscape("state left the declared domain box",
                               t=ts[bad_idx], state=ys[bad_idx, :3])

        if crossing is not None:
            i, rule, t_cross = crossing
            keep = i + 1  # steps fully before the crossing plus the crossing step
            h = ts[i + 1] - ts[i]
            y_cross = _rk.dense_eval(ts[i], h, ys[i], ks[i], t_cross)
            seg = _Segment(ts[: keep + 1], ys[: keep + 1], ks[:keep],
                           t_cross, y_cross, direction)
            segments.append(seg)
            y_new = _glue_state(rule, y_cross, n_state)
            glue_events.append(GlueEvent(t_cross, y_cross[:3], y_new[:3], rule.linear))
            t_cur = t_cross
            y_cur = y_new
            continue

        if status != _rk.STATUS_OK:
            if n_used:
                segments.append(_Segment(ts, ys, ks, ts[-1], ys[-1], direction))
            _raise_status(status, ts[-1], ys[-1])

        y_end = ys[-1]
        # endpoint landing exactly on an outgoing face still glues
        landed = None
        for rule in sys_def.chart_rules:
            g_end = float(y_end[:3] @ rule.normal - rule.offset)
            if abs(g_end) <= 1e-9 * max(1.0, abs(rule.offset)):
                f = sys_def.field(y_end[:3])
                if direction * float(f @ rule.normal) > 0:
                    landed = rule
                    break
        if landed is not None and direction * (t_total - ts[-1]) <= 1e-12 * max(1.0, abs(t_total)):
            y_glued = _glue_state(landed, y_end, n_state)
            glue_events.append(GlueEvent(ts[-1], y_end[:3], y_glued[:3], landed.linear))
            segments.append(_Segment(ts, ys, ks, ts[-1], y_glued, direction))
            t_cur = ts[-1]
            break

        segments.append(_Segment(ts, ys, ks, ts[-1], y_end, direction))
        t_cur = ts[-1]
        if landed is not None:
            y_glued = _glue_state(landed, y_end, n_state)
            glue_events.append(GlueEvent(ts[-1], y_end[:3], y_glued[:3], landed.linear))
            y_cur = y_glued
            continue
        if direction * (t_total - t_cur) <= 1e-12 * max(1.0, abs(t_total)):
            break
        y_cur = y_end.copy()

    return Trajectory(segments, glue_events, cfg, n_state=n_state)


def integrate(sys_def, x0, t, cfg=DEFAULT_CONFIG):
    """Integrate the system for duration ``t`` and return the Trajectory."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError("x0 must be a 3-vector")
    return _integrate_driver(sys_def, sys_def.kernel_field, x0, float(t), cfg, n_state=3)


def flow(sys_def, x0, t, cfg=DEFAULT_CONFIG):
    """Endpoint of the flow map phi(t, x0)."""
    if t == 0:
        return np.asarray(x0, dtype=float).copy()
    return integrate(sys_def, x0, t, cfg).final_state[:3]


def integrate_variational(sys_def, x0, t, cfg=DEFAULT_CONFIG):
    """Trajectory of the state together with the 3x3 variational matrix."""
    x0 = np.asarray(x0, dtype=float)
    y0 = np.empty(12)
    y0[:3] = x0
    y0[3:] = np.eye(3).ravel()
    return _integrate_driver(sys_def, sys_def.var_rhs(), y0, float(t), cfg, n_state=12)


def variational_flow(sys_def, x0, t, cfg=DEFAULT_CONFIG):
    """(phi(t, x0), D phi^t(x0)) via the variational equation."""
    if t == 0:
        return np.asarray(x0, dtype=float).copy(), np.eye(3)
    traj = integrate_variational(sys_def, x0, t, cfg)
    y = traj.final_state
    return y[:3], y[3:].reshape(3, 3)


# -- sections ---------------------------------------------------------------


def _scan_segment_hits(sys_def, section, seg, suppress_first_step, t_skip):
    """Crossing times of the section plane within one dense segment."""
    g = (seg.ys[:, :3] - section.anchor) @ section.normal
    hits = []
    n_steps = len(seg.ts) - 1
    for i in range(n_steps):
        if seg.ts[i + 1] * seg.direction > seg.t_end * seg.direction + 1e-15:
            break
        if g[i] == 0.0 and i == 0:
            continue
        if g[i] * g[i + 1] < 0.0:
            if suppress_first_step and i == 0:
                continue
            h = seg.ts[i + 1] - seg.ts[i]

            def g_of(t, _i=i, _h=h):
                y = _rk.dense_eval(seg.ts[_i], _h, seg.ys[_i], seg.ks[_i], t)
                return float((y[:3] - section.anchor) @ section.normal)

            t_hit = _bracketed_root(g_of, seg.ts[i], seg.ts[i + 1],
                                    1e-12 * max(1.0, abs(seg.ts[i + 1])))
            if seg.direction * (t_hit - seg.t_end) > 0:
                continue
            if abs(t_hit) <= t_skip:
                continue
            x_hit = _rk.dense_eval(seg.ts[i], h, seg.ys[i], seg.ks[i], t_hit)[:3]
            hits.append((t_hit, x_hit))
    return hits


def _accept_hit(sys_def, section, t_hit, x_hit):
    """Apply bounds / transversality / orientation filters to a raw crossing.

    Returns a SectionHit, None (filtered out) or raises TangentialCrossing.
    """
    if np.max(np.abs(x_hit - section.anchor)) > section.in_bounds:
        return None
    f = sys_def.field(x_hit)
    dot = float(f @ section.normal)
    if abs(dot) < TRANSVERSALITY_REL * np.linalg.norm(f):
        raise TangentialCrossing(
            f"tangential section crossing at t={t_hit:.6g}", t=t_hit, state=x_hit)
    if section.direction == "positive" and dot <= 0:
        return None
    if section.direction == "negative" and dot >= 0:
        return None
    return SectionHit(t_hit, x_hit, dot)


def section_hits(sys_def, x0, section, count, t_max, cfg=DEFAULT_CONFIG, t_skip=0.0):
    """First ``count`` transversal crossings of the section, in time order.

    Crossings are localized on the dense interpolant to a time tolerance of
    1e-12 * max(1, |t|).  Gluing events that land exactly on the section plane
    count as crossings (the plane may coincide with a quotient face).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    direction = 1.0 if t_max >= 0 else -1.0
    on_section_start = abs(section.g(x0)) <= PLANE_TOL * max(1.0, np.linalg.norm(section.anchor))

    hits = []
    t_cur = 0.0
    x_cur = x0
    chunk = min(abs(t_max), 25.0)
    first_chunk = True
    while direction * (t_max - t_cur) > 1e-12 * max(1.0, abs(t_max)):
        t_target = t_cur + direction * min(chunk, direction * (t_max - t_cur))
        traj = integrate(sys_def, x_cur, t_target - t_cur, cfg)
        raw = []
        for si, seg in enumerate(traj.segments):
            suppress = first_chunk and si == 0 and on_section_start
            for t_rel, x_hit in _scan_segment_hits(sys_def, section, seg, suppress,
                                                   t_skip - t_cur if first_chunk else 0.0):
                raw.append((t_cur + t_rel, x_hit))
        for ev in traj.glue_events:
            gval = section.g(ev.after)
            if abs(gval) <= 10 * PLANE_TOL * max(1.0, np.linalg.norm(section.anchor)):
                t_abs = t_cur + ev.t
                if abs(t_abs) > t_skip:
                    raw.append((t_abs, ev.after.copy()))
        raw.sort(key=lambda p: direction * p[0])
        for t_abs, x_hit in raw:
            hit = _accept_hit(sys_def, section, t_abs, x_hit)
            if hit is not None:
                hits.append(hit)
                if len(hits) >= count:
                    return hits
        t_cur = t_cur + (traj.t1 - traj.t0)
        x_cur = traj.final_state[:3]
        first_chunk = False
    raise NoSectionHit(
        f"only {len(hits)} of {count} section crossings before t_max={t_max}",
        found=len(hits), requested=count)


def poincare_map(sys_def, section, x, cfg=DEFAULT_CONFIG, t_max=200.0, min_return_time=1e-3):
    """First return (P(x), tau(x)) to the section with the same orientation."""
    x = np.asarray(x, dtype=float)
    if abs(section.g(x)) > 1e-10 * max(1.0, np.linalg.norm(section.anchor)):
        raise NotOnSection(f"point is off the section plane by {section.g(x):.3e}")
    f = sys_def.field(x)
    dot = float(f @ section.normal)
    if abs(dot) < TRANSVERSALITY_REL * np.linalg.norm(f):
        raise TangentialCrossing("vector field tangential at the start point", t=0.0, state=x)
    hits = section_hits(sys_def, x, section, 1, t_max, cfg, t_skip=min_return_time)
    hit = hits[0]
    return hit.state, hit.t


def hits_to_csv(hits, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "z", "dot"])
        for h in hits:
            w.writerow([repr(float(h.t))] + [repr(float(v)) for v in h.state]
                       + [repr(float(h.dot))])
