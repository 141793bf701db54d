"""chaoscert: numerical chaos certification for 3-D autonomous flows.

The library locates hyperbolic periodic orbits, builds cross-section frames
from their Floquet structure, verifies Conley-Moser strip conditions for
fixed-time half-period maps, and certifies topological conjugacy of the
resulting invariant set to a subshift of finite type.
"""

from .backend import BACKEND, NUMBA_ENABLED

__version__ = "0.1.0"

__all__ = ["BACKEND", "NUMBA_ENABLED", "__version__"]
