"""uniqcert: certify whether gridded samples of u(t, x) determine a unique
governing differential equation u^(n)_t = F(g_1, ..., g_k) within an
assumed function class for F.

The pipeline: finite-difference derivative estimation (findiff), feature
library assembly (features), singular-value rank tests across stencil
accuracy orders (rank), per-point Jacobian rank comparison (jacobian),
and a class-by-class decision engine (verdict).  Built-in closed-form
test cases with exact symbolic derivative oracles live in cases.
"""

__version__ = "0.1.0"

from .grid import Axis, MultiIndex, SampledField  # noqa: F401
