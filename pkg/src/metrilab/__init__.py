"""metrilab: reversible-dissipative dynamics with basin-encoding accounting,
continuous logic circuits, bound checks, and seeded experiment pipelines."""

__version__ = "0.1.0"

from . import cce, circuits, kernels, metriplectic, metrics, numerics  # noqa: F401
