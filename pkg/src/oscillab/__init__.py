"""oscillab: a desk-scale laboratory for the decay of oscillatory integrals
with prepared power-log amplitudes and subanalytic-style phases."""

__version__ = "0.1.0"

from .powerlog import (  # noqa: F401
    Cell,
    PiecewisePowerLog,
    PowerLogTerm,
    UnitSpec,
    interval_cell,
    is_integrable,
)
from .phase import PhaseModel, Polynomial  # noqa: F401
from .quad import OscillatoryResult, integrate_abs, integrate_oscillatory  # noqa: F401
