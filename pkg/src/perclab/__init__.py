"""perclab: a desk-scale laboratory for critical site percolation on the
triangular lattice — event detectors, exact enumeration oracles, Monte Carlo
estimators and the analytic conformal toolkit they are checked against."""

__version__ = "0.1.0"

from . import clusters, errors, lattice, oracle, sampler  # noqa: F401
from . import events  # noqa: F401
from . import analysis  # noqa: F401
