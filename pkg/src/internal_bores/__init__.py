"""Steady two-layer internal bores: solver, continuation and free-boundary diagnostics."""
from .params import (FluidPair, FrontConfig, ConjugateState, front_froude,
                     conjugate_downstream, conjugate_roots, flow_force,
                     upstream_flow_force)

__version__ = "0.1.0"
