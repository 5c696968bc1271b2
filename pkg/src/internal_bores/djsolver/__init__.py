from .grid import (Grid, BoreState, trivial_state, tanh_seed, rescale_state,
                   SCHEMA_VERSION)
from .residual import DegeneracyError, assemble_residual, residual_blocks
from .newton import NonConvergenceError, newton_solve, jacobian
from .reconstruct import (BoreField, DomainError, PhysicalField, column_flow_force,
                          reconstruct_physical)
