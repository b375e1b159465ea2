"""Time-Fourier Galerkin breather solver."""

from .fields import TimeFourierField, pairing
from .functional import (BreatherState, compute_diagnostics, evaluate_dJ, evaluate_J,
                         galerkin_residual, nehari_defects, nonlinear_term)
from .nehari import inner_maximize, nehari_minimize, seed_field
from .newton import newton_solve
from .operators import (ModalOperators, ShiftedOperator, assemble_Lk, diagnostics_norms,
                        linear_resolve, project_pm)

__all__ = [
    "TimeFourierField", "pairing", "BreatherState", "compute_diagnostics", "evaluate_J",
    "evaluate_dJ", "galerkin_residual", "nehari_defects", "nonlinear_term", "inner_maximize", "nehari_minimize",
    "seed_field", "newton_solve", "ModalOperators", "ShiftedOperator", "assemble_Lk",
    "linear_resolve", "project_pm", "diagnostics_norms",
]
