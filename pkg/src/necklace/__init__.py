"""Band structure, gap certificates and breathers on the periodic necklace graph."""

__version__ = "0.1.0"

from .graph import GraphFunction, NecklaceGrid, apply_laplacian, kirchhoff_flux_residual, l2_inner
from .spectrum import (BandPoint, BlochEigenfunction, band_closed_form, band_from_monodromy,
                       bloch_eigenfunction, hill_discriminant, monodromy_matrix)
from .bloch import BlochField, band_coefficients, bloch_forward, bloch_inverse
from .gapcheck import (FrequencyConfig, GapCertificate, classify_mode, delta_sqrt, delta_star,
                       minimal_kappa)

__all__ = [
    "NecklaceGrid", "GraphFunction", "l2_inner", "apply_laplacian", "kirchhoff_flux_residual",
    "BandPoint", "BlochEigenfunction", "hill_discriminant", "monodromy_matrix",
    "band_closed_form", "band_from_monodromy", "bloch_eigenfunction",
    "BlochField", "bloch_forward", "bloch_inverse", "band_coefficients",
    "FrequencyConfig", "GapCertificate", "delta_star", "delta_sqrt", "minimal_kappa",
    "classify_mode",
]
