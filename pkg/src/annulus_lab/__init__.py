"""Numerical laboratory for complex interpolation of weighted Fourier-coefficient spaces on the annulus."""

from .circle import CircleGrid, GridFunction, arc_distance, arc_integral, circle_norms, density_fraction, local_average
from .compactness import (CoveringReport, FamilyK, LusinFailure, LusinResult, ModulusCurve, covering_number,
                          equicontinuity_modulus, lusin_decomposition, modulus_bound_check, rho_K, rho_of_member)
from .interp import (BiLaurent, ThreeCirclesReport, boundary_norm, canonical_extension, evaluate_member, fA_norm,
                     hull_membership_margin, interp_norm, interp_norm_search, three_circles_ratio)
from .laurent import LaurentSeq, eval_circle, fejer_kernel, fejer_mean, fourier_coeffs
from .spaces import (
    NormReport,
    SpaceSpec,
    dual_norm_lower,
    fc_theta_norm,
    fl_norm,
    multiplier,
    normalize_duals,
    pairing,
    shift,
)

__version__ = "0.1.0"
