"""Index and Weyl spectra of continuous families of Fredholm operators."""

from .calc import Poly, fredholm_spectrum, index_via_roots, poly_apply, poly_roots, spectral_map_check
from .config import DEFAULT, Tolerances
from .family import (
    IndexVector,
    OperatorFamily,
    compose_families,
    family_index,
    homotopy_invariance_check,
    ideal_closure_check,
    is_compact_family,
    local_constancy_radius,
    quotient_invertible,
    sample_family,
)
from .fredholm import nullity_defect_oracle, point_fredholm, winding_number
from .op_model import (
    DiagonalCore,
    FiniteRankPart,
    LaurentSymbol,
    OperatorSpec,
    diagonal,
    essential_norm,
    linear_combine,
    multiply,
    symbol_eval,
    toeplitz,
    truncate,
)
from .param_space import ComponentLabeling, ParamSpace, components, representatives
from .weyl import (
    ComplexGrid,
    GridSet,
    essential_spectrum_family,
    kuratowski_limits,
    limit_scenario_check,
    semicontinuity_check,
    weyl_spectrum_family,
    weyl_spectrum_point,
)

__version__ = "0.1.0"
