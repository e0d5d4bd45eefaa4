"""Measures mu_beta on the finite adeles, N_A-orbit projections and character Euler products."""

from .arith import PAdicApprox, PrecisionError, RationalScalar, mul, p_abs, scale
from .certified import CertifiedValue
from .characters import (
    LocalUnitCharacter,
    ProductCharacter,
    character_to_cylinder,
    enumerate_characters,
    eval_at_integer,
    eval_at_point,
    parse_character,
)
from .measure import (
    Ambient,
    BetaMeasure,
    CylinderFunction,
    CylinderSet,
    LocalCell,
    adjoint_shift,
    check_scaling_law,
    cylinder_measure,
    inner_product,
    integrate,
    local_cell_measure,
    mu_W_truncated,
    sample,
    sample_batch,
    scale_set,
    shift,
    zeta_A,
    zeta_A_series,
)
from .projection import (
    NotInWAError,
    ProjectionRequest,
    amplitude_sequence,
    flatness,
    project_character,
    project_function,
    twisted_product_scan,
)

__version__ = "0.1.0"

__all__ = [
    "Ambient",
    "BetaMeasure",
    "CertifiedValue",
    "CylinderFunction",
    "CylinderSet",
    "LocalCell",
    "LocalUnitCharacter",
    "NotInWAError",
    "PAdicApprox",
    "PrecisionError",
    "ProductCharacter",
    "ProjectionRequest",
    "RationalScalar",
    "adjoint_shift",
    "amplitude_sequence",
    "character_to_cylinder",
    "check_scaling_law",
    "cylinder_measure",
    "enumerate_characters",
    "eval_at_integer",
    "eval_at_point",
    "flatness",
    "inner_product",
    "integrate",
    "local_cell_measure",
    "mu_W_truncated",
    "mul",
    "p_abs",
    "parse_character",
    "project_character",
    "project_function",
    "sample",
    "sample_batch",
    "scale",
    "scale_set",
    "shift",
    "twisted_product_scan",
    "zeta_A",
    "zeta_A_series",
]
