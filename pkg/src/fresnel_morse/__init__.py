"""Fresnel surfaces of anisotropic dielectrics: singularities, winding indices,
the eigenline desingularization and its Morse theory, hyperbolic dispersion."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ChartError,
    DesingularizationError,
    DomainError,
    FresnelError,
    LoopThroughZeroError,
    NonHyperbolicError,
    NotBiaxialError,
    NotCharacteristicError,
    ResolutionError,
    UsageError,
)
from .medium import MediumClass, MediumKind, classify_medium  # noqa: E402
from .sphere import (  # noqa: E402
    DielectricTensor,
    PolarPoint,
    Sym2,
    TangentFrame,
    eigen_split,
    project_symbol,
    s0_closed_form,
    tangent_frame,
    traceless,
)
