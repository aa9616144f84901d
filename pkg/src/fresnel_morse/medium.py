"""Medium classification by the multiplicity pattern of the principal permittivities."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .sphere import as_dielectric

CLASSIFY_RTOL = 1e-12


class MediumKind(enum.Enum):
    ISOTROPIC = "Isotropic"
    UNIAXIAL = "Uniaxial"
    BIAXIAL = "Biaxial"


@dataclass(frozen=True)
class MediumClass:
    kind: MediumKind
    multiplicities: tuple  # sizes of the eigenvalue clusters, ascending eigenvalue order
    eigenvalues: tuple

    def __str__(self):
        return self.kind.value


def classify_medium(eps, rtol: float = CLASSIFY_RTOL) -> MediumClass:
    """Isotropic / uniaxial / biaxial, with ties decided at relative tolerance ``rtol``."""
    w = as_dielectric(eps).eigenvalues
    tol = rtol * float(np.abs(w).max())
    groups = [1]
    for lo, hi in zip(w[:-1], w[1:]):
        if hi - lo <= tol:
            groups[-1] += 1
        else:
            groups.append(1)
    kind = {1: MediumKind.ISOTROPIC, 2: MediumKind.UNIAXIAL, 3: MediumKind.BIAXIAL}[len(groups)]
    return MediumClass(kind, tuple(groups), tuple(float(x) for x in w))
