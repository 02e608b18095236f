from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

_TINY = 1e-300


@dataclass(frozen=True)
class IdentityResidual:
    """Outcome of one numerical identity check.

    ``residual = |lhs - rhs| / max(|lhs|, |rhs|, floor)``; for sums that should
    vanish, ``lhs`` is the sum, ``rhs`` is zero and ``floor`` is the largest
    summand magnitude.
    """

    identity_id: str
    lhs: complex
    rhs: complex
    residual: float
    floor: float
    details: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_sides(cls, identity_id: str, lhs, rhs, floor: float = _TINY, **details):
        lhs, rhs = complex(lhs), complex(rhs)
        floor = max(float(floor), _TINY)
        scale = max(abs(lhs), abs(rhs), floor)
        return cls(identity_id, lhs, rhs, abs(lhs - rhs) / scale, floor, details)

    @classmethod
    def from_terms(cls, identity_id: str, terms: Iterable, **details):
        terms = [complex(x) for x in terms]
        floor = max((abs(x) for x in terms), default=0.0)
        return cls.from_sides(identity_id, sum(terms), 0.0, floor, **details)

    def passed(self, tol: float) -> bool:
        return self.residual < tol

    def to_json(self) -> dict:
        return {
            "identity_id": self.identity_id,
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "residual": self.residual,
            "floor": self.floor,
            "details": self.details,
        }


def permutation_floor(mat: np.ndarray) -> float:
    """Largest single product in the Leibniz expansion of det(mat)."""
    n = mat.shape[0]
    if n == 0:
        return 1.0
    mags = np.abs(mat)
    if n > 7:
        return float(np.prod(np.linalg.norm(mags, axis=1)))
    return max(float(np.prod(mags[np.arange(n), list(perm)]))
               for perm in itertools.permutations(range(n)))


def pfaffian_floor(mat: np.ndarray) -> float:
    # magnitude of a single term of the pfaffian expansion
    return float(np.max(np.abs(mat))) ** (mat.shape[0] // 2)
