"""Determinant and pfaffian tau functions of finite atomic measures.

For an atomic measure the defining integrals are finite sums.  Both integrands
are symmetric in the points and vanish when two points coincide, so the
``1/n!``-weighted sum over ordered n-tuples of atoms equals the sum over
n-element subsets; that is what is computed here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateConfiguration, KernelRejected, MissingSeam
from .pfaffian import bordered, pfaffian, pfaffian_stack
from .residual import IdentityResidual, pfaffian_floor, permutation_floor
from .special import DEFAULT_POLICY, elliptic_gamma, gamma_pair_reciprocal, psi

GENERIC_THRESHOLD = 1e-10
DISTINCT_THRESHOLD = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    points: tuple
    weights: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).reshape(-1)
        wts = np.asarray(self.weights, dtype=complex).reshape(-1)
        if pts.size != wts.size:
            raise ValueError("points and weights differ in length")
        if pts.size > 1:
            gaps = np.abs(pts[:, None] - pts[None, :]) + np.eye(pts.size)
            if np.min(gaps) < DISTINCT_THRESHOLD:
                raise DegenerateConfiguration("measure atoms are not distinct")
        object.__setattr__(self, "points", tuple(complex(v) for v in pts))
        object.__setattr__(self, "weights", tuple(complex(v) for v in wts))

    @property
    def x(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)

    @property
    def w(self) -> np.ndarray:
        return np.array(self.weights, dtype=complex)

    def __len__(self) -> int:
        return len(self.points)

    def to_json(self) -> list:
        return [[[x.real, x.imag], [w.real, w.imag]] for x, w in zip(self.points, self.weights)]

    @classmethod
    def from_json(cls, data) -> "DiscreteMeasure":
        pts = [complex(*x) for x, _ in data]
        wts = [complex(*w) for _, w in data]
        return cls(tuple(pts), tuple(wts))


@dataclass(frozen=True)
class PairKernel:
    """An antisymmetric function of two points, vectorized over numpy arrays."""

    name: str
    evaluator: Callable

    def __call__(self, x, y):
        return self.evaluator(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self(x[:, None], x[None, :]), dtype=complex)

    @classmethod
    def theta(cls, p) -> "PairKernel":
        p = complex(p)
        return cls(f"psi_p[{p}]", lambda x, y: psi(x, y, p))

    @classmethod
    def linear(cls) -> "PairKernel":
        return cls("x-y", lambda x, y: x - y)


@dataclass(frozen=True)
class SeamFunction:
    name: str
    evaluator: Callable

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=complex))


def admit_kernel(kernel: PairKernel, rng: np.random.Generator, samples: int = 100,
                 three_term: bool = True, tol: float = 1e-11) -> float:
    """Check antisymmetry (and optionally the three-term identity) on random points.

    Returns the worst residual; raises :class:`KernelRejected` above ``tol``.
    """
    def draw():
        return np.exp(rng.uniform(np.log(0.5), np.log(2.0), samples)
                      + 2j * np.pi * rng.random(samples))

    x, y, z, w = draw(), draw(), draw(), draw()
    kxy, kyx = np.asarray(kernel(x, y)), np.asarray(kernel(y, x))
    anti = np.abs(kxy + kyx) / np.maximum(np.maximum(np.abs(kxy), np.abs(kyx)), 1e-300)
    worst = float(np.max(anti, initial=0.0))
    if three_term:
        terms = np.stack([
            kxy * kernel(z, w),
            -kernel(x, z) * kernel(y, w),
            kernel(x, w) * kernel(y, z),
        ])
        total = np.abs(terms.sum(axis=0))
        scale = np.maximum(np.maximum(np.abs(terms).max(axis=0), total), 1e-300)
        worst = max(worst, float(np.max(total / scale, initial=0.0)))
    if worst > tol:
        raise KernelRejected(f"kernel {kernel.name} fails admission ({worst:.3e})")
    return worst


def _bracketed(mu: DiscreteMeasure, kernel: PairKernel, points) -> tuple[np.ndarray, complex]:
    """Measure factor prod_i 1/k(a_i, x) and prefactor prod_{i<j} k(a_i, a_j)."""
    key = tuple(complex(a) for a in np.asarray(points, dtype=complex).reshape(-1))
    return _bracketed_cached(mu, kernel, key)


@lru_cache(maxsize=256)
def _bracketed_cached(mu: DiscreteMeasure, kernel: PairKernel, points: tuple):
    x = mu.x
    pts = np.asarray(points, dtype=complex).reshape(-1)
    if pts.size == 0:
        return np.ones(x.size, dtype=complex), 1.0 + 0.0j
    d = np.asarray(kernel(pts[:, None], x[None, :]), dtype=complex)
    if d.size and np.min(np.abs(d)) < GENERIC_THRESHOLD:
        raise DegenerateConfiguration("bracket point collides with an atom")
    factor = np.prod(1.0 / d, axis=0)
    factor.setflags(write=False)
    i, j = np.triu_indices(pts.size, k=1)
    pref = complex(np.prod(kernel(pts[i], pts[j]))) if i.size else 1.0 + 0.0j
    return factor, pref


@lru_cache(maxsize=64)
def _kernel_matrix(kernel: PairKernel, mu: DiscreteMeasure) -> np.ndarray:
    mat = kernel.matrix(mu.x)
    mat.setflags(write=False)
    return mat


def _subsets(m: int, n: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(m), n)), dtype=int).reshape(-1, n)


def _tau_det_parts(n, mu, psi1, psi2, a, b) -> tuple[complex, np.ndarray]:
    """Bracket prefactor and the per-subset summands of tau_det."""
    if n < 0:
        return 0.0 + 0.0j, np.zeros(0, dtype=complex)
    fa, pa = _bracketed(mu, psi1, a)
    fb, pb = _bracketed(mu, psi2, b)
    pref = pa * pb
    if n == 0:
        return pref, np.ones(1, dtype=complex)
    x = mu.x
    if n > x.size:
        return 0.0 + 0.0j, np.zeros(0, dtype=complex)
    w = mu.w * fa * fb
    kern = _kernel_matrix(psi1, mu) * _kernel_matrix(psi2, mu)
    subsets = _subsets(x.size, n)
    vals = np.prod(w[subsets], axis=1)
    for i, j in itertools.combinations(range(n), 2):
        vals = vals * kern[subsets[:, i], subsets[:, j]]
    return pref, vals


def tau_det(n: int, mu: DiscreteMeasure, psi1: PairKernel, psi2: PairKernel,
            a: Sequence = (), b: Sequence = ()) -> complex:
    """tau^(n)(mu[a...][b...]'), zero for n < 0."""
    pref, vals = _tau_det_parts(n, mu, psi1, psi2, a, b)
    return complex(pref * np.sum(vals))


def _tau_pf_parts(n, mu, eps, psi1, seam, a) -> tuple[complex, np.ndarray]:
    """Bracket prefactor and the per-subset summands of tau_pf."""
    if n < 0:
        return 0.0 + 0.0j, np.zeros(0, dtype=complex)
    if n % 2 and seam is None:
        raise MissingSeam("odd-order pfaffian tau functions need a seam function")
    fa, pref = _bracketed(mu, psi1, a)
    if n == 0:
        return pref, np.ones(1, dtype=complex)
    x = mu.x
    if n > x.size:
        return 0.0 + 0.0j, np.zeros(0, dtype=complex)
    w = mu.w * fa
    emat = _kernel_matrix(eps, mu)
    kern = _kernel_matrix(psi1, mu)
    subsets = _subsets(x.size, n)
    blocks = emat[subsets[:, :, None], subsets[:, None, :]]
    if n % 2:
        blocks = bordered(blocks, np.asarray(seam(x), dtype=complex)[subsets])
    vals = pfaffian_stack(blocks) * np.prod(w[subsets], axis=1)
    for i, j in itertools.combinations(range(n), 2):
        vals = vals * kern[subsets[:, i], subsets[:, j]]
    return pref, vals


def tau_pf(n: int, mu: DiscreteMeasure, eps: PairKernel, psi1: PairKernel,
           seam: SeamFunction | None = None, a: Sequence = ()) -> complex:
    """Pfaffian tau function tau^(n)_{1/2}(mu[a...]), zero for n < 0."""
    pref, vals = _tau_pf_parts(n, mu, eps, psi1, seam, a)
    return complex(pref * np.sum(vals))


def _largest_summand(pref, vals) -> float:
    return abs(pref) * float(np.max(np.abs(vals), initial=0.0))


def verify_cauchy_binet_det(n: int, mu: DiscreteMeasure, psi1: PairKernel, psi2: PairKernel,
                            a: Sequence, b: Sequence) -> IdentityResidual:
    a, b = list(a)[:n], list(b)[:n]
    if len(a) != n or len(b) != n:
        raise ValueError("need n bracket points of each kind")
    lhs = tau_det(n, mu, psi1, psi2, a, b)
    mat = np.array([[tau_det(1, mu, psi1, psi2, [ai], [bj]) for bj in b] for ai in a])
    rhs = np.linalg.det(mat) if n else 1.0
    # both sides can cancel far below their summands; measure against the largest one
    floor = max(_largest_summand(*_tau_det_parts(n, mu, psi1, psi2, a, b)),
                permutation_floor(mat))
    return IdentityResidual.from_sides("cauchy_binet_det", lhs, rhs, floor, n=n)


def det_fay_terms(variant: int, n: int, mu: DiscreteMeasure, psi1: PairKernel,
                  psi2: PairKernel, a, b, c, d, as_displayed: bool = False) -> list[complex]:
    """The three products of a bilinear determinant-tau identity, signs included.

    ``as_displayed`` repeats the first product's second factor in the third
    product of variant 2, which is not an identity.
    """
    def tau(k, left=(), right=()):
        return tau_det(k, mu, psi1, psi2, left, right)

    if variant == 1:
        return [
            tau(n + 1, [a, b], [c, d]) * tau(n - 1),
            -tau(n, [a], [c]) * tau(n, [b], [d]),
            tau(n, [a], [d]) * tau(n, [b], [c]),
        ]
    if variant == 2:
        last = [c, d] if as_displayed else [b, c]
        return [
            tau(n - 1, [b]) * tau(n, [c, d], [a]),
            -tau(n - 1, [c]) * tau(n, [b, d], [a]),
            tau(n - 1, [d]) * tau(n, last, [a]),
        ]
    if variant == 3:
        return [
            tau(n, [c, d]) * tau(n, [a, b]),
            -tau(n, [b, d]) * tau(n, [a, c]),
            tau(n, [b, c]) * tau(n, [a, d]),
        ]
    raise ValueError("variant must be 1, 2 or 3")


def verify_det_fay(variant: int, n: int, mu: DiscreteMeasure, psi1: PairKernel,
                   psi2: PairKernel, a, b, c, d, as_displayed: bool = False) -> IdentityResidual:
    terms = det_fay_terms(variant, n, mu, psi1, psi2, a, b, c, d, as_displayed)
    return IdentityResidual.from_terms(f"det_fay_{variant}", terms, n=n)


def debruijn_matrix(n: int, mu: DiscreteMeasure, eps: PairKernel, psi1: PairKernel,
                    seam: SeamFunction | None, a: Sequence) -> np.ndarray:
    """Matrix of tau^(2)_{1/2}(mu[a_i, a_j]), bordered by tau^(1)_{1/2}(mu[a_i]) for odd n."""
    a = list(a)
    mat = np.zeros((n, n), dtype=complex)
    for i, j in itertools.combinations(range(n), 2):
        v = tau_pf(2, mu, eps, psi1, seam, [a[i], a[j]])
        mat[i, j], mat[j, i] = v, -v
    if n % 2:
        mat = bordered(mat, [tau_pf(1, mu, eps, psi1, seam, [ai]) for ai in a])
    return mat


def verify_debruijn(n: int, mu: DiscreteMeasure, eps: PairKernel, seam: SeamFunction | None,
                    psi1: PairKernel, a: Sequence) -> IdentityResidual:
    a = list(a)[:n]
    if len(a) != n:
        raise ValueError("need n bracket points")
    lhs = tau_pf(n, mu, eps, psi1, seam, a)
    mat = debruijn_matrix(n, mu, eps, psi1, seam, a)
    rhs = pfaffian(mat)
    # both sides can cancel far below their summands; measure against the largest one
    floor = max(_largest_summand(*_tau_pf_parts(n, mu, eps, psi1, seam, a)),
                pfaffian_floor(mat))
    return IdentityResidual.from_sides("debruijn", lhs, rhs, floor, n=n)


def pf_fay_terms(variant: int, n: int, mu: DiscreteMeasure, eps: PairKernel,
                 seam: SeamFunction | None, psi1: PairKernel, a: Sequence) -> list[complex]:
    a1, a2, a3, a4 = a

    def tau(k, pts=()):
        return tau_pf(k, mu, eps, psi1, seam, pts)

    if variant == 1:
        return [
            tau(n + 4, [a1, a2, a3, a4]) * tau(n),
            -tau(n + 2, [a1, a2]) * tau(n + 2, [a3, a4]),
            tau(n + 2, [a1, a3]) * tau(n + 2, [a2, a4]),
            -tau(n + 2, [a1, a4]) * tau(n + 2, [a2, a3]),
        ]
    if variant == 2:
        return [
            tau(n + 3, [a2, a3, a4]) * tau(n + 1, [a1]),
            -tau(n + 3, [a1, a3, a4]) * tau(n + 1, [a2]),
            tau(n + 3, [a1, a2, a4]) * tau(n + 1, [a3]),
            -tau(n + 3, [a1, a2, a3]) * tau(n + 1, [a4]),
        ]
    if variant == 3:
        return [
            tau(n + 3, [a1, a2, a3]) * tau(n),
            -tau(n + 2, [a2, a3]) * tau(n + 1, [a1]),
            tau(n + 2, [a1, a3]) * tau(n + 1, [a2]),
            -tau(n + 2, [a1, a2]) * tau(n + 1, [a3]),
        ]
    raise ValueError("variant must be 1, 2 or 3")


def verify_pf_fay(variant: int, n: int, mu: DiscreteMeasure, eps: PairKernel,
                  seam: SeamFunction | None, psi1: PairKernel, a: Sequence) -> IdentityResidual:
    terms = pf_fay_terms(variant, n, mu, eps, seam, psi1, list(a))
    return IdentityResidual.from_terms(f"pf_fay_{variant}", terms, n=n)


def circle_measure(atoms: int, p, q, t_params: Sequence) -> DiscreteMeasure:
    """Trapezoid weights on the unit circle for prod_r Gamma(t_r z^{+-1}) / Gamma(z^{+-2})."""
    z = np.exp(2j * np.pi * np.arange(atoms) / atoms)
    tp = np.asarray(t_params, dtype=complex)
    args = np.concatenate([np.outer(tp, z), np.outer(tp, 1.0 / z)])
    w = np.prod(elliptic_gamma(args, p, q, DEFAULT_POLICY), axis=0)
    w = w * gamma_pair_reciprocal(z * z, p, q) / atoms
    return DiscreteMeasure(tuple(z), tuple(w))


def bridge_check(p, q, t_params: Sequence, n: int = 2, coarse: int = 64,
                 fine: int = 128) -> IdentityResidual:
    """Refine a circle measure and compare the psi_p-psi_p tau of order n."""
    kern = PairKernel.theta(p)
    lo = tau_det(n, circle_measure(coarse, p, q, t_params), kern, kern)
    hi = tau_det(n, circle_measure(fine, p, q, t_params), kern, kern)
    return IdentityResidual.from_sides("circle_bridge", lo, hi, n=n, atoms=[coarse, fine])
