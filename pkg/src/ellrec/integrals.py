"""Trapezoid quadrature of the order-n elliptic Selberg-type integral on the unit torus.

On the grid ``z_k = exp(2 pi i k / N)`` the products ``z_i z_j`` and ``z_i / z_j``
are again grid nodes, so the integrand factorises through two length-N tables:

    A[k] = prod_r Gamma(t_r z_k^{+-1}) / Gamma(z_k^{+-2})
    H[k] = Gamma(t z_k^{+-1}) / Gamma(z_k^{+-1})

and the order-n sum is ``sum_k prod_i A[k_i] prod_{i<j} H[k_i + k_j] H[k_i - k_j]``
(indices mod N).  The reciprocal pairs ``1/Gamma(x)Gamma(1/x)`` are evaluated as
``theta_p(x) theta_q(1/x)``, which is finite on the diagonal.

The grid is cut into blocks of the first index whose size depends only on
(N, n); each block is summed with ``math.fsum`` and the block sums are combined
in block order, so the result does not depend on how many workers ran.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lattice
from .errors import BudgetExceeded, ContourInvalid, NotInStabilizer
from .residual import IdentityResidual
from .special import (
    DEFAULT_POLICY,
    TruncationPolicy,
    elliptic_gamma,
    gamma_pair_reciprocal,
    pochhammer_inf,
    pm,
    triple_gamma,
)

_BLOCK_ELEMENTS = 1 << 18


@dataclass(frozen=True)
class QuadratureSpec:
    nodes: int = 64
    margin: float = 0.05
    contour_radius: float = 1.0
    workers: int = 1
    max_evaluations: int = 2**28
    allow_long: bool = False
    policy: TruncationPolicy = DEFAULT_POLICY

    def __post_init__(self):
        if self.nodes < 2 or self.nodes % 2:
            raise ValueError("nodes must be an even integer >= 2")
        if self.contour_radius != 1.0:
            raise ContourInvalid("only the unit-circle contour is supported")
        if not 0.0 < self.margin < 1.0:
            raise ValueError("margin must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class IntegralResult:
    value: complex
    n: int
    nodes_used: int
    convergence_estimate: float | None = None
    coarse_value: complex | None = None

    def to_json(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "n": self.n,
            "nodes": self.nodes_used,
            "convergence": self.convergence_estimate,
        }


def _check_contour(t_params: np.ndarray, t: complex, margin: float) -> None:
    limit = 1.0 - margin
    worst = float(np.max(np.abs(t_params))) if t_params.size else 0.0
    if worst > limit:
        raise ContourInvalid(
            f"parameter modulus {worst:.6g} exceeds 1 - margin = {limit:.6g}"
        )
    if abs(t) > limit:
        raise ContourInvalid(f"|t| = {abs(t):.6g} exceeds 1 - margin = {limit:.6g}")


def integrand_II(z: Sequence, t_params: Sequence, p, q, t,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Integrand at a single point z (measure and prefactor excluded), evaluated directly."""
    z = [complex(v) for v in z]
    tp = [complex(v) for v in t_params]
    if len(tp) != 8:
        raise ValueError("need eight parameters t_0..t_7")
    out = 1.0 + 0.0j
    for i in range(len(z)):
        for j in range(i + 1, len(z)):
            out *= np.prod(elliptic_gamma(np.array(pm(t, z[i], z[j])), p, q, policy))
            # 1 / Gamma(z_i^{+-1} z_j^{+-1}) as two reciprocal pairs
            out *= gamma_pair_reciprocal(z[i] * z[j], p, q, policy)
            out *= gamma_pair_reciprocal(z[i] / z[j], p, q, policy)
    for zi in z:
        args = np.array([a for tr in tp for a in pm(tr, zi)])
        out *= np.prod(elliptic_gamma(args, p, q, policy))
        out *= gamma_pair_reciprocal(zi * zi, p, q, policy)
    return complex(out)


def _grid(n_nodes: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n_nodes) / n_nodes)


def _tables(n_nodes: int, t_params: np.ndarray, p, q, t, policy):
    z = _grid(n_nodes)
    args = np.concatenate([np.outer(t_params, z), np.outer(t_params, 1.0 / z)])
    a = np.prod(elliptic_gamma(args, p, q, policy), axis=0)
    a = a * gamma_pair_reciprocal(z * z, p, q, policy)
    h = elliptic_gamma(t * z, p, q, policy) * elliptic_gamma(t / z, p, q, policy)
    h = h * gamma_pair_reciprocal(z, p, q, policy)
    return a, h


def _grid_sum(a: np.ndarray, h: np.ndarray, n: int, workers: int = 1) -> complex:
    """sum over k in Z_N^n of prod_i a[k_i] prod_{i<j} h[k_i+k_j] h[k_i-k_j]."""
    size = a.size
    if n == 1:
        return complex(math.fsum(a.real), math.fsum(a.imag))
    rest = size ** (n - 1)
    block = max(1, _BLOCK_ELEMENTS // rest)
    starts = list(range(0, size, block))
    others = [
        np.arange(size).reshape((1,) * i + (size,) + (1,) * (n - 1 - i))
        for i in range(1, n)
    ]

    def block_sum(start: int) -> tuple[float, float]:
        first = np.arange(start, min(start + block, size)).reshape((-1,) + (1,) * (n - 1))
        idx = [first] + others
        vals = a[idx[0]]
        for ix in idx[1:]:
            vals = vals * a[ix]
        for i in range(n):
            for j in range(i + 1, n):
                vals = vals * h[(idx[i] + idx[j]) % size] * h[(idx[i] - idx[j]) % size]
        flat = vals.ravel()
        return math.fsum(flat.real), math.fsum(flat.imag)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(block_sum, starts))
    else:
        partials = [block_sum(s) for s in starts]
    return complex(math.fsum(r for r, _ in partials), math.fsum(i for _, i in partials))


def integrate_II(n: int, t_params: Sequence, p, q, t,
                 spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Trapezoid approximation of the order-n integral, all prefactors included."""
    if n < 0:
        raise ValueError("dimension n must be >= 0")
    tp = np.asarray(t_params, dtype=complex)
    if tp.shape != (8,):
        raise ValueError("need eight parameters t_0..t_7")
    p, q, t = complex(p), complex(q), complex(t)
    if n == 0:
        return IntegralResult(1.0 + 0.0j, 0, 0)
    _check_contour(tp, t, spec.margin)
    big_n = spec.nodes
    if big_n**n > spec.max_evaluations and not spec.allow_long:
        raise BudgetExceeded(
            f"{big_n}^{n} grid points exceed {spec.max_evaluations}; pass allow_long"
        )
    a, h = _tables(big_n, tp, p, q, t, spec.policy)
    pref = (pochhammer_inf(p, spec.policy) * pochhammer_inf(q, spec.policy)) ** n
    pref /= 2**n * math.factorial(n)
    fine = pref * _grid_sum(a, h, n, spec.workers) / big_n**n
    coarse = None
    estimate = None
    if big_n >= 4:
        coarse = pref * _grid_sum(a[::2], h[::2], n, spec.workers) / (big_n // 2) ** n
        estimate = abs(fine - coarse) / max(abs(fine), 1e-300)
    return IntegralResult(complex(fine), n, big_n, estimate, coarse)


def gamma_plus_prefactor(t_params: np.ndarray, p, q, t,
                         policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """prod_{r<s} Gamma^+_{t,p,q}(t t_r t_s)."""
    tp = np.asarray(t_params, dtype=complex)
    iu = np.triu_indices(8, k=1)
    args = t * tp[iu[0]] * tp[iu[1]]
    return complex(np.prod(triple_gamma(args, t, p, q, policy)))


def tilde_II(phi: lattice.TorusPoint, spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Renormalised integral attached to a torus point; zero at negative level."""
    n = lattice.level_of(phi)
    if n < 0:
        return IntegralResult(0.0 + 0.0j, n, 0)
    pr = phi.params
    tp = phi.t_params()
    shifted = pr.sqrt_t * tp
    if n >= 1:
        _check_contour(shifted, pr.t, spec.margin)
    inner = integrate_II(n, shifted, pr.p, pr.q, pr.t, spec)
    pref = gamma_plus_prefactor(tp, pr.p, pr.q, pr.t, spec.policy)
    coarse = None if inner.coarse_value is None else pref * inner.coarse_value
    return IntegralResult(pref * inner.value, n, inner.nodes_used,
                          inner.convergence_estimate, coarse)


def verify_w_invariance(phi: lattice.TorusPoint, word: Sequence[lattice.LatticeVector],
                        spec: QuadratureSpec = QuadratureSpec()) -> IdentityResidual:
    """Compare the renormalised integral at phi and at g^* phi for g fixing omega."""
    if not lattice.stabilizes_omega(word):
        raise NotInStabilizer("the reflection word does not fix omega")
    image = lattice.weyl_act_on_torus(word, phi)
    left = tilde_II(phi, spec)
    right = tilde_II(image, spec)
    return IdentityResidual.from_sides(
        "w_invariance", left.value, right.value, level=left.n, nodes=spec.nodes,
        word_length=len(word),
    )


def verify_elliptic_beta(t_params: Sequence, p, q,
                         spec: QuadratureSpec = QuadratureSpec(nodes=128), t=0.5,
                         tol: float = 1e-12) -> IdentityResidual:
    """Univariate integral with t_6 t_7 = pq and t_0...t_5 = pq against
    prod_{r<s<=5} Gamma(t_r t_s).

    The t_6, t_7 factors cancel by reflection, leaving the elliptic beta
    integral; ``t`` plays no role at n = 1.
    """
    tp = np.asarray(t_params, dtype=complex)
    p, q = complex(p), complex(q)
    pq = p * q
    for label, value in (("t_6 t_7", tp[6] * tp[7]), ("t_0...t_5", np.prod(tp[:6]))):
        if abs(value - pq) > tol * abs(pq):
            raise ValueError(f"{label} must equal pq")
    iu = np.triu_indices(6, k=1)
    closed = complex(np.prod(elliptic_gamma(tp[iu[0]] * tp[iu[1]], p, q, spec.policy)))
    quad = integrate_II(1, tp, p, q, t, spec)
    return IdentityResidual.from_sides(
        "elliptic_beta", quad.value, closed, nodes=spec.nodes,
        convergence=quad.convergence_estimate,
    )


def verify_quadrature_convergence(n: int, t_params: Sequence, p, q, t,
                                  spec: QuadratureSpec = QuadratureSpec(nodes=128),
                                  ) -> IdentityResidual:
    """|I_N - I_{N/2}| / |I_N|: spectral convergence of the trapezoid rule."""
    res = integrate_II(n, t_params, p, q, t, spec)
    return IdentityResidual.from_sides(
        "quadrature_convergence", res.value, res.coarse_value, n=n,
        nodes=[spec.nodes // 2, spec.nodes],
    )
