"""Infinite-product special functions: theta, elliptic Gamma, triple Gamma.

All functions accept a complex scalar or a numpy array for the argument ``x``
and return the same shape.  Nomes are complex scalars with modulus below one.

Products are evaluated as ``exp(sum(log1p(-a)))``: a plain running product
silently rounds the many factors with ``|a|`` below machine epsilon to one,
which biases triple products by ~1e-13.

Truncation
----------
Single-nome products (``theta``, ``pochhammer_inf``) keep ``K`` factors where
``K`` comes from :func:`truncation_terms`.  Multi-nome products keep every
multi-index ``a`` with ``|m|**a >= c``; the cutoff ``c`` is chosen with the
bound ``sum_{|m|**a < c} |m|**a <= c**(1-s) * prod 1/(1 - |m_i|**s)`` (any
``0 < s < 1``), so the dropped tail is certified without enumerating a box.
"""

from __future__ import annotations

import itertools
import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import (
    NomeOutOfRange,
    PoleProximity,
    TruncationBudgetExceeded,
    ZeroArgument,
)

SAFETY_FACTOR = 2
POLE_THRESHOLD = 1e-13
# cap on (#arguments x #factors) materialised at once
_CHUNK_ELEMENTS = 1 << 21
_SERIES_CUTOFF = 1e-6
_RANKIN_EXPONENTS = tuple(k / 100 for k in range(2, 96))


@dataclass(frozen=True)
class TruncationPolicy:
    """Relative error target and per-index term budget for product truncation."""

    target_eps: float = 1e-14
    max_terms: int = 10**6

    def __post_init__(self):
        if not self.target_eps > 0:
            raise ValueError("target_eps must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be a positive integer")


DEFAULT_POLICY = TruncationPolicy()


def truncation_terms(nome_modulus: float, target_eps: float) -> int:
    """Number of factors needed so that ``m**K / (1 - m) < target_eps``.

    The smallest such ``K`` is multiplied by :data:`SAFETY_FACTOR`.  A zero
    modulus needs one factor.
    """
    m = float(nome_modulus)
    if not 0.0 <= m < 1.0:
        raise NomeOutOfRange(f"nome modulus {m} outside [0, 1)")
    if target_eps <= 0:
        raise ValueError("target_eps must be positive")
    if m == 0.0:
        return 1
    # m**K < eps*(1-m)  <=>  K > log(eps*(1-m)) / log(m)
    k = max(0, math.floor(math.log(target_eps * (1.0 - m)) / math.log(m)))
    while m**k / (1.0 - m) >= target_eps:
        k += 1
    while k > 0 and m ** (k - 1) / (1.0 - m) < target_eps:
        k -= 1
    return SAFETY_FACTOR * k


def _check_nome(value, name: str = "nome") -> complex:
    v = complex(value)
    if not abs(v) < 1.0:
        raise NomeOutOfRange(f"|{name}| = {abs(v)} must be < 1")
    return v


def _as_argument(x) -> np.ndarray:
    if isinstance(x, (int, float, complex)):
        v = complex(x)
        if v == 0:
            raise ZeroArgument("argument must be nonzero")
        if not cmath.isfinite(v):
            raise ValueError("argument must be finite")
        return np.asarray(v)
    arr = np.asarray(x, dtype=complex)
    if arr.size and np.any(arr == 0):
        raise ZeroArgument("argument must be nonzero")
    if not np.all(np.isfinite(arr)):
        raise ValueError("argument must be finite")
    return arr


def _restore(arr: np.ndarray, like):
    if np.ndim(like) == 0:
        return complex(arr)
    return arr


def _check_finite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise OverflowError(f"{what} overflowed")
    return values


def _scale(arr: np.ndarray, inner: float) -> float:
    """Bound on |x| + inner/|x| over all entries (size of the first factors)."""
    mod = np.abs(arr)
    return float(mod.max() + inner / mod.min())


@lru_cache(maxsize=512)
def _exponents(moduli: tuple[float, ...], eps: float, max_terms: int) -> np.ndarray:
    """Multi-indices kept by the certified simplex truncation.

    Rows are sorted by decreasing monomial modulus.  The sort is deterministic,
    so the evaluation order is fixed for a given (moduli, eps).
    """
    d = len(moduli)
    logs = []
    for m in moduli:
        if not 0.0 <= m < 1.0:
            raise NomeOutOfRange(f"nome modulus {m} outside [0, 1)")
        logs.append(math.inf if m == 0.0 else -math.log(m))
    # tail <= c**(1-s) * prod 1/(1 - m_i**s) for any 0 < s < 1; pick the s
    # that allows the largest cutoff c, i.e. the smallest log-budget
    pos = np.array([m for m in moduli if m > 0.0])
    s = np.asarray(_RANKIN_EXPONENTS)
    slack = np.log1p(-(pos[None, :] ** s[:, None])).sum(axis=1)
    budget = max(float(np.min((-math.log(eps) - slack) / (1.0 - s))), 0.0)
    for lg in logs:
        if lg != math.inf and budget / lg > max_terms:
            raise TruncationBudgetExceeded(
                f"need {int(budget / lg)} terms per index, budget {max_terms}"
            )
    # expand one index at a time, tracking the unused part of the budget
    cols: list[np.ndarray] = []
    left = np.array([budget])
    for i in range(d - 1, -1, -1):
        if logs[i] == math.inf:
            tops = np.zeros(left.size, dtype=np.int64)
        else:
            tops = np.maximum(np.floor(left / logs[i]), 0).astype(np.int64)
        counts = tops + 1
        parent = np.repeat(np.arange(left.size), counts)
        starts = np.cumsum(counts) - counts
        a = np.arange(parent.size) - np.repeat(starts, counts)
        step = 0.0 if logs[i] == math.inf else logs[i]
        left = left[parent] - a * step
        cols = [a] + [c[parent] for c in cols]
    # what is left of the budget is budget minus the row's weight
    order = np.argsort(-left)
    out = np.empty((order.size, d), dtype=np.int64)
    for i, c in enumerate(cols):
        out[:, i] = c[order]
    out.setflags(write=False)
    return out


def _monomials(nomes: Sequence[complex], exps: np.ndarray) -> np.ndarray:
    vals = np.ones(exps.shape[0], dtype=complex)
    for i, v in enumerate(nomes):
        col = exps[:, i]
        powers = np.power(v, np.arange(col.max() + 1, dtype=float))
        vals = vals * powers[col]
    return vals


@lru_cache(maxsize=512)
def _monomial_table(nomes: tuple[complex, ...], eps: float, max_terms: int):
    """Truncated monomials in the nomes with their moduli, both read-only."""
    exps = _exponents(tuple(abs(v) for v in nomes), eps, max_terms)
    mono = _monomials(nomes, exps)
    mags = np.abs(mono)
    mono.setflags(write=False)
    mags.setflags(write=False)
    return mono, mags


def log1p_complex(z):
    """Accurate log(1 + z) for complex z, including |z| far below machine epsilon.

    numpy's complex ``log1p`` loses relative accuracy for small arguments.  Away
    from 0 the modulus comes from ``hypot(1 + x, y)``, which stays accurate
    near the zero at ``z = -1``.
    """
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    xp1 = 1.0 + x
    out = np.empty(z.shape, dtype=complex)
    with np.errstate(divide="ignore"):
        out.real = np.where(np.abs(z) < 0.5, 0.5 * np.log1p(x * (2.0 + x) + y * y),
                            np.log(np.hypot(xp1, y)))
    out.imag = np.arctan2(y, xp1)
    return out if out.ndim else out[()]


def _head_length(mags: np.ndarray, factor: float) -> int:
    """Count of leading entries with mags[k] * factor >= the series cutoff."""
    if not mags.size or mags[0] * factor < _SERIES_CUTOFF:
        return 0
    return int(np.searchsorted(-mags, -_SERIES_CUTOFF / factor, side="right"))


def _sum_log1m(w: np.ndarray, mags: np.ndarray, factor: float) -> np.ndarray:
    """sum log(1 - w) over the last axis, given |w[..., k]| <= mags[k] * factor.

    ``mags`` must be non-increasing.  Factors whose bound is below the cutoff
    use -w - w^2/2, whose error |w|^3/3 is far below rounding.
    """
    head = _head_length(mags, factor)
    out = np.sum(log1p_complex(-w[..., :head]), axis=-1)
    tail = w[..., head:]
    return out - np.sum(tail, axis=-1) - 0.5 * np.einsum("...k,...k->...", tail, tail)


def _sum_log1m_parts(parts) -> np.ndarray:
    """sum log(1 - w) over several ``(w, mags, factor)`` blocks in one pass."""
    heads, tails = [], []
    for w, mags, factor in parts:
        h = _head_length(mags, factor)
        heads.append(w[..., :h])
        tails.append(w[..., h:])
    head = np.concatenate(heads, axis=-1)
    tail = np.concatenate(tails, axis=-1)
    out = np.sum(log1p_complex(-head), axis=-1)
    return out - np.sum(tail, axis=-1) - 0.5 * np.einsum("...k,...k->...", tail, tail)


@lru_cache(maxsize=256)
def _power_table(p: complex, k: int):
    """(p**j, p**(j+1), |p**j|) for j < k, read-only."""
    pk = np.power(p, np.arange(k, dtype=float))
    tables = (pk, pk * p, np.abs(pk))
    for a in tables:
        a.setflags(write=False)
    return tables


def _product_rows(factors_for_chunk, arr: np.ndarray, n_terms: int) -> np.ndarray:
    """Evaluate a product over ``n_terms`` factors for each entry of ``arr``."""
    flat = arr.reshape(-1)
    step = max(1, _CHUNK_ELEMENTS // max(n_terms, 1))
    if flat.size <= step:
        return factors_for_chunk(flat[:, None]).reshape(arr.shape)
    out = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, step):
        chunk = flat[start : start + step]
        out[start : start + step] = factors_for_chunk(chunk[:, None])
    return out.reshape(arr.shape)


def theta(x, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """theta_p(x) = prod_{k>=0} (1 - p**(k+1)/x) (1 - p**k x).

    ``p = 0`` is allowed and gives ``1 - x``.
    """
    p = _check_nome(p, "p")
    arr = _as_argument(x)
    if arr.size == 0:
        return arr
    if p == 0:
        return _restore(1.0 - arr, x)
    scale = _scale(arr, abs(p))
    k = truncation_terms(abs(p), policy.target_eps / max(scale, 1.0))
    if k > policy.max_terms:
        raise TruncationBudgetExceeded(f"theta needs {k} terms")
    pk, pk1, mags = _power_table(p, k)
    m1 = abs(p)

    def block(xc):
        mod = np.abs(xc)
        return np.exp(_sum_log1m_parts(
            ((pk1 * (1.0 / xc), mags, m1 / mod.min()), (pk * xc, mags, mod.max()))
        ))

    out = _product_rows(block, arr, k)
    return _restore(_check_finite(out, "theta"), x)


def elliptic_gamma(x, p, q, policy: TruncationPolicy = DEFAULT_POLICY):
    """Ruijsenaars' elliptic Gamma function Gamma_{p,q}(x).

    Raises :class:`PoleProximity` when some denominator factor
    ``1 - p**j q**k x`` falls below :data:`POLE_THRESHOLD` in modulus.
    """
    p = _check_nome(p, "p")
    q = _check_nome(q, "q")
    arr = _as_argument(x)
    if arr.size == 0:
        return arr
    nomes = _canonical_nomes((p, q))
    pq = p * q
    scale = _scale(arr, abs(pq))
    mono, mags = _monomial_table(
        nomes, policy.target_eps / (2.0 * max(scale, 1.0)), policy.max_terms
    )
    upper = mono * pq
    m_pq = abs(pq)

    def block(xc):
        lower = mono * xc
        if np.min(np.abs(1.0 - lower)) < POLE_THRESHOLD:
            raise PoleProximity("elliptic_gamma argument at a pole")
        big, small = np.max(np.abs(xc)), np.min(np.abs(xc))
        logs = _sum_log1m(upper * (1.0 / xc), mags, m_pq / small)
        logs = logs - _sum_log1m(lower, mags, big)
        return np.exp(logs)

    out = _product_rows(block, arr, mono.size)
    return _restore(_check_finite(out, "elliptic_gamma"), x)


def triple_gamma(x, p, q, t, policy: TruncationPolicy = DEFAULT_POLICY):
    """Gamma^+_{p,q,t}(x) = prod (1 - p^(i+1) q^(j+1) t^(k+1)/x)(1 - p^i q^j t^k x).

    The nomes are put in a canonical order first, so every permutation of
    ``(p, q, t)`` returns a bit-identical value.
    """
    nomes = _canonical_nomes(
        (_check_nome(p, "p"), _check_nome(q, "q"), _check_nome(t, "t"))
    )
    arr = _as_argument(x)
    if arr.size == 0:
        return arr
    pqt = nomes[0] * nomes[1] * nomes[2]
    scale = _scale(arr, abs(pqt))
    mono, mags = _monomial_table(
        nomes, policy.target_eps / (2.0 * max(scale, 1.0)), policy.max_terms
    )
    upper = mono * pqt
    m_pqt = abs(pqt)

    def block(xc):
        mod = np.abs(xc)
        return np.exp(_sum_log1m_parts(
            ((upper * (1.0 / xc), mags, m_pqt / mod.min()), (mono * xc, mags, mod.max()))
        ))

    out = _product_rows(block, arr, mono.size)
    return _restore(_check_finite(out, "triple_gamma"), x)


def _canonical_nomes(nomes: Sequence[complex]) -> tuple[complex, ...]:
    return tuple(sorted(nomes, key=lambda v: (abs(v), v.real, v.imag)))


def exact_ratio(a, b):
    """a / b, with a / a exactly 1 (numpy's complex division can miss it by an ulp)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = np.where(a == b, 1.0 + 0.0j, a / b)
    return out if out.ndim else out[()]


def psi(x, y, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """psi_p(x, y) = x**-1 theta_p(x y) theta_p(x / y)."""
    xa = _as_argument(x)
    ya = _as_argument(y)
    out = theta(xa * ya, p, policy) * theta(exact_ratio(xa, ya), p, policy) / xa
    if np.ndim(out) == 0:
        return complex(out)
    return out


def pochhammer_inf(a, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """(a; a)_infinity = prod_{i>=1} (1 - a**i)."""
    a = _check_nome(a, "a")
    if a == 0:
        return 1.0 + 0.0j
    k = truncation_terms(abs(a), policy.target_eps)
    if k > policy.max_terms:
        raise TruncationBudgetExceeded(f"pochhammer needs {k} terms")
    powers = np.power(a, np.arange(1, k + 1, dtype=float))
    return complex(np.exp(np.sum(log1p_complex(-powers))))


def gamma_pair_reciprocal(x, p, q, policy: TruncationPolicy = DEFAULT_POLICY):
    """1 / (Gamma_{p,q}(x) Gamma_{p,q}(1/x)) = theta_p(x) theta_q(1/x).

    Finite at ``x = 1`` where both Gamma factors have poles.
    """
    arr = _as_argument(x)
    out = theta(arr, p, policy) * theta(1.0 / arr, q, policy)
    if np.ndim(out) == 0:
        return complex(out)
    return out


def pm(base, *variables) -> list:
    """Expand the multiple-argument shorthand ``base * v1**(+-1) * v2**(+-1) ...``.

    ``pm(t, zi, zj)`` returns ``[t zi zj, t zi/zj, t zj/zi, t/(zi zj)]``; the
    first variable's sign varies slowest.
    """
    out = []
    for signs in itertools.product((1, -1), repeat=len(variables)):
        term = base
        for v, s in zip(variables, signs):
            term = term * v if s > 0 else term / v
        out.append(term)
    return out


def theta_multi(args: Sequence, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """theta_p(a1, a2, ...) = theta_p(a1) theta_p(a2) ..."""
    out = 1.0 + 0.0j
    for a in args:
        out = out * theta(a, p, policy)
    return out


def gamma_multi(args: Sequence, p, q, policy: TruncationPolicy = DEFAULT_POLICY):
    out = 1.0 + 0.0j
    for a in args:
        out = out * elliptic_gamma(a, p, q, policy)
    return out
