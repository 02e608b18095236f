"""The theta-function families f and g and numerical checks of the identities among them.

Every ``verify_*`` function returns an :class:`IdentityResidual`.  Inputs that
put a needed theta or psi value within :data:`GENERIC_THRESHOLD` of zero raise
:class:`DegenerateConfiguration`; randomized drivers resample on that error.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .errors import DegenerateConfiguration, PoleProximity
from .pfaffian import check_antisymmetric, pfaffian
from .residual import IdentityResidual, pfaffian_floor, permutation_floor
from .special import DEFAULT_POLICY, TruncationPolicy, exact_ratio, psi, theta

GENERIC_THRESHOLD = 1e-10


def _cplx(values) -> np.ndarray:
    return np.asarray(values, dtype=complex).reshape(-1)


def _require_generic(values, label: str, threshold: float = GENERIC_THRESHOLD) -> None:
    values = np.asarray(values)
    if values.size and float(np.min(np.abs(values))) < threshold:
        raise DegenerateConfiguration(f"{label} is (nearly) zero")


def _th(x, p, policy):
    return theta(np.asarray(x, dtype=complex), p, policy)


def f_n(u0, z: Sequence, p, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """prod_i theta_p(u0 z_i) theta_p(u0 / z_i)."""
    z = _cplx(z)
    if z.size == 0:
        return 1.0 + 0.0j
    u0 = complex(u0)
    return complex(np.prod(_th(u0 * z, p, policy) * _th(exact_ratio(u0, z), p, policy)))


def _g_summands(u, z, p, t, policy, check: bool = True) -> np.ndarray:
    """The 2^n unsymmetrized terms of g, one per sign pattern of z."""
    u = _cplx(u)
    z = _cplx(z)
    n = z.size
    t = complex(t)
    signs = np.array(list(itertools.product((1, -1), repeat=n)), dtype=float)
    zz = np.where(signs > 0, z[None, :], 1.0 / z[None, :])
    # per-variable factor; a true ratio rather than u * (1/z), so u_r / u_r is exactly 1
    flip = signs[:, :, None] > 0
    uz = np.where(flip, u[None, None, :] * z[None, :, None],
                  exact_ratio(u[None, None, :], z[None, :, None]))
    upper = np.prod(_th(uz, p, policy), axis=-1)
    upper = upper * _th(zz / (t ** (n - 1) * np.prod(u)), p, policy)
    lower = zz**2 * _th(zz**2, p, policy)
    if check and np.min(np.abs(_th(zz**2, p, policy))) < GENERIC_THRESHOLD:
        raise PoleProximity("theta_p(z_i^2) vanishes")
    terms = np.prod(upper / lower, axis=1)
    if n >= 2:
        ii, jj = np.triu_indices(n, k=1)
        prod = zz[:, ii] * zz[:, jj]
        den = _th(prod, p, policy)
        if check and np.min(np.abs(den)) < GENERIC_THRESHOLD:
            raise PoleProximity("theta_p(z_i z_j) vanishes")
        terms = terms * np.prod(_th(t * prod, p, policy) / den, axis=1)
    return terms


def g_n(u: Sequence, z: Sequence, p, t, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """BC_n-symmetrized theta function g^(n) with five parameters u_0..u_4."""
    u = _cplx(u)
    if u.size != 5:
        raise ValueError("g_n takes exactly five parameters")
    if _cplx(z).size == 0:
        return 1.0 + 0.0j
    return complex(np.sum(_g_summands(u, z, p, t, policy)))


def g_n_scaled(u: Sequence, z: Sequence, p, t,
               policy: TruncationPolicy = DEFAULT_POLICY) -> tuple[complex, float]:
    """g^(n) together with its largest summand, the scale of its rounding error."""
    u = _cplx(u)
    if u.size != 5:
        raise ValueError("g_n takes exactly five parameters")
    if _cplx(z).size == 0:
        return 1.0 + 0.0j, 1.0
    terms = _g_summands(u, z, p, t, policy)
    return complex(np.sum(terms)), float(np.max(np.abs(terms)))


def verify_three_term(x, y, z, w, p, policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    terms = [
        psi(x, y, p, policy) * psi(z, w, p, policy),
        -psi(x, z, p, policy) * psi(y, w, p, policy),
        psi(x, w, p, policy) * psi(y, z, p, policy),
    ]
    return IdentityResidual.from_terms("three_term", terms)


def verify_cauchy_det(x: Sequence, y: Sequence, p,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    x, y = _cplx(x), _cplx(y)
    n = x.size
    if y.size != n:
        raise ValueError("x and y must have the same length")
    cross = psi(x[:, None], y[None, :], p, policy).reshape(n, n)
    _require_generic(cross, "psi(x_i, y_j)")
    mat = 1.0 / cross
    lhs = np.linalg.det(mat) if n else 1.0
    num = 1.0 + 0.0j
    for i, j in itertools.combinations(range(n), 2):
        num *= psi(x[i], x[j], p, policy) * psi(y[i], y[j], p, policy)
    rhs = (-1) ** (n * (n - 1) // 2) * num / np.prod(cross)
    return IdentityResidual.from_sides("cauchy_det", lhs, rhs, permutation_floor(mat), n=n)


def verify_parfrac(x: Sequence, y: Sequence, p,
                   policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    x, y = _cplx(x), _cplx(y)
    n = y.size
    if x.size != n + 2:
        raise ValueError("need len(x) == len(y) + 2")
    terms = []
    for k in range(n + 2):
        others = np.delete(x, k)
        den = psi(x[k], others, p, policy)
        _require_generic(den, "psi(x_k, x_i)")
        num = np.prod(psi(x[k], y, p, policy)) if n else 1.0
        terms.append(num / np.prod(den))
    return IdentityResidual.from_terms("parfrac", terms, n=n)


def verify_grels(u: Sequence, v: Sequence, z: Sequence, p, t,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    u, v, z = _cplx(u), _cplx(v), _cplx(z)
    n = z.size
    if u.size != 4 or v.size != n + 2:
        raise ValueError("need four u's and n + 2 v's")
    base = complex(t) ** (n - 1) * np.prod(u)
    terms, floor = [], 0.0
    for i in range(n + 2):
        others = np.delete(v, i)
        den = _th(others / v[i], p, policy) * _th(base * v[i] * others, p, policy) / others
        _require_generic(den, "grels denominator")
        g, scale = g_n_scaled(np.append(u, v[i]), z, p, t, policy)
        terms.append(g / np.prod(den))
        floor = max(floor, scale / abs(np.prod(den)))
    return IdentityResidual.from_sides("grels", sum(terms), 0.0, floor, n=n)


def fasg_constant(u: Sequence, n: int, p, t, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """prod_{1<=i<=n} theta_p(t^{n-i} u1u2, t^{n-i} u1u3, t^{n-i} u2u3) / (t^{n-1} u0u1u2u3)."""
    u0, u1, u2, u3 = _cplx(u)
    t = complex(t)
    out = 1.0 + 0.0j
    for i in range(1, n + 1):
        s = t ** (n - i)
        out *= np.prod(_th(np.array([s * u1 * u2, s * u1 * u3, s * u2 * u3]), p, policy))
        out /= t ** (n - 1) * u0 * u1 * u2 * u3
    return complex(out)


def verify_fasg(u: Sequence, z: Sequence, p, t,
                policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    u, z = _cplx(u), _cplx(z)
    if u.size != 4:
        raise ValueError("need four parameters u_0..u_3")
    n = z.size
    lhs, floor = g_n_scaled(np.append(u, 1.0 / u[0]), z, p, t, policy)
    rhs = f_n(u[0], z, p, policy) * fasg_constant(u, n, p, t, policy)
    return IdentityResidual.from_sides("fasg", lhs, rhs, floor, n=n)


def verify_g_specialization(u: Sequence, z: Sequence, p, t,
                            policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    """Set the first variable of g^(n) to u_0 and compare with the reduced g^(n-1)."""
    u, z = _cplx(u), _cplx(z)
    if u.size != 5:
        raise ValueError("need five parameters")
    n = z.size + 1
    t = complex(t)
    lhs, floor = g_n_scaled(u, np.concatenate([[u[0]], z]), p, t, policy)
    const = _th(1.0 / (t ** (n - 1) * np.prod(u[1:])), p, policy)
    const *= np.prod(_th(u[0] * u[1:], p, policy)) / u[0] ** 2
    reduced, scale = g_n_scaled(np.concatenate([[t * u[0]], u[1:]]), z, p, t, policy)
    rhs = complex(const) * reduced
    floor = max(floor, abs(complex(const)) * scale)
    return IdentityResidual.from_sides("g_specialization", lhs, rhs, floor, n=n)


def gtof_coefficients(u: Sequence, p, t, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Coefficients c_r with g^(4)_{u_0..u_4} = sum_r c_r f^(4)_{u_r}."""
    u = _cplx(u)
    t = complex(t)
    big_u = np.prod(u)
    pre = 1.0 + 0.0j
    for i, j in itertools.combinations(range(5), 2):
        pre *= _th(u[i] * u[j], p, policy) * _th(t * u[i] * u[j], p, policy)
    coeffs = []
    for r in range(5):
        others = np.delete(u, r)
        den = others**2 * _th(u[r] / others, p, policy) * _th(u[r] * others, p, policy)
        den = den * _th(t * u[r] * others, p, policy)
        _require_generic(den, "gtof denominator")
        num = _th(others / (t**3 * big_u), p, policy)
        coeffs.append(pre * np.prod(num / den))
    return np.array(coeffs)


def verify_gtof(u: Sequence, z: Sequence, p, t,
                policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    u, z = _cplx(u), _cplx(z)
    if u.size != 5 or z.size != 4:
        raise ValueError("need five parameters and four variables")
    coeffs = gtof_coefficients(u, p, t, policy)
    terms = [c * f_n(ur, z, p, policy) for c, ur in zip(coeffs, u)]
    lhs, scale = g_n_scaled(u, z, p, t, policy)
    return IdentityResidual.from_sides(
        "gtof", lhs, sum(terms), max(scale, max(abs(x) for x in terms))
    )


def ftog_coefficients(u: Sequence, p, t, reading: str = "r",
                      policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Coefficients d_r (r = 1..5) with f^(4)_{u_0} = sum_r d_r g^(4)_{u without u_r}.

    ``reading`` selects the index of the theta factor under the sum: ``"r"``
    divides by theta_p(u_0 u_r / t^3 U); ``"product"`` divides by the full
    product over i != r.  Only the ``"r"`` reading is an identity.
    """
    u = _cplx(u)
    if u.size != 6:
        raise ValueError("need six parameters u_0..u_5")
    t = complex(t)
    big_u = np.prod(u)
    rest = u[1:]
    # the factors span more than the double range for small t, so work in logs
    head = _th(u[0] * rest / (t**3 * big_u), p, policy)
    log_pre = np.sum(np.log(head))
    for i, j in itertools.combinations(range(5), 2):
        den = _th(rest[i] * rest[j], p, policy) * _th(t * rest[i] * rest[j], p, policy)
        _require_generic(den, "ftog prefactor")
        log_pre -= np.log(den)
    log_pre -= np.sum(np.log(_th(t ** (np.arange(4) - 6) / big_u, p, policy)))
    coeffs = []
    for r in range(5):
        others = np.delete(rest, r)
        if reading == "r":
            inner = -np.log(head[r])
        elif reading == "product":
            inner = -np.sum(np.log(np.delete(head, r)))
        else:
            raise ValueError("reading must be 'r' or 'product'")
        den = _th(rest[r] / others, p, policy)
        _require_generic(den, "theta_p(u_r / u_i)")
        cross = others**2 * _th(others * rest[r], p, policy) * _th(t * others * rest[r], p, policy)
        val = inner + np.sum(np.log(_th(t ** np.arange(4) * u[0] * rest[r], p, policy)))
        coeffs.append(np.exp(log_pre + val + np.sum(np.log(cross)) - np.sum(np.log(den))))
    return np.array(coeffs)


def verify_ftog(u: Sequence, z: Sequence, p, t, reading: str = "r",
                policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    u, z = _cplx(u), _cplx(z)
    if z.size != 4:
        raise ValueError("need four variables")
    coeffs = ftog_coefficients(u, p, t, reading, policy)
    terms, floor = [], 0.0
    for r in range(5):
        g, scale = g_n_scaled(np.delete(u, r + 1), z, p, t, policy)
        terms.append(coeffs[r] * g)
        floor = max(floor, abs(coeffs[r]) * scale)
    lhs = f_n(u[0], z, p, policy)
    return IdentityResidual.from_sides("ftog", lhs, sum(terms), floor, reading=reading)


def okada_matrix(u: Sequence, a, b, c, p, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    u = _cplx(u)
    ui, uj = u[:, None], u[None, :]
    prod = ui * uj
    den = _th(c * prod, p, policy)
    _require_generic(den, "theta_p(c u_i u_j)")
    return uj * _th(ui / uj, p, policy) * _th(a * prod, p, policy) * _th(b * prod, p, policy) / den


def verify_okada(u: Sequence, a, b, c, p,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    u = _cplx(u)
    if u.size % 2:
        raise ValueError("need an even number of parameters")
    n = u.size // 2
    a, b, c = complex(a), complex(b), complex(c)
    mat = okada_matrix(u, a, b, c, p, policy)
    defect = check_antisymmetric(mat)
    lhs = pfaffian(mat, check=False)
    big_u = np.prod(u)
    rhs = c ** (n * (n - 1)) * (_th(a / c, p, policy) * _th(b / c, p, policy)) ** (n - 1)
    rhs *= _th(a * c ** (n - 1) * big_u, p, policy) * _th(b * c ** (n - 1) * big_u, p, policy)
    for i, j in itertools.combinations(range(2 * n), 2):
        rhs *= u[j] * _th(u[i] / u[j], p, policy) / _th(c * u[i] * u[j], p, policy)
    return IdentityResidual.from_sides(
        "okada", lhs, rhs, pfaffian_floor(mat), n=n, antisymmetry_defect=defect
    )


def verify_okada_corollary(u: Sequence, a, b, p,
                           policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    u = _cplx(u)
    n = u.size - 1
    a, b = complex(a), complex(b)
    big_u = np.prod(u)
    terms = []
    for r in range(n + 1):
        others = np.delete(u, r)
        den = others * _th(u[r] / others, p, policy)
        _require_generic(den, "theta_p(u_r / u_i)")
        lead = _th(np.array([a * u[r], b * u[r], a * big_u / u[r], b * big_u / u[r]]), p, policy)
        terms.append(np.prod(lead) * np.prod(_th(others * u[r], p, policy) / den))
    if n % 2 == 0:
        rhs = complex(np.prod(_th(np.array([a, b, a * big_u, b * big_u]), p, policy)))
    else:
        rhs = 0.0
    return IdentityResidual.from_sides(
        "okada_corollary", sum(terms), rhs, max(abs(x) for x in terms), n=n
    )


def cauchy_pfaffian_matrix(z: Sequence, t, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    z = _cplx(z)
    t = complex(t)
    nome = t * t
    zi, zj = z[:, None], z[None, :]
    den = _th(t * zi * zj, nome, policy) * _th(t * zi / zj, nome, policy)
    _require_generic(den, "theta(t z_i z_j^{+-1}; t^2)")
    return _th(zi * zj, nome, policy) * _th(zi / zj, nome, policy) / (zi * den)


def verify_cauchy_pfaffian(z: Sequence, t,
                           policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    z = _cplx(z)
    if z.size % 2:
        raise ValueError("need an even number of variables")
    n = z.size // 2
    mat = cauchy_pfaffian_matrix(z, t, policy)
    # near the polar divisor the two halves lose digits independently
    defect = check_antisymmetric(mat, tol=1e-8)
    mat = 0.5 * (mat - mat.T)
    lhs = pfaffian(mat, check=False)
    rhs = complex(t) ** (n * (n - 1))
    for i, j in itertools.combinations(range(2 * n), 2):
        rhs *= mat[i, j]
    return IdentityResidual.from_sides(
        "cauchy_pfaffian", lhs, rhs, pfaffian_floor(mat), n=n, antisymmetry_defect=defect
    )


def verify_f_dependency(u: Sequence, z: Sequence, p,
                        policy: TruncationPolicy = DEFAULT_POLICY) -> IdentityResidual:
    """Linear relation among the six functions f^(4)_{u_r}, r = 0..5.

    Uses ``prod_j psi(u, z_j) = u^-4 f^(4)_u(z)`` in the partial-fraction relation.
    """
    u, z = _cplx(u), _cplx(z)
    if u.size != 6 or z.size != 4:
        raise ValueError("need six parameters and four variables")
    terms = []
    for k in range(6):
        den = psi(u[k], np.delete(u, k), p, policy)
        _require_generic(den, "psi(u_k, u_i)")
        terms.append(f_n(u[k], z, p, policy) / (u[k] ** 4 * np.prod(den)))
    return IdentityResidual.from_terms("f_dependency", terms)
