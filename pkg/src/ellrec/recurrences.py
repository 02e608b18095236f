"""Linear and bilinear recurrences of the renormalised integrals, checked by quadrature.

Every runner returns a :class:`RecurrenceReport` whose residual is
``|sum_r c_r T_r| / max_r |c_r T_r|``.
"""

from __future__ import annotations

import cmath
import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import lattice
from .errors import (
    BalancingViolated,
    ContourInvalid,
    DegenerateConfiguration,
    NotCommonCoset,
    NotUnitVector,
    WrongVectorCount,
)
from .integrals import IntegralResult, QuadratureSpec, integrate_II, tilde_II
from .lattice import LatticeVector, TorusPoint, vec
from .special import psi, theta

GENERIC_THRESHOLD = 1e-10
BALANCING_TOL = 1e-12
FAMILIES = ("q", "q2", "qhalf")

H = Fraction(1, 2)

# vector sets from which the bilinear identities are assembled
TRIPLES_Q = (
    (vec(H, H, H, H), vec(H, H, -H, -H), vec(H, -H, -H, H)),
    (vec(H, -H, H, H), vec(H, H, -H, H), vec(H, H, H, -H)),
    (vec(H, H, -H, -H), vec(H, -H, H, -H), vec(H, -H, -H, H)),
)
QUADRUPLES_Q2 = (
    (vec(H, H, H, H), vec(H, H, -H, -H), vec(H, -H, H, -H), vec(H, -H, -H, H)),
    (vec(-H, H, H, H), vec(H, -H, H, H), vec(H, H, -H, H), vec(H, H, H, -H)),
)
ORBIT4_REFERENCE = (vec(H, H, H), vec(H, -H, -H), vec(-H, -H, H), vec(-H, H, -H))


@dataclass
class RecurrenceReport:
    family: str
    term_values: list
    coefficients: list
    residual: float
    levels: list = field(default_factory=list)
    quadrature_estimate: float | None = None
    evaluations: int = 0
    wall_time: float = 0.0
    exploratory: bool = False
    degenerate_trivial: bool = False
    details: dict = field(default_factory=dict)

    @property
    def weighted_terms(self) -> list[complex]:
        return [c * v for c, v in zip(self.coefficients, self.term_values)]

    def to_json(self) -> dict:
        """Deterministic content; wall time is reported separately under ``timing``."""
        cx = lambda z: [complex(z).real, complex(z).imag]  # noqa: E731
        return {
            "family": self.family,
            "term_values": [cx(v) for v in self.term_values],
            "coefficients": [cx(c) for c in self.coefficients],
            "residual": self.residual,
            "levels": [[str(x) for x in lv] for lv in self.levels],
            "quadrature_estimate": self.quadrature_estimate,
            "evaluations": self.evaluations,
            "exploratory": self.exploratory,
            "degenerate_trivial": self.degenerate_trivial,
            "details": self.details,
        }


def _residual(coeffs, values) -> tuple[float, bool]:
    terms = [complex(c) * complex(v) for c, v in zip(coeffs, values)]
    scale = max(abs(x) for x in terms)
    if scale == 0.0:
        return 0.0, True
    return abs(sum(terms)) / scale, False


def _evaluations(results: Sequence[IntegralResult]) -> int:
    total = 0
    for r in results:
        if r.n >= 1 and r.nodes_used:
            total += r.nodes_used**r.n
    return total


def _worst_estimate(results: Sequence[IntegralResult]) -> float | None:
    ests = [r.convergence_estimate for r in results if r.convergence_estimate is not None]
    return max(ests) if ests else None


def _theta_pm(x, y, p) -> complex:
    """theta_p(x y) theta_p(x / y)."""
    return complex(theta(complex(x * y), p)) * complex(theta(complex(x / y), p))


# --- linear recurrences -------------------------------------------------


def linear_ld_coefficients(n: int, t_params: Sequence, p) -> list[complex]:
    tp = [complex(v) for v in t_params]
    coeffs = []
    for i in range(n + 2):
        den = 1.0 + 0.0j
        for j in range(n + 2):
            if j != i:
                d = _theta_pm(tp[i], tp[j], p)
                if abs(d) < GENERIC_THRESHOLD:
                    raise DegenerateConfiguration(f"theta_p(t_{i} t_{j}^(+-1)) vanishes")
                den *= d
        coeffs.append(tp[i] / den)
    return coeffs


def run_linear_ld(n: int, t_params: Sequence, p, q, t,
                  spec: QuadratureSpec = QuadratureSpec()) -> RecurrenceReport:
    """sum_{i<=n+1} t_i II^(n)(.., q t_i, ..) / prod_{j != i} theta_p(t_i t_j^(+-1)) = 0."""
    if not 1 <= n <= 6:
        raise ValueError("the linear recurrence is stated for 1 <= n <= 6")
    start = time.perf_counter()
    tp = np.asarray(t_params, dtype=complex)
    coeffs = linear_ld_coefficients(n, tp, p)
    results = []
    for i in range(n + 2):
        shifted = tp.copy()
        shifted[i] *= q
        results.append(integrate_II(n, shifted, p, q, t, spec))
    values = [r.value for r in results]
    res, trivial = _residual(coeffs, values)
    return RecurrenceReport(
        "linear_ld", values, coeffs, res, [[n]] * len(values), _worst_estimate(results),
        _evaluations(results), time.perf_counter() - start, degenerate_trivial=trivial,
        details={"n": n, "nodes": spec.nodes},
    )


def balance_gtof(t_partial: Sequence, p, q, t) -> np.ndarray:
    """Complete t_0..t_6 by the t_7 solving t^6 t_0...t_7 = p^2 q."""
    tp = [complex(v) for v in t_partial]
    if len(tp) != 7:
        raise ValueError("need seven parameters")
    last = complex(p) ** 2 * complex(q) / (complex(t) ** 6 * np.prod(tp))
    return np.array(tp + [last], dtype=complex)


def gtof_constant(t_params: Sequence, p, q, t) -> complex:
    """Overall factor of the n = 4 recurrence as displayed."""
    tp = [complex(v) for v in t_params]
    p, q, t = complex(p), complex(q), complex(t)
    num = t**24 * np.prod(tp[:5]) ** 8
    for i, j in itertools.combinations(range(5), 2):
        num *= complex(theta(tp[i] * tp[j], p)) * complex(theta(t * tp[i] * tp[j], p))
    den = p**4
    for i in range(4):
        for a, b in ((5, 6), (5, 7), (6, 7)):
            den *= complex(theta(p * q / (t**i * tp[a] * tp[b]), p))
    if abs(den) < GENERIC_THRESHOLD * abs(p) ** 4:
        raise DegenerateConfiguration("vanishing theta factor in the n = 4 constant")
    return num / den


def gtof_coefficients(t_params: Sequence, p, t) -> list[complex]:
    tp = [complex(v) for v in t_params]
    t = complex(t)
    prod5 = np.prod(tp[:5])
    coeffs = []
    for r in range(5):
        c = 1.0 + 0.0j
        for i in range(5):
            if i == r:
                continue
            den = tp[i] ** 2 * complex(theta(tp[r] / tp[i], p))
            den *= complex(theta(tp[r] * tp[i], p)) * complex(theta(t * tp[r] * tp[i], p))
            if abs(den) < GENERIC_THRESHOLD:
                raise DegenerateConfiguration("vanishing theta factor in an n = 4 coefficient")
            c *= complex(theta(tp[i] / (t**3 * prod5), p)) / den
        coeffs.append(c)
    return coeffs


def run_gtof_n4(t_params: Sequence, p, q, t, spec: QuadratureSpec = QuadratureSpec(nodes=32),
                sqrt_q: complex | None = None) -> RecurrenceReport:
    """Four-dimensional recurrence between one sqrt(q)-shifted and five q-shifted integrals.

    The report carries ``fitted_constant_ratio``: the overall constant that
    would make the identity exact, divided by the displayed one.
    """
    start = time.perf_counter()
    tp = np.asarray(t_params, dtype=complex)
    p, q, t = complex(p), complex(q), complex(t)
    target = p**2 * q
    gap = abs(t**6 * np.prod(tp) - target) / abs(target)
    if gap > BALANCING_TOL:
        raise BalancingViolated(f"t^6 prod t_r differs from p^2 q by {gap:.3e} (relative)")
    sq = cmath.sqrt(q) if sqrt_q is None else complex(sqrt_q)
    lhs_params = tp.copy()
    lhs_params[:5] *= sq
    lhs_params[5:] /= sq
    results = [integrate_II(4, lhs_params, p, q, t, spec)]
    for r in range(5):
        shifted = tp.copy()
        shifted[r] *= q
        results.append(integrate_II(4, shifted, p, q, t, spec))
    const = gtof_constant(tp, p, q, t)
    inner = gtof_coefficients(tp, p, t)
    coeffs = [-1.0 + 0.0j] + [const * c for c in inner]
    values = [r.value for r in results]
    res, trivial = _residual(coeffs, values)
    rhs_unit = sum(c * v for c, v in zip(inner, values[1:])) * const
    fitted = values[0] / rhs_unit if rhs_unit != 0 else float("nan")
    return RecurrenceReport(
        "gtof_n4", values, coeffs, res, [[4]] * len(values), _worst_estimate(results),
        _evaluations(results), time.perf_counter() - start, degenerate_trivial=trivial,
        details={"nodes": spec.nodes, "fitted_constant_ratio": [fitted.real, fitted.imag]},
    )


# --- bilinear recurrences -----------------------------------------------


def _shift_multiplier(family: str) -> int:
    return 2 if family == "q2" else 1


def expected_vector_count(family: str) -> int:
    return 3 if family == "q" else 4


def check_family_params(family: str, params: lattice.EllipticParams) -> None:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    expected = {"q": params.q, "q2": params.q**2, "qhalf": params.sqrt_q}[family]
    if abs(params.t - expected) > 1e-14 * abs(expected):
        raise ValueError(f"family {family} requires t tied to q")


def check_common_coset(vectors: Sequence[LatticeVector]) -> None:
    for a, b in itertools.combinations(vectors, 2):
        if not lattice.is_in_e8(a - b):
            raise NotCommonCoset(f"{a} - {b} is not in the E8 lattice")


def check_unit_vectors(vectors: Sequence[LatticeVector]) -> None:
    for v in vectors:
        if not lattice.is_in_half_e8(v):
            raise NotUnitVector(f"{v} is not in (1/2) E8")
        if lattice.inner_product(v, v) != 1:
            raise NotUnitVector(f"{v} does not have norm 1")


def psi_coefficients(phi: TorusPoint, vectors: Sequence[LatticeVector]) -> list[complex]:
    """1 / prod_{s != r} psi_p(phi(v_r), phi(v_s))."""
    p = phi.params.p
    vals = [phi.value(v) for v in vectors]
    coeffs = []
    for r, x in enumerate(vals):
        den = 1.0 + 0.0j
        for s, y in enumerate(vals):
            if s != r:
                d = complex(psi(x, y, p))
                if abs(d) < GENERIC_THRESHOLD:
                    raise DegenerateConfiguration("psi_p(phi(v_r), phi(v_s)) vanishes")
                den *= d
        coeffs.append(1.0 / den)
    return coeffs


def _bilinear(family: str, label: str, phi: TorusPoint, vectors: Sequence[LatticeVector],
              spec: QuadratureSpec, exploratory: bool = False) -> RecurrenceReport:
    start = time.perf_counter()
    mult = _shift_multiplier(family)
    shifted = []
    for v in vectors:
        plus = lattice.shift(phi, v * mult)
        minus = lattice.shift(phi, -(v * mult))
        shifted.append((plus, minus))
    # level hypotheses first, before any quadrature
    levels = [[lattice.level_of(a), lattice.level_of(b)] for a, b in shifted]
    coeffs = psi_coefficients(phi, vectors)
    results, values = [], []
    for (a, b), (la, lb) in zip(shifted, levels):
        if la < 0 or lb < 0:
            # a negative level makes the product exactly zero
            values.append(0.0 + 0.0j)
            continue
        ra, rb = tilde_II(a, spec), tilde_II(b, spec)
        results.extend([ra, rb])
        values.append(ra.value * rb.value)
    res, trivial = _residual(coeffs, values)
    return RecurrenceReport(
        label, values, coeffs, res, levels, _worst_estimate(results), _evaluations(results),
        time.perf_counter() - start, exploratory=exploratory, degenerate_trivial=trivial,
        details={"nodes": spec.nodes, "vectors": [list(v.doubled) for v in vectors]},
    )


def run_bilinear(family: str, phi: TorusPoint, vectors: Sequence[LatticeVector],
                 spec: QuadratureSpec = QuadratureSpec()) -> RecurrenceReport:
    """Three-term (t = q) or four-term (t = q^2, q^(1/2)) bilinear recurrence."""
    check_family_params(family, phi.params)
    vectors = list(vectors)
    if len(vectors) != expected_vector_count(family):
        raise WrongVectorCount(
            f"family {family} needs {expected_vector_count(family)} vectors, got {len(vectors)}"
        )
    check_unit_vectors(vectors)
    check_common_coset(vectors)
    return _bilinear(family, f"bilinear_{family}", phi, vectors, spec)


def run_bilinear_orbit4(phi: TorusPoint, vectors: Sequence[LatticeVector],
                        spec: QuadratureSpec = QuadratureSpec(nodes=32)) -> RecurrenceReport:
    """The t = q^(1/2) recurrence for quadruples in the W(E7)-orbit of the norm-3/4 reference."""
    check_family_params("qhalf", phi.params)
    vectors = list(vectors)
    if len(vectors) != 4:
        raise WrongVectorCount(f"need 4 vectors, got {len(vectors)}")
    for v in vectors:
        if not v.is_half_integral():
            raise lattice.InvalidLatticeVector(f"{v} is not in (1/2)Z^8")
    if not lattice.in_e7_orbit(vectors, ORBIT4_REFERENCE):
        raise NotCommonCoset("quadruple is not in the W(E7)-orbit of the reference quadruple")
    return _bilinear("qhalf", "bilinear_qhalf_orbit4", phi, vectors, spec)


def explore_qhalf_general(phi: TorusPoint, vectors: Sequence[LatticeVector],
                          spec: QuadratureSpec = QuadratureSpec(nodes=32)) -> RecurrenceReport:
    """Evaluate the four-term t = q^(1/2) sum for any equal-norm quadruple in one coset.

    Exploratory only: the report is flagged and carries no pass/fail meaning.
    """
    check_family_params("qhalf", phi.params)
    vectors = list(vectors)
    if len(vectors) != 4:
        raise WrongVectorCount(f"need 4 vectors, got {len(vectors)}")
    norms = {lattice.inner_product(v, v) for v in vectors}
    if len(norms) != 1:
        raise NotUnitVector("vectors must share one norm")
    check_common_coset(vectors)
    return _bilinear("qhalf", "explore_qhalf", phi, vectors, spec, exploratory=True)


# --- trial construction -------------------------------------------------


def transform_trial(phi: TorusPoint, vectors: Sequence[LatticeVector],
                    word: Sequence[LatticeVector]) -> tuple[TorusPoint, list[LatticeVector]]:
    """(g^* phi, g^-1 v_r): every term of a bilinear sum is unchanged for g fixing omega."""
    inv = lattice.inverse_word(word)
    return lattice.weyl_act_on_torus(word, phi), [lattice.apply_word(inv, v) for v in vectors]


def random_half_integral_word(rng: np.random.Generator, vectors: Sequence[LatticeVector],
                              length: int) -> list[LatticeVector]:
    """Random product of E7 reflections keeping every g^-1 v_r in (1/2)Z^8."""
    roots = lattice.e7_roots()
    word: list[LatticeVector] = []
    current = list(vectors)
    attempts = 0
    while len(word) < length:
        attempts += 1
        if attempts > 100 * length:
            break
        root = roots[int(rng.integers(len(roots)))]
        images = [lattice.reflect(v, root) for v in current]
        if all(v.is_half_integral() for v in images):
            # current holds g^-1 v: the inverse word applies the last root last
            word.append(root)
            current = images
    return word


def shift_exponents(family: str, vectors: Sequence[LatticeVector], center_level) -> np.ndarray:
    """Per-coordinate smallest exponent of q among shifted points of positive level."""
    mult = _shift_multiplier(family)
    log_ratio = {"q": 1, "q2": Fraction(1, 2), "qhalf": 2}[family]
    h = Fraction(center_level)
    worst = np.zeros(lattice.DIM)
    for v in vectors:
        w = lattice.inner_product(v, lattice.OMEGA) * mult * log_ratio
        for sign in (1, -1):
            if h - sign * w >= 1:
                coords = np.array([float(c) for c in v.coords]) * mult * sign
                worst = np.minimum(worst, coords)
    return worst


def sample_center(params: lattice.EllipticParams, family: str,
                  vectors: Sequence[LatticeVector], center_level, rng: np.random.Generator,
                  jitter: float = 0.1) -> TorusPoint:
    """Random torus point at a given (half-)level with balanced parameter moduli.

    Moduli are spread so that every shifted point of positive level sees the
    same |sqrt(t) t_r|; phases are uniform.
    """
    h = Fraction(center_level)
    q = abs(params.q)
    big_r = abs(params.p * params.q) / abs(params.t) ** float(h + 1)
    worst = shift_exponents(family, vectors, h)
    log_c = (2 * math.log(big_r) + worst.sum() * math.log(q)) / lattice.DIM
    noise = rng.normal(0.0, jitter, lattice.DIM)
    noise -= noise.mean()
    log_mod = log_c - worst * math.log(q) + noise
    phases = rng.uniform(-math.pi, math.pi, lattice.DIM)
    free = [complex(log_mod[r], phases[r]) for r in range(lattice.DIM - 1)]
    return lattice.torus_point_at_level(params, free, h)
