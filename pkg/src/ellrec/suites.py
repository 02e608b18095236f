"""Catalog of every numerical check, seeded trial samplers and the suite runner.

Each catalog entry owns a sampler that draws one random configuration from its
own generator ``default_rng([seed, trial, crc32(identity_id), attempt])``, so a
trial's outcome does not depend on which other trials or entries ran.  Draws
that hit a numerical guard (near-degenerate points, invalid contours) are
redrawn with the next ``attempt`` and counted as rejections.
"""

from __future__ import annotations

import itertools
import json
import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import __version__, fay, identities, integrals, lattice, recurrences
from .errors import (BudgetExceeded, ContourInvalid, DegenerateConfiguration, KernelRejected,
                     NumericalGuard, UnknownIdentity, UnknownSuite)
from .integrals import QuadratureSpec
from .lattice import EllipticParams
from .residual import IdentityResidual
from .special import elliptic_gamma, psi, theta, triple_gamma

TOLERANCE_TABLE_VERSION = "1"
MAX_REJECTIONS = 50


# --- sampling helpers ---------------------------------------------------


def _phase(rng: np.random.Generator, k=None):
    return np.exp(2j * np.pi * rng.random(k))


def _points(rng: np.random.Generator, k: int, lo: float = 0.5, hi: float = 2.0) -> np.ndarray:
    """Moduli log-uniform in [lo, hi], angles uniform."""
    return np.exp(rng.uniform(math.log(lo), math.log(hi), k)) * _phase(rng, k)


def _nome(rng: np.random.Generator, hi: float, lo: float = 0.05) -> complex:
    return complex(rng.uniform(lo, hi) * _phase(rng))


def _point(rng, lo=0.5, hi=2.0) -> complex:
    return complex(_points(rng, 1, lo, hi)[0])


@dataclass(frozen=True)
class TrialContext:
    nodes: int | None = None
    workers: int = 1

    def spec(self, default_nodes: int) -> QuadratureSpec:
        return QuadratureSpec(nodes=self.nodes or default_nodes, workers=self.workers)


# --- functional equations -------------------------------------------------


def _fe_theta_reflection(rng, ctx):
    x, p = _point(rng, 0.1, 10.0), _nome(rng, 0.8)
    lhs, rhs = theta(np.array([p / x, x]), p)
    return [IdentityResidual.from_sides("theta_reflection", lhs, rhs)]


def _fe_theta_shift(rng, ctx):
    x, p = _point(rng, 0.1, 10.0), _nome(rng, 0.8)
    lhs, base = theta(np.array([p * x, x]), p)
    return [IdentityResidual.from_sides("theta_shift", lhs, -base / x)]


def _fe_theta_inversion(rng, ctx):
    x, p = _point(rng, 0.1, 10.0), _nome(rng, 0.8)
    lhs, base = theta(np.array([1 / x, x]), p)
    return [IdentityResidual.from_sides("theta_inversion", lhs, -base / x)]


def _fe_gamma_reflection(rng, ctx):
    x, p, q = _point(rng, 0.1, 10.0), _nome(rng, 0.8), _nome(rng, 0.8)
    a, b = elliptic_gamma(np.array([x, p * q / x]), p, q)
    return [IdentityResidual.from_sides("gamma_reflection", a * b, 1.0)]


def _fe_gamma_shift(rng, ctx):
    x, p, q = _point(rng, 0.1, 10.0), _nome(rng, 0.8), _nome(rng, 0.8)
    g, gq, gp = elliptic_gamma(np.array([x, q * x, p * x]), p, q)
    return [
        IdentityResidual.from_sides("gamma_shift", gq, theta(x, p) * g),
        IdentityResidual.from_sides("gamma_shift", gp, theta(x, q) * g),
    ]


def _fe_gamma_plus_reflection(rng, ctx):
    x = _point(rng, 0.1, 10.0)
    p, q, t = (_nome(rng, 0.3) for _ in range(3))
    lhs, rhs = triple_gamma(np.array([p * q * t / x, x]), p, q, t)
    return [IdentityResidual.from_sides("gamma_plus_reflection", lhs, rhs)]


def _fe_gamma_plus_shift(rng, ctx):
    x = _point(rng, 0.1, 10.0)
    p, q, t = (_nome(rng, 0.3) for _ in range(3))
    lhs, base = triple_gamma(np.array([t * x, x]), p, q, t)
    rhs = elliptic_gamma(x, p, q) * base
    return [IdentityResidual.from_sides("gamma_plus_shift", lhs, rhs)]


def _fe_gamma_plus_symmetry(rng, ctx):
    x = _point(rng, 0.1, 10.0)
    nomes = [_nome(rng, 0.3) for _ in range(3)]
    ref = triple_gamma(x, *nomes)
    return [IdentityResidual.from_sides("gamma_plus_symmetry", triple_gamma(x, *perm), ref)
            for perm in itertools.permutations(nomes)]


def _fe_psi_symmetry(rng, ctx):
    x, y, p = _point(rng, 0.1, 10.0), _point(rng, 0.1, 10.0), _nome(rng, 0.8)
    v, inv, swap, shifted = psi(np.array([x, x, y, x]), np.array([y, 1 / y, x, p * y]), p)
    return [
        IdentityResidual.from_sides("psi_symmetry", inv, v),
        IdentityResidual.from_sides("psi_symmetry", -swap, v),
        IdentityResidual.from_sides("psi_symmetry", shifted, v / (p * y * y)),
    ]


# --- theta-function identities --------------------------------------------


def _theta_nomes(rng):
    return _nome(rng, 0.6), _nome(rng, 0.6)


def _ti_three_term(rng, ctx):
    p = _nome(rng, 0.6)
    return [identities.verify_three_term(*_points(rng, 4), p)]


def _ti_cauchy_det(rng, ctx):
    p = _nome(rng, 0.6)
    return [identities.verify_cauchy_det(_points(rng, n), _points(rng, n), p) for n in range(1, 7)]


def _ti_parfrac(rng, ctx):
    p = _nome(rng, 0.6)
    return [identities.verify_parfrac(_points(rng, n + 2), _points(rng, n), p) for n in range(6)]


def _ti_grels(rng, ctx):
    p, t = _theta_nomes(rng)
    return [identities.verify_grels(_points(rng, 4), _points(rng, n + 2), _points(rng, n), p, t)
            for n in range(1, 5)]


def _ti_fasg(rng, ctx):
    p, t = _theta_nomes(rng)
    return [identities.verify_fasg(_points(rng, 4), _points(rng, n), p, t) for n in range(5)]


def _ti_g_specialization(rng, ctx):
    p, t = _theta_nomes(rng)
    return [identities.verify_g_specialization(_points(rng, 5), _points(rng, n - 1), p, t)
            for n in range(1, 5)]


def _ti_gtof(rng, ctx):
    p, t = _theta_nomes(rng)
    return [identities.verify_gtof(_points(rng, 5), _points(rng, 4), p, t)]


def _ti_ftog(rng, ctx):
    p, t = _theta_nomes(rng)
    return [identities.verify_ftog(_points(rng, 6), _points(rng, 4), p, t)]


def _ti_okada(rng, ctx):
    p = _nome(rng, 0.6)
    return [identities.verify_okada(_points(rng, 2 * n), *_points(rng, 3), p) for n in range(1, 4)]


def _ti_okada_corollary(rng, ctx):
    p = _nome(rng, 0.6)
    return [identities.verify_okada_corollary(_points(rng, n + 1), *_points(rng, 2), p)
            for n in range(1, 5)]


def _ti_cauchy_pfaffian(rng, ctx):
    t = _nome(rng, 0.6)
    return [identities.verify_cauchy_pfaffian(_points(rng, 2 * n), t) for n in range(1, 4)]


def _ti_f_dependency(rng, ctx):
    p = _nome(rng, 0.6)
    return [identities.verify_f_dependency(_points(rng, 6), _points(rng, 4), p)]


# --- Fay identities -------------------------------------------------------


def epsilon_kernel() -> fay.PairKernel:
    """Smooth antisymmetric kernel with no three-term structure."""
    return fay.PairKernel("sin(x-y)cosh(xy)", lambda x, y: np.sin(x - y) * np.cosh(x * y))


def seam_function() -> fay.SeamFunction:
    return fay.SeamFunction("exp(x)+x^2", lambda x: np.exp(x) + x * x)


def sample_measure(rng, atoms: int = 8) -> fay.DiscreteMeasure:
    pts = _points(rng, atoms)
    wts = rng.normal(size=atoms) + 1j * rng.normal(size=atoms)
    return fay.DiscreteMeasure(tuple(pts), tuple(wts))


def _kernel_pairs(p):
    k = fay.PairKernel.theta(p)
    return [(k, k), (k, fay.PairKernel.linear())]


def _fy_cauchy_binet(rng, ctx):
    p, mu = _nome(rng, 0.5), sample_measure(rng)
    return [fay.verify_cauchy_binet_det(n, mu, k1, k2, _points(rng, n), _points(rng, n))
            for k1, k2 in _kernel_pairs(p) for n in range(1, 4)]


def _fy_det_fay(variant):
    def trial(rng, ctx):
        p, mu = _nome(rng, 0.5), sample_measure(rng)
        return [fay.verify_det_fay(variant, n, mu, k1, k2, *_points(rng, 4))
                for k1, k2 in _kernel_pairs(p) for n in range(-1, 4)]
    return trial


def _pf_kernels(p):
    return [fay.PairKernel.theta(p), fay.PairKernel.linear()]


def _fy_debruijn(rng, ctx):
    p, mu = _nome(rng, 0.5), sample_measure(rng)
    eps, seam = epsilon_kernel(), seam_function()
    return [fay.verify_debruijn(n, mu, eps, seam, k, _points(rng, n))
            for k in _pf_kernels(p) for n in range(1, 5)]


def _fy_pf_fay(variant):
    def trial(rng, ctx):
        p, mu = _nome(rng, 0.5), sample_measure(rng)
        eps, seam = epsilon_kernel(), seam_function()
        return [fay.verify_pf_fay(variant, n, mu, eps, seam, k, _points(rng, 4))
                for k in _pf_kernels(p) for n in range(-2, 3)]
    return trial


def _fy_kernel_admission(rng, ctx):
    """Both tau kernels are admitted; the kernel x - 2y is rejected."""
    p = _nome(rng, 0.5)
    out = []
    for kern in _pf_kernels(p):
        worst = fay.admit_kernel(kern, rng)
        out.append(IdentityResidual("kernel_admission", worst, 0.0, worst, 1.0,
                                    {"kernel": kern.name}))
    bad = fay.PairKernel("x-2y", lambda x, y: x - 2 * y)
    try:
        fay.admit_kernel(bad, rng)
        rejected = False
    except KernelRejected:
        rejected = True
    out.append(IdentityResidual.from_sides("kernel_admission", float(rejected), 1.0,
                                           kernel=bad.name, expect="rejected"))
    return out


# --- integrals ------------------------------------------------------------


def _in_beta_params(rng):
    p, q = _nome(rng, 0.5), _nome(rng, 0.5)
    pq = p * q
    head = [rng.uniform(0.45, 0.8) * _phase(rng) for _ in range(5)]
    t5 = pq / np.prod(head)
    t6 = np.exp(rng.uniform(math.log(abs(pq) / 0.8), math.log(0.8))) * _phase(rng)
    tp = np.array(head + [t5, t6, pq / t6], dtype=complex)
    if np.max(np.abs(tp)) > 0.8:
        raise integrals.ContourInvalid("beta sample outside |t_r| <= 0.8")
    return tp, p, q


def _in_elliptic_beta(rng, ctx):
    tp, p, q = _in_beta_params(rng)
    return [integrals.verify_elliptic_beta(tp, p, q, ctx.spec(128))]


def _in_convergence(rng, ctx):
    p, q, t = _nome(rng, 0.4), _nome(rng, 0.4), _nome(rng, 0.6, 0.3)
    tp = _points(rng, 8, 0.2, 0.6)
    spec = ctx.spec(128)
    return [integrals.verify_quadrature_convergence(n, tp, p, q, t, spec) for n in (1, 2, 3)]


def w_invariance_params() -> EllipticParams:
    return EllipticParams.from_nomes(0.3, 0.3, 0.5)


def sample_torus_point(rng, params: EllipticParams, level: int, jitter: float = 0.05):
    """Torus point at ``level`` with all |t_r| close to their common balanced value."""
    log_r = 2 * math.log(abs(params.p * params.q) / abs(params.t) ** (level + 1)) / lattice.DIM
    phases = rng.uniform(-math.pi, math.pi, lattice.DIM)
    mods = log_r + rng.normal(0.0, jitter, lattice.DIM)
    free = [complex(mods[r], phases[r]) for r in range(lattice.DIM - 1)]
    return lattice.torus_point_at_level(params, free, level)


def random_stabilizer_word(rng, min_length: int = 2, max_length: int = 6):
    """Random E7 word containing at least one reflection that is not a permutation."""
    roots = lattice.e7_roots()
    mixing = [r for r in roots if any(c % 2 for c in r.doubled)]
    length = int(rng.integers(min_length, max_length + 1))
    word = lattice.random_root_word(rng, length - 1, roots)
    word.insert(int(rng.integers(length)), mixing[int(rng.integers(len(mixing)))])
    return word


# the trapezoid error decays like (max |t^(1/2) t_r|)^N; at 0.85 and N = 128 it is ~1e-9
W_INVARIANCE_MAX_MODULUS = 0.85


def _in_w_invariance(level, nodes):
    def trial(rng, ctx):
        phi = sample_torus_point(rng, w_invariance_params(), level)
        word = random_stabilizer_word(rng)
        root_t = abs(phi.params.sqrt_t)
        for point in (phi, lattice.weyl_act_on_torus(word, phi)):
            if root_t * np.max(np.abs(point.t_params())) > W_INVARIANCE_MAX_MODULUS:
                raise ContourInvalid("parameters too close to the contour for this node count")
        return [integrals.verify_w_invariance(phi, word, ctx.spec(nodes))]
    return trial


def _in_circle_bridge(rng, ctx):
    p, q = _nome(rng, 0.4), _nome(rng, 0.4)
    tp = _points(rng, 8, 0.2, 0.5)
    return [fay.bridge_check(p, q, tp)]


# --- recurrences ----------------------------------------------------------


def _linear_params(rng):
    p, q, t = _nome(rng, 0.4), _nome(rng, 0.4), _nome(rng, 0.6, 0.2)
    tp = _points(rng, 8, 0.3, 0.85)
    return tp, p, q, t


def _rc_linear(n, nodes):
    def trial(rng, ctx):
        tp, p, q, t = _linear_params(rng)
        return [recurrences.run_linear_ld(n, tp, p, q, t, ctx.spec(nodes))]
    return trial


# parameter regime for the n = 4 recurrence: |p| = 0.005, |q| = 0.5, |t| = 0.55.
# Balancing then puts |t_r| near 0.45, where N = 32 already reaches ~1e-5.
GTOF_MODULI = (0.005, 0.5, 0.55)


def sample_gtof(rng, jitter: float = 0.05):
    pm_, qm, tm = GTOF_MODULI
    p, q, t = pm_ * _phase(rng), qm * _phase(rng), tm * _phase(rng)
    m = (pm_**2 / (tm**6 * qm**0.5)) ** 0.125
    part = [m * math.exp(jitter * rng.normal()) * _phase(rng) for _ in range(5)]
    part += [m * qm**0.5 * math.exp(jitter * rng.normal()) * _phase(rng) for _ in range(2)]
    return recurrences.balance_gtof(part, p, q, t), p, q, t


def _rc_gtof(rng, ctx):
    tp, p, q, t = sample_gtof(rng)
    return [recurrences.run_gtof_n4(tp, p, q, t, ctx.spec(32))]


# nome moduli (|p|, |q|) and center level per bilinear configuration
BILINEAR_REGIMES = {
    "q": (0.1, 0.35, 1),
    "q2": (0.02, 0.35, 1),
    "qhalf": (0.05, 0.5, 2),
    "qhalf_orbit4": (0.05, 0.5, Fraction(3, 2)),
}


def bilinear_vector_sets(family: str) -> list[list[lattice.LatticeVector]]:
    if family == "q":
        return [list(v) for v in recurrences.TRIPLES_Q]
    if family == "q2":
        return [list(v) for v in recurrences.QUADRUPLES_Q2]
    if family == "qhalf":
        return [list(recurrences.QUADRUPLES_Q2[0])]
    if family == "qhalf_orbit4":
        return [list(recurrences.ORBIT4_REFERENCE)]
    raise ValueError(f"unknown family {family!r}")


def center_level(family: str, vectors) -> Fraction:
    """Center level for a vector set: the regime level, or 3/2 when every <v, omega> is 1/2."""
    base = Fraction(BILINEAR_REGIMES[family][2])
    if family in ("q", "q2"):
        pairings = {lattice.inner_product(v, lattice.OMEGA) for v in vectors}
        if pairings == {Fraction(1, 2)}:
            return base + Fraction(1, 2)
    return base


def sample_bilinear(rng, family: str, vectors, level=None):
    pm_, qm, _ = BILINEAR_REGIMES[family]
    fam = "qhalf" if family == "qhalf_orbit4" else family
    params = EllipticParams.for_family(pm_ * _phase(rng), qm * _phase(rng), fam)
    h = center_level(family, vectors) if level is None else Fraction(level)
    return recurrences.sample_center(params, fam, vectors, h, rng)


def run_bilinear_family(family: str, phi, vectors, spec):
    if family == "qhalf_orbit4":
        return recurrences.run_bilinear_orbit4(phi, vectors, spec)
    return recurrences.run_bilinear(family, phi, vectors, spec)


def _rc_bilinear(family, nodes, level=None):
    def trial(rng, ctx):
        out = []
        for vectors in bilinear_vector_sets(family):
            phi = sample_bilinear(rng, family, vectors, level)
            out.append(run_bilinear_family(family, phi, vectors, ctx.spec(nodes)))
        return out
    return trial


def _rc_qhalf_degenerate(rng, ctx):
    vectors = list(recurrences.QUADRUPLES_Q2[1])
    phi = sample_bilinear(rng, "qhalf", vectors, level=0)
    rep = recurrences.run_bilinear("qhalf", phi, vectors, ctx.spec(32))
    if not rep.degenerate_trivial:
        rep.residual = math.inf
    return [rep]


EXPLORE_QUADRUPLE = (
    lattice.vec(1, 1), lattice.vec(1, 0, 1), lattice.vec(0, 1, 1), lattice.vec(1, 0, 0, 1),
)


def _rc_explore(rng, ctx):
    out = []
    for vectors, level in ((list(recurrences.QUADRUPLES_Q2[0]), 2),
                           (list(EXPLORE_QUADRUPLE), 2)):
        phi = sample_bilinear(rng, "qhalf", vectors, level=level)
        out.append(recurrences.explore_qhalf_general(phi, vectors, ctx.spec(32)))
    return out


# --- catalog --------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    identity_id: str
    anchor: str
    source: Callable
    trial: Callable
    default_trials: int
    long: bool = False
    exploratory: bool = False


TOLERANCES: dict[str, float] = {
    "theta_reflection": 1e-12,
    "theta_shift": 1e-12,
    "theta_inversion": 1e-12,
    "gamma_reflection": 1e-12,
    "gamma_shift": 1e-12,
    "gamma_plus_reflection": 1e-12,
    "gamma_plus_shift": 1e-12,
    "gamma_plus_symmetry": 1e-13,
    "psi_symmetry": 1e-12,
    "three_term": 1e-12,
    "cauchy_det": 1e-9,
    "parfrac": 1e-9,
    "grels": 1e-9,
    "fasg": 1e-9,
    "g_specialization": 1e-9,
    "gtof": 1e-9,
    "ftog": 1e-9,
    "okada": 1e-9,
    "okada_corollary": 1e-9,
    "cauchy_pfaffian": 1e-9,
    "f_dependency": 1e-10,
    "cauchy_binet_det": 1e-10,
    "det_fay_1": 1e-10,
    "det_fay_2": 1e-10,
    "det_fay_3": 1e-10,
    "debruijn": 1e-10,
    "pf_fay_1": 1e-10,
    "pf_fay_2": 1e-10,
    "pf_fay_3": 1e-10,
    "kernel_admission": 1e-11,
    "elliptic_beta": 1e-8,
    "quadrature_convergence": 1e-8,
    "w_invariance_n1": 1e-7,
    "w_invariance_n2": 1e-6,
    "circle_bridge": 1e-6,
    "linear_ld_n1": 1e-6,
    "linear_ld_n2": 1e-6,
    "linear_ld_n3": 1e-5,
    "gtof_n4": 1e-4,
    "bilinear_q": 1e-6,
    "bilinear_q2": 1e-6,
    "bilinear_qhalf": 1e-3,
    "bilinear_qhalf_orbit4": 1e-3,
    "bilinear_qhalf_degenerate": 0.0,
    "explore_qhalf": math.inf,
}


def _fe(ident, fn, anchor, source):
    return CatalogEntry(ident, anchor, source, fn, 200)


_E = CatalogEntry
CATALOG: tuple[CatalogEntry, ...] = (
    _fe("theta_reflection", _fe_theta_reflection, "theta function: reflection x -> p/x", theta),
    _fe("theta_shift", _fe_theta_shift, "theta function: quasi-periodicity x -> px", theta),
    _fe("theta_inversion", _fe_theta_inversion, "theta function: inversion x -> 1/x", theta),
    _fe("gamma_reflection", _fe_gamma_reflection, "elliptic Gamma: reflection x -> pq/x",
        elliptic_gamma),
    _fe("gamma_shift", _fe_gamma_shift, "elliptic Gamma: q- and p-shift equations", elliptic_gamma),
    _fe("gamma_plus_reflection", _fe_gamma_plus_reflection,
        "triple Gamma: reflection x -> pqt/x", triple_gamma),
    _fe("gamma_plus_shift", _fe_gamma_plus_shift, "triple Gamma: t-shift equation", triple_gamma),
    _fe("gamma_plus_symmetry", _fe_gamma_plus_symmetry,
        "triple Gamma: symmetry in the three nomes", triple_gamma),
    _fe("psi_symmetry", _fe_psi_symmetry, "psi: antisymmetry, inversion and p-shift", psi),
    _E("three_term", "psi: three-term relation", identities.verify_three_term,
       _ti_three_term, 50),
    _E("cauchy_det", "psi: Cauchy-type determinant", identities.verify_cauchy_det,
       _ti_cauchy_det, 50),
    _E("parfrac", "psi: partial-fraction relation", identities.verify_parfrac, _ti_parfrac, 50),
    _E("grels", "g functions: linear relation in the fifth parameter", identities.verify_grels,
       _ti_grels, 50),
    _E("fasg", "g functions: reduction to f at u_4 = 1/u_0", identities.verify_fasg, _ti_fasg, 50),
    _E("g_specialization", "g functions: specialisation z_1 = u_0",
       identities.verify_g_specialization, _ti_g_specialization, 50),
    _E("gtof", "g^(4) expanded over five f^(4)", identities.verify_gtof, _ti_gtof, 50),
    _E("ftog", "f^(4) expanded over five g^(4)", identities.verify_ftog, _ti_ftog, 50),
    _E("okada", "Okada pfaffian evaluation", identities.verify_okada, _ti_okada, 50),
    _E("okada_corollary", "Okada corollary: theta sum with parity right side",
       identities.verify_okada_corollary, _ti_okada_corollary, 50),
    _E("cauchy_pfaffian", "elliptic Cauchy pfaffian", identities.verify_cauchy_pfaffian,
       _ti_cauchy_pfaffian, 50),
    _E("f_dependency", "linear dependency among six f^(4)", identities.verify_f_dependency,
       _ti_f_dependency, 50),
    _E("cauchy_binet_det", "determinant tau: expansion into one-point taus",
       fay.verify_cauchy_binet_det, _fy_cauchy_binet, 50),
    _E("det_fay_1", "determinant tau: Fay identity, first form", fay.verify_det_fay,
       _fy_det_fay(1), 50),
    _E("det_fay_2", "determinant tau: Fay identity, second form", fay.verify_det_fay,
       _fy_det_fay(2), 50),
    _E("det_fay_3", "determinant tau: Fay identity, third form", fay.verify_det_fay,
       _fy_det_fay(3), 50),
    _E("debruijn", "pfaffian tau: de Bruijn expansion", fay.verify_debruijn, _fy_debruijn, 50),
    _E("pf_fay_1", "pfaffian tau: Fay identity, first form", fay.verify_pf_fay,
       _fy_pf_fay(1), 50),
    _E("pf_fay_2", "pfaffian tau: Fay identity, second form", fay.verify_pf_fay,
       _fy_pf_fay(2), 50),
    _E("pf_fay_3", "pfaffian tau: Fay identity, third form", fay.verify_pf_fay,
       _fy_pf_fay(3), 50),
    _E("kernel_admission", "tau kernels: antisymmetry and three-term admission",
       fay.admit_kernel, _fy_kernel_admission, 50),
    _E("elliptic_beta", "univariate integral: elliptic beta evaluation",
       integrals.verify_elliptic_beta, _in_elliptic_beta, 10),
    _E("quadrature_convergence", "torus trapezoid rule: node doubling",
       integrals.verify_quadrature_convergence, _in_convergence, 2),
    _E("w_invariance_n1", "renormalised integral: W(E7) invariance, dimension 1",
       integrals.verify_w_invariance, _in_w_invariance(1, 128), 5),
    _E("w_invariance_n2", "renormalised integral: W(E7) invariance, dimension 2",
       integrals.verify_w_invariance, _in_w_invariance(2, 128), 5),
    _E("circle_bridge", "determinant tau on circle measures: refinement", fay.bridge_check,
       _in_circle_bridge, 3),
    _E("linear_ld_n1", "linear recurrence under q-shifts, dimension 1",
       recurrences.run_linear_ld, _rc_linear(1, 128), 20),
    _E("linear_ld_n2", "linear recurrence under q-shifts, dimension 2",
       recurrences.run_linear_ld, _rc_linear(2, 64), 20),
    _E("linear_ld_n3", "linear recurrence under q-shifts, dimension 3",
       recurrences.run_linear_ld, _rc_linear(3, 64), 3, long=True),
    _E("gtof_n4", "dimension-4 recurrence under a sqrt(q)-shift", recurrences.run_gtof_n4,
       _rc_gtof, 1, long=True),
    _E("bilinear_q", "bilinear recurrence at t = q (elliptic Painleve)",
       recurrences.run_bilinear, _rc_bilinear("q", 64), 10),
    _E("bilinear_q2", "bilinear recurrence at t = q^2", recurrences.run_bilinear,
       _rc_bilinear("q2", 64), 10),
    _E("bilinear_qhalf_degenerate", "bilinear recurrence at t = q^(1/2): vanishing at level 0",
       recurrences.run_bilinear, _rc_qhalf_degenerate, 3),
    _E("bilinear_qhalf", "bilinear recurrence at t = q^(1/2), unit vectors",
       recurrences.run_bilinear, _rc_bilinear("qhalf", 32), 1, long=True),
    _E("bilinear_qhalf_orbit4", "bilinear recurrence at t = q^(1/2), norm-3/4 orbit",
       recurrences.run_bilinear_orbit4, _rc_bilinear("qhalf_orbit4", 32), 1, long=True),
    _E("explore_qhalf", "t = q^(1/2) four-term sum on other quadruples (exploratory)",
       recurrences.explore_qhalf_general, _rc_explore, 1, long=True, exploratory=True),
)

ENTRIES: dict[str, CatalogEntry] = {e.identity_id: e for e in CATALOG}

_FAST_RECURRENCES = ("linear_ld_n1", "linear_ld_n2", "bilinear_q", "bilinear_q2",
                     "bilinear_qhalf_degenerate")

SUITES: dict[str, tuple[str, ...]] = {
    "functional_eqs": tuple(e.identity_id for e in CATALOG[:9]),
    "theta_ids": ("three_term", "cauchy_det", "parfrac", "grels", "fasg", "g_specialization",
                  "gtof", "ftog", "okada", "okada_corollary", "cauchy_pfaffian", "f_dependency"),
    "fay_ids": ("cauchy_binet_det", "det_fay_1", "det_fay_2", "det_fay_3", "debruijn",
                "pf_fay_1", "pf_fay_2", "pf_fay_3", "kernel_admission"),
    "integrals_basic": ("elliptic_beta", "quadrature_convergence", "w_invariance_n1",
                        "w_invariance_n2", "circle_bridge"),
    "recurrences_fast": _FAST_RECURRENCES,
    "recurrences_long": tuple(e.identity_id for e in CATALOG if e.long),
}
SUITES["all_fast"] = tuple(
    i for name in ("functional_eqs", "theta_ids", "fay_ids", "integrals_basic",
                   "recurrences_fast") for i in SUITES[name]
)


def exported_verifiers() -> set:
    """Every public verifier of the identity, Fay, integral and recurrence modules."""
    found = set()
    for mod in (identities, fay, integrals, recurrences):
        for name in dir(mod):
            obj = getattr(mod, name)
            if not callable(obj) or getattr(obj, "__module__", None) != mod.__name__:
                continue
            if name.startswith(("verify_", "run_", "explore_")) or name in (
                    "admit_kernel", "bridge_check"):
                found.add(obj)
    return found


def entry(identity_id: str) -> CatalogEntry:
    try:
        return ENTRIES[identity_id]
    except KeyError:
        raise UnknownIdentity(
            f"unknown identity {identity_id!r}; known ids: {', '.join(sorted(ENTRIES))}"
        ) from None


def suite_ids(name: str) -> tuple[str, ...]:
    try:
        return SUITES[name]
    except KeyError:
        raise UnknownSuite(
            f"unknown suite {name!r}; known suites: {', '.join(sorted(SUITES))}"
        ) from None


# --- running --------------------------------------------------------------


def trial_rng(seed: int, trial: int, identity_id: str, attempt: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, trial, zlib.crc32(identity_id.encode()), attempt])


def passes(residual: float, tol: float) -> bool:
    return residual == 0.0 or residual < tol


@dataclass
class TrialOutcome:
    trial: int
    rejections: int
    results: list
    error: str | None = None

    @property
    def residual(self) -> float:
        if self.error is not None:
            return math.inf
        return max((r.residual for r in self.results), default=0.0)

    def to_json(self) -> dict:
        return {
            "trial": self.trial,
            "rejections": self.rejections,
            "residual": self.residual,
            "error": self.error,
            "checks": [r.to_json() for r in self.results],
        }


@dataclass
class EntryOutcome:
    entry: CatalogEntry
    tolerance: float
    trials: list[TrialOutcome]
    wall_time: float = field(default=0.0, compare=False)

    @property
    def residual(self) -> float:
        return max((t.residual for t in self.trials), default=0.0)

    @property
    def passed(self) -> bool:
        return self.entry.exploratory or all(passes(t.residual, self.tolerance)
                                             for t in self.trials)

    def to_json(self) -> dict:
        return {
            "identity_id": self.entry.identity_id,
            "anchor": self.entry.anchor,
            "tolerance": self.tolerance,
            "exploratory": self.entry.exploratory,
            "residual": self.residual,
            "passed": self.passed,
            "trials": [t.to_json() for t in self.trials],
        }


def run_trial(ent: CatalogEntry, seed: int, trial: int, ctx: TrialContext) -> TrialOutcome:
    last = None
    for attempt in range(MAX_REJECTIONS):
        rng = trial_rng(seed, trial, ent.identity_id, attempt)
        try:
            return TrialOutcome(trial, attempt, list(ent.trial(rng, ctx)))
        except NumericalGuard as exc:
            if isinstance(exc, BudgetExceeded):
                raise
            last = exc
    return TrialOutcome(trial, MAX_REJECTIONS, [], f"{type(last).__name__}: {last}")


def run_entry(identity_id: str, seed: int = 0, trials: int | None = None,
              ctx: TrialContext = TrialContext(), tolerance: float | None = None) -> EntryOutcome:
    ent = entry(identity_id)
    count = ent.default_trials if trials is None else trials
    tol = TOLERANCES[identity_id] if tolerance is None else tolerance
    start = time.perf_counter()
    outcomes = [run_trial(ent, seed, k, ctx) for k in range(count)]
    return EntryOutcome(ent, tol, outcomes, time.perf_counter() - start)


def resolve_tolerances(ids: Sequence[str], overrides: dict[str, float],
                       allow_loosen: bool) -> dict[str, float]:
    """Per-id tolerances after overrides; loosening needs ``allow_loosen``."""
    out = {}
    for i in ids:
        tol = TOLERANCES[i]
        if i in overrides or "*" in overrides:
            new = overrides.get(i, overrides.get("*"))
            if new > tol and not allow_loosen:
                raise ValueError(
                    f"tolerance for {i} may only be tightened ({new:g} > {tol:g}) without --long"
                )
            tol = new
        out[i] = tol
    return out


@dataclass
class SuiteReport:
    suite: str
    seed: int
    tolerances: dict[str, float]
    outcomes: list[EntryOutcome]
    config: dict
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "artifact_version": __version__,
            "suite": self.suite,
            "seed": self.seed,
            "config": self.config,
            "tolerance_table": {"version": TOLERANCE_TABLE_VERSION,
                                "tolerances": self.tolerances},
            "results": [o.to_json() for o in self.outcomes],
            "passed": self.passed,
        }
        if timing:
            out["timing"] = {
                "total": self.wall_time,
                "per_identity": {o.entry.identity_id: o.wall_time for o in self.outcomes},
            }
        return out


def run_suite(name: str, seed: int = 0, trials: int | None = None, nodes: int | None = None,
              long: bool = False, workers: int = 1, ids: Sequence[str] | None = None,
              tolerance_overrides: dict[str, float] | None = None) -> SuiteReport:
    """Run a named suite (or an explicit id list) and assemble a deterministic report."""
    selected = tuple(ids) if ids is not None else suite_ids(name)
    for i in selected:
        entry(i)
    if not long:
        needs = [i for i in selected if ENTRIES[i].long]
        if needs:
            raise BudgetExceeded(
                f"{', '.join(needs)} run high-dimensional quadratures; pass --long to allow them"
            )
    tols = resolve_tolerances(selected, tolerance_overrides or {}, allow_loosen=long)
    ctx = TrialContext(nodes=nodes, workers=workers)
    start = time.perf_counter()
    order = sorted(selected)

    def one(i):
        return run_entry(i, seed, trials, ctx, tols[i])

    if workers > 1 and len(order) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, order))
    else:
        outcomes = [one(i) for i in order]
    config = {"trials": trials, "nodes": nodes, "long": long,
              "identities": list(order)}
    return SuiteReport(name, seed, {i: tols[i] for i in order}, outcomes, config,
                       time.perf_counter() - start)


# --- single recurrence families -------------------------------------------

FAMILY_ALIASES = {"bilinear_q": "q", "bilinear_q2": "q2", "bilinear_qhalf": "qhalf",
                  "bilinear_qhalf_orbit4": "qhalf_orbit4"}
FAMILIES = ("linear_ld", "gtof_n4", "q", "q2", "qhalf", "qhalf_orbit4")


def family_plan(family: str, level=None):
    """(canonical name, trial sampler, default nodes, needs --long) for a recurrence family."""
    fam = FAMILY_ALIASES.get(family, family)
    if fam not in FAMILIES:
        raise UnknownIdentity(
            f"unknown recurrence family {family!r}; known: {', '.join(FAMILIES)}"
        )
    if fam == "linear_ld":
        n = 1 if level is None else int(level)
        if n < 1:
            raise ValueError("linear_ld needs dimension >= 1")
        nodes = {1: 128, 2: 64}.get(n, 32 if n > 3 else 64)
        return fam, _rc_linear(n, nodes), nodes, n >= 3
    if fam == "gtof_n4":
        if level not in (None, 4):
            raise ValueError("gtof_n4 is fixed at dimension 4")
        return fam, _rc_gtof, 32, True
    if fam in ("q", "q2"):
        big = level is not None and Fraction(level) > 1
        return fam, _rc_bilinear(fam, 32 if big else 64, level), 32 if big else 64, big
    small = level is not None and Fraction(level) <= 1
    return fam, _rc_bilinear(fam, 32, level), 32, not small


def run_family(family: str, level=None, seed: int = 0, trials: int = 1,
               nodes: int | None = None, long: bool = False, workers: int = 1) -> list:
    """Recurrence reports for one family, one list entry per trial and vector set."""
    fam, sampler, default_nodes, needs_long = family_plan(family, level)
    if needs_long and not long:
        raise BudgetExceeded(
            f"family {fam} at this level runs high-dimensional quadratures; pass --long"
        )
    ent = CatalogEntry(f"family:{fam}:{level}", "", None, sampler, trials)
    ctx = TrialContext(nodes=nodes or default_nodes, workers=workers)
    reports = []
    for k in range(trials):
        outcome = run_trial(ent, seed, k, ctx)
        if outcome.error is not None:
            raise DegenerateConfiguration(
                f"trial {k}: no admissible sample after {MAX_REJECTIONS} draws ({outcome.error})"
            )
        reports.extend(outcome.results)
    return reports


def _default(obj):
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, complex values as [re, im]."""
    return json.dumps(obj, sort_keys=True, indent=1, default=_default)


