import cmath
from fractions import Fraction

import numpy as np
import pytest

from ellrec import lattice, recurrences, suites
from ellrec.errors import (
    BalancingViolated,
    ContourInvalid,
    DegenerateConfiguration,
    NotCommonCoset,
    NotUnitVector,
    OffLattice,
    WrongVectorCount,
)
from ellrec.integrals import QuadratureSpec
from ellrec.lattice import LatticeVector, TorusPoint, vec

H = Fraction(1, 2)


def linear_sample(seed):
    rng = np.random.default_rng(seed)
    while True:
        tp, p, q, t = suites._linear_params(rng)
        try:
            recurrences.linear_ld_coefficients(1, tp, p)
            if np.max(np.abs(tp * q)) < 0.95 and np.max(np.abs(tp)) < 0.95:
                return tp, p, q, t
        except (DegenerateConfiguration, ContourInvalid):
            pass


def test_linear_n1():
    tp, p, q, t = linear_sample(1)
    rep = recurrences.run_linear_ld(1, tp, p, q, t, QuadratureSpec(nodes=128))
    assert rep.residual < 1e-7
    assert len(rep.term_values) == 3
    assert rep.evaluations == 3 * 128


def test_linear_n2():
    tp, p, q, t = linear_sample(2)
    rep = recurrences.run_linear_ld(2, tp, p, q, t, QuadratureSpec(nodes=64))
    assert rep.residual < 1e-6


def test_linear_degenerate_parameters():
    tp, p, q, t = linear_sample(3)
    tp[1] = tp[0]
    with pytest.raises(DegenerateConfiguration):
        recurrences.run_linear_ld(1, tp, p, q, t)
    with pytest.raises(ValueError):
        recurrences.run_linear_ld(7, tp, p, q, t)


def test_linear_recurrence_is_exact_for_the_trapezoid_sum():
    # the identity holds for the discrete measure itself, so the residual sits
    # at rounding level for every node count while the integrals still converge
    tp, p, q, t = linear_sample(4)
    reps = [recurrences.run_linear_ld(1, tp, p, q, t, QuadratureSpec(nodes=n))
            for n in (16, 32, 64)]
    assert all(r.residual < 1e-12 for r in reps)
    ests = [r.quadrature_estimate for r in reps]
    assert ests[2] < ests[1] < ests[0]


def test_gtof_balancing_guard():
    rng = np.random.default_rng(0)
    tp, p, q, t = suites.sample_gtof(rng)
    gap = abs(t**6 * np.prod(tp) - p**2 * q) / abs(p**2 * q)
    assert gap < 1e-12
    bad = tp.copy()
    bad[0] *= 1.01
    with pytest.raises(BalancingViolated):
        recurrences.run_gtof_n4(bad, p, q, t)


def bilinear(family, vectors, seed, nodes=64):
    rng = np.random.default_rng(seed)
    phi = suites.sample_bilinear(rng, family, vectors)
    return phi, recurrences.run_bilinear(family, phi, vectors, QuadratureSpec(nodes=nodes))


def test_bilinear_q_display_triples():
    for k, triple in enumerate(recurrences.TRIPLES_Q):
        _, rep = bilinear("q", list(triple), k)
        assert rep.residual < 1e-6
    _, rep = bilinear("q", list(recurrences.TRIPLES_Q[0]), 10)
    assert sorted({lv for pair in rep.levels for lv in pair}) == [0, 1, 2]


def test_bilinear_q2_display_quadruples():
    for k, quad in enumerate(recurrences.QUADRUPLES_Q2):
        _, rep = bilinear("q2", list(quad), k)
        assert rep.residual < 1e-6
        assert {lv for pair in rep.levels for lv in pair} <= {0, 1, 2}


def test_bilinear_permuted_vectors():
    perm = [3, 1, 0, 2, 4, 5, 6, 7]
    triple = [LatticeVector(tuple(v.eighths[i] for i in perm)) for v in recurrences.TRIPLES_Q[0]]
    _, rep = bilinear("q", triple, 5)
    assert rep.residual < 1e-6


def test_bilinear_convergence_with_nodes():
    vectors = list(recurrences.TRIPLES_Q[0])
    rng = np.random.default_rng(8)
    phi = suites.sample_bilinear(rng, "q", vectors)
    reps = [recurrences.run_bilinear("q", phi, vectors, QuadratureSpec(nodes=n))
            for n in (32, 64, 128)]
    assert all(r.residual < 1e-12 for r in reps)
    ests = [r.quadrature_estimate for r in reps]
    assert ests[2] < ests[1] < ests[0]


def test_w_e7_consistency():
    rng = np.random.default_rng(3)
    for family, vectors in (("q", list(recurrences.TRIPLES_Q[1])),
                            ("q2", list(recurrences.QUADRUPLES_Q2[0]))):
        phi = suites.sample_bilinear(rng, family, vectors)
        while True:
            word = recurrences.random_half_integral_word(rng, vectors, 6)
            image, moved = recurrences.transform_trial(phi, vectors, word)
            # keep images whose shifted parameters stay inside the contour
            shifted = [lattice.shift(image, s * w) for w in moved for s in (1, -1)]
            root_t = abs(image.params.sqrt_t)
            if all(root_t * np.max(np.abs(x.t_params())) < 0.9 for x in shifted):
                break
        assert lattice.stabilizes_omega(word)
        assert moved == [lattice.apply_word(lattice.inverse_word(word), v) for v in vectors]
        assert all(v.is_half_integral() for v in moved)
        for v, w in zip(vectors, moved):
            assert abs(image.value(w) - phi.value(v)) < 1e-12 * abs(phi.value(v))
        spec = QuadratureSpec(nodes=64)
        a = recurrences.run_bilinear(family, phi, vectors, spec)
        b = recurrences.run_bilinear(family, image, moved, spec)
        assert a.residual < 1e-6 and b.residual < 1e-6


def test_log_branch_conventions():
    vectors = list(recurrences.TRIPLES_Q[0])
    phi, rep = bilinear("q", vectors, 21)
    spec = QuadratureSpec(nodes=64)
    xi = list(phi.log_coords)

    # 4 pi i on one coordinate: every half-integral pairing is unchanged
    full = xi.copy()
    full[2] += 4j * cmath.pi
    again = recurrences.run_bilinear("q", TorusPoint(tuple(full), phi.params), vectors, spec)
    assert abs(again.residual - rep.residual) < 1e-10

    # 2 pi i on two coordinates keeps phi(omega) but flips phi(v) for some v:
    # a different square-root choice, on which the identity must hold as well
    pair = xi.copy()
    pair[0] += 2j * cmath.pi
    pair[5] += 2j * cmath.pi
    other = TorusPoint(tuple(pair), phi.params)
    assert other.value(vectors[0]) == pytest.approx(-phi.value(vectors[0]), rel=1e-12)
    assert recurrences.run_bilinear("q", other, vectors, spec).residual < 1e-6

    # 2 pi i on one coordinate flips phi(omega): the level hypothesis fails
    one = xi.copy()
    one[3] += 2j * cmath.pi
    with pytest.raises(OffLattice):
        recurrences.run_bilinear("q", TorusPoint(tuple(one), phi.params), vectors, spec)


def test_bilinear_input_guards():
    rng = np.random.default_rng(0)
    vectors = list(recurrences.TRIPLES_Q[0])
    phi = suites.sample_bilinear(rng, "q", vectors)
    with pytest.raises(WrongVectorCount):
        recurrences.run_bilinear("q", phi, vectors[:2])
    with pytest.raises(NotUnitVector):
        recurrences.run_bilinear("q", phi, [vec(1, 1)] + vectors[1:])
    with pytest.raises(NotCommonCoset):
        recurrences.run_bilinear("q", phi, [vec(0, 0, 0, 0, 1)] + vectors[1:])
    with pytest.raises(ValueError):
        recurrences.run_bilinear("q2", phi, list(recurrences.QUADRUPLES_Q2[0]))


def test_qhalf_degenerate_center():
    rng = np.random.default_rng(2)
    vectors = list(recurrences.QUADRUPLES_Q2[1])
    for level in (0, -1, -3):
        phi = suites.sample_bilinear(rng, "qhalf", vectors, level=level)
        rep = recurrences.run_bilinear("qhalf", phi, vectors, QuadratureSpec(nodes=32))
        assert rep.degenerate_trivial and rep.residual == 0
        assert all(v == 0 for v in rep.term_values)


def orbit4_phi(vectors, seed):
    # a center far below level 0 makes every term vanish without quadrature
    rng = np.random.default_rng(seed)
    return suites.sample_bilinear(rng, "qhalf_orbit4", vectors, level=Fraction(-9, 2))


def test_orbit4_membership():
    ref = list(recurrences.ORBIT4_REFERENCE)
    rep = recurrences.run_bilinear_orbit4(orbit4_phi(ref, 0), ref)
    assert rep.degenerate_trivial
    perm = [7, 6, 5, 4, 3, 2, 1, 0]
    permuted = [LatticeVector(tuple(v.eighths[i] for i in perm)) for v in ref]
    rep = recurrences.run_bilinear_orbit4(orbit4_phi(permuted, 1), permuted)
    assert rep.family == "bilinear_qhalf_orbit4"
    units = list(recurrences.QUADRUPLES_Q2[0])
    with pytest.raises(NotCommonCoset):
        recurrences.run_bilinear_orbit4(orbit4_phi(ref, 2), units)


def test_explore_reports_without_verdict():
    vectors = list(suites.EXPLORE_QUADRUPLE)
    rng = np.random.default_rng(0)
    phi = suites.sample_bilinear(rng, "qhalf", vectors, level=-3)
    rep = recurrences.explore_qhalf_general(phi, vectors)
    assert rep.exploratory and rep.degenerate_trivial


def test_report_json_is_plain():
    _, rep = bilinear("q", list(recurrences.TRIPLES_Q[2]), 0, nodes=32)
    data = rep.to_json()
    assert "wall_time" not in data
    assert data["family"] == "bilinear_q"
    assert all(len(c) == 2 for c in data["coefficients"])
