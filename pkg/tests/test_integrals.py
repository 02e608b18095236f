import itertools

import numpy as np
import pytest

from ellrec import integrals, lattice, suites
from ellrec.errors import BudgetExceeded, ContourInvalid, NotInStabilizer
from ellrec.integrals import QuadratureSpec, integrand_II, integrate_II, tilde_II
from ellrec.special import elliptic_gamma, pochhammer_inf, triple_gamma
from sampling import random_point

P, Q, T = 0.25 + 0.05j, 0.3 - 0.1j, 0.45 + 0.1j


def params(rng, lo=0.2, hi=0.6):
    return np.array([random_point(rng, lo, hi) for _ in range(8)])


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


def test_univariate_integrand_by_definition(rng):
    tp, z = params(rng), random_point(rng, 0.9, 1.1)
    direct = np.prod([elliptic_gamma(t * z, P, Q) * elliptic_gamma(t / z, P, Q) for t in tp])
    direct /= elliptic_gamma(z**2, P, Q) * elliptic_gamma(z**-2, P, Q)
    assert rel(integrand_II([z], tp, P, Q, T), direct) < 1e-12


def test_integrand_symmetries(rng):
    tp = params(rng)
    z = [random_point(rng, 0.8, 1.25) for _ in range(3)]
    v = integrand_II(z, tp, P, Q, T)
    assert rel(integrand_II([1 / z[0], z[1], 1 / z[2]], tp, P, Q, T), v) < 1e-12
    assert rel(integrand_II([z[2], z[0], z[1]], tp, P, Q, T), v) < 1e-12


def test_grid_sum_matches_pointwise_integrand(rng):
    tp, n_nodes = params(rng), 8
    spec = QuadratureSpec(nodes=n_nodes)
    got = integrate_II(2, tp, P, Q, T, spec).value
    nodes = np.exp(2j * np.pi * np.arange(n_nodes) / n_nodes)
    brute = sum(integrand_II([a, b], tp, P, Q, T) for a in nodes for b in nodes)
    brute *= (pochhammer_inf(P) * pochhammer_inf(Q)) ** 2 / (2**2 * 2) / n_nodes**2
    assert rel(got, brute) < 1e-12


def test_dimension_zero_is_one(rng):
    assert integrate_II(0, params(rng), P, Q, T).value == 1


def test_elliptic_beta_evaluation():
    rng = np.random.default_rng(11)
    done = 0
    while done < 3:
        try:
            tp, p, q = suites._in_beta_params(rng)
        except ContourInvalid:
            continue
        done += 1
        res = integrals.verify_elliptic_beta(tp, p, q)
        assert res.residual < 1e-8


def test_pair_with_product_pq_drops_out(rng):
    tp = params(rng)
    tp[7] = P * Q / tp[6]
    six = integrate_II(1, tp, P, Q, T, QuadratureSpec(nodes=128)).value
    # the remaining six parameters carry no balancing, so compare against the
    # same integral with the pair replaced by another product-pq pair
    tp2 = tp.copy()
    tp2[6] = 0.5 * np.exp(0.3j)
    tp2[7] = P * Q / tp2[6]
    other = integrate_II(1, tp2, P, Q, T, QuadratureSpec(nodes=128)).value
    assert rel(six, other) < 1e-8


def test_node_doubling_n2(rng):
    tp = params(rng)
    res = integrals.verify_quadrature_convergence(2, tp, P, Q, T)
    assert res.residual < 1e-8


def test_convergence_estimate_decreases(rng):
    tp = params(rng, 0.3, 0.75)
    ests = [integrate_II(1, tp, P, Q, T, QuadratureSpec(nodes=n)).convergence_estimate
            for n in (32, 64, 128)]
    assert ests[2] < ests[1] < ests[0]


def test_parameter_permutation_invariance(rng):
    tp = params(rng)
    spec = QuadratureSpec(nodes=32)
    base = integrate_II(2, tp, P, Q, T, spec).value
    for perm in itertools.islice(itertools.permutations(range(8)), 1, 40, 7):
        assert rel(integrate_II(2, tp[list(perm)], P, Q, T, spec).value, base) < 1e-12


def test_deterministic_across_workers(rng):
    tp = params(rng)
    one = integrate_II(3, tp, P, Q, T, QuadratureSpec(nodes=24)).value
    again = integrate_II(3, tp, P, Q, T, QuadratureSpec(nodes=24)).value
    many = integrate_II(3, tp, P, Q, T, QuadratureSpec(nodes=24, workers=3)).value
    assert one == again == many


def test_guards(rng):
    tp = params(rng)
    with pytest.raises(BudgetExceeded):
        integrate_II(5, tp, P, Q, T, QuadratureSpec(nodes=64))
    tp[3] = 0.97
    with pytest.raises(ContourInvalid):
        integrate_II(1, tp, P, Q, T)
    with pytest.raises(ValueError):
        QuadratureSpec(nodes=33)
    with pytest.raises(ContourInvalid):
        QuadratureSpec(contour_radius=0.9)


def test_tilde_at_low_levels(rng):
    pr = lattice.EllipticParams.from_nomes(P, Q, T)
    free = list(rng.normal(-0.5, 0.2, 7) + 1j * rng.uniform(-3, 3, 7))
    below = lattice.torus_point_at_level(pr, free, -1)
    assert tilde_II(below).value == 0
    phi = lattice.torus_point_at_level(pr, free, 0)
    tr = phi.t_params()
    iu = np.triu_indices(8, k=1)
    direct = np.prod(triple_gamma(T * tr[iu[0]] * tr[iu[1]], P, Q, T))
    assert rel(tilde_II(phi).value, direct) < 1e-13


def test_tilde_sign_flip(rng):
    pr = suites.w_invariance_params()
    phi = suites.sample_torus_point(rng, pr, 1)
    spec = QuadratureSpec(nodes=128)
    a = tilde_II(phi, spec).value
    b = tilde_II(lattice.negate_parameters(phi), spec).value
    assert rel(a, b) < 1e-10


def test_w_invariance_permutation(rng):
    phi = suites.sample_torus_point(rng, suites.w_invariance_params(), 1)
    word = [lattice.unit(0) - lattice.unit(3), lattice.unit(5) - lattice.unit(6)]
    assert integrals.verify_w_invariance(phi, word, QuadratureSpec(nodes=64)).residual < 1e-10
    with pytest.raises(NotInStabilizer):
        integrals.verify_w_invariance(phi, [lattice.vec(1, 1)])


def test_w_invariance_mixing_reflection():
    rng = np.random.default_rng(4)
    pr = suites.w_invariance_params()
    mixing = lattice.LatticeVector.from_doubled((1, 1, 1, 1, -1, -1, -1, -1))
    for level, nodes, tol in ((1, 128, 1e-7), (2, 64, 1e-6)):
        phi = suites.sample_torus_point(rng, pr, level, jitter=0.02)
        res = integrals.verify_w_invariance(phi, [mixing], QuadratureSpec(nodes=nodes))
        assert res.residual < tol
