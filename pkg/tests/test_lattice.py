import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from ellrec import lattice
from ellrec.errors import InvalidLatticeVector, NotARoot, OffLattice
from ellrec.lattice import (
    OMEGA,
    ZERO,
    EllipticParams,
    LatticeVector,
    TorusPoint,
    apply_word,
    e7_roots,
    e8_roots,
    inner_product,
    is_in_e8,
    level_of,
    reflect,
    shift,
    unit,
    vec,
    weyl_act_on_torus,
)

H = Fraction(1, 2)
PARAMS = EllipticParams.from_nomes(0.2 + 0.05j, 0.3 - 0.1j, 0.45 + 0.1j)


def random_phi(rng, params=PARAMS):
    xi = rng.normal(0, 0.4, 8) + 1j * rng.uniform(-np.pi, np.pi, 8)
    return TorusPoint(tuple(xi), params)


def random_vector(rng):
    """A random element of E8: integral with even sum, or omega plus that."""
    c = rng.integers(-3, 4, 8)
    c[7] += c.sum() % 2
    v = LatticeVector.from_coords(c)
    return v + OMEGA if rng.random() < 0.5 else v


def test_inner_products():
    assert inner_product(OMEGA, OMEGA) == 2
    assert inner_product(unit(0), unit(0)) == 1
    assert inner_product(unit(0), unit(1)) == 0
    v = vec(H, H, H, H)
    assert inner_product(v, v) == 1
    assert inner_product(v, OMEGA) == 1


def test_membership():
    assert is_in_e8(unit(0) + unit(1))
    assert not is_in_e8(unit(0))
    assert is_in_e8(OMEGA)
    assert not is_in_e8(vec(H, H, H, -H))
    assert not is_in_e8(vec(H, H, H, H, H, H, H, -H))
    assert is_in_e8(vec(H, H, H, H, H, H, -H, -H))


def test_root_systems():
    roots = e8_roots()
    assert len(roots) == 240
    assert all(inner_product(r, r) == 2 and is_in_e8(r) for r in roots)
    assert len(set(roots)) == 240
    assert len(e7_roots()) == 126


def test_reflection_examples(rng):
    a = unit(0) - unit(1)
    assert reflect(unit(0), a) == unit(1)
    assert reflect(a, a) == -a
    for _ in range(20):
        v = random_vector(rng)
        r = e8_roots()[rng.integers(240)]
        assert reflect(reflect(v, r), r) == v
    with pytest.raises(NotARoot):
        reflect(unit(0), unit(0))
    with pytest.raises(NotARoot):
        reflect(unit(0), 2 * vec(H, H, H, H))


def test_reflections_preserve_form_and_lattice():
    rng = np.random.default_rng(5)
    roots = e8_roots()
    for _ in range(100):
        v, w = random_vector(rng), random_vector(rng)
        word = [roots[i] for i in rng.integers(0, 240, rng.integers(0, 13))]
        gv, gw = apply_word(word, v), apply_word(word, w)
        assert inner_product(gv, gw) == inner_product(v, w)
        assert is_in_e8(gv) and is_in_e8(gw)


def test_doubled_and_eighths_storage():
    v = LatticeVector.from_doubled((1, -1, 3, 1, 1, 1, 1, 1))
    assert v.coords[2] == Fraction(3, 2)
    assert v.doubled == (1, -1, 3, 1, 1, 1, 1, 1)
    with pytest.raises(InvalidLatticeVector):
        LatticeVector.from_coords([Fraction(1, 3)] + [0] * 7)
    with pytest.raises(InvalidLatticeVector):
        LatticeVector((1, 2, 3))


def test_weyl_action_examples(rng):
    phi = random_phi(rng)
    assert weyl_act_on_torus([], phi).log_coords == phi.log_coords
    swapped = weyl_act_on_torus([unit(2) - unit(5)], phi)
    want = list(phi.log_coords)
    want[2], want[5] = want[5], want[2]
    assert np.allclose(swapped.xi, want, rtol=0, atol=1e-15)


def test_weyl_action_matches_direct_evaluation(rng):
    roots = e8_roots()
    for _ in range(20):
        phi = random_phi(rng)
        word = [roots[i] for i in rng.integers(0, 240, 6)]
        image = weyl_act_on_torus(word, phi)
        for v in (OMEGA, unit(3), vec(H, -H, H, H, -H, H, H, -H)):
            a, b = image.value(v), phi.value(apply_word(word, v))
            assert abs(a - b) < 1e-12 * abs(b)


def test_shift_examples(rng):
    phi = random_phi(rng)
    assert shift(phi, ZERO).log_coords == phi.log_coords
    moved = shift(phi, unit(0))
    base = phi.value(unit(0))
    assert abs(moved.value(unit(0)) - PARAMS.q * base) < 1e-14 * abs(base)
    for r in range(1, 8):
        assert moved.log_coords[r] == phi.log_coords[r]
    v = vec(H, H, -H, H, 1, 0, 0, -1)
    back = shift(shift(phi, v), -v)
    for w in (OMEGA, unit(1), unit(4) + unit(6)):
        assert abs(back.value(w) - phi.value(w)) < 1e-14 * abs(phi.value(w))
    with pytest.raises(InvalidLatticeVector):
        shift(phi, LatticeVector((1,) + (0,) * 7))


def test_half_shift_uses_declared_root(rng):
    other_root = EllipticParams(PARAMS.p, PARAMS.q, PARAMS.t, -PARAMS.sqrt_q, PARAMS.sqrt_t)
    phi = random_phi(rng, other_root)
    moved = shift(phi, vec(H))
    ratio = moved.value(unit(0)) / phi.value(unit(0))
    assert abs(ratio - other_root.sqrt_q) < 1e-14


def test_shift_homomorphism(rng):
    for _ in range(20):
        phi = random_phi(rng)
        v, w = random_vector(rng), random_vector(rng)
        a = shift(shift(phi, v), w).xi
        b = shift(phi, v + w).xi
        assert np.max(np.abs(a - b)) < 1e-14 * max(1.0, np.max(np.abs(b)))


def test_level_detection(rng):
    pr = PARAMS
    for n in range(4):
        free = list(rng.normal(0, 0.3, 7) + 1j * rng.uniform(-3, 3, 7))
        phi = lattice.torus_point_at_level(pr, free, n)
        target = pr.p * pr.q / pr.t ** (n + 1)
        assert abs(phi.omega_value() - target) < 1e-13 * abs(target)
        assert level_of(phi) == n
    with pytest.raises(OffLattice):
        level_of(random_phi(rng))


def test_level_shift_at_t_equal_q(rng):
    params = EllipticParams.for_family(0.15, 0.35 + 0.1j, "q")
    free = list(rng.normal(0, 0.2, 7) + 1j * rng.uniform(-3, 3, 7))
    phi = lattice.torus_point_at_level(params, free, 1)
    for v in (vec(H, H, H, H), vec(H, H, -H, -H), unit(0) + unit(3), OMEGA):
        k = inner_product(v, OMEGA)
        assert level_of(shift(phi, v)) == 1 - k
        assert level_of(shift(phi, -v)) == 1 + k


def test_sign_flip_preserves_even_pairings(rng):
    phi = random_phi(rng)
    flipped = lattice.negate_parameters(phi)
    assert np.allclose(flipped.t_params(), -phi.t_params(), rtol=1e-14)
    for r, s in ((0, 1), (2, 7), (3, 5)):
        for v in (unit(r) + unit(s), unit(r) - unit(s)):
            assert abs(flipped.value(v) - phi.value(v)) < 1e-13 * abs(phi.value(v))


def test_omega_square_root(rng):
    phi = random_phi(rng)
    w = phi.omega_value()
    assert abs(w**2 - np.prod(phi.t_params())) < 1e-13 * abs(w) ** 2


def test_params_roots_are_data():
    with pytest.raises(ValueError):
        EllipticParams(0.1, 0.25, 0.3, 0.4, cmath.sqrt(0.3))
    pr = EllipticParams.for_family(0.1, -0.3 + 0.2j, "qhalf")
    assert pr.t == pr.sqrt_q
    assert abs(cmath.exp(pr.log_q / 2) - pr.sqrt_q) < 1e-15


def test_stabilizer_words(rng):
    for _ in range(10):
        word = lattice.random_root_word(rng, 8)
        assert lattice.stabilizes_omega(word)
    assert not lattice.stabilizes_omega([vec(1, 1)])


def test_orbit_search():
    ref = [vec(H, H, H), vec(H, -H, -H), vec(-H, -H, H), vec(-H, H, -H)]
    permuted = [LatticeVector(v.eighths[::-1]) for v in ref]
    assert lattice.in_e7_orbit(permuted, ref)
    units = [vec(H, H, H, H), vec(H, H, -H, -H), vec(H, -H, H, -H), vec(H, -H, -H, H)]
    assert not lattice.in_e7_orbit(units, ref)


def test_json_round_trip(rng):
    phi = random_phi(rng)
    again = TorusPoint.from_json(phi.to_json())
    assert again.log_coords == phi.log_coords
    assert again.params == phi.params
    assert math.isclose(abs(again.params.sqrt_t), abs(PARAMS.sqrt_t))
