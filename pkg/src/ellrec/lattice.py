"""Exact E8 lattice arithmetic, Weyl reflections, and torus points.

Vectors live in (1/8)Z^8, stored as integer multiples of 1/8.  That covers the
E8 root lattice, its half lattice, and every W(E7) image of the norm-3/4
vectors used by the quarter-orbit recurrence, so all arithmetic is exact.

A torus point phi: Lambda_E8 -> C* is stored by its logarithms
``xi_r = log phi(e_r)``; then ``phi(v) = exp(<v, xi>)`` for any rational v.
The branch of each logarithm is the square-root choice made for
half-integral vectors.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidLatticeVector,
    NomeOutOfRange,
    NotARoot,
    OffLattice,
    OrbitMembershipUnverified,
)

DIM = 8
DENOM = 8
LEVEL_TOLERANCE = 1e-8


@dataclass(frozen=True, order=True)
class LatticeVector:
    eighths: tuple[int, ...]

    def __post_init__(self):
        if len(self.eighths) != DIM:
            raise InvalidLatticeVector(f"need {DIM} coordinates, got {len(self.eighths)}")
        object.__setattr__(self, "eighths", tuple(int(c) for c in self.eighths))

    @classmethod
    def from_coords(cls, coords: Iterable) -> "LatticeVector":
        out = []
        for c in coords:
            f = Fraction(c)
            scaled = f * DENOM
            if scaled.denominator != 1:
                raise InvalidLatticeVector(f"coordinate {c} is not a multiple of 1/8")
            out.append(int(scaled))
        return cls(tuple(out))

    @classmethod
    def from_doubled(cls, doubled: Iterable[int]) -> "LatticeVector":
        return cls(tuple(int(d) * (DENOM // 2) for d in doubled))

    @property
    def coords(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, DENOM) for c in self.eighths)

    @property
    def doubled(self) -> tuple[int, ...]:
        """Coordinates times two; only defined on (1/2)Z^8."""
        if any(c % (DENOM // 2) for c in self.eighths):
            raise InvalidLatticeVector(f"{self} is not in (1/2)Z^8")
        return tuple(c // (DENOM // 2) for c in self.eighths)

    def is_half_integral(self) -> bool:
        return all(c % (DENOM // 2) == 0 for c in self.eighths)

    def as_array(self) -> np.ndarray:
        return np.array(self.eighths, dtype=float) / DENOM

    def __add__(self, other: "LatticeVector") -> "LatticeVector":
        return LatticeVector(tuple(a + b for a, b in zip(self.eighths, other.eighths)))

    def __sub__(self, other: "LatticeVector") -> "LatticeVector":
        return LatticeVector(tuple(a - b for a, b in zip(self.eighths, other.eighths)))

    def __neg__(self) -> "LatticeVector":
        return LatticeVector(tuple(-a for a in self.eighths))

    def __mul__(self, k: int) -> "LatticeVector":
        return LatticeVector(tuple(int(k) * a for a in self.eighths))

    __rmul__ = __mul__

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


def vec(*coords) -> LatticeVector:
    """Shorthand: ``vec(0.5, 0.5, 0.5, 0.5)`` pads with zeros to eight coordinates."""
    padded = list(coords) + [0] * (DIM - len(coords))
    return LatticeVector.from_coords(padded)


def unit(r: int) -> LatticeVector:
    c = [0] * DIM
    c[r] = 1
    return LatticeVector.from_coords(c)


OMEGA = LatticeVector.from_coords([Fraction(1, 2)] * DIM)
ZERO = LatticeVector((0,) * DIM)


def inner_product(v: LatticeVector, w: LatticeVector) -> Fraction:
    return Fraction(sum(a * b for a, b in zip(v.eighths, w.eighths)), DENOM * DENOM)


def is_in_e8(v: LatticeVector) -> bool:
    """Membership in the E8 root lattice (D8 plus its omega translate)."""
    if not v.is_half_integral():
        return False
    d = v.doubled
    parity = {x % 2 for x in d}
    if len(parity) != 1:
        return False
    return sum(d) % 4 == 0


def is_in_half_e8(v: LatticeVector) -> bool:
    """Whether 2v lies in the E8 lattice (restricted to (1/2)Z^8)."""
    return is_in_e8(2 * v)


def reflect(w: LatticeVector, root: LatticeVector) -> LatticeVector:
    """Reflection of w in the hyperplane orthogonal to an E8 root."""
    if inner_product(root, root) != 2 or not is_in_e8(root):
        raise NotARoot(f"{root} is not an E8 root")
    num = sum(a * b for a, b in zip(w.eighths, root.eighths))
    # <w, root> * root in eighths is num * root / 64; exact for w in (1/4)E8
    out = []
    for a, r in zip(w.eighths, root.eighths):
        shift, rem = divmod(num * r, DENOM * DENOM)
        if rem:
            raise InvalidLatticeVector(f"reflection of {w} leaves (1/8)Z^8")
        out.append(a - shift)
    return LatticeVector(tuple(out))


def apply_word(word: Sequence[LatticeVector], v: LatticeVector) -> LatticeVector:
    """g v for g = s_{word[0]} s_{word[1]} ... (rightmost reflection first)."""
    for root in reversed(word):
        v = reflect(v, root)
    return v


def inverse_word(word: Sequence[LatticeVector]) -> list[LatticeVector]:
    return list(reversed(word))


@lru_cache(maxsize=1)
def e8_roots() -> tuple[LatticeVector, ...]:
    """The 240 roots in lexicographic order of their coordinates."""
    roots = set()
    for i, j in itertools.combinations(range(DIM), 2):
        for si, sj in itertools.product((1, -1), repeat=2):
            c = [0] * DIM
            c[i], c[j] = si, sj
            roots.add(LatticeVector.from_coords(c))
    for signs in itertools.product((1, -1), repeat=DIM):
        if signs.count(-1) % 2 == 0:
            roots.add(LatticeVector.from_doubled(signs))
    return tuple(sorted(roots, key=lambda r: r.coords))


@lru_cache(maxsize=1)
def e7_roots() -> tuple[LatticeVector, ...]:
    """The 126 E8 roots orthogonal to omega; their reflections generate W(E7)."""
    return tuple(r for r in e8_roots() if inner_product(r, OMEGA) == 0)


def random_root_word(rng: np.random.Generator, length: int, roots=None) -> list[LatticeVector]:
    pool = e7_roots() if roots is None else roots
    idx = rng.integers(0, len(pool), size=length)
    return [pool[i] for i in idx]


def stabilizes_omega(word: Sequence[LatticeVector]) -> bool:
    return apply_word(word, OMEGA) == OMEGA


# --- orbit search -------------------------------------------------------


def _e7_generators() -> list[LatticeVector]:
    gens = []
    for i in range(DIM - 1):
        c = [0] * DIM
        c[i], c[i + 1] = 1, -1
        gens.append(LatticeVector.from_coords(c))
    gens.append(LatticeVector.from_doubled((-1, -1, -1, -1, 1, 1, 1, 1)))
    return gens


def _unsigned(v: LatticeVector) -> LatticeVector:
    for c in v.eighths:
        if c:
            return v if c > 0 else -v
    return v


def _canonical(vectors: Iterable[LatticeVector]) -> tuple[LatticeVector, ...]:
    return tuple(sorted(_unsigned(v) for v in vectors))


def _invariants(vectors: Sequence[LatticeVector]):
    """W(E7)-invariants of an unordered unsigned tuple."""
    norms = sorted(inner_product(v, v) for v in vectors)
    omegas = sorted(abs(inner_product(v, OMEGA)) for v in vectors)
    grams = sorted(abs(inner_product(a, b)) for a, b in itertools.combinations(vectors, 2))
    return norms, omegas, grams


def in_e7_orbit(
    vectors: Sequence[LatticeVector],
    reference: Sequence[LatticeVector],
    max_states: int = 500_000,
) -> bool:
    """Whether the unordered unsigned tuple ``vectors`` lies in the W(E7)-orbit of ``reference``.

    Invariant mismatch (norms, |<v, omega>|, |Gram| entries) is a definite
    ``False``.  Otherwise the orbit of ``reference`` is enumerated by breadth
    first search; a search that exhausts ``max_states`` without closing the
    orbit raises :class:`OrbitMembershipUnverified`.
    """
    if len(vectors) != len(reference):
        return False
    if _invariants(list(vectors)) != _invariants(list(reference)):
        return False
    target = _canonical(vectors)
    start = _canonical(reference)
    if target == start:
        return True
    gens = _e7_generators()
    seen = {start}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for g in gens:
            nxt = _canonical(reflect(v, g) for v in state)
            if nxt in seen:
                continue
            if nxt == target:
                return True
            seen.add(nxt)
            if len(seen) > max_states:
                raise OrbitMembershipUnverified(
                    f"orbit search stopped after {max_states} states"
                )
            queue.append(nxt)
    return False


# --- torus points -------------------------------------------------------


@dataclass(frozen=True)
class EllipticParams:
    """Nomes p, q, t with fixed square roots of q and t.

    The roots are data: ``log q`` is taken as ``2 log(sqrt_q)`` so that
    half-integral shifts reproduce ``sqrt_q`` exactly.
    """

    p: complex
    q: complex
    t: complex
    sqrt_q: complex
    sqrt_t: complex

    def __post_init__(self):
        for name in ("p", "q", "t", "sqrt_q", "sqrt_t"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        for name in ("p", "q", "t"):
            if not abs(getattr(self, name)) < 1:
                raise NomeOutOfRange(f"|{name}| must be < 1")
        if self.q == 0 or self.t == 0:
            raise NomeOutOfRange("q and t must be nonzero")
        for root, val, name in ((self.sqrt_q, self.q, "q"), (self.sqrt_t, self.t, "t")):
            if abs(root * root - val) > 1e-14 * abs(val):
                raise ValueError(f"sqrt_{name}**2 != {name}")

    @classmethod
    def from_nomes(cls, p, q, t) -> "EllipticParams":
        return cls(p, q, t, cmath.sqrt(q), cmath.sqrt(t))

    @classmethod
    def for_family(cls, p, q, family: str) -> "EllipticParams":
        """t tied to q: ``"q"`` gives t=q, ``"q2"`` t=q^2, ``"qhalf"`` t=q^(1/2)."""
        q = complex(q)
        sq = cmath.sqrt(q)
        if family == "q":
            return cls(p, q, q, sq, sq)
        if family == "q2":
            return cls(p, q, q * q, sq, q)
        if family == "qhalf":
            return cls(p, q, sq, sq, cmath.exp(0.25 * cmath.log(q)))
        raise ValueError(f"unknown family {family!r}")

    @property
    def log_q(self) -> complex:
        return 2.0 * cmath.log(self.sqrt_q)

    @property
    def log_t(self) -> complex:
        return 2.0 * cmath.log(self.sqrt_t)

    def to_json(self) -> dict:
        return {k: [getattr(self, k).real, getattr(self, k).imag]
                for k in ("p", "q", "t", "sqrt_q", "sqrt_t")}

    @classmethod
    def from_json(cls, data: dict) -> "EllipticParams":
        vals = {k: complex(*data[k]) for k in ("p", "q", "t")}
        for k, base in (("sqrt_q", "q"), ("sqrt_t", "t")):
            vals[k] = complex(*data[k]) if k in data else cmath.sqrt(vals[base])
        return cls(**vals)


@dataclass(frozen=True)
class TorusPoint:
    log_coords: tuple[complex, ...]
    params: EllipticParams = field(compare=False)

    def __post_init__(self):
        coords = tuple(complex(c) for c in self.log_coords)
        if len(coords) != DIM:
            raise ValueError(f"need {DIM} log coordinates")
        object.__setattr__(self, "log_coords", coords)

    @property
    def xi(self) -> np.ndarray:
        return np.array(self.log_coords, dtype=complex)

    def value(self, v: LatticeVector) -> complex:
        """phi(v) = exp(<v, xi>)."""
        return complex(np.exp(np.dot(v.as_array(), self.xi)))

    def t_params(self) -> np.ndarray:
        """(phi(e_0), ..., phi(e_7))."""
        return np.exp(self.xi)

    def omega_value(self) -> complex:
        return self.value(OMEGA)

    def to_json(self) -> dict:
        return {
            "log_coords": [[c.real, c.imag] for c in self.log_coords],
            "params": self.params.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TorusPoint":
        return cls(tuple(complex(*c) for c in data["log_coords"]),
                   EllipticParams.from_json(data["params"]))


def weyl_act_on_torus(word: Sequence[LatticeVector], phi: TorusPoint) -> TorusPoint:
    """g^* phi, i.e. (g^* phi)(w) = phi(g w), for g given as a reflection word."""
    xi = phi.xi
    for root in word:
        if inner_product(root, root) != 2 or not is_in_e8(root):
            raise NotARoot(f"{root} is not an E8 root")
        a = root.as_array()
        xi = xi - np.dot(a, xi) * a
    return TorusPoint(tuple(xi), phi.params)


def shift(phi: TorusPoint, v: LatticeVector) -> TorusPoint:
    """tau_v: phi(w) -> phi(w) q**<v, w>, using the stored branch of sqrt(q)."""
    if not v.is_half_integral():
        raise InvalidLatticeVector(f"shift vector {v} must lie in (1/2)Z^8")
    xi = phi.xi + v.as_array() * phi.params.log_q
    return TorusPoint(tuple(xi), phi.params)


def negate_parameters(phi: TorusPoint) -> TorusPoint:
    """t_r -> -t_r for every r (adds i*pi to each log coordinate)."""
    return TorusPoint(tuple(phi.xi + 1j * math.pi), phi.params)


def _match_power(ratio: complex, base: complex, tol: float) -> int | None:
    if ratio == 0 or base == 0:
        return None
    guess = math.log(abs(ratio)) / math.log(abs(base))
    for k in (math.floor(guess), math.ceil(guess)):
        target = base**k
        if abs(ratio - target) < tol * abs(target):
            return int(k)
    return None


def level_of(phi: TorusPoint) -> int:
    """The integer n with pq / (t phi(omega)) = t**n."""
    pr = phi.params
    ratio = pr.p * pr.q / (pr.t * phi.omega_value())
    n = _match_power(ratio, pr.t, LEVEL_TOLERANCE)
    if n is None:
        raise OffLattice(f"pq/(t phi(omega)) = {ratio} is not an integer power of t")
    return n


def half_level_of(phi: TorusPoint) -> Fraction:
    """Like :func:`level_of` but allows half-integer exponents via sqrt_t."""
    pr = phi.params
    ratio = pr.p * pr.q / (pr.t * phi.omega_value())
    k = _match_power(ratio, pr.sqrt_t, LEVEL_TOLERANCE)
    if k is None:
        raise OffLattice(f"pq/(t phi(omega)) = {ratio} is not a power of sqrt(t)")
    return Fraction(k, 2)


def torus_point_at_level(params: EllipticParams, free_logs: Sequence[complex], level) -> TorusPoint:
    """Torus point with given xi_0..xi_6 and xi_7 solving pq/(t phi(omega)) = t**level.

    ``level`` may be a half-integer (a Fraction), which uses ``sqrt_t``.
    """
    free = [complex(c) for c in free_logs]
    if len(free) != DIM - 1:
        raise ValueError(f"need {DIM - 1} free log coordinates")
    h = Fraction(level)
    if (2 * h).denominator != 1:
        raise ValueError("level must be an integer or half-integer")
    log_pq = cmath.log(params.p * params.q)
    log_omega = log_pq - (2 * h + 2) * cmath.log(params.sqrt_t)
    last = 2.0 * log_omega - sum(free)
    return TorusPoint(tuple(free + [last]), params)
