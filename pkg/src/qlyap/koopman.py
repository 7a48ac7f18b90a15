"""Characters, Gelfand transforms, and polynomial Koopman lifts.

Everything lives over a finite point set: algebra elements are functions
tabulated on the points, characters are point evaluations, and the lifted
dynamics on transforms is a polynomial composed with a pullback along an
endomap of the points.  Finiteness makes each identity exhaustively
checkable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidCharacter, InvalidParam


@dataclass(frozen=True)
class PointSet:
    """A finite set of distinct real points (scalars or vectors)."""

    points: Tuple[Tuple[float, ...], ...]

    def __init__(self, points: Iterable):
        pts = []
        for p in points:
            arr = np.atleast_1d(np.asarray(p, dtype=float))
            if arr.ndim != 1:
                raise InvalidParam("points must be scalars or 1-D vectors")
            pts.append(tuple(arr.tolist()))
        if not pts:
            raise InvalidParam("point set must be nonempty")
        if len(set(pts)) != len(pts):
            raise InvalidParam("points must be pairwise distinct")
        object.__setattr__(self, "points", tuple(pts))

    @property
    def size(self) -> int:
        return len(self.points)

    def coordinate(self, axis: int = 0) -> "AlgebraElement":
        """The axis-th coordinate as a tabulated function."""
        return AlgebraElement(self, [p[axis] for p in self.points])

    def indicator(self, i: int) -> "AlgebraElement":
        values = np.zeros(self.size, dtype=complex)
        values[i] = 1.0
        return AlgebraElement(self, values)


@dataclass(frozen=True)
class AlgebraElement:
    """A function on the point set, tabulated pointwise."""

    point_set: PointSet
    values: Tuple[complex, ...]

    def __init__(self, point_set: PointSet, values: Iterable[complex]):
        vals = tuple(complex(v) for v in values)
        if len(vals) != point_set.size:
            raise InvalidParam("value count must match the point set")
        object.__setattr__(self, "point_set", point_set)
        object.__setattr__(self, "values", vals)

    def __mul__(self, other: "AlgebraElement") -> "AlgebraElement":
        if other.point_set is not self.point_set and other.point_set != self.point_set:
            raise InvalidParam("elements live on different point sets")
        return AlgebraElement(self.point_set, [u * v for u, v in zip(self.values, other.values)])

    def max_norm(self) -> float:
        return max(abs(v) for v in self.values)


def gelfand(a: AlgebraElement, phi: int) -> complex:
    """Evaluate a at the character phi (a point index)."""
    if not (isinstance(phi, (int, np.integer)) and 0 <= phi < a.point_set.size):
        raise InvalidCharacter(f"no character with index {phi!r}")
    return a.values[phi]


def horner_eval(coeffs: Mapping[Tuple[int, ...], complex], values: Sequence[complex]) -> complex:
    """Evaluate a multivariate polynomial by Horner recursion per variable."""
    if not coeffs:
        return 0.0 + 0.0j
    nvars = len(values)
    if nvars == 0:
        return complex(coeffs.get((), 0.0))
    # Split on the degree of the first variable, recurse on the rest.
    groups: Dict[int, Dict[Tuple[int, ...], complex]] = {}
    for key, c in coeffs.items():
        groups.setdefault(key[0], {})[key[1:]] = c
    t = complex(values[0])
    acc = 0.0 + 0.0j
    for d in range(max(groups), -1, -1):
        acc = acc * t
        if d in groups:
            acc += horner_eval(groups[d], values[1:])
    return acc


def horner_eval_1d(coeffs: Sequence[complex], t: complex) -> complex:
    acc = 0.0 + 0.0j
    for c in reversed(list(coeffs)):
        acc = acc * t + complex(c)
    return acc


@dataclass(frozen=True)
class CharacterExpr:
    """A polynomial in finitely many characters: W(phi_1, ..., phi_n)."""

    coeffs: Tuple[Tuple[Tuple[int, ...], complex], ...]
    indices: Tuple[int, ...]

    def __init__(self, coeffs: Mapping[Tuple[int, ...], complex], indices: Sequence[int]):
        idx = tuple(int(i) for i in indices)
        if len(idx) < 1:
            raise InvalidParam("at least one character is required")
        if any(i < 0 for i in idx):
            raise InvalidCharacter("character indices must be nonnegative")
        items = []
        for key, c in coeffs.items():
            key = tuple(int(d) for d in key)
            if len(key) != len(idx) or any(d < 0 for d in key):
                raise InvalidParam(f"bad multi-degree {key!r} for {len(idx)} variables")
            items.append((key, complex(c)))
        object.__setattr__(self, "coeffs", tuple(sorted(items)))
        object.__setattr__(self, "indices", idx)


def tilde_extend(a: AlgebraElement, expr: CharacterExpr) -> complex:
    """Evaluate W at the tuple of character values of a."""
    m = a.point_set.size
    if any(i >= m for i in expr.indices):
        raise InvalidCharacter("character index outside the point set")
    vals = [a.values[i] for i in expr.indices]
    return horner_eval(dict(expr.coeffs), vals)


@dataclass(frozen=True)
class LiftSpec:
    """An endomap of the points together with a one-variable polynomial."""

    tau: Tuple[int, ...]
    t_coeffs: Tuple[complex, ...]

    def __init__(self, tau: Sequence[int], t_coeffs: Sequence[complex]):
        tau = tuple(int(i) for i in tau)
        m = len(tau)
        if m == 0:
            raise InvalidParam("tau must be a total endomap of a nonempty set")
        if any(not (0 <= i < m) for i in tau):
            raise InvalidParam("tau must map point indices to point indices")
        coeffs = tuple(complex(c) for c in t_coeffs)
        if not any(c != 0 for c in coeffs):
            raise InvalidParam("the lift polynomial must be nonzero")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "t_coeffs", coeffs)


def lift(spec: LiftSpec, a_hat: AlgebraElement) -> AlgebraElement:
    """The lifted map applied to a transform: point i gets T(a(tau(i)))."""
    if len(spec.tau) != a_hat.point_set.size:
        raise InvalidParam("lift and element are over different point sets")
    values = [horner_eval_1d(spec.t_coeffs, a_hat.values[j]) for j in spec.tau]
    return AlgebraElement(a_hat.point_set, values)


def logistic_dual_check(r: float, a: AlgebraElement, phi: int) -> Tuple[complex, complex]:
    """Both sides of the dual logistic action at one character.

    lhs applies r t (1 - t) to the transform's value; rhs evaluates the same
    thing through the character applied to a and to its square.
    """
    x = gelfand(a, phi)
    lhs = r * x * (1.0 - x)
    rhs = r * (gelfand(a, phi) - gelfand(a * a, phi))
    return lhs, rhs


# ---------------------------------------------------------------------------
# Finite-scale uniqueness search


def trim_poly(coeffs: Sequence[complex]) -> Tuple[complex, ...]:
    c = list(complex(v) for v in coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


def specs_equivalent(s1: LiftSpec, s2: LiftSpec) -> bool:
    """Semantic equality: same polynomial, and same endomap unless constant."""
    t1, t2 = trim_poly(s1.t_coeffs), trim_poly(s2.t_coeffs)
    if t1 != t2:
        return False
    if len(t1) == 1:  # constant polynomial: the pullback is invisible
        return True
    return s1.tau == s2.tau


def default_polynomial_family(max_degree: int = 3) -> List[Tuple[complex, ...]]:
    """All nonzero polynomials of degree <= max_degree over {-1, 0, 1}."""
    family: List[Tuple[complex, ...]] = []
    for length in range(1, max_degree + 2):
        for combo in itertools.product((-1.0, 0.0, 1.0), repeat=length):
            if combo[-1] == 0 and length > 1:
                continue
            if not any(combo):
                continue
            family.append(tuple(complex(c) for c in combo))
    return family


def _probe_family(point_set: PointSet, rng: np.random.Generator) -> List[AlgebraElement]:
    m = point_set.size
    probes = [point_set.coordinate(0)]
    probes.extend(point_set.indicator(i) for i in range(m))
    for _ in range(2):
        vec = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        probes.append(AlgebraElement(point_set, vec))
    return probes


def _signature(spec: LiftSpec, probes: Sequence[AlgebraElement], ndigits: int = 9) -> tuple:
    out = []
    for p in probes:
        for v in lift(spec, p).values:
            out.append((round(v.real, ndigits), round(v.imag, ndigits)))
    return tuple(out)


def uniqueness_search(
    point_set: PointSet,
    taus: Optional[Iterable[Sequence[int]]] = None,
    polynomials: Optional[Iterable[Sequence[complex]]] = None,
    seed: int = 7,
) -> List[Tuple[LiftSpec, LiftSpec]]:
    """Hunt for semantically distinct specs with identical lift actions.

    Candidate specs are grouped by their lifted images on a probe family
    (coordinate, all indicators, two random vectors); groups are then checked
    pairwise with the semantic equivalence rule.  Returns the offending
    pairs, so an empty list certifies uniqueness over the searched family.
    """
    m = point_set.size
    rng = np.random.default_rng(seed)
    if taus is None:
        if m <= 3:
            taus = list(itertools.product(range(m), repeat=m))
        else:
            cands = {tuple(range(m)), tuple((i + 1) % m for i in range(m)),
                     tuple(reversed(range(m)))}
            cands.update(tuple([j] * m) for j in range(m))
            while len(cands) < 40 + m:
                cands.add(tuple(rng.integers(0, m, size=m).tolist()))
            taus = sorted(cands)
    if polynomials is None:
        polynomials = default_polynomial_family(3)
    specs = [LiftSpec(tau, poly) for tau in taus for poly in polynomials]
    probes = _probe_family(point_set, rng)
    groups: Dict[tuple, List[LiftSpec]] = {}
    for s in specs:
        groups.setdefault(_signature(s, probes), []).append(s)
    deep_probes = probes + [
        AlgebraElement(point_set, rng.standard_normal(m) + 1j * rng.standard_normal(m))
        for _ in range(5)
    ]
    offenders: List[Tuple[LiftSpec, LiftSpec]] = []
    for members in groups.values():
        for s1, s2 in itertools.combinations(members, 2):
            if specs_equivalent(s1, s2):
                continue
            if all(
                np.allclose(lift(s1, p).values, lift(s2, p).values, rtol=0.0, atol=1e-12)
                for p in deep_probes
            ):
                offenders.append((s1, s2))
    return offenders


# ---------------------------------------------------------------------------
# JSON plumbing


def _complex_to_pair(c: complex) -> List[float]:
    return [float(c.real), float(c.imag)]


def point_set_to_dict(ps: PointSet) -> dict:
    return {"points": [list(p) for p in ps.points]}


def point_set_from_dict(d: Mapping) -> PointSet:
    return PointSet(d["points"])


def lift_spec_to_dict(spec: LiftSpec) -> dict:
    return {"tau": list(spec.tau), "t_coeffs": [_complex_to_pair(c) for c in spec.t_coeffs]}


def lift_spec_from_dict(d: Mapping) -> LiftSpec:
    return LiftSpec(d["tau"], [complex(re, im) for re, im in d["t_coeffs"]])


def character_expr_to_dict(expr: CharacterExpr) -> dict:
    return {
        "indices": list(expr.indices),
        "terms": [{"degrees": list(k), "coeff": _complex_to_pair(c)} for k, c in expr.coeffs],
    }


def character_expr_from_dict(d: Mapping) -> CharacterExpr:
    coeffs = {tuple(t["degrees"]): complex(t["coeff"][0], t["coeff"][1]) for t in d["terms"]}
    return CharacterExpr(coeffs, d["indices"])
