"""Structure checks for polynomial operator maps.

Linear maps get the standard block-matrix positivity certificate; general
polynomial maps in a and a* are decomposed into mixed-homogeneous components
by phase averaging (a DFT over the circle) followed by a Vandermonde fit
over a radius grid, with the components returned as tabulations on probe
operators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DegreeExceeded, InvalidParam, NotLinear
from .operators import as_operator

RADII = (0.5, 0.75, 1.0, 1.25, 1.5)


def _word_value(word: Tuple[str, ...], a: np.ndarray, dim: int) -> np.ndarray:
    out = np.eye(dim, dtype=complex)
    for letter in word:
        out = out @ (a if letter == "a" else a.conj().T)
    return out


@dataclass
class PolyOperatorMap:
    """A polynomial map of one operator variable, as monomials in a and a*.

    Terms are (coefficient, word) pairs with each word a tuple over
    {"a", "a*"}; the empty word is the constant identity term.  Each term is
    homogeneous of bidegree (m, n) = (count of a, count of a*), which is
    verified numerically at construction.
    """

    dim: int
    terms: List[Tuple[complex, Tuple[str, ...]]]

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParam("dim must be >= 1")
        rng = np.random.default_rng(20260817)
        normalized = []
        for coeff, word in self.terms:
            word = tuple(word)
            if any(letter not in ("a", "a*") for letter in word):
                raise InvalidParam(f"monomial letters must be 'a' or 'a*', got {word!r}")
            coeff = complex(coeff)
            m = sum(1 for letter in word if letter == "a")
            n = len(word) - m
            for _ in range(5):
                a = rng.standard_normal((self.dim, self.dim)) \
                    + 1j * rng.standard_normal((self.dim, self.dim))
                z = complex(*rng.standard_normal(2))
                lhs = _word_value(word, z * a, self.dim)
                rhs = (z ** m) * (np.conj(z) ** n) * _word_value(word, a, self.dim)
                scale = max(np.linalg.norm(rhs), 1.0)
                if np.linalg.norm(lhs - rhs) > 1e-10 * scale:
                    raise InvalidParam(f"term {word!r} is not ({m},{n})-homogeneous")
            normalized.append((coeff, word))
        self.terms = normalized

    def bidegrees(self) -> List[Tuple[int, int]]:
        out = set()
        for _, word in self.terms:
            m = sum(1 for letter in word if letter == "a")
            out.add((m, len(word) - m))
        return sorted(out)

    def __call__(self, a) -> np.ndarray:
        a = as_operator(a)
        if a.shape != (self.dim, self.dim):
            raise InvalidParam(f"expected a {self.dim}x{self.dim} operator")
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for coeff, word in self.terms:
            out += coeff * _word_value(word, a, self.dim)
        return out


def poly_map_from_dict(d: Mapping) -> PolyOperatorMap:
    terms = []
    for t in d["terms"]:
        coeff = t["coeff"]
        coeff = complex(coeff[0], coeff[1]) if isinstance(coeff, (list, tuple)) else complex(coeff)
        word = t.get("word", "")
        letters = tuple(word.split()) if isinstance(word, str) else tuple(word)
        terms.append((coeff, letters))
    return PolyOperatorMap(dim=int(d["dim"]), terms=terms)


def poly_map_to_dict(pm: PolyOperatorMap) -> dict:
    return {
        "dim": pm.dim,
        "terms": [
            {"coeff": [c.real, c.imag], "word": " ".join(word)} for c, word in pm.terms
        ],
    }


def _check_linear(linear_map: Callable[[np.ndarray], np.ndarray], dim: int) -> None:
    rng = np.random.default_rng(91)
    for _ in range(4):
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        b = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        alpha = complex(*rng.standard_normal(2))
        beta = complex(*rng.standard_normal(2))
        lhs = linear_map(alpha * a + beta * b)
        rhs = alpha * linear_map(a) + beta * linear_map(b)
        scale = max(np.linalg.norm(rhs), 1.0)
        if np.linalg.norm(lhs - rhs) > 1e-10 * scale:
            raise NotLinear("map is not linear on random probe pairs")


def choi_of(linear_map: Callable[[np.ndarray], np.ndarray], dim: int) -> np.ndarray:
    """Block matrix with (i, j) block equal to the map applied to E_ij."""
    _check_linear(linear_map, dim)
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            choi[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = linear_map(e)
    return choi


def is_completely_positive(linear_map: Callable[[np.ndarray], np.ndarray], dim: int) -> bool:
    """Positivity of the block certificate within eigenvalue tolerance 1e-10."""
    choi = choi_of(linear_map, dim)
    herm_defect = np.linalg.norm(choi - choi.conj().T)
    if herm_defect > 1e-10 * max(np.linalg.norm(choi), 1.0):
        return False
    return float(np.linalg.eigvalsh((choi + choi.conj().T) / 2.0).min()) >= -1e-10


def kraus_map(operators: Sequence[np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    ops = [as_operator(v) for v in operators]
    return lambda a: sum(v @ a @ v.conj().T for v in ops)


@dataclass
class HomogeneousDecomposition:
    """Mixed-homogeneous components tabulated on probe operators."""

    max_degree: int
    probes: List[np.ndarray]
    components: Dict[Tuple[int, int], List[np.ndarray]]
    residual: float
    warnings: List[str] = field(default_factory=list)

    def evaluate(self, probe_index: int, z: complex) -> np.ndarray:
        """Sum of z^m conj(z)^n times the components at one probe."""
        z = complex(z)
        dim = self.probes[probe_index].shape[0]
        out = np.zeros((dim, dim), dtype=complex)
        for (m, n), mats in self.components.items():
            out += (z ** m) * (np.conj(z) ** n) * mats[probe_index]
        return out


def _component_values(
    map_fn: Callable[[np.ndarray], np.ndarray],
    a: np.ndarray,
    max_degree: int,
) -> Tuple[Dict[Tuple[int, int], np.ndarray], float]:
    """All (m, n) component values at one probe, with the grid residual."""
    dim = a.shape[0]
    k_phases = 2 * max_degree + 3
    thetas = 2.0 * math.pi * np.arange(k_phases) / k_phases
    radii = np.asarray(RADII)
    # samples[p, r] = map(r e^{i theta_p} a)
    samples = np.empty((k_phases, len(radii), dim, dim), dtype=complex)
    for p, th in enumerate(thetas):
        for q, r in enumerate(radii):
            samples[p, q] = map_fn(r * np.exp(1j * th) * a)
    scale = max(float(np.max(np.abs(samples))), 1.0)
    comps: Dict[Tuple[int, int], np.ndarray] = {}
    worst = 0.0
    for d in range(-max_degree, max_degree + 1):
        phases = np.exp(-1j * d * thetas)
        g = np.tensordot(phases, samples, axes=(0, 0)) / k_phases  # (radii, dim, dim)
        degrees = [s for s in range(abs(d), max_degree + 1) if (s - d) % 2 == 0]
        if not degrees:
            continue
        vand = np.column_stack([radii ** s for s in degrees])
        flat = g.reshape(len(radii), dim * dim)
        sol, _, _, _ = np.linalg.lstsq(vand, flat, rcond=None)
        worst = max(worst, float(np.max(np.abs(vand @ sol - flat))) / scale)
        for row, s in enumerate(degrees):
            m, n = (s + d) // 2, (s - d) // 2
            comps[(m, n)] = sol[row].reshape(dim, dim)
    # Phase-aliasing residual: reconstruct the full grid from the components.
    recon = np.zeros_like(samples)
    for (m, n), mat in comps.items():
        zpow = (radii[None, :] ** (m + n)) * np.exp(1j * (m - n) * thetas)[:, None]
        recon += zpow[:, :, None, None] * mat[None, None, :, :]
    worst = max(worst, float(np.max(np.abs(recon - samples))) / scale)
    return comps, worst


def homogeneous_components(
    map_fn: Callable[[np.ndarray], np.ndarray],
    dim: int,
    max_degree: int,
    probes: Optional[Sequence[np.ndarray]] = None,
    seed: int = 5,
    drop_tol: float = 1e-10,
) -> HomogeneousDecomposition:
    """Extract the mixed-homogeneous components of a polynomial operator map.

    The map is sampled at probe operators scaled around the unit circle; the
    phase average isolates each m - n frequency and a radius fit separates
    the total degrees.  A residual above 1e-6 means the map has structure
    beyond max_degree and raises DegreeExceeded.
    """
    if max_degree < 0:
        raise InvalidParam("max_degree must be nonnegative")
    if probes is None:
        rng = np.random.default_rng(seed)
        probes = [
            rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            for _ in range(5)
        ]
    probes = [as_operator(p) for p in probes]
    per_probe: List[Dict[Tuple[int, int], np.ndarray]] = []
    residual = 0.0
    for a in probes:
        comps, worst = _component_values(map_fn, a, max_degree)
        residual = max(residual, worst)
        per_probe.append(comps)
    if residual > 1e-6:
        raise DegreeExceeded(
            f"fit residual {residual:.3e} exceeds 1e-6; the map has terms above degree "
            f"{max_degree}"
        )
    keys = sorted({k for comps in per_probe for k in comps})
    components: Dict[Tuple[int, int], List[np.ndarray]] = {}
    for key in keys:
        mats = [comps.get(key, np.zeros((dim, dim), dtype=complex)) for comps in per_probe]
        if max(np.max(np.abs(m)) for m in mats) > drop_tol:
            components[key] = mats
    return HomogeneousDecomposition(
        max_degree=max_degree, probes=list(probes), components=components, residual=residual
    )


def component_at(
    map_fn: Callable[[np.ndarray], np.ndarray],
    a,
    m: int,
    n: int,
    max_degree: Optional[int] = None,
) -> np.ndarray:
    """One (m, n) component evaluated at a single probe operator."""
    if m < 0 or n < 0:
        raise InvalidParam("bidegrees must be nonnegative")
    a = as_operator(a)
    deg = max_degree if max_degree is not None else m + n
    if m + n > deg:
        raise InvalidParam("m + n exceeds max_degree")
    comps, _ = _component_values(map_fn, a, deg)
    return comps.get((m, n), np.zeros(a.shape, dtype=complex))
