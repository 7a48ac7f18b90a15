"""Dense complex operator algebra on finite-dimensional (truncated) spaces.

Everything downstream works with plain ``numpy`` arrays; this module owns
validation, the truncated ladder pair, spectral functional calculus, and
quadrature construction.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidOperator, InvalidParam, InvalidState, NotHermitian

TWO_PI = 2.0 * math.pi

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def as_operator(a) -> np.ndarray:
    """Coerce ``a`` to a finite square complex matrix or raise InvalidOperator."""
    mat = np.asarray(a, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
        raise InvalidOperator(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat.view(float))):
        raise InvalidOperator("matrix contains NaN or Inf entries")
    return mat


def spectral_norm(a) -> float:
    """Largest singular value of ``a`` (the C*-norm of a dense matrix)."""
    mat = as_operator(a)
    return float(np.linalg.norm(mat, 2))


def is_hermitian(a, tol: float = 1e-10) -> bool:
    """True when ``a`` equals its adjoint within relative spectral tolerance."""
    mat = as_operator(a)
    scale = spectral_norm(mat)
    if scale == 0.0:
        return True
    return spectral_norm(mat - mat.conj().T) <= tol * scale


@dataclass(frozen=True)
class FockConfig:
    """Truncation parameters for a bosonic mode.

    cutoff: number of retained Fock levels (dimension of the truncated space).
    tail_tolerance: maximum acceptable leak of relative weight onto the top
        level during an orbit before a CutoffExceeded diagnostic is attached.
    """

    cutoff: int
    tail_tolerance: float = 1e-6

    def __post_init__(self):
        if not isinstance(self.cutoff, (int, np.integer)) or self.cutoff < 2:
            raise InvalidParam(f"cutoff must be an integer >= 2, got {self.cutoff!r}")
        if not (0.0 < self.tail_tolerance):
            raise InvalidParam("tail_tolerance must be positive")


def fock_pair(cfg: FockConfig) -> tuple[np.ndarray, np.ndarray]:
    """Truncated annihilation/creation pair on ``cfg.cutoff`` Fock levels.

    The annihilation matrix carries sqrt(n) on the first superdiagonal, so
    the number operator a†a is exactly diag(0..cutoff-1) while the canonical
    commutator picks up the usual defect on the top level.
    """
    d = cfg.cutoff
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    return a, a.conj().T


def reduce_angle(theta: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    r = float(theta) % TWO_PI
    if r >= TWO_PI:  # guard against rounding at the boundary
        r -= TWO_PI
    return r


@dataclass(frozen=True)
class QuadratureAngle:
    """Quadrature phase, stored reduced to [0, 2*pi)."""

    angle: float

    def __post_init__(self):
        if not np.isfinite(self.angle):
            raise InvalidParam("angle must be finite")
        object.__setattr__(self, "angle", reduce_angle(self.angle))


def quadratures(a, theta) -> tuple[np.ndarray, np.ndarray]:
    """Phase-rotated quadrature pair (P, Q) of an annihilation-like matrix.

    P = (e^{i theta} a + e^{-i theta} a†) / 2
    Q = (e^{i theta} a - e^{-i theta} a†) / 2i
    """
    mat = as_operator(a)
    ang = theta.angle if isinstance(theta, QuadratureAngle) else reduce_angle(theta)
    ph = np.exp(1j * ang)
    adag = mat.conj().T
    p = (ph * mat + np.conj(ph) * adag) / 2.0
    q = (ph * mat - np.conj(ph) * adag) / 2.0j
    return p, q


def hermitian_function(h, f: Callable[[np.ndarray], np.ndarray], tol: float = 1e-10) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its eigenbasis.

    ``h`` must be Hermitian within relative spectral tolerance ``tol``; it is
    symmetrized before the eigendecomposition so the result is exact for the
    Hermitian part. ``f`` receives the real eigenvalue array and may return
    complex values.
    """
    mat = as_operator(h)
    scale = spectral_norm(mat)
    if scale > 0.0 and spectral_norm(mat - mat.conj().T) > tol * scale:
        raise NotHermitian("matrix is not Hermitian within tolerance")
    sym = (mat + mat.conj().T) / 2.0
    w, v = np.linalg.eigh(sym)
    fw = np.asarray(f(w))
    if fw.shape != w.shape:
        fw = np.array([f(x) for x in w])
    return (v * fw) @ v.conj().T


def validate_density_matrix(rho, tol: float = 1e-10) -> np.ndarray:
    """Validate and project a density matrix.

    Deviations from Hermiticity, positivity, or unit trace beyond ``tol``
    raise InvalidState. Smaller deviations are projected away (symmetrize,
    clip negative eigenvalues, renormalize) with a warning when the
    correction is more than roundoff.
    """
    mat = as_operator(rho)
    scale = max(spectral_norm(mat), 1.0)
    herm_dev = spectral_norm(mat - mat.conj().T)
    if herm_dev > tol * scale:
        raise InvalidState("density matrix is not Hermitian within tolerance")
    sym = (mat + mat.conj().T) / 2.0
    w, v = np.linalg.eigh(sym)
    if w.min() < -tol * scale:
        raise InvalidState(f"density matrix has negative eigenvalue {w.min():.3e}")
    tr = float(np.real(np.trace(sym)))
    if abs(tr - 1.0) > tol * scale or tr <= 0.0:
        raise InvalidState(f"density matrix trace {tr:.12f} differs from 1")
    wc = np.clip(w, 0.0, None)
    cleaned = (v * wc) @ v.conj().T
    cleaned /= np.real(np.trace(cleaned))
    if spectral_norm(cleaned - mat) > 1e-13 * scale:
        warnings.warn("density matrix projected onto the physical cone", stacklevel=2)
    return cleaned


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two operators."""
    return np.kron(as_operator(a), as_operator(b))


def top_level_weight(op: np.ndarray, cutoff: int) -> float:
    """Relative Frobenius weight of an operator on the top Fock level.

    The operator may live on C^cutoff or on C^k (x) C^cutoff for integer k;
    the Fock index is taken as the trailing tensor factor.
    """
    mat = np.asarray(op)
    dim = mat.shape[0]
    if dim % cutoff != 0:
        raise InvalidOperator(f"dimension {dim} is not a multiple of cutoff {cutoff}")
    k = dim // cutoff
    total = float(np.linalg.norm(mat))
    if total == 0.0:
        return 0.0
    blocks = mat.reshape(k, cutoff, k, cutoff)
    row = float(np.linalg.norm(blocks[:, cutoff - 1, :, :]))
    col = float(np.linalg.norm(blocks[:, :, :, cutoff - 1]))
    return max(row, col) / total
