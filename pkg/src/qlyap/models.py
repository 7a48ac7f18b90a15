"""Dynamical model zoo.

Every model packages one discrete-time map together with whatever structure
the estimators need: a step, an analytic tangent when one is known, a norm
appropriate to the state kind, validation, and (for parameter-variation
models) the family of initial states or observables indexed by the
variation parameter.

State conventions by ``state_kind``:

* ``observable`` / ``density_matrix``: complex square matrix.
* ``operator_pair``: the two members stacked vertically, shape (2D, D).
* ``classical_vector``: real 1-D array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateState, InvalidParam, InvalidState, NotHermitian
from .operators import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    FockConfig,
    as_operator,
    fock_pair,
    hermitian_function,
    is_hermitian,
    spectral_norm,
    tensor,
    top_level_weight,
    validate_density_matrix,
)

PAULI = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}


@dataclass
class DynamicalModel:
    """A discrete-time dynamical map on a finite-dimensional algebra."""

    name: str
    state_kind: str
    variation_mode: str  # "direction" or "parameter"
    step: Callable[[np.ndarray], np.ndarray]
    norm: Callable[[np.ndarray], float]
    params: dict = field(default_factory=dict)
    dt: float = 1.0
    analytic_tangent: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    validate_state: Optional[Callable[[np.ndarray], np.ndarray]] = None
    zero_state: Optional[np.ndarray] = None
    initial_state: Optional[np.ndarray] = None
    param_initial_state: Optional[Callable[[float], np.ndarray]] = None
    param_observable: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    param_observable_derivative: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    tail_monitor: Optional[Callable[[np.ndarray], float]] = None
    tail_tolerance: float = 1e-6
    domain_check: Optional[Callable[[np.ndarray], bool]] = None

    def coerce_state(self, x) -> np.ndarray:
        x = np.asarray(x)
        if self.validate_state is not None:
            x = self.validate_state(x)
        return x


def _require_finite_real(value, name: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidParam(f"{name} must be a real number, got {value!r}") from exc
    if not math.isfinite(v):
        raise InvalidParam(f"{name} must be finite")
    return v


def contraction_model(lam: float, dim: int = 2) -> DynamicalModel:
    """Uniform contraction semigroup sampled at unit time: x -> e^{-lam} x.

    lam = 0 gives the identity map; negative rates are rejected.
    """
    lam = _require_finite_real(lam, "lam")
    if lam < 0.0:
        raise InvalidParam("contraction rate must be nonnegative")
    if dim < 1:
        raise InvalidParam("dim must be >= 1")
    factor = math.exp(-lam)
    return DynamicalModel(
        name="contraction",
        state_kind="observable",
        variation_mode="direction",
        step=lambda x: factor * x,
        analytic_tangent=lambda x, y: factor * y,
        norm=spectral_norm,
        params={"lambda": lam, "dim": dim},
        dt=1.0,
        zero_state=np.zeros((dim, dim), dtype=complex),
        initial_state=np.eye(dim, dtype=complex),
    )


def hartree_model(q, dt: float = 1.0) -> DynamicalModel:
    """Nonlinear mean-field conjugation rho -> E rho E^{-1}, E = exp(-i tr(Q rho) Q dt).

    Since Q commutes with E the coupling tr(Q rho) is a constant of motion, so
    the orbit stays unitary while the tangent picks up a secular commutator
    term that grows linearly with the step count.
    """
    q = as_operator(q)
    if not is_hermitian(q):
        raise NotHermitian("coupling operator must be Hermitian")
    dt = _require_finite_real(dt, "dt")
    if dt <= 0.0:
        raise InvalidParam("dt must be positive")
    w, v = np.linalg.eigh((q + q.conj().T) / 2.0)
    vh = v.conj().T

    def _pair(c: complex):
        ph = np.exp(-1j * c * dt * w)
        e = (v * ph) @ vh
        einv = (v * (1.0 / ph)) @ vh
        return e, einv

    def step(rho):
        c = complex(np.trace(q @ rho))
        e, einv = _pair(c)
        return e @ rho @ einv

    def tangent(rho, y):
        c = complex(np.trace(q @ rho))
        g = complex(np.trace(q @ y))
        e, einv = _pair(c)
        comm = q @ rho - rho @ q
        return e @ (y - 1j * dt * g * comm) @ einv

    return DynamicalModel(
        name="hartree",
        state_kind="density_matrix",
        variation_mode="direction",
        step=step,
        analytic_tangent=tangent,
        norm=spectral_norm,
        params={"dt": dt, "dim": q.shape[0]},
        dt=dt,
        validate_state=validate_density_matrix,
        zero_state=None,  # zero is not a density matrix; c1 bound not applicable
        initial_state=np.eye(q.shape[0], dtype=complex) / q.shape[0],
    )


def _validate_quadratic_state(rho) -> np.ndarray:
    rho = as_operator(rho)
    nrm = spectral_norm(rho)
    if not is_hermitian(rho):
        raise InvalidState("quadratic map state must be Hermitian")
    if nrm > 1.0 + 1e-10:
        raise InvalidState(f"quadratic map needs contracting norm, got {nrm:.6f}")
    if spectral_norm(rho @ rho - rho) <= 1e-12 * max(nrm, 1.0):
        raise DegenerateState("projectors (identity included) are fixed points")
    return rho


def quadratic_model(dim: int = 2) -> DynamicalModel:
    """Operator squaring rho -> rho^2 with tangent y -> rho y + y rho."""
    if dim < 1:
        raise InvalidParam("dim must be >= 1")
    return DynamicalModel(
        name="quadratic",
        state_kind="observable",
        variation_mode="direction",
        step=lambda x: x @ x,
        analytic_tangent=lambda x, y: x @ y + y @ x,
        norm=spectral_norm,
        params={"dim": dim},
        dt=1.0,
        validate_state=_validate_quadratic_state,
        zero_state=np.zeros((dim, dim), dtype=complex),
    )


def spin_field_operator(pauli_name: str, cutoff: int) -> np.ndarray:
    """Pauli operator on the spin factor tensored with the field identity."""
    if pauli_name not in PAULI:
        raise InvalidParam(f"unknown Pauli name {pauli_name!r}")
    return tensor(PAULI[pauli_name], np.eye(cutoff, dtype=complex))


def two_level_field_model(
    omega0: float,
    omega: float,
    lambda0: float,
    cfg: FockConfig,
    dt: float = 0.05,
) -> DynamicalModel:
    """Two-level atom coupled to one truncated field mode, Heisenberg picture.

    H = omega0/2 sigma_z (x) 1 + omega 1 (x) (a†a + 1/2) + lambda0 sigma_x (x) (a + a†),
    one step conjugates by exp(i H dt).
    """
    omega0 = _require_finite_real(omega0, "omega0")
    omega = _require_finite_real(omega, "omega")
    lambda0 = _require_finite_real(lambda0, "lambda0")
    dt = _require_finite_real(dt, "dt")
    if dt <= 0.0:
        raise InvalidParam("dt must be positive")
    d = cfg.cutoff
    a, ad = fock_pair(cfg)
    number = ad @ a
    eye2 = np.eye(2, dtype=complex)
    eyef = np.eye(d, dtype=complex)
    h = (
        0.5 * omega0 * tensor(SIGMA_Z, eyef)
        + omega * tensor(eye2, number + 0.5 * eyef)
        + lambda0 * tensor(SIGMA_X, a + ad)
    )
    u = hermitian_function(h, lambda t: np.exp(1j * dt * t))
    uh = u.conj().T

    def step(x):
        return u @ x @ uh

    return DynamicalModel(
        name="two_level",
        state_kind="observable",
        variation_mode="direction",
        step=step,
        analytic_tangent=lambda x, y: step(y),
        norm=spectral_norm,
        params={"omega0": omega0, "omega": omega, "lambda0": lambda0, "dt": dt, "cutoff": d},
        dt=dt,
        zero_state=np.zeros((2 * d, 2 * d), dtype=complex),
        initial_state=spin_field_operator("sigma_x", d),
        tail_monitor=lambda x: top_level_weight(x, d),
        tail_tolerance=cfg.tail_tolerance,
    )


def kicked_kerr_model(
    chi: float,
    kappa: Optional[float],
    t0: float,
    r: float,
    cfg: FockConfig,
    observable: str = "pi",
) -> DynamicalModel:
    """Kicked Kerr oscillator on the truncated quadrature pair.

    One period left-multiplies the stacked pair (Phi, Pi) by the 2x2
    operator-entry matrix

        [ e^r  cos(mu B0)   e^r  sin(mu B0) ]
        [-e^-r sin(mu B0)   e^-r cos(mu B0) ],   mu = chi * t0,

    where B0 = Phi^2 + Pi^2 - 1 is built once from the truncated initial pair
    (its top diagonal entry carries the truncation defect). The entries are
    frozen at construction, so the period map is linear on pairs; the overall
    unimodular phase of the exact solution is dropped since it cannot affect
    any norm. Variation is parametric: the phase eps rotates the initial
    quadrature pair and the derivative is taken in eps.
    """
    chi = _require_finite_real(chi, "chi")
    t0 = _require_finite_real(t0, "t0")
    r = _require_finite_real(r, "r")
    if chi <= 0.0 or t0 <= 0.0:
        raise InvalidParam("chi and t0 must be positive")
    if r < 0.0:
        raise InvalidParam("kick stretch r must be nonnegative")
    if kappa is None:
        kappa = r
    kappa = _require_finite_real(kappa, "kappa")
    if observable not in ("phi", "pi", "pair"):
        raise InvalidParam(f"observable must be phi, pi or pair, got {observable!r}")
    d = cfg.cutoff
    mu = chi * t0
    a, ad = fock_pair(cfg)
    phi0 = (a + ad) / 2.0
    pi0 = (a - ad) / 2.0j
    b0 = phi0 @ phi0 + pi0 @ pi0 - np.eye(d, dtype=complex)
    cb = hermitian_function(b0, lambda t: np.cos(mu * t))
    sb = hermitian_function(b0, lambda t: np.sin(mu * t))
    er, emr = math.exp(r), math.exp(-r)
    mblk = np.block([[er * cb, er * sb], [-emr * sb, emr * cb]])
    pair0 = np.vstack([phi0, pi0])

    def step(s):
        return mblk @ s

    def rotated_pair(eps: float) -> np.ndarray:
        c, s = math.cos(eps), math.sin(eps)
        return np.vstack([c * phi0 - s * pi0, s * phi0 + c * pi0])

    def norm(s) -> float:
        if observable == "phi":
            return spectral_norm(s[:d])
        if observable == "pi":
            return spectral_norm(s[d:])
        return max(spectral_norm(s[:d]), spectral_norm(s[d:]))

    def monitor(s) -> float:
        return max(top_level_weight(s[:d], d), top_level_weight(s[d:], d))

    return DynamicalModel(
        name="kicked_kerr",
        state_kind="operator_pair",
        variation_mode="parameter",
        step=step,
        analytic_tangent=lambda x, y: mblk @ y,
        norm=norm,
        params={"chi": chi, "kappa": kappa, "t0": t0, "r": r, "mu": mu,
                "cutoff": d, "observable": observable},
        dt=1.0,
        zero_state=np.zeros((2 * d, d), dtype=complex),
        initial_state=pair0,
        param_initial_state=rotated_pair,
        tail_monitor=monitor,
        tail_tolerance=cfg.tail_tolerance,
    )


def squeezed_light_model(k, cfg: FockConfig, dz: float = 0.25) -> DynamicalModel:
    """Degenerate parametric amplification of the field mode along propagation.

    The annihilation operator flows as
        a(z) = cosh(|k| z) a(0) + phase * sinh(|k| z) a†(0),
    stepped exactly over dz. A positive real gain uses the phase convention
    phase = -1; any other nonzero complex gain keeps its own phase k/|k|.
    Variation is parametric in the quadrature angle alpha: the derivative of
    Q_alpha(z) in alpha is P_alpha(z), available in closed form.
    """
    kc = complex(k)
    if kc == 0:
        raise InvalidParam("gain k must be nonzero")
    kmag = abs(kc)
    if kc.imag == 0.0 and kc.real > 0.0:
        phase = -1.0 + 0.0j
    else:
        phase = kc / kmag
    dz = _require_finite_real(dz, "dz")
    if dz <= 0.0:
        raise InvalidParam("dz must be positive")
    d = cfg.cutoff
    a, _ = fock_pair(cfg)
    ch, sh = math.cosh(kmag * dz), math.sinh(kmag * dz)

    def step(s):
        return ch * s + phase * sh * s.conj().T

    def q_alpha(s, alpha: float) -> np.ndarray:
        ph = np.exp(1j * alpha)
        return (ph * s - np.conj(ph) * s.conj().T) / 2.0j

    def p_alpha(s, alpha: float) -> np.ndarray:
        ph = np.exp(1j * alpha)
        return (ph * s + np.conj(ph) * s.conj().T) / 2.0

    return DynamicalModel(
        name="squeezed",
        state_kind="observable",
        variation_mode="parameter",
        step=step,
        analytic_tangent=lambda x, y: ch * y + phase * sh * y.conj().T,
        norm=spectral_norm,
        params={"k": kmag, "phase_re": phase.real, "phase_im": phase.imag,
                "dz": dz, "cutoff": d},
        dt=dz,
        zero_state=np.zeros((d, d), dtype=complex),
        initial_state=a,
        param_observable=q_alpha,
        param_observable_derivative=p_alpha,
        tail_monitor=lambda s: top_level_weight(s, d),
        tail_tolerance=cfg.tail_tolerance,
    )


def coherent_vector(w, cutoff: int) -> np.ndarray:
    """Truncated coherent-state vector with a|w> = w|w> (renormalized)."""
    w = complex(w)
    if w == 0:
        amps = np.zeros(cutoff, dtype=complex)
        amps[0] = 1.0
        return amps
    n = np.arange(cutoff)
    log_fact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, cutoff))]))
    amps = np.exp(n * np.log(w) - log_fact / 2.0)
    return amps / np.linalg.norm(amps)


def _validate_logistic_state(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (1,):
        raise InvalidState("logistic state is a single real number")
    if not (0.0 <= x[0] <= 1.0):
        raise InvalidState("logistic state must lie in [0, 1]")
    return x


def logistic_model(r: float) -> DynamicalModel:
    """Quadratic interval map x -> r x (1 - x)."""
    r = _require_finite_real(r, "r")
    if not (0.0 < r <= 4.0):
        raise InvalidParam("logistic parameter must lie in (0, 4]")

    return DynamicalModel(
        name="logistic",
        state_kind="classical_vector",
        variation_mode="direction",
        step=lambda x: r * x * (1.0 - x),
        analytic_tangent=lambda x, v: r * (1.0 - 2.0 * x) * v,
        norm=lambda v: float(np.linalg.norm(v)),
        params={"r": r},
        dt=1.0,
        validate_state=_validate_logistic_state,
        zero_state=np.zeros(1),
        initial_state=np.array([0.3]),
        domain_check=lambda x: bool(-1e-9 <= x[0] <= 1.0 + 1e-9),
    )


def hyperbolic_model(kappa: float, dt: float = 0.1) -> DynamicalModel:
    """Inverted harmonic flow x'' = kappa^2 x sampled at dt; exponent kappa."""
    kappa = _require_finite_real(kappa, "kappa")
    dt = _require_finite_real(dt, "dt")
    if kappa <= 0.0:
        raise InvalidParam("kappa must be positive")
    if dt <= 0.0:
        raise InvalidParam("dt must be positive")
    kd = kappa * dt
    m = np.array(
        [[math.cosh(kd), math.sinh(kd) / kappa], [kappa * math.sinh(kd), math.cosh(kd)]]
    )
    return DynamicalModel(
        name="hyperbolic",
        state_kind="classical_vector",
        variation_mode="direction",
        step=lambda x: m @ x,
        analytic_tangent=lambda x, v: m @ v,
        norm=lambda v: float(np.linalg.norm(v)),
        params={"kappa": kappa, "dt": dt},
        dt=dt,
        zero_state=np.zeros(2),
        initial_state=np.array([1.0, 0.0]),
    )


def kerr_kick_cnumber_model(chi: float, kappa: float, t0: float) -> DynamicalModel:
    """c-number limit of the kicked Kerr oscillator on z = x + i y in R^2.

    One period: free Kerr rotation z -> z exp(-i (chi/2) |z|^2 t0), then the
    impulsive kick z -> cosh(kappa) z - i sinh(kappa) conj(z).
    """
    chi = _require_finite_real(chi, "chi")
    kappa = _require_finite_real(kappa, "kappa")
    t0 = _require_finite_real(t0, "t0")
    if chi <= 0.0 or kappa <= 0.0 or t0 <= 0.0:
        raise InvalidParam("chi, kappa and t0 must be positive")
    ch, sh = math.cosh(kappa), math.sinh(kappa)
    jac_kick = np.array([[ch, -sh], [-sh, ch]])

    def _free(z: complex) -> complex:
        return z * np.exp(-0.5j * chi * t0 * (z * z.conjugate()).real)

    def _jac_free(z: complex) -> np.ndarray:
        theta = 0.5 * chi * t0 * abs(z) ** 2
        e = np.exp(-1j * theta)
        fz = e * (1.0 - 0.5j * chi * t0 * abs(z) ** 2)
        fzb = -0.5j * chi * t0 * z * z * e
        return np.array(
            [
                [(fz + fzb).real, (1j * (fz - fzb)).real],
                [(fz + fzb).imag, (1j * (fz - fzb)).imag],
            ]
        )

    def step(x):
        z = _free(complex(x[0], x[1]))
        zk = ch * z - 1j * sh * z.conjugate()
        return np.array([zk.real, zk.imag])

    def tangent(x, v):
        return jac_kick @ (_jac_free(complex(x[0], x[1])) @ v)

    return DynamicalModel(
        name="kerr_kick_cnumber",
        state_kind="classical_vector",
        variation_mode="direction",
        step=step,
        analytic_tangent=tangent,
        norm=lambda v: float(np.linalg.norm(v)),
        params={"chi": chi, "kappa": kappa, "t0": t0},
        dt=1.0,
        zero_state=np.zeros(2),
        initial_state=np.array([1.0, 0.0]),
    )


def classical_models(name: str, params: dict) -> DynamicalModel:
    """Build one of the classical baseline maps by name."""
    if name == "logistic":
        return logistic_model(params["r"])
    if name == "hyperbolic":
        return hyperbolic_model(params["kappa"], params.get("dt", 0.1))
    if name == "kerr_kick_cnumber":
        return kerr_kick_cnumber_model(params["chi"], params["kappa"], params["t0"])
    raise InvalidParam(f"unknown classical model {name!r}")


def diagonal_model(f: Callable, df: Callable, dim: int, name: str = "diagonal") -> DynamicalModel:
    """Abelian model: a scalar map acting entrywise on diagonal matrices.

    Directions must be diagonal as well; the tangent multiplies entrywise by
    the scalar derivative along the diagonal orbit.
    """

    def _validate(x) -> np.ndarray:
        x = as_operator(x)
        if spectral_norm(x - np.diag(np.diag(x))) > 1e-12 * max(spectral_norm(x), 1.0):
            raise InvalidState("diagonal model states must be diagonal")
        return x

    return DynamicalModel(
        name=name,
        state_kind="observable",
        variation_mode="direction",
        step=lambda x: np.diag(f(np.diag(x))),
        analytic_tangent=lambda x, y: np.diag(df(np.diag(x)) * np.diag(y)),
        norm=spectral_norm,
        params={"dim": dim},
        dt=1.0,
        validate_state=_validate,
        zero_state=np.zeros((dim, dim), dtype=complex),
    )


def build_model(name: str, params: dict, cutoff: Optional[int] = None,
                dt: Optional[float] = None, coupling=None) -> DynamicalModel:
    """Model registry used by the command-line layer.

    ``params`` holds real-valued model parameters; ``cutoff`` the Fock
    truncation where one is needed; ``dt`` the step (or dz for propagation
    in z); ``coupling`` an optional operator for models that take one.
    """
    p = dict(params)
    if coupling is not None and name != "hartree":
        raise InvalidParam(
            f"model {name!r} takes no coupling operator; the derivation "
            "generator is supplied through the direction argument"
        )
    if name == "contraction":
        return contraction_model(p.pop("lambda", p.pop("lam", None)), int(p.pop("dim", 2)))
    if name == "hartree":
        q = coupling if coupling is not None else SIGMA_Z
        return hartree_model(q, dt if dt is not None else p.pop("dt", 1.0))
    if name == "quadratic":
        return quadratic_model(int(p.pop("dim", 2)))
    if name == "two_level":
        cfg = FockConfig(cutoff if cutoff is not None else int(p.pop("cutoff", 16)))
        return two_level_field_model(
            p.pop("omega0", 1.0), p.pop("omega", 1.0), p.pop("lambda0", 0.2),
            cfg, dt if dt is not None else p.pop("dt", 0.05),
        )
    if name == "kicked_kerr":
        cfg = FockConfig(cutoff if cutoff is not None else int(p.pop("cutoff", 32)))
        t0 = p.pop("t0", 1.0)
        chi = p.pop("chi", None)
        if "mu" in p:
            chi = p.pop("mu") / t0
        if chi is None:
            raise InvalidParam("kicked_kerr needs chi or mu")
        return kicked_kerr_model(chi, p.pop("kappa", None), t0, p.pop("r", 1.0), cfg)
    if name == "squeezed":
        cfg = FockConfig(cutoff if cutoff is not None else int(p.pop("cutoff", 64)))
        return squeezed_light_model(p.pop("k", 0.4), cfg, dt if dt is not None else p.pop("dz", 0.25))
    if name in ("logistic", "hyperbolic", "kerr_kick_cnumber"):
        if dt is not None and name == "hyperbolic":
            p.setdefault("dt", dt)
        return classical_models(name, p)
    raise InvalidParam(f"unknown model {name!r}")


MODEL_NAMES = (
    "contraction", "hartree", "quadratic", "two_level",
    "kicked_kerr", "squeezed", "logistic", "hyperbolic", "kerr_kick_cnumber",
)
