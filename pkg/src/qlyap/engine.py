"""Exponent estimators built on tangent propagation along an orbit.

All estimators share one pipeline: propagate a derivative object along the
orbit, record log-growth per step, then extrapolate the per-step rate from
the tail of the sequence and attach a verdict.  Growth rates are reported in
inverse model time (the sequence a_n = log_norm / (n * dt)).

Extrapolation methods:

* ``trend`` (default): least-squares fit of log-norm against [1, ln n, n*dt]
  over the tail window; the coefficient of n*dt is the exponent and its
  regression standard error is the reported stderr.  The ln n regressor
  absorbs the polynomial prefactors that closed-form tangents exhibit, which
  a plain tail mean would fold into the rate at finite horizons.
* ``tail_mean``: mean of a_n over the tail window with its standard
  deviation as stderr.

Verdicts: Irregular needs both the fitted rate and the tail of a_n to clear
zero by two dispersion widths; Regular needs the fitted rate to be zero or
negative within the same band (an absolute tolerance of 1e-9 stands in for
zero); everything undecided is Inconclusive.  Zero directions, identically
vanishing derivations and norms that collapse below 1e-300 are NegInfinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidParam, InvalidState, NotHermitian, NumericalOverflow, DomainEscape
from .models import DynamicalModel
from .operators import as_operator, is_hermitian, validate_density_matrix

NEG_INF = float("-inf")
NORM_FLOOR = 1e-300
LOG_FLOOR = math.log(NORM_FLOOR)


@dataclass(frozen=True)
class EstimatorOptions:
    method: str = "trend"  # "trend" or "tail_mean"
    tail_fraction: float = 0.25
    min_points: int = 10
    tolerance: float = 1e-9
    fd_step: float = 1e-5
    richardson: bool = True

    def __post_init__(self):
        if self.method not in ("trend", "tail_mean"):
            raise InvalidParam(f"unknown extrapolation method {self.method!r}")
        if not (0.0 < self.tail_fraction <= 1.0):
            raise InvalidParam("tail_fraction must lie in (0, 1]")
        if self.min_points < 4:
            raise InvalidParam("min_points must be at least 4")
        if not (self.fd_step > 0.0):
            raise InvalidParam("fd_step must be positive")
        if not (self.tolerance >= 0.0):
            raise InvalidParam("tolerance must be nonnegative")


@dataclass
class ExponentEstimate:
    model: str
    method: str
    estimate: float
    stderr: Optional[float]
    verdict: str
    n: np.ndarray
    log_norms: np.ndarray
    a_n: np.ndarray
    dt: float
    warnings: List[str] = field(default_factory=list)

    @property
    def sequence(self) -> List[Tuple[int, float, float]]:
        return list(zip(self.n.tolist(), self.log_norms.tolist(), self.a_n.tolist()))


@dataclass
class AssumptionReport:
    c1_applicable: bool
    c1_bound: Optional[float]
    c2: float
    theta_holds: bool
    variability_C: float
    variability_holds: bool
    user_C: float
    horizon: int
    warnings: List[str] = field(default_factory=list)


def _tail_window(k: int, opts: EstimatorOptions) -> int:
    return min(k, max(opts.min_points, math.ceil(opts.tail_fraction * k)))


def _trend_fit(n: np.ndarray, log_norms: np.ndarray, dt: float) -> Tuple[float, float]:
    """Rate and standard error from the [1, ln n, n*dt] regression."""
    k = len(n)
    x = np.column_stack([np.ones(k), np.log(n), n * dt])
    mu = x[:, 1:].mean(axis=0)
    xc = x.copy()
    xc[:, 1:] -= mu
    scale = np.linalg.norm(xc, axis=0)
    scale[scale == 0.0] = 1.0
    xc = xc / scale
    beta, _, _, _ = np.linalg.lstsq(xc, log_norms, rcond=None)
    resid = log_norms - xc @ beta
    dof = max(k - 3, 1)
    s2 = float(resid @ resid) / dof
    gram_inv = np.linalg.pinv(xc.T @ xc)
    rate = float(beta[2] / scale[2])
    se = math.sqrt(max(s2 * gram_inv[2, 2], 0.0)) / scale[2]
    return rate, se


def _finish(
    model_name: str,
    dt: float,
    n_list: Sequence[int],
    log_list: Sequence[float],
    opts: EstimatorOptions,
    warnings: List[str],
    terminal_zero: bool = False,
    empty_verdict: str = "Inconclusive",
) -> ExponentEstimate:
    """Assemble the estimate from recorded (n, log-norm) pairs."""
    n = np.asarray(n_list, dtype=int)
    log_norms = np.asarray(log_list, dtype=float)
    a_n = log_norms / (n * dt) if len(n) else np.empty(0)

    def _build(estimate, stderr, verdict):
        return ExponentEstimate(
            model=model_name, method=opts.method, estimate=estimate,
            stderr=stderr, verdict=verdict, n=n, log_norms=log_norms,
            a_n=a_n, dt=dt, warnings=list(warnings),
        )

    if terminal_zero:
        return _build(NEG_INF, None, "NegInfinity")
    if len(n) == 0:
        return _build(float("nan"), None, empty_verdict)
    k = _tail_window(len(n), opts)
    tail_a = a_n[-k:]
    tail_mean = float(tail_a.mean())
    tail_sd = float(tail_a.std(ddof=1)) if k > 1 else 0.0
    if len(n) < opts.min_points:
        return _build(tail_mean, None, "Inconclusive")
    if opts.method == "tail_mean":
        estimate, stderr = tail_mean, tail_sd
    else:
        estimate, stderr = _trend_fit(n[-k:], log_norms[-k:], dt)
    tol = opts.tolerance
    if estimate - 2.0 * stderr > tol and tail_mean - 2.0 * tail_sd > tol:
        verdict = "Irregular"
    elif estimate + 2.0 * stderr <= tol:
        verdict = "Regular"
    else:
        verdict = "Inconclusive"
    return _build(estimate, stderr, verdict)


class _TailWatch:
    """Tracks truncation-tail weight growth along an orbit."""

    def __init__(self, model: DynamicalModel, warnings: List[str]):
        self.monitor = model.tail_monitor
        self.tol = model.tail_tolerance
        self.base: Optional[float] = None
        self.fired = False
        self.warnings = warnings

    def observe(self, *states) -> None:
        if self.monitor is None or self.fired:
            return
        w = max(self.monitor(s) for s in states)
        if self.base is None:
            self.base = w
        elif w - self.base > self.tol:
            self.warnings.append(
                f"CutoffExceeded: truncation-tail weight grew from "
                f"{self.base:.3e} to {w:.3e}"
            )
            self.fired = True


def _fd_scale(opts: EstimatorOptions, ref: float) -> float:
    return opts.fd_step * max(1.0, ref)


def _orbit_difference_lognorms(
    model: DynamicalModel,
    x: np.ndarray,
    y: np.ndarray,
    n_max: int,
    opts: EstimatorOptions,
    warnings: List[str],
) -> Tuple[List[int], List[float], bool]:
    """log ||D τ^n (y)|| by central differences of whole orbits."""
    ny = model.norm(y)
    h = _fd_scale(opts, model.norm(x)) / ny
    steps = [h, h / 2.0] if opts.richardson else [h]
    orbits = [(x + s * y, x - s * y) for s in steps]
    watch = _TailWatch(model, warnings)
    ns: List[int] = []
    logs: List[float] = []
    worst = 0.0
    for n in range(1, n_max + 1):
        orbits = [(model.step(p), model.step(m)) for p, m in orbits]
        if not all(np.all(np.isfinite(np.asarray(p))) and np.all(np.isfinite(np.asarray(m)))
                   for p, m in orbits):
            warnings.append(f"NumericalOverflow: orbit overflow at n={n}; sequence truncated")
            break
        with np.errstate(over="ignore", invalid="ignore"):
            d = [(p - m) / (2.0 * s) for (p, m), s in zip(orbits, steps)]
            v = (4.0 * d[1] - d[0]) / 3.0 if opts.richardson else d[0]
        if not np.all(np.isfinite(np.asarray(v))):
            # orbits still representable but their difference quotient is not
            warnings.append(f"NumericalOverflow: difference overflow at n={n}; sequence truncated")
            break
        if opts.richardson:
            ref = model.norm(d[1])
            worst = max(worst, model.norm(d[0] - d[1]) / max(ref, NORM_FLOOR))
        watch.observe(orbits[0][0])
        nv = model.norm(v)
        if not math.isfinite(nv):
            warnings.append(f"NumericalOverflow: difference overflow at n={n}; sequence truncated")
            break
        if nv < NORM_FLOOR:
            return ns, logs, True
        ns.append(n)
        logs.append(math.log(nv))
    if opts.richardson and worst > 1e-3:
        warnings.append(
            f"SlowConvergence: finite-difference levels disagree by {worst:.2e}"
        )
    return ns, logs, False


def _tangent_lognorms(
    model: DynamicalModel,
    x: np.ndarray,
    y: np.ndarray,
    n_max: int,
    warnings: List[str],
    functional: Optional[Callable[[np.ndarray], complex]] = None,
) -> Tuple[List[int], List[float], bool]:
    """Renormalized analytic-tangent propagation.

    Returns (n values, log values, terminal_zero).  With a functional, the
    recorded value at n is log|functional(v_n)| and sub-floor points are
    excluded rather than terminal.
    """
    tangent = model.analytic_tangent
    norm = model.norm
    watch = _TailWatch(model, warnings)
    xk = x
    ny = norm(y)
    vhat = np.asarray(y) / ny
    acc = math.log(ny)
    ns: List[int] = []
    logs: List[float] = []
    excluded = 0
    for n in range(1, n_max + 1):
        v = tangent(xk, vhat)
        xk = model.step(xk)
        nv = norm(v)
        if not math.isfinite(nv):
            warnings.append(f"NumericalOverflow: tangent overflow at n={n}; sequence truncated")
            break
        if nv < NORM_FLOOR:
            return ns, logs, True
        acc += math.log(nv)
        vhat = v / nv
        watch.observe(xk, vhat)
        if functional is None:
            ns.append(n)
            logs.append(acc)
        else:
            t = abs(complex(functional(vhat)))
            value = acc + math.log(t) if t > 0.0 else NEG_INF
            if value < LOG_FLOOR:
                excluded += 1
            else:
                ns.append(n)
                logs.append(value)
    if excluded:
        warnings.append(f"{excluded} points excluded by the 1e-300 functional floor")
    return ns, logs, False


def iterated_tangent(
    model: DynamicalModel,
    x,
    y,
    n: int,
    mode: str = "auto",
    fd_step: float = 1e-5,
    richardson: bool = True,
):
    """The directional derivative of the n-fold composed map, as an array.

    ``mode`` picks the analytic chain rule ("analytic"), central finite
    differences of whole orbits ("fd"), or whichever is available ("auto").
    """
    if n < 1:
        raise InvalidParam("n must be >= 1")
    x = model.coerce_state(x)
    y = np.asarray(y)
    if mode == "auto":
        mode = "analytic" if model.analytic_tangent is not None else "fd"
    if mode == "analytic":
        if model.analytic_tangent is None:
            raise InvalidParam("model has no analytic tangent")
        v = y
        xk = x
        for k in range(1, n + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                v = model.analytic_tangent(xk, v)
                xk = model.step(xk)
            if not np.all(np.isfinite(np.asarray(v))):
                raise NumericalOverflow("tangent propagation overflowed", last_finite_n=k - 1)
        return v
    if mode != "fd":
        raise InvalidParam(f"unknown tangent mode {mode!r}")
    ny = model.norm(y)
    if ny < NORM_FLOOR:
        return np.zeros_like(y)
    h = fd_step * max(1.0, model.norm(x)) / ny
    steps = [h, h / 2.0] if richardson else [h]
    diffs = []
    for s in steps:
        p, m = x + s * y, x - s * y
        for k in range(1, n + 1):
            p, m = model.step(p), model.step(m)
            if not (np.all(np.isfinite(np.asarray(p))) and np.all(np.isfinite(np.asarray(m)))):
                raise NumericalOverflow("orbit propagation overflowed", last_finite_n=k - 1)
        diffs.append((p - m) / (2.0 * s))
    return (4.0 * diffs[1] - diffs[0]) / 3.0 if richardson else diffs[0]


def lyapunov_q(
    model: DynamicalModel,
    x,
    y,
    n_max: int = 200,
    options: Optional[EstimatorOptions] = None,
) -> ExponentEstimate:
    """Largest-direction exponent from the growth of D τ^n (y)."""
    opts = options or EstimatorOptions()
    if n_max < 1:
        raise InvalidParam("n_max must be >= 1")
    x = model.coerce_state(x)
    y = np.asarray(y)
    warnings: List[str] = []
    if model.norm(y) < NORM_FLOOR:
        warnings.append("zero direction")
        return _finish(model.name, model.dt, [], [], opts, warnings, terminal_zero=True)
    if model.analytic_tangent is not None:
        ns, logs, terminal = _tangent_lognorms(model, x, y, n_max, warnings)
    else:
        ns, logs, terminal = _orbit_difference_lognorms(model, x, y, n_max, opts, warnings)
    return _finish(model.name, model.dt, ns, logs, opts, warnings, terminal_zero=terminal)


def lyapunov_q_state(
    model: DynamicalModel,
    x,
    y,
    mu,
    n_max: int = 200,
    options: Optional[EstimatorOptions] = None,
) -> ExponentEstimate:
    """State-functional exponent: growth of |tr(mu · D τ^n (y))|.

    mu must be a density matrix on the model's space; points whose
    functional value falls below the 1e-300 floor are excluded, and an
    entirely excluded sequence is Inconclusive.
    """
    opts = options or EstimatorOptions()
    mu = validate_density_matrix(mu)
    x = model.coerce_state(x)
    y = np.asarray(y)
    if mu.shape != np.asarray(x).shape:
        raise InvalidState("state functional has the wrong dimension")
    if model.analytic_tangent is None:
        raise InvalidParam("state-functional estimation needs an analytic tangent")
    warnings: List[str] = []
    if model.norm(y) < NORM_FLOOR:
        warnings.append("zero direction")
        return _finish(model.name, model.dt, [], [], opts, warnings, terminal_zero=True)
    functional = lambda v: np.trace(mu @ v)
    ns, logs, terminal = _tangent_lognorms(model, x, y, n_max, warnings, functional=functional)
    return _finish(model.name, model.dt, ns, logs, opts, warnings, terminal_zero=terminal)


def lyapunov_q_derivation(
    model: DynamicalModel,
    x,
    k,
    n_max: int = 200,
    options: Optional[EstimatorOptions] = None,
) -> ExponentEstimate:
    """Derivation exponent: growth of ||i [k, τ^n(x)]|| along the orbit."""
    opts = options or EstimatorOptions()
    k = as_operator(k)
    if not is_hermitian(k):
        raise NotHermitian("derivation generator must be Hermitian")
    x = model.coerce_state(x)
    if np.asarray(x).ndim != 2 or np.asarray(x).shape[0] != np.asarray(x).shape[1]:
        raise InvalidParam("derivation estimation needs a square-operator state")
    if k.shape != np.asarray(x).shape:
        raise InvalidParam("generator dimension does not match the state")
    warnings: List[str] = []
    watch = _TailWatch(model, warnings)
    xk = x
    ns: List[int] = []
    logs: List[float] = []
    zero_points = 0
    for n in range(1, n_max + 1):
        xk = model.step(xk)
        comm = 1j * (k @ xk - xk @ k)
        nv = model.norm(comm)
        if not math.isfinite(nv):
            warnings.append(f"NumericalOverflow: orbit overflow at n={n}; sequence truncated")
            break
        watch.observe(xk)
        if nv < NORM_FLOOR:
            zero_points += 1
            continue
        ns.append(n)
        logs.append(math.log(nv))
    if zero_points and not ns:
        warnings.append("ZeroDerivation: generator commutes with the whole orbit")
        return _finish(model.name, model.dt, [], [], opts, warnings, terminal_zero=True)
    if zero_points:
        warnings.append(f"{zero_points} points excluded by the 1e-300 norm floor")
    return _finish(model.name, model.dt, ns, logs, opts, warnings)


def lyapunov_param(
    model: DynamicalModel,
    eps0: float,
    n_max: int = 200,
    options: Optional[EstimatorOptions] = None,
) -> ExponentEstimate:
    """Parameter-variation exponent: growth of the eps-derivative of the orbit.

    The derivative is analytic when the model provides one for its observable
    family, otherwise a central difference in eps (with one Richardson level)
    across perturbed orbits.
    """
    opts = options or EstimatorOptions()
    if model.variation_mode != "parameter":
        raise InvalidParam("model does not define a variation parameter")
    eps0 = float(eps0)
    warnings: List[str] = []
    watch = _TailWatch(model, warnings)
    ns: List[int] = []
    logs: List[float] = []
    terminal = False

    if model.param_observable_derivative is not None and model.param_initial_state is None:
        s = model.initial_state
        for n in range(1, n_max + 1):
            s = model.step(s)
            v = model.param_observable_derivative(s, eps0)
            nv = model.norm(v)
            if not math.isfinite(nv):
                warnings.append(f"NumericalOverflow: overflow at n={n}; sequence truncated")
                break
            watch.observe(s)
            if nv < NORM_FLOOR:
                terminal = True
                break
            ns.append(n)
            logs.append(math.log(nv))
        return _finish(model.name, model.dt, ns, logs, opts, warnings, terminal_zero=terminal)

    if model.param_initial_state is None:
        raise InvalidParam("model supplies no parameter-variation structure")
    observe = model.param_observable or (lambda s, e: s)
    h = _fd_scale(opts, abs(eps0))
    steps = [h, h / 2.0] if opts.richardson else [h]
    orbits = [(model.param_initial_state(eps0 + s), model.param_initial_state(eps0 - s))
              for s in steps]
    worst = 0.0
    for n in range(1, n_max + 1):
        orbits = [(model.step(p), model.step(m)) for p, m in orbits]
        if not all(np.all(np.isfinite(p)) and np.all(np.isfinite(m)) for p, m in orbits):
            warnings.append(f"NumericalOverflow: orbit overflow at n={n}; sequence truncated")
            break
        with np.errstate(over="ignore", invalid="ignore"):
            d = [(observe(p, eps0 + s) - observe(m, eps0 - s)) / (2.0 * s)
                 for (p, m), s in zip(orbits, steps)]
            v = (4.0 * d[1] - d[0]) / 3.0 if opts.richardson else d[0]
        if not np.all(np.isfinite(np.asarray(v))):
            warnings.append(f"NumericalOverflow: difference overflow at n={n}; sequence truncated")
            break
        if opts.richardson:
            worst = max(worst, model.norm(d[0] - d[1]) / max(model.norm(d[1]), NORM_FLOOR))
        watch.observe(orbits[0][0])
        nv = model.norm(v)
        if not math.isfinite(nv):
            warnings.append(f"NumericalOverflow: difference overflow at n={n}; sequence truncated")
            break
        if nv < NORM_FLOOR:
            terminal = True
            break
        ns.append(n)
        logs.append(math.log(nv))
    if opts.richardson and worst > 1e-3:
        warnings.append(f"SlowConvergence: finite-difference levels disagree by {worst:.2e}")
    return _finish(model.name, model.dt, ns, logs, opts, warnings, terminal_zero=terminal)


def classical_lyapunov(
    model: DynamicalModel,
    x0,
    v0,
    n_max: int = 1000,
    options: Optional[EstimatorOptions] = None,
) -> ExponentEstimate:
    """Classical largest exponent by renormalized tangent propagation."""
    opts = options or EstimatorOptions()
    if model.state_kind != "classical_vector":
        raise InvalidParam("classical estimation needs a classical_vector model")
    x0 = model.coerce_state(x0)
    v0 = np.asarray(v0, dtype=float)
    warnings: List[str] = []
    if model.norm(v0) < NORM_FLOOR:
        warnings.append("zero direction")
        return _finish(model.name, model.dt, [], [], opts, warnings, terminal_zero=True)
    xk = x0
    vhat = v0 / model.norm(v0)
    acc = math.log(model.norm(v0))
    ns: List[int] = []
    logs: List[float] = []
    terminal = False
    # A float orbit converging to a superstable point parks one ulp away,
    # so the per-step factor saturates near machine epsilon instead of
    # reaching zero; treat factors this small as a derivative collapse.
    superstable_floor = 1e-12
    for n in range(1, n_max + 1):
        v = model.analytic_tangent(xk, vhat)
        xk = model.step(xk)
        if model.domain_check is not None and not model.domain_check(xk):
            raise DomainEscape(f"orbit left the domain at n={n}")
        nv = model.norm(v)
        if not math.isfinite(nv):
            warnings.append(f"NumericalOverflow: tangent overflow at n={n}; sequence truncated")
            break
        if nv < superstable_floor:
            terminal = True
            warnings.append(f"per-step factor {nv:.3e} below the superstable floor at n={n}")
            break
        acc += math.log(nv)
        vhat = v / nv
        ns.append(n)
        logs.append(acc)
    return _finish(model.name, model.dt, ns, logs, opts, warnings, terminal_zero=terminal)


def check_assumptions(
    model: DynamicalModel,
    x,
    y,
    n_max: int = 100,
    user_C: float = 1.0,
) -> AssumptionReport:
    """Finite-horizon growth-bound observations backing the exponent limit.

    Reports the orbit bound from the zero state (when the model admits one),
    the least linear-growth constant observed for the orbit of x, and a
    least-squares per-step growth factor for the tangent along (x, y) with a
    flag for whether it exceeds user_C.  All statements are "observed up to
    the horizon", never asymptotic claims.
    """
    x = model.coerce_state(x)
    y = np.asarray(y)
    warnings: List[str] = []

    c1_applicable = model.zero_state is not None
    c1_bound: Optional[float] = None
    zero_norms = np.zeros(n_max)
    if c1_applicable:
        zk = model.zero_state
        vals = []
        for _ in range(n_max):
            zk = model.step(zk)
            vals.append(model.norm(zk))
        zero_norms = np.asarray(vals)
        c1_bound = float(zero_norms.max()) if n_max else 0.0

    nx = model.norm(x)
    xk = x
    horizon = n_max
    c2 = 0.0
    for l in range(n_max):
        xk = model.step(xk)
        s = model.norm(xk)
        if not math.isfinite(s):
            warnings.append(f"NumericalOverflow: orbit overflow at l={l + 1}; horizon truncated")
            horizon = l
            break
        if nx > 0.0:
            c2 = max(c2, (s - zero_norms[l]) / nx)
    theta_holds = horizon > 0
    c2 = max(c2, 0.0)

    ns, logs, terminal = _tangent_lognorms(model, x, y, horizon, warnings) \
        if model.analytic_tangent is not None else \
        _orbit_difference_lognorms(model, x, y, horizon, EstimatorOptions(), warnings)
    if terminal or len(ns) < 2:
        slope = NEG_INF
    else:
        k = np.asarray(ns, dtype=float)
        g = np.asarray(logs)
        slope = float(np.polyfit(k, g, 1)[0])
    fitted_c = math.exp(slope) if slope != NEG_INF else 0.0
    return AssumptionReport(
        c1_applicable=c1_applicable,
        c1_bound=c1_bound,
        c2=c2,
        theta_holds=theta_holds,
        variability_C=fitted_c,
        variability_holds=fitted_c > user_C,
        user_C=user_C,
        horizon=horizon,
        warnings=warnings,
    )


def ks_entropy_sum(exponents: Sequence[float]) -> float:
    """Sum of the nonnegative entries (zero for an empty list)."""
    return float(sum(e for e in exponents if e >= 0.0))
