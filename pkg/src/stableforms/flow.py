"""Evolution of invariant 3-forms whose lift to ``G x I`` is a (nearly) parallel G2-structure.

Nearly parallel mode evolves ``phi`` by

    phidot = d pi(phi) + lam * hat(phi),   pi(phi) = -hat(-(1/lam) d phi),

so the family ``(pi(phi_t), phi_t)`` satisfies ``d psi = lam * psi``; the
SU(3) conditions are preserved by the flow and only monitored here.
Half-flat mode evolves ``(phi, sigma = omega^2 / 2)`` by
``phidot = d omega``, ``sigmadot = -d hat(phi)`` with ``omega = -hat(sigma)``.

The same nearly parallel vector field is the Hamiltonian field of
``H = 2 lam (eps(phi) - eps(pi(phi)))`` for the pairing ``(a, b) -> a ^ b``;
:func:`hamiltonian_field` computes it that way, from finite differences of H.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .exterior import Form, FormError, pairing_matrix, top_scalar, wedge
from .g2 import d7_psi, d7_star_psi, nearly_parallel_residual
from .hitchin import DEFAULT_TOL, StabilityError, StableClass, classify, eps2, eps3, hat
from .lie import LieAlgebra
from .su3 import assemble, pi_map

log = logging.getLogger(__name__)


class FlowError(RuntimeError):
    def __init__(self, message: str, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.trajectory = trajectory


class _NonFinite(Exception):
    pass


class FlowConfigError(ValueError):
    pass


class NonUnimodularError(ValueError):
    pass


class FlowMode(enum.Enum):
    NEARLY_PARALLEL = "nearly-parallel"
    HALF_FLAT = "half-flat"


class Termination(enum.Enum):
    COMPLETED = "Completed"
    STABILITY_LOST = "StabilityLost"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass(frozen=True)
class FlowConfig:
    lam: float
    step: float
    t_end: float
    mode: FlowMode = FlowMode.NEARLY_PARALLEL
    monitor_every: int = 1
    stability_tol: float = DEFAULT_TOL
    precondition_tol: float = 1e-9

    def __post_init__(self):
        if not isinstance(self.mode, FlowMode):
            object.__setattr__(self, "mode", FlowMode(self.mode))
        if not (math.isfinite(self.step) and self.step > 0):
            raise FlowConfigError(f"step must be a positive finite number, got {self.step}")
        if not math.isfinite(self.t_end):
            raise FlowConfigError(f"t_end must be finite, got {self.t_end}")
        if not math.isfinite(self.lam):
            raise FlowConfigError(f"lambda must be finite, got {self.lam}")
        if self.mode is FlowMode.NEARLY_PARALLEL and self.lam == 0:
            raise FlowConfigError("lambda must be nonzero in nearly-parallel mode")
        if not (isinstance(self.monitor_every, int) and self.monitor_every >= 1):
            raise FlowConfigError(f"monitor_every must be a positive integer, got {self.monitor_every!r}")


@dataclass(frozen=True)
class FlowState:
    t: float
    phi: Form
    # only used in half-flat mode
    sigma: Form | None = None


@dataclass(frozen=True)
class Diagnostics:
    t: float
    c1: float
    c2: float
    c3: float
    eps_phi: float
    eps_omega: float
    H: float
    dH_dt: float
    closure: float


@dataclass
class Trajectory:
    states: list[FlowState] = field(default_factory=list)
    diagnostics: list[Diagnostics] = field(default_factory=list)
    termination: Termination = Termination.COMPLETED
    message: str = ""

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def max_drift(self) -> dict[str, float]:
        return {c: max(getattr(d, c) for d in self.diagnostics) for c in ("c1", "c2", "c3")}


# ---------------------------------------------------------------------------
# right-hand sides


def rhs_nearly_parallel(L: LieAlgebra, phi: Form, lam: float, tol: float = DEFAULT_TOL) -> Form:
    """``d pi(phi) + lam * hat(phi)``."""
    omega = pi_map(L, phi, lam, tol)
    return L.d(omega) + lam * hat(phi, tol)


def check_half_flat(L: LieAlgebra, phi: Form, sigma: Form, tol: float = 1e-9) -> None:
    if classify(phi) is not StableClass.POSITIVE3:
        raise StabilityError("phi is not a Positive3 form")
    if classify(sigma) is not StableClass.STABLE4:
        raise StabilityError("sigma is not a stable 4-form")
    dphi = L.d(phi).norm()
    if dphi > tol * max(1.0, phi.norm()):
        raise ValueError(f"half-flat flow needs d phi = 0, got ||d phi|| = {dphi:.3e}")
    dsigma = L.d(sigma).norm()
    if dsigma > tol * max(1.0, sigma.norm()):
        raise ValueError(f"half-flat flow needs d(omega^2) = 0, got ||d sigma|| = {dsigma:.3e}")


def rhs_half_flat(L: LieAlgebra, phi: Form, sigma: Form, check: bool = False, tol: float = 1e-9) -> tuple[Form, Form]:
    """``(d omega, -d hat(phi))`` with ``omega = -hat(sigma)``."""
    if check:
        check_half_flat(L, phi, sigma, tol)
    omega = -hat(sigma)
    return L.d(omega), -L.d(hat(phi))


# ---------------------------------------------------------------------------
# Hamiltonian formulation


def _require_unimodular(L: LieAlgebra) -> None:
    if not L.is_unimodular():
        raise NonUnimodularError(
            f"{L!r} is not unimodular: invariant exact top forms need not integrate to zero, "
            "so the Hamiltonian description does not apply"
        )


def hamiltonian(L: LieAlgebra, phi: Form, lam: float) -> float:
    """``2 lam (eps(phi) - eps(pi(phi)))`` per unit volume."""
    _require_unimodular(L)
    return 2.0 * lam * (eps3(phi) - eps2(pi_map(L, phi, lam)))


def symplectic_pairing(a: Form, b: Form) -> float:
    for f in (a, b):
        if f.dim != 6 or f.degree != 3:
            raise FormError(f"pairing is defined on 3-forms on R^6, got a {f.degree}-form on R^{f.dim}")
    return top_scalar(wedge(a, b))


def hamiltonian_gradient(L: LieAlgebra, phi: Form, lam: float, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of H over the 20 coefficients."""
    _require_unimodular(L)
    h = rel_step * max(phi.norm(), np.finfo(float).tiny)
    grad = np.empty(20)
    for i, unit in enumerate(np.eye(20)):
        du = Form(6, 3, h * unit)
        grad[i] = (hamiltonian(L, phi + du, lam) - hamiltonian(L, phi - du, lam)) / (2.0 * h)
    return grad


def hamiltonian_field(L: LieAlgebra, phi: Form, lam: float, rel_step: float = 1e-6) -> Form:
    """The X with ``Omega(X, .) = DH``, where ``Omega(a, b) = a ^ b``."""
    grad = hamiltonian_gradient(L, phi, lam, rel_step)
    P = pairing_matrix(6, 3)
    # Omega(X, Y) = X^T P Y, so DH = P^T X
    if abs(np.linalg.det(P)) < 0.5:
        raise FlowError("internal error: singular pairing matrix")
    return Form(6, 3, np.linalg.solve(P.T, grad))


def hamiltonian_rate(L: LieAlgebra, phi: Form, omega: Form, lam: float, phidot: Form) -> float:
    """``DH(phidot) = (lam hat(phi) ^ phidot - omega ^ d phidot)`` with ``omega = pi(phi)``."""
    return top_scalar(lam * wedge(hat(phi), phidot) - wedge(omega, L.d(phidot)))


# ---------------------------------------------------------------------------
# integration


def _diagnose(L: LieAlgebra, state: FlowState, config: FlowConfig, unimodular: bool) -> Diagnostics:
    phi, lam = state.phi, config.lam
    if config.mode is FlowMode.NEARLY_PARALLEL:
        omega = pi_map(L, phi, lam, config.stability_tol)
        c1 = (L.d(phi) + (lam / 2.0) * wedge(omega, omega)).norm()
        phidot = rhs_nearly_parallel(L, phi, lam, config.stability_tol)
        s = assemble(omega, phi)
        closure = nearly_parallel_residual(L, s, phidot, lam)
        H = hamiltonian(L, phi, lam) if unimodular else math.nan
        dH = hamiltonian_rate(L, phi, omega, lam, phidot) if unimodular else math.nan
    else:
        omega = -hat(state.sigma)
        c1 = max(L.d(phi).norm(), L.d(state.sigma).norm())
        phidot, sigmadot = rhs_half_flat(L, phi, state.sigma)
        s = assemble(omega, phi)
        closure = math.hypot(d7_psi(L, omega, phi, phidot).norm(), d7_star_psi(L, s, sigmadot=sigmadot).norm())
        H = dH = math.nan
    c2 = wedge(omega, phi).norm()
    e_phi, e_omega = eps3(phi), eps2(omega)
    return Diagnostics(state.t, c1, c2, abs(e_phi - e_omega), e_phi, e_omega, H, dH, closure)


def _pack(state: FlowState, mode: FlowMode) -> np.ndarray:
    if mode is FlowMode.NEARLY_PARALLEL:
        return np.array(state.phi.coeffs)
    return np.concatenate([state.phi.coeffs, state.sigma.coeffs])


def _unpack(t: float, y: np.ndarray, mode: FlowMode) -> FlowState:
    if mode is FlowMode.NEARLY_PARALLEL:
        return FlowState(t, Form(6, 3, y))
    return FlowState(t, Form(6, 3, y[:20]), Form(6, 4, y[20:]))


def _stable(state: FlowState, config: FlowConfig, L: LieAlgebra) -> str | None:
    tol = config.stability_tol
    if classify(state.phi, tol) is not StableClass.POSITIVE3:
        return "phi left the Positive3 orbit"
    sigma = state.sigma if config.mode is FlowMode.HALF_FLAT else L.d(state.phi) * (-1.0 / config.lam)
    if classify(sigma, tol) is not StableClass.STABLE4:
        return "sigma = -(1/lambda) d phi is no longer stable" if config.mode is FlowMode.NEARLY_PARALLEL else "sigma is no longer stable"
    return None


def integrate(L: LieAlgebra, state0: FlowState, config: FlowConfig) -> Trajectory:
    """Classical fixed-step RK4 from ``state0.t`` to ``config.t_end`` (either direction).

    States (each with its diagnostics) are emitted at the start, every
    ``monitor_every`` steps and at the end.  Leaving the stable domain ends the run with ``StabilityLost`` and
    the partial trajectory; non-finite values raise :class:`FlowError`.
    """
    mode = config.mode
    if mode is FlowMode.HALF_FLAT:
        if state0.sigma is None:
            raise FlowConfigError("half-flat mode needs an initial sigma")
        check_half_flat(L, state0.phi, state0.sigma, config.precondition_tol)
    else:
        why = _stable(state0, config, L)
        if why:
            raise StabilityError(f"initial state is outside the flow domain: {why}")
    unimodular = L.is_unimodular()

    def f(t: float, y: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(y)):
            raise _NonFinite()
        st = _unpack(t, y, mode)
        if mode is FlowMode.NEARLY_PARALLEL:
            out = rhs_nearly_parallel(L, st.phi, config.lam, config.stability_tol).coeffs
        else:
            a, b = rhs_half_flat(L, st.phi, st.sigma)
            out = np.concatenate([a.coeffs, b.coeffs])
        if not np.all(np.isfinite(out)):
            raise _NonFinite()
        return out

    t0 = float(state0.t)
    span = config.t_end - t0
    n_steps = int(math.ceil(abs(span) / config.step - 1e-9)) if span else 0
    traj = Trajectory()
    traj.states.append(state0)
    traj.diagnostics.append(_diagnose(L, state0, config, unimodular))
    y = _pack(state0, mode)
    t = t0
    for k in range(1, n_steps + 1):
        t_next = config.t_end if k == n_steps else t0 + k * math.copysign(config.step, span)
        h = t_next - t
        if t + h == t:
            traj.termination = Termination.STEP_UNDERFLOW
            traj.message = f"step underflow at t = {t}"
            break
        try:
            k1 = f(t, y)
            k2 = f(t + h / 2, y + h / 2 * k1)
            k3 = f(t + h / 2, y + h / 2 * k2)
            k4 = f(t + h, y + h * k3)
        except StabilityError as exc:
            traj.termination = Termination.STABILITY_LOST
            traj.message = f"at t = {t}: {exc}"
            break
        except _NonFinite:
            raise FlowError(f"non-finite value in the step to t = {t_next}; last good t = {t}", traj) from None
        y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y_new)):
            raise FlowError(f"non-finite state after step to t = {t_next}; last good t = {t}", traj)
        state = _unpack(t_next, y_new, mode)
        why = _stable(state, config, L)
        if why:
            traj.termination = Termination.STABILITY_LOST
            traj.message = f"at t = {t_next}: {why}"
            break
        y, t = y_new, t_next
        if k % config.monitor_every == 0 or k == n_steps:
            traj.states.append(state)
            traj.diagnostics.append(_diagnose(L, state, config, unimodular))
    if traj.termination is not Termination.COMPLETED:
        log.info("flow stopped early: %s", traj.message)
    return traj


def step_halving_check(L: LieAlgebra, state0: FlowState, config: FlowConfig) -> float:
    """Relative difference of the end states at ``step`` and ``step / 2``; a crude error estimate."""
    a = integrate(L, state0, config)
    b = integrate(L, state0, replace(config, step=config.step / 2))
    ya, yb = _pack(a.states[-1], config.mode), _pack(b.states[-1], config.mode)
    return float(np.linalg.norm(ya - yb) / np.linalg.norm(yb))
