"""SU(3)-structures as compatible pairs of stable forms, torsion classes and the pi map."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exterior import Form, FormError, form_matrix, wedge
from .hitchin import (
    DEFAULT_TOL,
    StabilityError,
    StableClass,
    classify,
    complex_structure,
    eps2,
    eps3,
    hat,
)
from .lie import LieAlgebra


class SU3Error(ValueError):
    """A pair of forms failed one of the SU(3) compatibility conditions."""

    def __init__(self, condition: str, residual: float, message: str):
        super().__init__(f"condition {condition} failed: {message} (residual {residual:.3e})")
        self.condition = condition
        self.residual = residual


@dataclass(frozen=True)
class SU3Structure:
    omega: Form
    phi: Form
    phihat: Form
    I: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    eps: float


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    residual: float
    detail: str = ""


def check_su3(omega: Form, phi: Form, tol: float = 1e-9) -> list[ConditionCheck]:
    """Evaluate stability and conditions (I)-(III) without raising.

    Residuals: (I) the smallest eigenvalue of the symmetrised metric, relative
    to its norm; (II) ``||omega ^ phi||`` relative to ``||omega|| ||phi||``;
    (III) ``|eps(phi) - eps(omega)| / |eps(omega)|``.
    """
    for f, deg in ((omega, 2), (phi, 3)):
        if f.dim != 6 or f.degree != deg:
            raise FormError(f"expected a {deg}-form on R^6, got a {f.degree}-form on R^{f.dim}")
    checks = []
    k_omega = classify(omega)
    k_phi = classify(phi)
    checks.append(ConditionCheck("stable-omega", k_omega is StableClass.SYMPLECTIC2, abs(eps2(omega)), k_omega.value))
    lam_ok = k_phi is StableClass.POSITIVE3
    checks.append(ConditionCheck("stable-phi", lam_ok, 0.0, k_phi.value))
    if not (checks[0].passed and lam_ok):
        return checks

    I = complex_structure(phi)
    g = form_matrix(omega) @ I
    gsym = 0.5 * (g + g.T)
    gnorm = float(np.linalg.norm(g))
    min_eig = float(np.linalg.eigvalsh(gsym).min())
    checks.append(ConditionCheck("I", min_eig > tol * gnorm, min_eig / gnorm, "min eigenvalue of omega(., I .)"))

    wp = wedge(omega, phi).norm() / (omega.norm() * phi.norm())
    asym = float(np.linalg.norm(g - g.T)) / gnorm
    checks.append(ConditionCheck("II", wp <= tol, wp, f"omega(., I .) asymmetry {asym:.3e}"))

    e_w, e_p = eps2(omega), eps3(phi)
    rel = abs(e_p - e_w) / abs(e_w)
    checks.append(ConditionCheck("III", rel <= tol, rel, f"eps(phi) = {e_p:.12g}, eps(omega) = {e_w:.12g}"))
    return checks


def validate(omega: Form, phi: Form, tol: float = 1e-9) -> SU3Structure:
    """Build the SU(3)-structure of a compatible pair, or raise SU3Error naming the failed condition."""
    for c in check_su3(omega, phi, tol):
        if not c.passed:
            raise SU3Error(c.name, c.residual, c.detail)
    I = complex_structure(phi)
    g = form_matrix(omega) @ I
    return SU3Structure(
        omega=omega,
        phi=phi,
        phihat=hat(phi),
        I=I,
        g=0.5 * (g + g.T),
        eps=eps2(omega),
    )


def assemble(omega: Form, phi: Form) -> SU3Structure:
    """Derived data of a pair without checking (II)/(III); phi must still be Positive3.

    Used along flows, where compatibility is monitored rather than enforced.
    """
    I = complex_structure(phi)
    g = form_matrix(omega) @ I
    return SU3Structure(omega, phi, hat(phi), I, 0.5 * (g + g.T), eps2(omega))


# ---------------------------------------------------------------------------
# torsion


class TorsionTag(enum.Enum):
    NEARLY_KAEHLER = "NearlyKaehler"
    HALF_FLAT = "HalfFlat"
    NEARLY_HALF_FLAT = "NearlyHalfFlat"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class TorsionClass:
    tag: TorsionTag
    residuals: dict
    nearly_kaehler: bool
    half_flat: bool
    nearly_half_flat: bool
    # constant in d phi + lambda_def omega^2 = 0
    lambda_def: float | None = None

    @property
    def lambda_g2(self) -> float | None:
        """G2 constant with ``d psi = lambda_g2 * psi`` on the lift, i.e. ``d phi = -(lambda_g2 / 2) omega^2``."""
        return None if self.lambda_def is None else 2.0 * self.lambda_def


def fit_nearly_half_flat(L: LieAlgebra, omega: Form, phi: Form) -> tuple[float, float]:
    """Least-squares ``lambda_def`` minimising ``||d phi + lambda_def omega^2||`` and the residual."""
    dphi = L.d(phi).coeffs
    w2 = wedge(omega, omega).coeffs
    lam = -float(dphi @ w2) / float(w2 @ w2)
    return lam, float(np.linalg.norm(dphi + lam * w2))


def classify_torsion(L: LieAlgebra, s: SU3Structure, tol: float = 1e-9) -> TorsionClass:
    """Test the nearly-Kaehler, half-flat and nearly half-flat equations, most specific first."""
    omega, phi, phihat = s.omega, s.phi, s.phihat
    w2 = wedge(omega, omega)
    res = {
        "nk_domega_minus_3phi": (L.d(omega) - 3.0 * phi).norm(),
        "nk_dphihat_plus_2omega2": (L.d(phihat) + 2.0 * w2).norm(),
        "hf_dphi": L.d(phi).norm(),
        "hf_domega2": L.d(w2).norm(),
    }
    lam, r = fit_nearly_half_flat(L, omega, phi)
    res["nhf_residual"] = r
    res["nhf_lambda_def"] = lam
    nk = res["nk_domega_minus_3phi"] <= tol and res["nk_dphihat_plus_2omega2"] <= tol
    hf = res["hf_dphi"] <= tol and res["hf_domega2"] <= tol
    nhf = r <= tol and abs(lam) > tol
    if nk:
        tag = TorsionTag.NEARLY_KAEHLER
    elif hf:
        tag = TorsionTag.HALF_FLAT
    elif nhf:
        tag = TorsionTag.NEARLY_HALF_FLAT
    else:
        tag = TorsionTag.UNCLASSIFIED
    return TorsionClass(tag, res, nk, hf, nhf, lam if nhf else None)


# ---------------------------------------------------------------------------
# the pi map


def pi_map(L: LieAlgebra, phi: Form, lam: float, tol: float = DEFAULT_TOL) -> Form:
    """The 2-form ``omega = -hat(-(1/lam) d phi)``, so that ``d phi = -(lam/2) omega^2``."""
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    sigma = L.d(phi) * (-1.0 / lam)
    if classify(sigma, tol) is not StableClass.STABLE4:
        raise StabilityError("-(1/lambda) d phi is not a stable 4-form; phi lies outside the domain of pi")
    return -hat(sigma, tol)


def pi_derivative(L: LieAlgebra, phi: Form, lam: float, phidot: Form, rel_step: float = 1e-6) -> Form:
    """Central finite difference of ``pi`` along ``phidot``."""
    if phidot.norm() == 0:
        return Form.zero(6, 2)
    h = rel_step * phi.norm() / phidot.norm()
    plus = pi_map(L, phi + h * phidot, lam)
    minus = pi_map(L, phi - h * phidot, lam)
    return (plus - minus) / (2.0 * h)


def pi_derivative_identity(L: LieAlgebra, phi: Form, lam: float, phidot: Form, rel_step: float = 1e-6) -> float:
    """``|| pi(phi) ^ pi_*(phidot) + (1/lam) d phidot ||``, zero up to finite-difference error."""
    om = pi_map(L, phi, lam)
    dpi = pi_derivative(L, phi, lam, phidot, rel_step)
    return (wedge(om, dpi) + L.d(phidot) * (1.0 / lam)).norm()
