"""Closed-form families on a nearly-Kaehler base and the su(2)+su(2) example.

Given a nearly-Kaehler pair ``(omega, phi)`` (``d omega = 3 phi``,
``d phihat = -2 omega^2``):

* cone: ``(t^2 omega, t^3 phi)`` on ``t > 0`` lifts to a parallel G2-structure;
* sine cone: ``(sin^2 t omega, sin^3 t (sin t phihat + cos t phi))`` on
  ``0 < t < pi`` lifts to a nearly parallel one with ``d psi = 4 *psi``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .exterior import Form, wedge
from .g2 import ProductG2Family, fit_lambda, nearly_parallel_residual, product_metric
from .hitchin import StabilityError, eps, hat
from .lie import LieAlgebra, su2_su2
from .su3 import SU3Structure, classify_torsion, validate

# omega = NK_OMEGA_SCALE * (e^14 + e^25 + e^36) on su2_su2(); value from derive_nearly_kahler()
NK_OMEGA_SCALE = math.sqrt(3.0) / 18.0


class FamilyError(ValueError):
    pass


def _invariant_basis() -> tuple[Form, list[Form]]:
    # diagonal-SO(3)-invariant forms on su(2)+su(2) with e^1..e^3 | f^1..f^3 = e^4..e^6
    omega = Form.parse(6, "e14 + e25 + e36")
    threes = [
        Form.parse(6, "e123"),
        Form.parse(6, "e456"),
        Form.parse(6, "e234 - e135 + e126"),  # sum e^{jk} ^ f^i
        Form.parse(6, "e156 - e246 + e345"),  # sum e^i ^ f^{jk}
    ]
    return omega, threes


def _nk_residual(x: np.ndarray, L: LieAlgebra) -> np.ndarray:
    w_basis, threes = _invariant_basis()
    omega = x[0] * w_basis
    phi = Form(6, 3, sum(c * f.coeffs for c, f in zip(x[1:], threes)))
    try:
        ph = hat(phi)
        e_phi, e_omega = eps(phi), eps(omega)
    except StabilityError:
        return np.full(36, 1e3)
    r1 = (L.d(omega) - 3.0 * phi).coeffs
    r2 = (L.d(ph) + 2.0 * wedge(omega, omega)).coeffs
    return np.concatenate([r1, r2, [e_phi - e_omega]])


def derive_nearly_kahler(x0=(0.1, 0.0, 0.0, 0.03, -0.03)) -> tuple[np.ndarray, float]:
    """Solve the nearly-Kaehler equations and condition (III) on the invariant ansatz.

    Unknowns are the coefficient of ``omega`` and four coefficients of ``phi``.
    Returns the solution vector and the final residual norm.
    """
    L = su2_su2()
    sol = least_squares(_nk_residual, np.asarray(x0, dtype=float), args=(L,), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return sol.x, float(np.linalg.norm(_nk_residual(sol.x, L)))


def nearly_kahler_su2su2() -> tuple[LieAlgebra, SU3Structure]:
    """su(2)+su(2) and its invariant nearly-Kaehler structure."""
    L = su2_su2()
    w_basis, _ = _invariant_basis()
    omega = NK_OMEGA_SCALE * w_basis
    phi = L.d(omega) / 3.0
    return L, validate(omega, phi)


# ---------------------------------------------------------------------------
# exact families


class FamilyKind(enum.Enum):
    CONE = "cone"
    SINE_CONE = "sine-cone"


@dataclass(frozen=True)
class ExactFamily:
    kind: FamilyKind
    algebra: LieAlgebra
    base: SU3Structure
    domain: tuple[float, float]
    lam: float = 0.0

    def _check(self, t: float) -> None:
        lo, hi = self.domain
        if not lo < t < hi:
            raise FamilyError(f"t = {t} outside the open interval {self.domain}")

    def omega(self, t: float) -> Form:
        self._check(t)
        w = self.base.omega
        return t**2 * w if self.kind is FamilyKind.CONE else math.sin(t) ** 2 * w

    def phi(self, t: float) -> Form:
        self._check(t)
        b = self.base
        if self.kind is FamilyKind.CONE:
            return t**3 * b.phi
        s, c = math.sin(t), math.cos(t)
        return s**4 * b.phihat + s**3 * c * b.phi

    def omegadot(self, t: float) -> Form:
        self._check(t)
        w = self.base.omega
        return 2 * t * w if self.kind is FamilyKind.CONE else 2 * math.sin(t) * math.cos(t) * w

    def phidot(self, t: float) -> Form:
        self._check(t)
        b = self.base
        if self.kind is FamilyKind.CONE:
            return 3 * t**2 * b.phi
        s, c = math.sin(t), math.cos(t)
        return 4 * s**3 * c * b.phihat + (3 * s**2 * c**2 - s**4) * b.phi

    def structure(self, t: float, tol: float = 1e-9) -> SU3Structure:
        return validate(self.omega(t), self.phi(t), tol)

    def metric_scale(self, t: float) -> float:
        self._check(t)
        return t**2 if self.kind is FamilyKind.CONE else math.sin(t) ** 2

    def sample(self, t_grid, tol: float = 1e-9) -> ProductG2Family:
        return ProductG2Family.from_functions(self.algebra, t_grid, self.omega, self.phi, self.omegadot, self.phidot, tol)


def _require_nearly_kaehler(L: LieAlgebra, base: SU3Structure, tol: float) -> None:
    tc = classify_torsion(L, base, tol)
    if not tc.nearly_kaehler:
        raise FamilyError(f"base structure is not nearly-Kaehler: {tc.residuals}")


def cone_family(L: LieAlgebra, base: SU3Structure, tol: float = 1e-9) -> ExactFamily:
    _require_nearly_kaehler(L, base, tol)
    return ExactFamily(FamilyKind.CONE, L, base, (0.0, math.inf), 0.0)


def sine_cone_family(
    L: LieAlgebra, base: SU3Structure, tol: float = 1e-9, fit_points=(0.4, 1.0, math.pi / 2, 2.2, 2.7)
) -> ExactFamily:
    """Sine-cone family with its G2 constant fitted by least squares and then verified."""
    _require_nearly_kaehler(L, base, tol)
    fam = ExactFamily(FamilyKind.SINE_CONE, L, base, (0.0, math.pi), 0.0)
    samples = [(fam.structure(t), fam.phidot(t)) for t in fit_points]
    lam = fit_lambda(L, samples)
    fam = ExactFamily(FamilyKind.SINE_CONE, L, base, (0.0, math.pi), lam)

    worst = max(nearly_parallel_residual(L, s, pd, lam) for s, pd in samples)
    if worst > 1e-8:
        raise FamilyError(f"no constant lambda solves d psi = lambda *psi (best {lam:.12g}, residual {worst:.3e})")
    return fam


def family_metric(fam: ExactFamily, t: float) -> np.ndarray:
    return product_metric(fam.structure(t))
