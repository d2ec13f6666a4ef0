"""G2-structures ``psi = omega ^ dt + phi`` on the product of a 6-dimensional Lie group with an interval.

The seventh coordinate is ``t`` and ``dt = e^7``.  The product carries the
metric ``g (+) dt^2`` and the orientation ``vol_6 ^ dt``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exterior import Form, FormError, e, embed, hodge_star, restrict, volume_form, wedge
from .hitchin import eps3
from .lie import LieAlgebra
from .su3 import SU3Structure, validate

DT = e(7, 7)


def _six(*forms: Form) -> None:
    for f in forms:
        if f.dim != 6:
            raise FormError(f"expected a form on R^6, got R^{f.dim}")


@dataclass(frozen=True)
class G2Form:
    psi: Form
    starpsi: Form | None = None


def lift(omega: Form, phi: Form) -> G2Form:
    _six(omega, phi)
    if omega.degree != 2 or phi.degree != 3:
        raise FormError("lift needs a 2-form and a 3-form")
    return G2Form(wedge(embed(omega), DT) + embed(phi))


def split(psi: Form) -> tuple[Form, Form]:
    """Inverse of :func:`lift`: the unique ``(omega, phi)`` with ``psi = omega ^ dt + phi``."""
    if psi.dim != 7 or psi.degree != 3:
        raise FormError("split needs a 3-form on R^7")
    omega = Form.from_terms(6, 2, [(idx[:2], c) for idx, c in psi.terms() if idx[2] == 7])
    return omega, restrict(psi, 6)


def star_psi(s: SU3Structure) -> Form:
    """``*psi = -phihat ^ dt - 1/2 omega^2``."""
    return -wedge(embed(s.phihat), DT) - 0.5 * embed(wedge(s.omega, s.omega))


def product_metric(s: SU3Structure) -> np.ndarray:
    g7 = np.zeros((7, 7))
    g7[:6, :6] = s.g
    g7[6, 6] = 1.0
    return g7


def hodge_star_psi(s: SU3Structure) -> Form:
    """``*psi`` computed directly from the product metric; an independent check of :func:`star_psi`."""
    psi = lift(s.omega, s.phi).psi
    return hodge_star(product_metric(s), volume_form(7), psi)


def d7_psi(L: LieAlgebra, omega: Form, phi: Form, phidot: Form) -> Form:
    """``d psi = (d omega - phidot) ^ dt + d phi``."""
    _six(omega, phi, phidot)
    return wedge(embed(L.d(omega) - phidot), DT) + embed(L.d(phi))


def d7_star_psi(L: LieAlgebra, s: SU3Structure, omegadot: Form | None = None, sigmadot: Form | None = None) -> Form:
    """``d *psi = (-d phihat - omega ^ omegadot) ^ dt - omega ^ d omega``.

    ``omega ^ omegadot`` is the time derivative of ``sigma = omega^2 / 2``, so a
    flow that evolves sigma may pass ``sigmadot`` instead of ``omegadot``.
    """
    om = s.omega
    if (omegadot is None) == (sigmadot is None):
        raise ValueError("pass exactly one of omegadot, sigmadot")
    if sigmadot is None:
        _six(omegadot)
        sigmadot = wedge(om, omegadot)
    _six(sigmadot)
    return wedge(embed(-L.d(s.phihat) - sigmadot), DT) - embed(wedge(om, L.d(om)))


def nearly_parallel_residual(L: LieAlgebra, s: SU3Structure, phidot: Form, lam: float) -> float:
    """``|| d psi - lam *psi ||``; zero exactly when both evolution equations hold."""
    return (d7_psi(L, s.omega, s.phi, phidot) - lam * star_psi(s)).norm()


def fit_lambda(L: LieAlgebra, samples: Sequence[tuple[SU3Structure, Form]]) -> float:
    """Least-squares constant minimising ``sum ||d psi - lam * psi||^2`` over ``(structure, phidot)`` samples."""
    num = den = 0.0
    for s, phidot in samples:
        d = d7_psi(L, s.omega, s.phi, phidot).coeffs
        sp = star_psi(s).coeffs
        num += float(d @ sp)
        den += float(sp @ sp)
    return num / den


@dataclass
class ProductG2Family:
    """A t-sampled family of SU(3)-structures with caller-supplied time derivatives."""

    algebra: LieAlgebra
    t_grid: np.ndarray
    structures: list[SU3Structure]
    phidot: list[Form]
    omegadot: list[Form]
    tol: float = 1e-9

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        if np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        if not len(self.t_grid) == len(self.structures) == len(self.phidot) == len(self.omegadot):
            raise ValueError("family samples have mismatched lengths")

    @classmethod
    def from_functions(
        cls,
        algebra: LieAlgebra,
        t_grid,
        omega: Callable[[float], Form],
        phi: Callable[[float], Form],
        omegadot: Callable[[float], Form],
        phidot: Callable[[float], Form],
        tol: float = 1e-9,
    ) -> "ProductG2Family":
        ts = np.asarray(t_grid, dtype=float)
        return cls(
            algebra,
            ts,
            [validate(omega(t), phi(t), tol) for t in ts],
            [phidot(t) for t in ts],
            [omegadot(t) for t in ts],
            tol,
        )

    def psi(self, i: int) -> G2Form:
        s = self.structures[i]
        return G2Form(lift(s.omega, s.phi).psi, star_psi(s))

    def residuals(self, lam: float = 0.0) -> list[dict]:
        """Per-sample ``||d psi - lam *psi||``, ``||d *psi||`` and the SU(3) constraint norms."""
        L = self.algebra
        rows = []
        for t, s, pd, od in zip(self.t_grid, self.structures, self.phidot, self.omegadot):
            dpsi = d7_psi(L, s.omega, s.phi, pd)
            dstar = d7_star_psi(L, s, od)
            sp = star_psi(s)
            rows.append(
                {
                    "t": float(t),
                    "residual": (dpsi - lam * sp).norm(),
                    "relative_residual": (dpsi - lam * sp).norm() / sp.norm(),
                    "d_psi": dpsi.norm(),
                    "d_star_psi": dstar.norm(),
                    "omega_wedge_phi": wedge(s.omega, s.phi).norm(),
                    "eps_omega": s.eps,
                    "eps_phi": eps3(s.phi),
                }
            )
        return rows
