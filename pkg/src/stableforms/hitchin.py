"""Invariants of stable 2-, 3- and 4-forms on R^6.

Volumes are returned as the coefficient of the oriented volume ``e^{123456}``.
The hat-dual of a stable k-form ``rho`` is the (6-k)-form with
``D_rho eps(.) = 1/2 hat(rho) ^ .``; it satisfies ``eps = k/12 hat(rho) ^ rho``.
"""
from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np

from .exterior import (
    Form,
    FormError,
    act,
    basis_vector,
    complement_dual,
    contract,
    e,
    pairing_matrix,
    top_scalar,
    wedge,
)

DEFAULT_TOL = 1e-10


class StableClass(enum.Enum):
    SYMPLECTIC2 = "Symplectic2"
    POSITIVE3 = "Positive3"
    # the second open orbit of 3-forms (real type, e.g. e^123 + e^456)
    NEGATIVE3 = "NegativeDiscriminant3"
    STABLE4 = "Stable4"
    NOT_STABLE = "NotStable"


class StabilityError(ValueError):
    """An operation needed a stable form of a particular type."""


def _require(rho: Form, degree: int) -> None:
    if rho.dim != 6 or rho.degree != degree:
        raise FormError(f"expected a {degree}-form on R^6, got a {rho.degree}-form on R^{rho.dim}")


# ---------------------------------------------------------------------------
# K operators as tensors


@lru_cache(maxsize=None)
def _k3_tensor() -> np.ndarray:
    # T[j, i, A, B] = top(1/2 e^j ^ (e_i -| e^A) ^ e^B)
    T = np.zeros((6, 6, 20, 20))
    P = pairing_matrix(6, 3)
    for A in range(20):
        eA = Form(6, 3, np.eye(20)[A])
        for i in range(6):
            ci = contract(basis_vector(6, i + 1), eA)
            for j in range(6):
                T[j, i, A, :] = 0.5 * wedge(e(6, j + 1), ci).coeffs @ P
    T.setflags(write=False)
    return T


@lru_cache(maxsize=None)
def _k4_tensor() -> np.ndarray:
    # T[j, i, C] = top(e^j ^ e^i ^ e^C)
    T = np.zeros((6, 6, 15))
    for i in range(6):
        for j in range(6):
            if i == j:
                continue
            ji = wedge(e(6, j + 1), e(6, i + 1))
            for C in range(15):
                T[j, i, C] = top_scalar(wedge(ji, Form(6, 4, np.eye(15)[C])))
    T.setflags(write=False)
    return T


def k_bilinear3(a: Form, b: Form) -> np.ndarray:
    """Polarised K: ``M[j, i] = top(1/2 e^j ^ (e_i -| a) ^ b)``."""
    _require(a, 3)
    _require(b, 3)
    return np.einsum("jiab,a,b->ji", _k3_tensor(), a.coeffs, b.coeffs)


def k_map3(phi: Form) -> np.ndarray:
    """``K_phi`` as a 6x6 matrix; column i is the image of e_i."""
    return k_bilinear3(phi, phi)


def lambda3(phi: Form) -> float:
    K = k_map3(phi)
    return float(np.trace(K @ K)) / 6.0


def eps3(phi: Form) -> float:
    lam = lambda3(phi)
    if not lam < 0:
        raise StabilityError(f"lambda(phi) = {lam:.3e} >= 0; phi is not a positive stable 3-form")
    return float(np.sqrt(-lam))


def eps2(omega: Form) -> float:
    """Liouville volume ``-1/6 omega^3``; zero for degenerate omega."""
    _require(omega, 2)
    return -top_scalar(wedge(wedge(omega, omega), omega)) / 6.0


def k_map4(sigma: Form) -> np.ndarray:
    """``K_sigma`` as a 6x6 matrix: ``M[j, i] = top(e^j ^ e^i ^ sigma)``."""
    _require(sigma, 4)
    return np.einsum("jic,c->ji", _k4_tensor(), sigma.coeffs)


def lambda4(sigma: Form) -> float:
    return float(np.linalg.det(k_map4(sigma)))


def eps4(sigma: Form) -> float:
    lam = lambda4(sigma)
    if not lam > 0:
        raise StabilityError(f"lambda(sigma) = {lam:.3e} <= 0; sigma is not stable")
    return float(lam ** 0.25)


def eps(rho: Form) -> float:
    """Volume functional of a stable 2-, 3- or 4-form."""
    if rho.degree == 2:
        return eps2(rho)
    if rho.degree == 3:
        return eps3(rho)
    if rho.degree == 4:
        return eps4(rho)
    raise FormError(f"no volume functional in degree {rho.degree}")


# ---------------------------------------------------------------------------
# classification


def classify(rho: Form, tol: float = DEFAULT_TOL) -> StableClass:
    """Stability type, with thresholds normalised by powers of ``||rho||``."""
    if rho.dim != 6 or rho.degree not in (2, 3, 4):
        raise FormError(f"classify supports 2-, 3- and 4-forms on R^6, got degree {rho.degree} on R^{rho.dim}")
    scale = rho.norm()
    if scale == 0 or not np.isfinite(scale):
        return StableClass.NOT_STABLE
    if rho.degree == 2:
        return StableClass.SYMPLECTIC2 if abs(eps2(rho)) > tol * scale**3 else StableClass.NOT_STABLE
    if rho.degree == 3:
        lam = lambda3(rho)
        if lam < -tol * scale**4:
            return StableClass.POSITIVE3
        if lam > tol * scale**4:
            return StableClass.NEGATIVE3
        return StableClass.NOT_STABLE
    return StableClass.STABLE4 if lambda4(rho) > tol * scale**6 else StableClass.NOT_STABLE


def is_stable(rho: Form, tol: float = DEFAULT_TOL) -> bool:
    return classify(rho, tol) is not StableClass.NOT_STABLE


# ---------------------------------------------------------------------------
# complex structure and hats


def complex_structure(phi: Form, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``I(phi) = K_phi / eps(phi)``, an endomorphism squaring to -1."""
    _require(phi, 3)
    kind = classify(phi, tol)
    if kind is not StableClass.POSITIVE3:
        raise StabilityError(f"complex structure needs a Positive3 form, got {kind.value}")
    K = k_map3(phi)
    return K / np.sqrt(-np.trace(K @ K) / 6.0)


def _eps4_gradient(sigma: Form) -> np.ndarray:
    K = k_map4(sigma)
    lam = float(np.linalg.det(K))
    if not lam > 0:
        raise StabilityError(f"lambda(sigma) = {lam:.3e} <= 0; sigma is not stable")
    adj = lam * np.linalg.inv(K)
    dlam = np.einsum("ij,jic->c", adj, _k4_tensor())
    return 0.25 * lam ** (-0.75) * dlam


def _eps3_gradient(phi: Form) -> np.ndarray:
    K = k_map3(phi)
    lam = float(np.trace(K @ K)) / 6.0
    if not lam < 0:
        raise StabilityError(f"lambda(phi) = {lam:.3e} >= 0; phi is not a positive stable 3-form")
    T = _k3_tensor()
    # dK along e^C = K(e^C, phi) + K(phi, e^C)
    dK = np.einsum("jicb,b->jic", T, phi.coeffs) + np.einsum("jiac,a->jic", T, phi.coeffs)
    dlam = np.einsum("ij,jic->c", K, dK) / 3.0
    return -dlam / (2.0 * np.sqrt(-lam))


def eps_gradient(rho: Form) -> np.ndarray:
    """Coefficient gradient of the volume functional, ``grad[J] = D eps(e^J)``."""
    if rho.degree == 2:
        _require(rho, 2)
        w2 = wedge(rho, rho)
        # D eps(omega)(w) = -1/2 top(omega^2 ^ w)
        return -0.5 * np.array([top_scalar(wedge(w2, Form(6, 2, row))) for row in np.eye(15)])
    if rho.degree == 3:
        return _eps3_gradient(rho)
    if rho.degree == 4:
        return _eps4_gradient(rho)
    raise FormError(f"no volume functional in degree {rho.degree}")


def deps(rho: Form, rhodot: Form) -> float:
    """Analytic directional derivative ``D_rho eps(rhodot)``."""
    rho._check_same(rhodot)
    if rho.degree == 2:
        return -0.5 * top_scalar(wedge(wedge(rho, rho), rhodot))
    return float(eps_gradient(rho) @ rhodot.coeffs)


def hat(rho: Form, tol: float = DEFAULT_TOL) -> Form:
    """Hat-dual of a stable form: ``-omega^2``, ``-I(phi).phi`` or the 2-form dual to ``2 D eps``."""
    if rho.degree == 2:
        _require(rho, 2)
        if classify(rho, tol) is StableClass.NOT_STABLE:
            raise StabilityError("2-form is degenerate")
        return -wedge(rho, rho)
    if rho.degree == 3:
        return -act(complex_structure(rho, tol), rho)
    if rho.degree == 4:
        _require(rho, 4)
        if classify(rho, tol) is not StableClass.STABLE4:
            raise StabilityError("4-form is not stable")
        # degree 2 * 4 is even, so top(hat ^ e^J) = top(e^J ^ hat)
        return complement_dual(6, 4, 2.0 * _eps4_gradient(rho))
    raise FormError(f"hat is defined for degrees 2, 3, 4 only, got {rho.degree}")


# ---------------------------------------------------------------------------
# standard forms

def omega0() -> Form:
    return Form.parse(6, "e14 + e25 + e36")


def phi0() -> Form:
    return Form.parse(6, "e123 - e156 + e246 - e345")


def sigma0() -> Form:
    return Form.parse(6, "e1425 + e1436 + e2536")
