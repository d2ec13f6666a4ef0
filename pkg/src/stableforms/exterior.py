"""Dense exterior algebra on R^6 and R^7.

A k-form on R^n is stored as a vector of C(n, k) coefficients indexed by
strictly increasing multi-indices in lexicographic order.  Indices are
1-based to match the usual ``e^{123}`` notation.

Conventions used throughout the package:

* ``e^{123456}`` (resp. ``e^{1234567}``) is the positive volume and
  :func:`top_scalar` identifies the top degree with R through it.
* ``GL(n)`` acts on forms from the left by ``A.rho = rho(A^-1 ., ..., A^-1 .)``,
  i.e. ``A.rho`` is the pullback of ``rho`` by ``A^-1``.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

import numpy as np

SUPPORTED_DIMS = (6, 7)


class FormError(ValueError):
    """Raised for shape, degree or dimension errors on forms."""


# ---------------------------------------------------------------------------
# multi-index bookkeeping


@lru_cache(maxsize=None)
def basis(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All strictly increasing k-tuples from 1..n in lexicographic order."""
    return tuple(combinations(range(1, n + 1), k))


@lru_cache(maxsize=None)
def _rank_table(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {idx: r for r, idx in enumerate(basis(n, k))}


def rank(n: int, indices: Sequence[int]) -> int:
    """Lexicographic rank of a strictly increasing multi-index."""
    idx = tuple(indices)
    try:
        return _rank_table(n, len(idx))[idx]
    except KeyError:
        raise FormError(f"{idx} is not a strictly increasing multi-index in 1..{n}") from None


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq``; 0 if ``seq`` has a repeat."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    inversions = sum(1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b])
    return -1 if inversions % 2 else 1


# ---------------------------------------------------------------------------
# the Form value type


class Form:
    """A degree-``degree`` alternating form on R^``dim`` with dense coefficients.

    Forms are immutable; arithmetic returns new instances.  ``a ^ b`` is the
    wedge product.
    """

    __slots__ = ("dim", "degree", "_coeffs")

    def __init__(self, dim: int, degree: int, coeffs=None):
        if dim not in SUPPORTED_DIMS:
            raise FormError(f"unsupported dimension {dim}; expected one of {SUPPORTED_DIMS}")
        if not 0 <= degree <= dim:
            raise FormError(f"degree {degree} out of range for dimension {dim}")
        size = comb(dim, degree)
        if coeffs is None:
            arr = np.zeros(size)
        else:
            arr = np.array(coeffs, dtype=float).reshape(-1)
            if arr.shape != (size,):
                raise FormError(f"expected {size} coefficients for a {degree}-form on R^{dim}, got {arr.size}")
        arr.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "_coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Form is immutable")

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    # construction helpers

    @classmethod
    def zero(cls, dim: int, degree: int) -> "Form":
        return cls(dim, degree)

    @classmethod
    def from_terms(cls, dim: int, degree: int, terms: Iterable[tuple[Sequence[int], float]]) -> "Form":
        """Build a form from ``(indices, coeff)`` pairs.

        Indices may come in any order; the coefficient is multiplied by the
        sign of the sorting permutation.  Repeated indices are an error.
        """
        c = np.zeros(comb(dim, degree))
        for indices, coeff in terms:
            indices = tuple(int(i) for i in indices)
            if len(indices) != degree:
                raise FormError(f"term {indices} has length {len(indices)}, expected degree {degree}")
            s = permutation_sign(indices)
            if s == 0:
                raise FormError(f"repeated index in term {indices}")
            c[rank(dim, sorted(indices))] += s * float(coeff)
        return cls(dim, degree, c)

    @classmethod
    def parse(cls, dim: int, text: str) -> "Form":
        """Parse shorthand like ``"e123 - e156 + 2*e246"`` (one digit per index)."""
        import re

        text = text.replace(" ", "")
        if text in ("", "0"):
            raise FormError("cannot infer degree from an empty expression")
        pattern = re.compile(r"([+-]?)(?:(\d*\.?\d+(?:[eE][+-]?\d+)?)\*)?e(\d+)")
        pos = 0
        terms = []
        while pos < len(text):
            m = pattern.match(text, pos)
            if not m:
                raise FormError(f"cannot parse form expression at {text[pos:]!r}")
            sign = -1.0 if m.group(1) == "-" else 1.0
            coeff = float(m.group(2)) if m.group(2) else 1.0
            terms.append(([int(ch) for ch in m.group(3)], sign * coeff))
            pos = m.end()
        degree = len(terms[0][0])
        return cls.from_terms(dim, degree, terms)

    def terms(self, atol: float = 0.0) -> list[tuple[tuple[int, ...], float]]:
        return [(idx, float(c)) for idx, c in zip(basis(self.dim, self.degree), self._coeffs) if abs(c) > atol]

    # arithmetic

    def _check_same(self, other: "Form") -> None:
        if not isinstance(other, Form):
            raise TypeError(f"expected Form, got {type(other).__name__}")
        if (self.dim, self.degree) != (other.dim, other.degree):
            raise FormError(
                f"cannot combine a {self.degree}-form on R^{self.dim} with a {other.degree}-form on R^{other.dim}"
            )

    def __add__(self, other: "Form") -> "Form":
        self._check_same(other)
        return Form(self.dim, self.degree, self._coeffs + other._coeffs)

    def __sub__(self, other: "Form") -> "Form":
        self._check_same(other)
        return Form(self.dim, self.degree, self._coeffs - other._coeffs)

    def __neg__(self) -> "Form":
        return Form(self.dim, self.degree, -self._coeffs)

    def __mul__(self, scalar) -> "Form":
        if isinstance(scalar, Form):
            raise TypeError("use ^ or wedge() for the product of two forms")
        return Form(self.dim, self.degree, float(scalar) * self._coeffs)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Form":
        return Form(self.dim, self.degree, self._coeffs / float(scalar))

    def __xor__(self, other: "Form") -> "Form":
        return wedge(self, other)

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector."""
        return float(np.linalg.norm(self._coeffs))

    def allclose(self, other: "Form", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        self._check_same(other)
        return bool(np.allclose(self._coeffs, other._coeffs, atol=atol, rtol=rtol))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Form)
            and (self.dim, self.degree) == (other.dim, other.degree)
            and bool(np.array_equal(self._coeffs, other._coeffs))
        )

    __hash__ = None

    def __repr__(self) -> str:
        body = " ".join(f"{c:+.6g}*e{''.join(map(str, idx))}" for idx, c in self.terms()) or "0"
        return f"Form(dim={self.dim}, degree={self.degree}: {body})"


def e(dim: int, *indices: int) -> Form:
    """Basis form ``e^{i1...ik}`` (indices in any order, sign applied)."""
    return Form.from_terms(dim, len(indices), [(indices, 1.0)])


# ---------------------------------------------------------------------------
# wedge product


@lru_cache(maxsize=None)
def _wedge_table(n: int, k: int, l: int):
    rows, cols, out, signs = [], [], [], []
    out_rank = _rank_table(n, k + l)
    for a, I in enumerate(basis(n, k)):
        sI = set(I)
        for b, J in enumerate(basis(n, l)):
            if sI.intersection(J):
                continue
            s = permutation_sign(I + J)
            rows.append(a)
            cols.append(b)
            out.append(out_rank[tuple(sorted(I + J))])
            signs.append(s)
    return (np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(out, dtype=int), np.array(signs, dtype=float))


def wedge(a: Form, b: Form) -> Form:
    if a.dim != b.dim:
        raise FormError(f"dimension mismatch in wedge: {a.dim} vs {b.dim}")
    n, k, l = a.dim, a.degree, b.degree
    if k + l > n:
        raise FormError(f"degree overflow: {k} + {l} > {n}")
    rows, cols, out, signs = _wedge_table(n, k, l)
    c = np.bincount(out, weights=signs * a.coeffs[rows] * b.coeffs[cols], minlength=comb(n, k + l))
    return Form(n, k + l, c)


def wedge_all(*forms: Form) -> Form:
    result = forms[0]
    for f in forms[1:]:
        result = wedge(result, f)
    return result


@lru_cache(maxsize=None)
def pairing_matrix(n: int, k: int) -> np.ndarray:
    """``P[I, J] = top_scalar(e^I ^ e^J)`` for k-forms I and (n-k)-forms J."""
    P = np.zeros((comb(n, k), comb(n, n - k)))
    rows, cols, _, signs = _wedge_table(n, k, n - k)
    P[rows, cols] = signs
    P.setflags(write=False)
    return P


def complement_dual(n: int, k: int, values: np.ndarray) -> Form:
    """The (n-k)-form ``eta`` with ``top_scalar(e^I ^ eta) = values[I]`` for every k-index I."""
    P = pairing_matrix(n, k)
    # P is a signed permutation matrix, so P^-1 = P^T
    return Form(n, n - k, P.T @ np.asarray(values, dtype=float))


# ---------------------------------------------------------------------------
# interior product


@lru_cache(maxsize=None)
def _contract_table(n: int, k: int):
    vec, src, dst, signs = [], [], [], []
    out_rank = _rank_table(n, k - 1)
    for a, I in enumerate(basis(n, k)):
        for pos, i in enumerate(I):
            vec.append(i - 1)
            src.append(a)
            dst.append(out_rank[I[:pos] + I[pos + 1:]])
            signs.append(-1.0 if pos % 2 else 1.0)
    return (np.array(vec, dtype=int), np.array(src, dtype=int), np.array(dst, dtype=int), np.array(signs, dtype=float))


def contract(x, a: Form) -> Form:
    """Interior product ``x -| a`` of a vector with a form."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (a.dim,):
        raise FormError(f"vector of length {x.size} cannot contract a form on R^{a.dim}")
    if a.degree == 0:
        raise FormError("cannot contract a 0-form")
    vec, src, dst, signs = _contract_table(a.dim, a.degree)
    c = np.bincount(dst, weights=signs * x[vec] * a.coeffs[src], minlength=comb(a.dim, a.degree - 1))
    return Form(a.dim, a.degree - 1, c)


def basis_vector(n: int, i: int) -> np.ndarray:
    """The standard basis vector e_i (1-based)."""
    v = np.zeros(n)
    v[i - 1] = 1.0
    return v


# ---------------------------------------------------------------------------
# linear maps


def compound(M: np.ndarray, k: int) -> np.ndarray:
    """k-th compound matrix: ``C[I, J] = det(M[I, J])`` over lexicographic k-index sets."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if k == 0:
        return np.ones((1, 1))
    idx = _index_array(n, k)
    blocks = M[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(blocks)


@lru_cache(maxsize=None)
def _index_array(n: int, k: int) -> np.ndarray:
    arr = np.array(basis(n, k), dtype=int) - 1
    arr.setflags(write=False)
    return arr


def pullback(B: np.ndarray, a: Form) -> Form:
    """``(B^* a)(v1, ..., vk) = a(B v1, ..., B vk)``; B need not be invertible."""
    B = np.asarray(B, dtype=float)
    if B.shape != (a.dim, a.dim):
        raise FormError(f"expected a {a.dim}x{a.dim} matrix, got shape {B.shape}")
    return Form(a.dim, a.degree, compound(B, a.degree).T @ a.coeffs)


def act(A: np.ndarray, a: Form) -> Form:
    """Left GL action ``A.a = a(A^-1 ., ..., A^-1 .)``."""
    A = np.asarray(A, dtype=float)
    if A.shape != (a.dim, a.dim):
        raise FormError(f"expected a {a.dim}x{a.dim} matrix, got shape {A.shape}")
    # relative to the Hadamard bound, so the test is scale-free
    if abs(np.linalg.det(A)) <= 1e-14 * float(np.prod(np.linalg.norm(A, axis=0))):
        raise FormError("linear map is singular")
    return pullback(np.linalg.inv(A), a)


def form_matrix(a: Form) -> np.ndarray:
    """Antisymmetric matrix ``W[i, j] = a(e_i, e_j)`` of a 2-form."""
    if a.degree != 2:
        raise FormError(f"expected a 2-form, got degree {a.degree}")
    W = np.zeros((a.dim, a.dim))
    for (i, j), c in zip(basis(a.dim, 2), a.coeffs):
        W[i - 1, j - 1] = c
        W[j - 1, i - 1] = -c
    return W


def two_form_from_matrix(W: np.ndarray) -> Form:
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    return Form(n, 2, [0.5 * (W[i - 1, j - 1] - W[j - 1, i - 1]) for i, j in basis(n, 2)])


# ---------------------------------------------------------------------------
# top degree and Hodge star


def top_scalar(a: Form) -> float:
    """Coefficient of ``e^{1...n}`` of a top-degree form."""
    if a.degree != a.dim:
        raise FormError(f"top_scalar needs a {a.dim}-form, got degree {a.degree}")
    return float(a.coeffs[0])


def volume_form(n: int, value: float = 1.0) -> Form:
    return Form(n, n, [value])


def hodge_star(g: np.ndarray, orientation_volume: Form, a: Form) -> Form:
    """Metric Hodge dual, characterised by ``b ^ *a = <b, a>_g vol_g``.

    ``vol_g`` is the Riemannian volume ``sqrt(det g) e^{1..n}`` taken with the
    sign of ``orientation_volume``.
    """
    g = np.asarray(g, dtype=float)
    n = a.dim
    if g.shape != (n, n):
        raise FormError(f"metric has shape {g.shape}, expected {(n, n)}")
    if not np.allclose(g, g.T, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise FormError("metric is not symmetric")
    eig = np.linalg.eigvalsh(0.5 * (g + g.T))
    if eig.min() <= 0:
        raise FormError("metric is not positive definite")
    orient = top_scalar(orientation_volume)
    if orient == 0:
        raise FormError("orientation volume is zero")
    vol = np.sign(orient) * np.sqrt(np.prod(eig))
    inner = compound(np.linalg.inv(g), a.degree)
    return complement_dual(n, a.degree, vol * (inner @ a.coeffs))


def embed(a: Form, dim: int = 7) -> Form:
    """View a form on R^6 as a form on R^dim free of the extra indices."""
    if a.dim > dim:
        raise FormError(f"cannot embed R^{a.dim} into R^{dim}")
    return Form.from_terms(dim, a.degree, a.terms())


def restrict(a: Form, dim: int = 6) -> Form:
    """Drop every term involving an index above ``dim``."""
    return Form.from_terms(dim, a.degree, [(idx, c) for idx, c in a.terms() if max(idx, default=0) <= dim])
