"""Left-invariant forms on 6-dimensional Lie algebras.

An algebra is given by the differentials ``de^k`` of its dual basis (the
Chevalley-Eilenberg data), written in the usual shorthand, e.g.
``(0,0,0,0,12,13)`` for ``de^5 = e^12``, ``de^6 = e^13``.  The exterior
derivative on invariant forms is the antiderivation extending ``e^k -> de^k``.
Integrals over a compact quotient are normalised to unit total volume, so
``integral`` is just the top coefficient.
"""
from __future__ import annotations

import re
from functools import cached_property
from math import comb
from typing import Mapping, Sequence

import numpy as np

from .exterior import Form, FormError, act, basis, e, top_scalar, wedge

DIM = 6


class LieAlgebraError(ValueError):
    """Malformed algebra data or a failed structural check."""


class SalamonParseError(LieAlgebraError):
    def __init__(self, message: str, text: str, position: int | None = None, token: str | None = None):
        where = f" at position {position}" if position is not None else ""
        tok = f" (token {token!r})" if token is not None else ""
        super().__init__(f"{message}{where}{tok} in {text!r}")
        self.position = position
        self.token = token


class JacobiError(LieAlgebraError):
    def __init__(self, k: int, residual: Form):
        super().__init__(f"Jacobi identity fails: d(de^{k}) = {residual!r} != 0")
        self.k = k
        self.residual = residual


class LieAlgebra:
    """A 6-dimensional Lie algebra given by ``de^1, ..., de^6``."""

    def __init__(self, d1: Sequence[Form], name: str | None = None, check: bool = True, tol: float = 1e-12):
        d1 = tuple(d1)
        if len(d1) != DIM:
            raise LieAlgebraError(f"expected {DIM} differentials, got {len(d1)}")
        for k, f in enumerate(d1, start=1):
            if f.dim != DIM or f.degree != 2:
                raise LieAlgebraError(f"de^{k} must be a 2-form on R^6, got a {f.degree}-form on R^{f.dim}")
        self.d1 = d1
        self.name = name
        if check:
            for k in range(1, DIM + 1):
                r = self.d(self.d1[k - 1])
                if r.norm() > tol * max(1.0, self.scale) ** 2:
                    raise JacobiError(k, r)

    @property
    def scale(self) -> float:
        return max(f.norm() for f in self.d1)

    @cached_property
    def _matrices(self) -> dict[int, np.ndarray]:
        # D[k] maps k-form coefficients to (k+1)-form coefficients
        mats = {}
        for k in range(DIM):
            M = np.zeros((comb(DIM, k + 1), comb(DIM, k)))
            for col, idx in enumerate(basis(DIM, k)):
                M[:, col] = _d_basis(self.d1, idx).coeffs
            M.setflags(write=False)
            mats[k] = M
        return mats

    def d(self, a: Form) -> Form:
        """Chevalley-Eilenberg differential of an invariant form."""
        if a.dim != DIM:
            raise FormError(f"d acts on forms on R^6, got R^{a.dim}")
        if a.degree == DIM:
            raise FormError("d of a top-degree form on R^6 would have degree 7")
        return Form(DIM, a.degree + 1, self._matrices[a.degree] @ a.coeffs)

    def structure_constants(self) -> np.ndarray:
        """``c[k, i, j]`` with ``de^k = sum_{i<j} c[k, i, j] e^{ij}``, antisymmetric in (i, j)."""
        c = np.zeros((DIM, DIM, DIM))
        for k, f in enumerate(self.d1):
            for (i, j), v in zip(basis(DIM, 2), f.coeffs):
                c[k, i - 1, j - 1] = v
                c[k, j - 1, i - 1] = -v
        return c

    def brackets(self) -> np.ndarray:
        """``b[k, i, j]``: the e_k component of ``[e_i, e_j]``, using ``de^k(e_i, e_j) = -e^k([e_i, e_j])``."""
        return -self.structure_constants()

    def is_jacobi(self, tol: float = 1e-12) -> bool:
        return all(self.d(f).norm() <= tol * max(1.0, self.scale) ** 2 for f in self.d1)

    def is_unimodular(self, tol: float = 1e-12) -> bool:
        return all(abs(top_scalar(self.d(Form(DIM, 5, row)))) <= tol * max(1.0, self.scale) for row in np.eye(DIM))

    def is_automorphism(self, A: np.ndarray, tol: float = 1e-10) -> bool:
        """Whether ``A`` commutes with d on 1-forms: ``d(A.e^k) = A.(de^k)``."""
        for k in range(1, DIM + 1):
            a = act(A, e(DIM, k))
            if (self.d(a) - act(A, self.d1[k - 1])).norm() > tol * max(1.0, self.scale) * max(1.0, np.abs(A).max()) ** 3:
                return False
        return True

    def to_salamon(self) -> str:
        parts = []
        for f in self.d1:
            terms = f.terms()
            if not terms:
                parts.append("0")
                continue
            s = ""
            for (i, j), c in terms:
                sign = "-" if c < 0 else "+"
                mag = abs(c)
                coeff = "" if mag == 1.0 else f"{mag:.17g}*"
                s += f"{sign}{coeff}{i}{j}"
            parts.append(s.lstrip("+"))
        return "(" + ",".join(parts) + ")"

    def __repr__(self) -> str:
        label = f"{self.name} " if self.name else ""
        return f"LieAlgebra({label}{self.to_salamon()})"


def _d_basis(d1: Sequence[Form], idx: tuple[int, ...]) -> Form:
    out = Form.zero(DIM, len(idx) + 1)
    for pos, i in enumerate(idx):
        rest = idx[:pos] + idx[pos + 1:]
        term = wedge(e(DIM, *rest), d1[i - 1]) if rest else d1[i - 1]
        out = out + term * (-1.0 if pos % 2 else 1.0)
    return out


def d_ce(L: LieAlgebra, a: Form) -> Form:
    return L.d(a)


def jacobi_check(L: LieAlgebra) -> bool:
    return L.is_jacobi()


def unimodular_check(L: LieAlgebra) -> bool:
    return L.is_unimodular()


def integral(L: LieAlgebra, a: Form) -> float:
    """Integral of an invariant top form over a unit-volume compact quotient."""
    if a.degree != DIM or a.dim != DIM:
        raise FormError(f"integral needs a 6-form on R^6, got a {a.degree}-form on R^{a.dim}")
    return top_scalar(a)


# ---------------------------------------------------------------------------
# Salamon shorthand

_TERM = re.compile(r"([+-]?)(?:(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)[*·])?(\d\d)")


def _parse_component(token: str, text: str, offset: int) -> Form:
    token_stripped = token.strip()
    if token_stripped == "":
        raise SalamonParseError("empty component", text, offset, token)
    if token_stripped == "0":
        return Form.zero(DIM, 2)
    gap = re.search(r"\d\s+\d", token)
    if gap:
        raise SalamonParseError("whitespace between digits (missing sign or split index pair?)", text, offset + gap.start(), gap.group(0))
    t = token.replace(" ", "")
    pos = 0
    terms = []
    while pos < len(t):
        m = _TERM.match(t, pos)
        if not m or m.end() == pos:
            raise SalamonParseError("malformed term", text, offset + pos, t[pos:])
        if pos > 0 and not m.group(1):
            raise SalamonParseError("missing sign between terms", text, offset + pos, t[pos:m.end()])
        pair = m.group(3)
        i, j = int(pair[0]), int(pair[1])
        if not (1 <= i <= DIM and 1 <= j <= DIM):
            raise SalamonParseError("index out of range 1..6", text, offset + pos, m.group(0))
        if i == j:
            raise SalamonParseError("repeated index in pair", text, offset + pos, m.group(0))
        coeff = float(m.group(2)) if m.group(2) else 1.0
        if m.group(1) == "-":
            coeff = -coeff
        terms.append(((i, j), coeff))
        pos = m.end()
        # a third digit directly after a pair would be silently reinterpreted
        if pos < len(t) and t[pos].isdigit():
            raise SalamonParseError("index pair must have exactly two digits", text, offset + m.start(3), t[m.start(3):pos + 1])
    return Form.from_terms(DIM, 2, terms)


def parse_salamon(text: str, name: str | None = None, check: bool = True) -> LieAlgebra:
    """Parse ``"(t1,...,t6)"`` where each ``t_k`` is 0 or a signed sum like ``12-2*34``."""
    if not isinstance(text, str):
        raise SalamonParseError("expected a string", repr(text))
    s = text.strip()
    if not (s.startswith("(") and s.endswith(")")):
        raise SalamonParseError("shorthand must be enclosed in parentheses", text, 0, s[:1] or None)
    body = s[1:-1]
    if "(" in body or ")" in body:
        raise SalamonParseError("unbalanced parentheses", text)
    pieces = body.split(",")
    if len(pieces) != DIM:
        raise SalamonParseError(f"expected {DIM} components, got {len(pieces)}", text)
    d1 = []
    offset = text.index("(") + 1
    for piece in pieces:
        d1.append(_parse_component(piece, text, offset))
        offset += len(piece) + 1
    return LieAlgebra(d1, name=name, check=check)


def from_terms(entries: Sequence[Mapping], name: str | None = None) -> LieAlgebra:
    """Build from ``[{"k": 5, "terms": [{"i": 1, "j": 2, "coeff": 1.0}]}, ...]``; requires i < j."""
    d1 = [[] for _ in range(DIM)]
    seen = set()
    for n_entry, entry in enumerate(entries):
        unknown = set(entry) - {"k", "terms"}
        if unknown:
            raise LieAlgebraError(f"entry {n_entry}: unknown fields {sorted(unknown)}")
        k = entry.get("k")
        if not isinstance(k, int) or not 1 <= k <= DIM:
            raise LieAlgebraError(f"entry {n_entry}: k must be an integer in 1..6, got {k!r}")
        if k in seen:
            raise LieAlgebraError(f"entry {n_entry}: de^{k} given twice")
        seen.add(k)
        for n_term, term in enumerate(entry.get("terms", [])):
            unknown = set(term) - {"i", "j", "coeff"}
            if unknown:
                raise LieAlgebraError(f"entry {n_entry} term {n_term}: unknown fields {sorted(unknown)}")
            i, j, c = term.get("i"), term.get("j"), term.get("coeff", 1.0)
            if not (isinstance(i, int) and isinstance(j, int)) or not (1 <= i <= DIM and 1 <= j <= DIM):
                raise LieAlgebraError(f"entry {n_entry} term {n_term}: indices must be integers in 1..6")
            if i >= j:
                raise LieAlgebraError(f"entry {n_entry} term {n_term}: need i < j, got i={i}, j={j}")
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise LieAlgebraError(f"entry {n_entry} term {n_term}: coeff must be a number")
            d1[k - 1].append(((i, j), float(c)))
    return LieAlgebra([Form.from_terms(DIM, 2, t) for t in d1], name=name)


# ---------------------------------------------------------------------------
# named algebras

def abelian() -> LieAlgebra:
    return parse_salamon("(0,0,0,0,0,0)", name="abelian")


def nilpotent_example() -> LieAlgebra:
    return parse_salamon("(0,0,0,0,12,13)", name="n(0,0,0,0,12,13)")


def su2_su2() -> LieAlgebra:
    """su(2) + su(2) with ``de^i = e^{jk}`` cyclically on each factor (basis e1..e3, f1..f3 = e4..e6)."""
    return parse_salamon("(23,-13,12,56,-46,45)", name="su(2)+su(2)")
