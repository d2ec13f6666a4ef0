"""JSON documents for forms and Lie algebras.

Form::

    {"dim": 6, "degree": 2,
     "terms": [{"indices": [1, 4], "coeff": 1.0}, ...]}

Lie algebra, either shorthand or explicit differentials::

    {"name": "nil", "salamon": "(0,0,0,0,12,13)"}
    {"differentials": [{"k": 5, "terms": [{"i": 1, "j": 2, "coeff": 1.0}]}]}
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .exterior import Form, FormError
from .lie import LieAlgebra, LieAlgebraError, from_terms, parse_salamon


class InputError(ValueError):
    """A file could not be read into the expected object; the message names file and location."""


def _load_json(path: Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line_text = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        token = line_text[max(0, exc.colno - 1):exc.colno + 9].strip() or "<end of input>"
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg} near {token!r}") from None


def _line_of(path: Path, needle: str, occurrence: int) -> int | None:
    # best-effort source line of the n-th occurrence of a key, for diagnostics
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError:
        return None
    seen = -1
    for n, line in enumerate(lines, start=1):
        seen += line.count(needle)
        if seen >= occurrence:
            return n
    return None


def form_from_dict(doc: Any, where: str = "<form>") -> Form:
    if not isinstance(doc, dict):
        raise InputError(f"{where}: expected an object with dim, degree and terms")
    unknown = set(doc) - {"dim", "degree", "terms", "name"}
    if unknown:
        raise InputError(f"{where}: unknown fields {sorted(unknown)}")
    for key in ("dim", "degree", "terms"):
        if key not in doc:
            raise InputError(f"{where}: missing field {key!r}")
    dim, degree, terms = doc["dim"], doc["degree"], doc["terms"]
    if not isinstance(dim, int) or isinstance(dim, bool) or not isinstance(degree, int) or isinstance(degree, bool):
        raise InputError(f"{where}: dim and degree must be integers")
    if not isinstance(terms, list):
        raise InputError(f"{where}: terms must be a list")
    parsed = []
    for n, term in enumerate(terms):
        loc = f"{where}: terms[{n}]"
        if not isinstance(term, dict) or set(term) - {"indices", "coeff"} or "indices" not in term:
            raise InputError(f"{loc}: expected {{indices: [...], coeff: number}}, got {term!r}")
        idx = term["indices"]
        coeff = term.get("coeff", 1.0)
        if not isinstance(idx, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in idx):
            raise InputError(f"{loc}: indices must be a list of integers, got {idx!r}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InputError(f"{loc}: indices must be strictly increasing, got {idx}")
        if isinstance(coeff, bool) or not isinstance(coeff, (int, float)):
            raise InputError(f"{loc}: coeff must be a number, got {coeff!r}")
        parsed.append((idx, float(coeff)))
    try:
        for n, (idx, _) in enumerate(parsed):
            if len(idx) != degree:
                raise InputError(f"{where}: terms[{n}] has {len(idx)} indices but degree is {degree}")
            if idx and (idx[0] < 1 or idx[-1] > dim):
                raise InputError(f"{where}: terms[{n}] index out of range 1..{dim}: {idx}")
        return Form.from_terms(dim, degree, parsed)
    except FormError as exc:
        raise InputError(f"{where}: {exc}") from None


def form_to_dict(form: Form, name: str | None = None) -> dict:
    doc: dict[str, Any] = {}
    if name:
        doc["name"] = name
    doc.update(
        dim=form.dim,
        degree=form.degree,
        terms=[{"indices": list(idx), "coeff": c} for idx, c in form.terms()],
    )
    return doc


def read_form(path, expect_degree: int | None = None, expect_dim: int | None = None) -> Form:
    path = Path(path)
    doc = _load_json(path)
    try:
        form = form_from_dict(doc, str(path))
    except InputError as exc:
        msg = str(exc)
        if "terms[" in msg:
            n = int(msg.split("terms[")[1].split("]")[0])
            line = _line_of(path, '"indices"', n)
            if line is not None:
                msg = msg.replace(str(path), f"{path}:{line}", 1)
        raise InputError(msg) from None
    if expect_degree is not None and form.degree != expect_degree:
        raise InputError(f"{path}: expected a {expect_degree}-form, file holds a {form.degree}-form")
    if expect_dim is not None and form.dim != expect_dim:
        raise InputError(f"{path}: expected a form on R^{expect_dim}, file holds one on R^{form.dim}")
    return form


def dumps_form(form: Form, name: str | None = None) -> str:
    """JSON text with one term per line."""
    doc = form_to_dict(form, name)
    head = ",\n".join(f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in doc.items() if k != "terms")
    terms = ",\n".join(f"    {json.dumps(t)}" for t in doc["terms"])
    return f"{{\n{head},\n  \"terms\": [\n{terms}\n  ]\n}}\n" if terms else f"{{\n{head},\n  \"terms\": []\n}}\n"


def write_form(path, form: Form, name: str | None = None) -> None:
    Path(path).write_text(dumps_form(form, name), encoding="utf-8")


def algebra_from_dict(doc: Any, where: str = "<algebra>") -> LieAlgebra:
    if not isinstance(doc, dict):
        raise InputError(f"{where}: expected an object")
    unknown = set(doc) - {"name", "salamon", "differentials"}
    if unknown:
        raise InputError(f"{where}: unknown fields {sorted(unknown)}")
    has_s, has_d = "salamon" in doc, "differentials" in doc
    if has_s == has_d:
        raise InputError(f"{where}: give exactly one of 'salamon' or 'differentials'")
    name = doc.get("name")
    try:
        if has_s:
            return parse_salamon(doc["salamon"], name=name)
        if not isinstance(doc["differentials"], list):
            raise InputError(f"{where}: differentials must be a list")
        return from_terms(doc["differentials"], name=name)
    except (LieAlgebraError, FormError) as exc:
        raise InputError(f"{where}: {exc}") from None


def read_algebra(path) -> LieAlgebra:
    path = Path(path)
    return algebra_from_dict(_load_json(path), str(path))


def algebra_to_dict(L: LieAlgebra) -> dict:
    doc: dict[str, Any] = {}
    if L.name:
        doc["name"] = L.name
    doc["salamon"] = L.to_salamon()
    return doc


def write_algebra(path, L: LieAlgebra) -> None:
    Path(path).write_text(json.dumps(algebra_to_dict(L), indent=2) + "\n", encoding="utf-8")
