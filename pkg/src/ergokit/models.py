"""Model descriptions: birth-death chains and half-line diffusions.

Model files are UTF-8 text, one ``key = value`` per line, ``#`` comments.

Birth-death chains (state space 0, 1, 2, ...)::

    kind = birth-death
    b0 = 1              # rate 0 -> 1, a plain positive decimal
    b = "n^2"           # birth rate b_n for n >= 1, expression in n
    a = "n^2"           # death rate a_n for n >= 1, expression in n
    b[5] = 26.0         # optional per-index overrides
    a[5] = 24.0

Diffusions on [0, infinity), generator a(x) f'' + b(x) f'::

    kind = diffusion
    a = "1"             # diffusion coefficient, must be positive
    b = "-x"            # drift

Overrides shadow the expressions: if an override exists at index k the
expression is never evaluated there.  Rates are validated eagerly on a
probe set at load time and lazily at every later evaluation; the first
nonpositive rate aborts with its location.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .expr import EvalDomainError, ExprSyntaxError, RateExpression, parse_expr

__all__ = [
    "ModelFileError",
    "PositivityError",
    "BirthDeathModel",
    "DiffusionModel",
    "load_model",
    "parse_model_text",
]

_CHAIN_PROBE_INDICES = range(0, 65)
_DIFFUSION_PROBE_GRID = np.geomspace(1e-6, 1e3, 64)


class ModelFileError(ValueError):
    """Bad model file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line


class PositivityError(ValueError):
    """A rate or coefficient that must be positive is not."""


@dataclass(frozen=True, eq=False)
class BirthDeathModel:
    """Birth-death chain with rates b_i (up) and a_i (down).

    ``b0`` is a separate scalar because expressions like ``n^2`` vanish at
    zero.  Immutable and thread-safe.
    """

    b0: float
    birth: RateExpression
    death: RateExpression
    overrides: dict[int, dict[str, float]] = field(default_factory=dict)
    name: str = "birth-death"

    kind = "birth-death"

    def birth_rate(self, i: int) -> float:
        ov = self.overrides.get(i)
        if ov is not None and "b" in ov:
            value = ov["b"]
        elif i == 0:
            value = self.b0
        else:
            value = self.birth(float(i))
        if not (value > 0 and math.isfinite(value)):
            raise PositivityError(f"birth rate b_{i} = {value} is not positive")
        return value

    def death_rate(self, i: int) -> float:
        if i < 1:
            raise ValueError("death rate a_i is defined for i >= 1")
        ov = self.overrides.get(i)
        if ov is not None and "a" in ov:
            value = ov["a"]
        else:
            value = self.death(float(i))
        if not (value > 0 and math.isfinite(value)):
            raise PositivityError(f"death rate a_{i} = {value} is not positive")
        return value

    def birth_rates(self, idx: np.ndarray) -> np.ndarray:
        out = np.empty(len(idx), dtype=float)
        plain = np.asarray(idx, dtype=float)
        mask_expr = np.ones(len(idx), dtype=bool)
        for pos, i in enumerate(idx):
            ov = self.overrides.get(int(i))
            if ov is not None and "b" in ov:
                out[pos] = ov["b"]
                mask_expr[pos] = False
            elif i == 0:
                out[pos] = self.b0
                mask_expr[pos] = False
        if mask_expr.any():
            out[mask_expr] = self.birth(plain[mask_expr])
        bad = ~(out > 0)
        if bad.any():
            i = int(np.asarray(idx)[np.argmax(bad)])
            raise PositivityError(f"birth rate b_{i} = {out[np.argmax(bad)]} is not positive")
        return out

    def death_rates(self, idx: np.ndarray) -> np.ndarray:
        if len(idx) and int(np.min(idx)) < 1:
            raise ValueError("death rate a_i is defined for i >= 1")
        out = np.empty(len(idx), dtype=float)
        plain = np.asarray(idx, dtype=float)
        mask_expr = np.ones(len(idx), dtype=bool)
        for pos, i in enumerate(idx):
            ov = self.overrides.get(int(i))
            if ov is not None and "a" in ov:
                out[pos] = ov["a"]
                mask_expr[pos] = False
        if mask_expr.any():
            out[mask_expr] = self.death(plain[mask_expr])
        bad = ~(out > 0)
        if bad.any():
            i = int(np.asarray(idx)[np.argmax(bad)])
            raise PositivityError(f"death rate a_{i} = {out[np.argmax(bad)]} is not positive")
        return out

    def q_total(self, i: int) -> float:
        """Total jump rate q_i out of state i."""
        if i == 0:
            return self.birth_rate(0)
        return self.birth_rate(i) + self.death_rate(i)


@dataclass(frozen=True, eq=False)
class DiffusionModel:
    """Diffusion on the half line with generator a(x) f'' + b(x) f'."""

    a: RateExpression
    b: RateExpression
    name: str = "diffusion"

    kind = "diffusion"

    def a_of(self, x):
        if isinstance(x, (float, int)):
            value = self.a(float(x))
            if not value > 0:
                raise PositivityError(f"diffusion coefficient a({float(x)}) = {value} "
                                      "is not positive")
            return value
        value = self.a(x)
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        bad = ~(arr > 0)
        if bad.any():
            where = np.atleast_1d(np.asarray(x, dtype=float))[np.argmax(bad)]
            raise PositivityError(f"diffusion coefficient a({float(where)}) = {arr[np.argmax(bad)]} is not positive")
        return value

    def b_of(self, x):
        return self.b(x)


def _strip_comment(line: str) -> str:
    out = []
    in_quote = False
    for c in line:
        if c == '"':
            in_quote = not in_quote
        if c == "#" and not in_quote:
            break
        out.append(c)
    return "".join(out)


def _parse_scalar(value: str, key: str, line: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ModelFileError(f"key {key!r} needs a decimal value, got {value!r}", line) from None
    if not math.isfinite(x):
        raise ModelFileError(f"key {key!r} must be finite, got {value!r}", line)
    return x


def _parse_quoted(value: str, key: str, line: int, var: str) -> RateExpression:
    if len(value) < 2 or value[0] != '"' or value[-1] != '"':
        raise ModelFileError(f"key {key!r} needs a quoted expression, got {value!r}", line)
    try:
        return parse_expr(value[1:-1], var=var)
    except ExprSyntaxError as exc:
        raise ModelFileError(f"bad expression for {key!r}: {exc}", line) from None


def parse_model_text(text: str, name: str = "<string>") -> BirthDeathModel | DiffusionModel:
    """Parse and validate model-file text.  See the module docstring."""
    entries: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelFileError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = line.partition("=")
        entries.append((key.strip(), value.strip(), lineno))

    keys = {k: (v, ln) for k, v, ln in entries}
    if "kind" not in keys:
        raise ModelFileError("missing required key 'kind'")
    kind, kind_line = keys["kind"]
    if kind == "birth-death":
        return _build_chain(entries, name)
    if kind == "diffusion":
        return _build_diffusion(entries, name)
    raise ModelFileError(f"unknown kind {kind!r} (expected 'birth-death' or 'diffusion')", kind_line)


def _build_chain(entries, name) -> BirthDeathModel:
    b0 = birth = death = None
    overrides: dict[int, dict[str, float]] = {}
    for key, value, line in entries:
        if key == "kind":
            continue
        if key == "b0":
            b0 = _parse_scalar(value, key, line)
        elif key == "b":
            birth = _parse_quoted(value, key, line, var="n")
        elif key == "a":
            death = _parse_quoted(value, key, line, var="n")
        elif key.endswith("]") and "[" in key and key[0] in "ab":
            which, _, idx_txt = key.partition("[")
            try:
                idx = int(idx_txt[:-1])
            except ValueError:
                raise ModelFileError(f"bad override index in {key!r}", line) from None
            if which not in ("a", "b") or idx < 0:
                raise ModelFileError(f"bad override key {key!r}", line)
            overrides.setdefault(idx, {})[which] = _parse_scalar(value, key, line)
        else:
            raise ModelFileError(f"unknown key {key!r} for birth-death model", line)
    for req, val in (("b0", b0), ("b", birth), ("a", death)):
        if val is None:
            raise ModelFileError(f"missing required key {req!r} for birth-death model")
    model = BirthDeathModel(b0=b0, birth=birth, death=death, overrides=overrides, name=name)
    probe = sorted(set(_CHAIN_PROBE_INDICES) | set(overrides))
    for i in probe:
        try:
            model.birth_rate(i)
            if i >= 1:
                model.death_rate(i)
        except EvalDomainError as exc:
            raise ModelFileError(f"rate not evaluable at index {i}: {exc}") from None
    return model


def _build_diffusion(entries, name) -> DiffusionModel:
    a = b = None
    for key, value, line in entries:
        if key == "kind":
            continue
        if key == "a":
            a = _parse_quoted(value, key, line, var="x")
        elif key == "b":
            b = _parse_quoted(value, key, line, var="x")
        else:
            raise ModelFileError(f"unknown key {key!r} for diffusion model", line)
    for req, val in (("a", a), ("b", b)):
        if val is None:
            raise ModelFileError(f"missing required key {req!r} for diffusion model")
    model = DiffusionModel(a=a, b=b, name=name)
    try:
        model.a_of(_DIFFUSION_PROBE_GRID)
        model.b_of(_DIFFUSION_PROBE_GRID)
    except EvalDomainError as exc:
        raise ModelFileError(f"coefficient not evaluable on the probe grid: {exc}") from None
    return model


def load_model(path: str | Path) -> BirthDeathModel | DiffusionModel:
    """Load and validate a model file."""
    p = Path(path)
    return parse_model_text(p.read_text(encoding="utf-8"), name=p.stem)
