"""Systems of m linear forms in n variables: the matrix under study.

Entries that arrive as rational literals stay exact rationals even in
float mode, so distances to the integer grid vanish exactly on rational
points; irrational literals (sqrt, phi, ...) are evaluated once at the
context precision.  Every entry is exactly some rational number either
way (an MPFR value is a dyadic rational), which the integer scan
machinery exploits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from gmpy2 import mpq

from .scalars import ScalarContext, parse_value, scalar_str, to_scalar


@dataclass
class SystemY:
    """m x n matrix of scalars interpreted as m linear forms in n variables."""

    m: int
    n: int
    entries: np.ndarray
    ctx: ScalarContext
    label: Optional[str] = None
    _rows_cache: Optional[list] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m, n must be >= 1")
        if self.entries.shape != (self.m, self.n):
            raise ValueError(f"entries shape {self.entries.shape} != ({self.m}, {self.n})")

    @classmethod
    def from_rows(cls, rows, ctx: ScalarContext, label=None) -> "SystemY":
        ent = np.array([[_keep_exact(v, ctx) for v in row] for row in rows], dtype=object)
        return cls(m=ent.shape[0], n=ent.shape[1], entries=ent, ctx=ctx, label=label)

    @classmethod
    def from_expression(cls, text: str, ctx: ScalarContext) -> "SystemY":
        """Rows split by ';', entries by ','; literals per scalars.parse_value.

        Rational literals (integers, a/b, decimals) are kept exact even in
        float mode so that rational points scan as genuinely rational.
        """
        rows = []
        for row_text in text.split(";"):
            rows.append([parse_entry(tok, ctx) for tok in row_text.split(",")])
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged matrix expression")
        return cls.from_rows(rows, ctx, label=text)

    @classmethod
    def from_json(cls, d: dict, ctx: ScalarContext) -> "SystemY":
        rows = [[parse_entry(str(v), ctx) for v in row] for row in d["entries"]]
        sys = cls.from_rows(rows, ctx, label=d.get("label"))
        if (sys.m, sys.n) != (d["m"], d["n"]):
            raise ValueError("entry shape disagrees with declared m, n")
        return sys

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "entries": [[scalar_str(v, self.ctx) for v in row] for row in self.entries],
            "label": self.label,
        }

    def transpose(self) -> "SystemY":
        return SystemY(m=self.n, n=self.m, entries=self.entries.T.copy(), ctx=self.ctx,
                       label=None if self.label is None else f"transpose({self.label})")

    @property
    def is_rational(self) -> bool:
        return all(isinstance(v, (int, mpq)) for row in self.entries for v in row)

    def float_entries(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries], dtype=float)

    def exact_rows(self) -> list:
        """Per row: (coefficients M_j, modulus D) with entry_j = M_j / D exactly."""
        if self._rows_cache is None:
            rows = []
            for i in range(self.m):
                qs = [_as_mpq(v) for v in self.entries[i]]
                d = 1
                for q in qs:
                    d = d * q.denominator // math.gcd(d, int(q.denominator))
                coeffs = [int(q.numerator) * (d // int(q.denominator)) for q in qs]
                rows.append((coeffs, d))
            self._rows_cache = rows
        return self._rows_cache

    def dist_exact(self, qvec) -> mpq:
        """dist(Y q, Z^m) in the sup norm, exact w.r.t. the stored entries."""
        best = mpq(0)
        for coeffs, d in self.exact_rows():
            r = sum(c * int(x) for c, x in zip(coeffs, qvec)) % d
            num = min(r, d - r)
            val = mpq(num, d)
            if val > best:
                best = val
        return best

    def nearest_p(self, qvec) -> np.ndarray:
        """Coordinatewise nearest integer vector p to Y q (so Yq - p is small)."""
        out = []
        for coeffs, d in self.exact_rows():
            s = sum(c * int(x) for c, x in zip(coeffs, qvec))
            fl, r = divmod(s, d)
            p = fl if 2 * r < d else fl + 1  # ties toward the larger
            out.append(int(p))
        return np.array(out, dtype=object)


def _keep_exact(v, ctx: ScalarContext):
    if isinstance(v, (int, mpq)):
        return mpq(v)
    if isinstance(v, str):
        return parse_entry(v, ctx)
    return to_scalar(v, ctx)


def parse_entry(text: str, ctx: ScalarContext):
    """Scalar literal for a matrix entry; exact rational where possible."""
    from .scalars import _parse_rational

    try:
        return _parse_rational(text)
    except ValueError:
        return parse_value(text, ctx)


def _as_mpq(v) -> mpq:
    if isinstance(v, mpq):
        return v
    if isinstance(v, int):
        return mpq(v)
    num, exp = v.as_mantissa_exp()
    e = int(exp)
    if e >= 0:
        return mpq(int(num) * 2**e, 1)
    return mpq(int(num), 2**-e)


def parse_system(spec: str, ctx: ScalarContext) -> SystemY:
    """Inline expression or a path to a JSON matrix file."""
    if spec.endswith(".json"):
        with open(spec, "r", encoding="utf-8") as fh:
            return SystemY.from_json(json.load(fh), ctx)
    return SystemY.from_expression(spec, ctx)
