"""Monotone positive rate functions of one real variable.

Closed forms cover the cases scans actually use (constants, powers,
power-of-log); anything else can be supplied as a table of (x, value)
pairs, interpolated log-linearly and extended by its end values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RateFunction:
    """Positive function of one variable with a monotonicity flag.

    kind: "const" (c), "power" (c * x**exponent), "logpower"
    (c * log(x+x0)**exponent), or "table".
    """

    kind: str = "const"
    c: float = 1.0
    exponent: float = 0.0
    x0: float = 1.0
    table: tuple = field(default=())
    non_increasing: bool = True

    def __post_init__(self):
        if self.kind not in ("const", "power", "logpower", "table"):
            raise ValueError(f"unknown rate kind {self.kind!r}")
        if self.kind == "table":
            xs = [x for x, _ in self.table]
            vals = [v for _, v in self.table]
            if len(xs) < 2:
                raise ValueError("tabulated rate needs at least 2 points")
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("table abscissae must be strictly increasing")
            if any(v <= 0 for v in vals):
                raise ValueError("rate values must be positive")
            if self.non_increasing and any(b > a * (1 + 1e-12) for a, b in zip(vals, vals[1:])):
                raise ValueError("table violates the non-increasing flag")

    def __call__(self, x: float) -> float:
        x = float(x)
        if self.kind == "const":
            return self.c
        if self.kind == "power":
            return self.c * x**self.exponent
        if self.kind == "logpower":
            return self.c * math.log(x + self.x0) ** self.exponent
        xs = np.array([p for p, _ in self.table])
        vs = np.array([v for _, v in self.table])
        if x <= xs[0]:
            return float(vs[0])
        if x >= xs[-1]:
            return float(vs[-1])
        # log-linear interpolation keeps positivity
        return float(np.exp(np.interp(x, xs, np.log(vs))))

    def eval_array(self, xs):
        xs = np.asarray(xs, dtype=float)
        if self.kind == "const":
            return np.full_like(xs, self.c)
        if self.kind == "power":
            return self.c * xs**self.exponent
        if self.kind == "logpower":
            return self.c * np.log(xs + self.x0) ** self.exponent
        return np.array([self(x) for x in xs])

    def to_json(self):
        d = {"kind": self.kind, "non_increasing": self.non_increasing}
        if self.kind == "table":
            d["table"] = [[float(x), float(v)] for x, v in self.table]
        else:
            d.update(c=self.c, exponent=self.exponent, x0=self.x0)
        return d

    @classmethod
    def from_json(cls, d):
        if d["kind"] == "table":
            return cls(kind="table", table=tuple((x, v) for x, v in d["table"]),
                       non_increasing=d.get("non_increasing", True))
        return cls(kind=d["kind"], c=d.get("c", 1.0), exponent=d.get("exponent", 0.0),
                   x0=d.get("x0", 1.0), non_increasing=d.get("non_increasing", True))


ONE = RateFunction(kind="const", c=1.0)


def const_rate(c: float) -> RateFunction:
    return RateFunction(kind="const", c=float(c))


def power_rate(c: float, exponent: float) -> RateFunction:
    return RateFunction(kind="power", c=float(c), exponent=float(exponent),
                        non_increasing=exponent <= 0)
