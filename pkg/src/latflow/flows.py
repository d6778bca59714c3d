"""Diagonal flows on the space of lattices and their orbit statistics.

The weight cone consists of positive vectors whose first m and last n
coordinate sums agree; the flow expands the first block and contracts
the second.  The norm used on weights throughout the package is the sum
of all coordinates (so the central ray with parameter t has norm 2t) --
fixed here once, converted exactly once in the correspondence module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

from . import lattice
from .errors import EnumerationBudgetExceeded, TooFewSamples
from .fitting import ExponentFit, fit_exponent
from .lattice import LatticeState, shortest_vector
from .rates import RateFunction
from .scalars import ScalarContext
from .systems import SystemY

BALANCE_TOL = 1e-9


@dataclass(frozen=True)
class Weights:
    """Point of the weight cone: k = m + n positive entries, balanced sums."""

    m: int
    n: int
    t: tuple

    def __post_init__(self):
        if len(self.t) != self.m + self.n:
            raise ValueError("weight vector length must be m + n")
        if any(float(v) <= 0 for v in self.t):
            raise ValueError("weights must be strictly positive")
        lhs = sum(self.t[: self.m])
        rhs = sum(self.t[self.m:])
        if isinstance(lhs, mpq) and isinstance(rhs, mpq):
            if lhs != rhs:
                raise ValueError(f"balance violated exactly: {lhs} != {rhs}")
        elif abs(float(lhs) - float(rhs)) > BALANCE_TOL * max(1.0, float(lhs)):
            raise ValueError(f"balance violated: {float(lhs)} != {float(rhs)}")

    @property
    def k(self) -> int:
        return self.m + self.n

    @property
    def norm(self) -> float:
        """Sum of all coordinates -- the package's fixed norm on the cone."""
        return float(sum(float(v) for v in self.t))

    def expanding(self):
        return self.t[: self.m]

    def contracting(self):
        return self.t[self.m:]

    def as_floats(self) -> tuple:
        return tuple(float(v) for v in self.t)


def central_ray(m: int, n: int, t) -> Weights:
    """(t/m, ..., t/m, t/n, ..., t/n); balance holds exactly for rational t."""
    if float(t) <= 0:
        raise ValueError("ray parameter must be positive")
    if isinstance(t, (int, mpq)):
        a, b = mpq(t, m), mpq(t, n)
    else:
        a, b = mpq(_to_fraction(t), m), mpq(_to_fraction(t), n)
    return Weights(m=m, n=n, t=tuple([a] * m + [b] * n))


def _to_fraction(t):
    from fractions import Fraction

    return Fraction(float(t)).limit_denominator(10**12)


def flow_matrix(w: Weights, ctx: ScalarContext) -> np.ndarray:
    """diag(e^{t_1}, ..., e^{t_m}, e^{-t_{m+1}}, ..., e^{-t_k}).

    Exponentials are irrational, so exact-rational contexts cannot hold a
    flow matrix; float mode with precision escalation is the contract.
    """
    if ctx.mode == "rational":
        raise ValueError("flow entries e^t are irrational; rational mode cannot "
                         "represent them, use a float context")
    k = w.k
    with gmpy2.context(precision=ctx.precision_bits):
        out = np.zeros((k, k), dtype=object)
        for i in range(k):
            for j in range(k):
                out[i, j] = mpfr(0)
        for i in range(w.m):
            out[i, i] = gmpy2.exp(mpfr(w.t[i]))
        for j in range(w.n):
            idx = w.m + j
            out[idx, idx] = gmpy2.exp(-mpfr(w.t[idx]))
    return out


def unipotent(y: SystemY) -> np.ndarray:
    """Block matrix [[I_m, Y], [0, I_n]]; determinant 1 exactly."""
    k = y.m + y.n
    out = np.zeros((k, k), dtype=object)
    for i in range(k):
        for j in range(k):
            out[i, j] = 0
        out[i, i] = 1
    for i in range(y.m):
        for j in range(y.n):
            out[i, y.m + j] = y.entries[i, j]
    return out


@dataclass(frozen=True)
class WeightSet:
    """Generator of a uniformly discrete unbounded subset of the cone.

    Kinds: central_ray(step), weighted_ray(direction, step), grid(step),
    explicit(points).  Points are produced up to a norm cap, ordered by
    norm; consecutive points are at least ``spacing`` apart.
    """

    m: int
    n: int
    kind: str = "central_ray"
    step: float = 1.0
    direction: Optional[tuple] = None
    explicit_points: tuple = ()
    spacing: float = 0.5

    def __post_init__(self):
        if self.kind not in ("central_ray", "weighted_ray", "grid", "explicit"):
            raise ValueError(f"unknown weight set kind {self.kind!r}")
        if self.kind == "weighted_ray":
            if self.direction is None:
                raise ValueError("weighted_ray needs a direction")
            Weights(m=self.m, n=self.n, t=tuple(mpq(_to_fraction(v)) for v in self.direction))

    def points(self, norm_cap: float) -> list:
        """Finite truncation: all generated weights with norm <= norm_cap."""
        if self.kind == "explicit":
            pts = [p if isinstance(p, Weights) else Weights(self.m, self.n, tuple(p))
                   for p in self.explicit_points]
            pts = [w for w in pts if w.norm <= norm_cap]
            pts.sort(key=lambda w: (w.norm, w.as_floats()))
            return pts
        if self.kind == "central_ray":
            pts = []
            j = 1
            while True:
                t = mpq(_to_fraction(self.step)) * j
                w = central_ray(self.m, self.n, t)
                if w.norm > norm_cap:
                    break
                pts.append(w)
                j += 1
            return pts
        if self.kind == "weighted_ray":
            d = [mpq(_to_fraction(v)) for v in self.direction]
            dnorm = sum(d)
            pts = []
            j = 1
            while True:
                scale = mpq(_to_fraction(self.step)) * j / dnorm
                t = tuple(v * scale for v in d)
                w = Weights(self.m, self.n, t)
                if w.norm > norm_cap:
                    break
                pts.append(w)
                j += 1
            return pts
        # grid: integer multiples of step in each coordinate, balanced sums
        pts = []
        s = mpq(_to_fraction(self.step))
        half = 1
        while float(s * half) * 2 <= norm_cap:
            half += 1
        for total in range(1, half + 1):
            for left in _compositions(total, self.m):
                for right in _compositions(total, self.n):
                    t = tuple(mpq(v) * s for v in left + right)
                    w = Weights(self.m, self.n, t)
                    if w.norm <= norm_cap:
                        pts.append(w)
        pts.sort(key=lambda w: (w.norm, w.as_floats()))
        return pts


def _compositions(total: int, parts: int):
    """Ordered compositions of ``total`` into ``parts`` positive integers."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass
class TrajectorySample:
    """delta(g_t u_Y g Z^k) at one weight, with the witnessing vector."""

    weights: Weights
    delta: object
    witness: np.ndarray
    certified: bool

    @property
    def norm(self) -> float:
        return self.weights.norm

    @property
    def log_delta(self) -> float:
        return float(gmpy2.log(mpfr(self.delta)))


def orbit_basis(w: Weights, y: SystemY, ctx: ScalarContext, g=None,
                base: Optional[LatticeState] = None) -> np.ndarray:
    """Basis of g_t u_Y g Lambda_0 (columns)."""
    with ctx.active():
        b = unipotent(y)
        if g is not None:
            b = b @ g
        if base is not None:
            b = b @ base.basis
        return flow_matrix(w, ctx) @ b


def trajectory(y: SystemY, tset: WeightSet, norm_cap: float, *,
               ctx: ScalarContext, g=None, base: Optional[LatticeState] = None,
               budget: int = lattice.DEFAULT_ENUM_BUDGET) -> list:
    """Samples of delta along the flow, ordered by weight norm.

    Per-sample enumeration failures are recorded as uncertified samples,
    not raised.
    """
    samples = []
    for w in tset.points(norm_cap):
        basis = orbit_basis(w, y, ctx, g=g, base=base)
        try:
            res = shortest_vector(basis, ctx=ctx, budget=budget)
            samples.append(TrajectorySample(weights=w, delta=res.length,
                                            witness=res.vector, certified=res.certified))
        except EnumerationBudgetExceeded as err:
            best = getattr(err, "best", None)
            if best is None:
                raise
            samples.append(TrajectorySample(weights=w, delta=best.length,
                                            witness=best.vector, certified=False))
    samples.sort(key=lambda s: s.norm)
    return samples


def growth_exponent(samples: list, window: float = 0.5, *,
                    method: str = "tail-max") -> ExponentFit:
    """Estimate of limsup (-log delta)/||t|| from a finite trajectory.

    Reports the tail-window max (headline; sup-type statistic) together
    with the regression slope of -log delta against ||t||.
    """
    if not (0 < window <= 1):
        raise ValueError("window must lie in (0, 1]")
    cert = [s for s in samples if s.certified]
    if len(cert) < 10:
        raise TooFewSamples(f"need >= 10 certified samples, got {len(cert)}")
    horizon = max(s.norm for s in cert)
    cutoff = horizon * (1 - window)
    tail = [s for s in cert if s.norm >= cutoff]
    xs = [s.norm for s in tail]
    ys = [-s.log_delta for s in tail]
    return fit_exponent(xs, ys, method=method, min_points=2, min_baseline=0.0)


@dataclass
class DivergenceEvidence:
    """Per-c largest norm where delta >= c psi(t), plus the overall verdict."""

    horizon: float
    c_entries: list  # (c, last_violation_norm or None, n_violations)
    consistent: bool
    psi_label: str = ""

    def to_json(self):
        return {
            "horizon": self.horizon,
            "per_c": [
                {"c": c, "last_violation": lv, "violations": nv}
                for c, lv, nv in self.c_entries
            ],
            "consistent_with_divergence_faster": self.consistent,
            "psi": self.psi_label,
        }


def diverges_faster(samples: list, psi, c_grid, *, psi_label="") -> DivergenceEvidence:
    """Check delta(g_t Lambda) < c psi(t) eventually, for each c.

    ``psi`` is a RateFunction of the weight norm or a callable on Weights.
    The verdict is evidence at the sampled horizon: consistent iff for
    every c the last violation happens strictly before the horizon.
    """
    if not samples:
        raise TooFewSamples("no samples")
    horizon = max(s.norm for s in samples)
    entries = []
    ok = True
    for c in c_grid:
        c = float(c)
        last = None
        count = 0
        for s in samples:
            bound = c * _eval_psi(psi, s)
            if float(s.delta) >= bound:
                count += 1
                if last is None or s.norm > last:
                    last = s.norm
        entries.append((c, last, count))
        if last is not None and last >= horizon:
            ok = False
    return DivergenceEvidence(horizon=horizon, c_entries=entries, consistent=ok,
                              psi_label=psi_label)


def _eval_psi(psi, sample: TrajectorySample) -> float:
    if isinstance(psi, RateFunction):
        return float(psi(sample.norm))
    return float(psi(sample.weights))
