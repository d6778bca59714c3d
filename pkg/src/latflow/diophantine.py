"""Direct approximation scans on a system of linear forms.

Distances dist(Yq, Z^m) are computed exactly: every stored entry is a
rational number (dyadic for MPFR values), so record detection and
solvability verdicts never hinge on float noise.  Exhaustive sweeps are
used while the q-box fits the node budget; beyond that a reduction-
assisted search over a ladder of diagonal scalings supplies candidate
vectors whose distances are then evaluated exactly.

All "infinitely often / for all large N" verdicts are evidence at a
finite horizon and are tagged with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

from . import lattice
from .errors import TooFewRecords
from .fitting import ExponentFit, fit_exponent
from .flows import WeightSet, unipotent
from .lattice import iter_short_vectors, lll_reduce
from .rates import RateFunction
from .scalars import ScalarContext, to_scalar
from .systems import SystemY, parse_system

DEFAULT_NODE_BUDGET = 2**22
SMALL_BOX_CAP = 48
VWA_MARGIN = 0.35

__all__ = [
    "ApproxRecord", "best_approximations", "omega_estimate", "solve_box",
    "singular_scan", "di_epsilon_test", "vwma_scan", "weighted_singular_scan",
    "transference_check", "khintchine_groshev_sum", "pi_product", "pi_plus",
    "SystemY", "parse_system", "SingularEvidence", "DIEvidence", "VWMAEvidence",
]


@dataclass
class ApproxRecord:
    """Record-setting pair: p nearest to Yq, dist strictly below all smaller q."""

    q: np.ndarray
    p: np.ndarray
    dist: object  # exact mpq
    qnorm: int

    def dist_float(self) -> float:
        return float(self.dist)

    def to_json(self):
        return {"q": [int(v) for v in self.q], "p": [int(v) for v in self.p],
                "dist": float(self.dist), "qnorm": self.qnorm}


# ---------------------------------------------------------------------------
# record sweeps


def best_approximations(y: SystemY, q_max: int, *, node_budget: int = DEFAULT_NODE_BUDGET,
                        ladder_ratio: float = 2.0, per_scale_vectors: int = 64) -> list:
    """Record-setting sequence of (q, p, dist) up to ||q||_inf <= q_max.

    Uses the exhaustive sweep while (2 q_max + 1)^n fits the node budget
    (complete records); otherwise reduction-assisted candidates plus an
    exhaustive prefix (records are exact but completeness is best-effort).
    """
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    if y.n == 1:
        return _records_exhaustive_1d(y, q_max)
    if (2 * q_max + 1) ** y.n <= node_budget:
        return _records_exhaustive_box(y, q_max)
    return _records_assisted(y, q_max, ladder_ratio, per_scale_vectors)


def _records_exhaustive_1d(y: SystemY, q_max: int) -> list:
    rows = y.exact_rows()
    state = [0] * y.m
    best = None
    records = []
    for q in range(1, q_max + 1):
        worst = None
        for i, (coeffs, d) in enumerate(rows):
            state[i] = (state[i] + coeffs[0]) % d
            r = state[i]
            num = min(r, d - r)
            val = mpq(num, d)
            if worst is None or val > worst:
                worst = val
        if best is None or worst < best:
            best = worst
            qvec = np.array([q], dtype=object)
            records.append(ApproxRecord(q=qvec, p=y.nearest_p(qvec),
                                        dist=worst, qnorm=q))
            if worst == 0:
                break
    return records


def _records_exhaustive_box(y: SystemY, q_max: int, chunk: int = 1 << 18) -> list:
    """Two-pass vectorized record sweep over the half-box.

    Pass 1 finds per-shell float minima of the sup distance; pass 2
    exactly evaluates only the points that could be records (float value
    within error margin of the shell minimum, in shells whose minimum can
    beat the running best).  Exactness of the emitted records does not
    depend on float arithmetic.
    """
    yf = y.float_entries()
    err = (abs(yf).max() * y.n * q_max + 1) * 2.0**-48
    shell_min = np.full(q_max + 1, np.inf)
    for block in _half_box_blocks(y.n, q_max, chunk):
        vals = block.astype(float) @ yf.T
        dist_f = np.abs(vals - np.round(vals)).max(axis=1)
        qn = np.abs(block).max(axis=1)
        np.minimum.at(shell_min, qn, dist_f)
    candidate = np.zeros(q_max + 1, dtype=bool)
    best_f = math.inf
    for qn in range(1, q_max + 1):
        if shell_min[qn] < best_f + 2 * err:
            candidate[qn] = True
        best_f = min(best_f, shell_min[qn])
    shell_points: dict = {}
    for block in _half_box_blocks(y.n, q_max, chunk):
        vals = block.astype(float) @ yf.T
        dist_f = np.abs(vals - np.round(vals)).max(axis=1)
        qn = np.abs(block).max(axis=1)
        mask = candidate[qn] & (dist_f <= shell_min[qn] + 2 * err)
        for row in block[mask]:
            shell_points.setdefault(int(np.abs(row).max()), []).append(
                tuple(int(v) for v in row))
    best = None
    records = []
    for qn in sorted(shell_points):
        shell_best = None
        shell_q = None
        for q in sorted(shell_points[qn]):
            dq = y.dist_exact(q)
            if shell_best is None or dq < shell_best:
                shell_best, shell_q = dq, q
        if best is None or shell_best < best:
            best = shell_best
            qvec = np.array(shell_q, dtype=object)
            records.append(ApproxRecord(q=qvec, p=y.nearest_p(qvec),
                                        dist=shell_best, qnorm=qn))
            if best == 0:
                break
    return records


def _records_assisted(y: SystemY, q_max: int, ladder_ratio: float,
                      per_scale_vectors: int) -> list:
    ctx = y.ctx
    pool = {}

    def add_candidate(qvec):
        key = tuple(int(v) for v in qvec)
        nz = next((c for c in key if c != 0), 0)
        if nz < 0:
            key = tuple(-c for c in key)
        if key in pool or not any(key):
            return
        if max(abs(c) for c in key) > q_max:
            return
        pool[key] = y.dist_exact(key)

    small = min(q_max, SMALL_BOX_CAP)
    for rec in _records_exhaustive_box(y, small):
        add_candidate([int(v) for v in rec.q])

    scale = ladder_ratio
    k = y.m + y.n
    while math.log(scale) <= math.log(float(q_max)) * (1 + y.n / y.m) + 1e-9:
        attempt = ctx
        for _ in range(3):
            basis = _scaled_basis(y, scale, attempt)
            try:
                red = lll_reduce(basis, ctx=attempt)
                with attempt.active():
                    norms = [float(sum(red.basis[i, j] ** 2 for i in range(k)))
                             for j in range(k)]
                    radius = min(norms) * 4.0
                    count = 0
                    try:
                        for coeffs, _nsq in iter_short_vectors(red.basis, radius,
                                                               ctx=attempt, budget=200000):
                            vec = red.transform @ np.array(coeffs, dtype=object)
                            add_candidate(vec[y.m:])
                            count += 1
                            if count >= per_scale_vectors:
                                break
                    except lattice.EnumerationBudgetExceeded:
                        pass
                break
            except (lattice.NonInvertibleBasis, lattice.PrecisionInsufficient):
                try:
                    attempt = attempt.escalate()
                except lattice.PrecisionInsufficient:
                    break
        scale *= ladder_ratio
    ordered = sorted(pool.items(), key=lambda kv: (max(abs(c) for c in kv[0]), kv[0]))
    best = None
    records = []
    idx = 0
    while idx < len(ordered):
        qn = max(abs(c) for c in ordered[idx][0])
        shell_best = None
        shell_q = None
        while idx < len(ordered) and max(abs(c) for c in ordered[idx][0]) == qn:
            key, dq = ordered[idx]
            if shell_best is None or dq < shell_best:
                shell_best, shell_q = dq, key
            idx += 1
        if shell_best is not None and (best is None or shell_best < best):
            best = shell_best
            qvec = np.array(shell_q, dtype=object)
            records.append(ApproxRecord(q=qvec, p=y.nearest_p(qvec), dist=shell_best,
                                        qnorm=qn))
            if best == 0:
                break
    return records


def _scaled_basis(y: SystemY, scale: float, ctx: ScalarContext) -> np.ndarray:
    """diag(N^{n/m} I_m, N^{-1} I_n) u_Y for the Dirichlet scaling N."""
    k = y.m + y.n
    with ctx.active():
        n_val = mpfr(scale)
        top = n_val ** (mpfr(y.n) / y.m)
        bot = 1 / n_val
        b = unipotent(y).astype(object)
        out = np.zeros((k, k), dtype=object)
        for i in range(k):
            f = top if i < y.m else bot
            for j in range(k):
                out[i, j] = f * b[i, j]
        return out


# ---------------------------------------------------------------------------
# exponent estimation


def omega_estimate(records: list, tail: int = 16, *, method: str = "max-chord",
                   m: int = 1, n: int = 1) -> ExponentFit:
    """Diophantine exponent estimate from the record sequence.

    x = log qnorm, y = log(1/dist) over the last ``tail`` records.  The
    headline max-chord estimate is clipped from below at the Dirichlet
    exponent n/m (true for every Y); a zero distance means a rational
    point and maps to +inf with the rational flag set.
    """
    usable = [r for r in records if r.qnorm > 1]
    if any(r.dist == 0 for r in records):
        fit = ExponentFit(estimate=float("inf"), method=method, tail_max=float("inf"),
                          ls_slope=float("inf"), max_chord=float("inf"),
                          n_used=len(usable), rational_point=True)
        return fit
    if len(usable) < 3:
        raise TooFewRecords(f"need >= 3 records with qnorm > 1, got {len(usable)}")
    xs = [math.log(r.qnorm) for r in usable]
    ys = [-math.log(r.dist_float()) for r in usable]
    floor = n / m if method == "max-chord" else None
    return fit_exponent(xs, ys, method=method, tail=tail, floor=floor, min_points=3)


# ---------------------------------------------------------------------------
# box solvability (the workhorse of every singularity-type scan)


@dataclass
class BoxWitness:
    q: np.ndarray
    p: np.ndarray
    dist: object


def solve_box(y: SystemY, row_bounds, col_bounds, *, budget: int = 300000):
    """Find integer (p, q), q != 0, with |Y_i q - p_i| < row_bounds[i] and
    |q_j| < col_bounds[j]; or certify there is none.

    Returns (status, witness): status in {"solvable", "unsolvable", "unknown"}.
    Strict inequalities, evaluated exactly against the stored entries.
    """
    ctx = y.ctx
    m, n = y.m, y.n
    rows = [float(b) for b in row_bounds]
    cols = [float(b) for b in col_bounds]
    if all(b <= 1 for b in cols):
        return "unsolvable", None
    # cheap pre-pass: small multiples of unit q directions
    for j in range(n):
        for s in (1, 2, 3):
            if s < cols[j]:
                q = [0] * n
                q[j] = s
                w = _check_box(y, q, row_bounds, col_bounds)
                if w is not None:
                    return "solvable", w
    k = m + n
    attempt = ctx
    for _ in range(3):
        with attempt.active():
            basis = unipotent(y).astype(object)
            scaled = np.zeros((k, k), dtype=object)
            for i in range(k):
                if i < m:
                    # a row bound >= 0.51 is vacuous (dist <= 1/2 always);
                    # clamping the scale keeps the search region bounded
                    # without losing any witness.
                    f = 1 / to_scalar(min(rows[i], 0.51), attempt)
                else:
                    f = 1 / to_scalar(cols[i - m], attempt)
                for j in range(k):
                    scaled[i, j] = f * basis[i, j]
        try:
            red = lll_reduce(scaled, ctx=attempt)
            radius = float(k) * (1 + 1e-12)
            with attempt.active():
                for coeffs, _nsq in iter_short_vectors(red.basis, to_scalar(radius, attempt),
                                                       ctx=attempt, budget=budget):
                    vec = red.transform @ np.array(coeffs, dtype=object)
                    for cand in (vec, -vec):
                        q = cand[m:]
                        if not any(int(v) != 0 for v in q):
                            continue
                        w = _check_box(y, [int(v) for v in q], row_bounds, col_bounds)
                        if w is not None:
                            return "solvable", w
            return "unsolvable", None
        except lattice.EnumerationBudgetExceeded:
            return "unknown", None
        except (lattice.NonInvertibleBasis, lattice.PrecisionInsufficient):
            try:
                attempt = attempt.escalate()
            except lattice.PrecisionInsufficient:
                return "unknown", None
    return "unknown", None


def _check_box(y: SystemY, qvec, row_bounds, col_bounds) -> Optional[BoxWitness]:
    if any(not mpq(abs(int(qj))) < _to_exact(bj) for qj, bj in zip(qvec, col_bounds)):
        return None
    p = y.nearest_p(qvec)
    for i, (coeffs, d) in enumerate(y.exact_rows()):
        r = sum(c * int(x) for c, x in zip(coeffs, qvec)) % d
        num = min(r, d - r)
        if not mpq(num, d) < mpq(_to_exact(row_bounds[i])):
            return None
    return BoxWitness(q=np.array([int(v) for v in qvec], dtype=object), p=p,
                      dist=y.dist_exact(qvec))


def _to_exact(b):
    if isinstance(b, (int, mpq)):
        return mpq(b)
    if isinstance(b, mpfr):
        num, exp = b.as_mantissa_exp()
        e = int(exp)
        return mpq(int(num) * 2**e, 1) if e >= 0 else mpq(int(num), 2**-e)
    from fractions import Fraction

    f = Fraction(float(b))
    return mpq(f.numerator, f.denominator)


# ---------------------------------------------------------------------------
# singularity-type scans


@dataclass
class SingularEvidence:
    """Per-c largest N where the Dirichlet-type system was unsolvable.

    ``witnesses`` keeps, per c, the solving pair at the largest solvable N.
    """

    horizon: float
    n_grid: list
    per_c: list  # (c, last_failure_N or None, failures, unknowns)
    consistent: bool
    dirichlet_exponent: float
    witnesses: list = None

    def to_json(self):
        return {
            "horizon": self.horizon,
            "n_grid": list(self.n_grid),
            "per_c": [{"c": c, "last_failure": lf, "failures": nf, "unknowns": nu}
                      for c, lf, nf, nu in self.per_c],
            "consistent_with_singular": self.consistent,
            "dirichlet_exponent": self.dirichlet_exponent,
            "witnesses": [
                {"c": c, "N": nv, "q": [str(v) for v in w.q],
                 "p": [str(v) for v in w.p]}
                for c, nv, w in (self.witnesses or [])
            ],
        }


def _geometric_grid(n_max: float, ratio: float = 2.0, start: float = 2.0) -> list:
    out = []
    v = start
    while v <= n_max * (1 + 1e-12):
        out.append(v)
        v *= ratio
    if out and out[-1] < n_max:
        out.append(float(n_max))
    return out


def singular_scan(y: SystemY, phi: RateFunction, c_grid, n_max: float, *,
                  n_grid=None, budget: int = 300000) -> SingularEvidence:
    """Evidence scan for the rate-phi singularity property.

    For each c and N it checks solvability of dist(Yq, Z^m) < c phi(N) / N^(n/m),
    ||q||_inf < c N; the verdict is consistent iff failures stop strictly
    before the horizon for every c.  The Dirichlet exponent is n/m (the
    balanced scaling), making phi == 1 the critical threshold.
    """
    expo = y.n / y.m
    grid = list(n_grid) if n_grid is not None else _geometric_grid(n_max)
    per_c = []
    witnesses = []
    consistent = True
    for c in sorted(float(c) for c in c_grid):
        last_fail = None
        fails = 0
        unknowns = 0
        deepest = None
        for nval in grid:
            bound = c * phi(nval) / nval**expo
            status, w = solve_box(y, [bound] * y.m, [c * nval] * y.n, budget=budget)
            if status == "unsolvable":
                fails += 1
                last_fail = nval
            elif status == "unknown":
                unknowns += 1
            else:
                deepest = (c, nval, w)
        per_c.append((c, last_fail, fails, unknowns))
        if deepest is not None:
            witnesses.append(deepest)
        if last_fail is not None and last_fail >= grid[-1] * (1 - 1e-12):
            consistent = False
        if unknowns:
            consistent = consistent and False
    return SingularEvidence(horizon=grid[-1], n_grid=grid, per_c=per_c,
                            consistent=consistent, dirichlet_exponent=expo,
                            witnesses=witnesses)


@dataclass
class DIEvidence:
    """Solvability of the epsilon-shrunk Dirichlet system along a t-grid."""

    epsilon: float
    t_grid: list
    failures: list
    unknowns: list
    first_success: Optional[float]
    in_di_up_to_horizon: bool

    def to_json(self):
        return {
            "epsilon": self.epsilon,
            "horizon": self.t_grid[-1] if self.t_grid else None,
            "failures": list(self.failures),
            "unknowns": list(self.unknowns),
            "first_success": self.first_success,
            "in_di_up_to_horizon": self.in_di_up_to_horizon,
        }


def di_epsilon_test(y: SystemY, epsilon, t_grid, *, budget: int = 300000) -> DIEvidence:
    """Dirichlet-improvement test: |Yq - p| < eps e^{-t/m}, |q| < eps e^{t/n}."""
    eps = float(epsilon)
    if not (0 < eps < 1):
        raise ValueError("epsilon must lie in (0, 1)")
    ctx = y.ctx
    failures = []
    unknowns = []
    first_success = None
    grid = [float(t) for t in t_grid]
    for t in grid:
        with ctx.active():
            a = eps * gmpy2.exp(mpfr(-t) / y.m)
            b = eps * gmpy2.exp(mpfr(t) / y.n)
        status, _w = solve_box(y, [a] * y.m, [b] * y.n, budget=budget)
        if status == "solvable":
            if first_success is None:
                first_success = t
        elif status == "unsolvable":
            failures.append(t)
        else:
            unknowns.append(t)
    ok = first_success is not None and not unknowns and \
        all(t < first_success for t in failures)
    return DIEvidence(epsilon=eps, t_grid=grid, failures=failures, unknowns=unknowns,
                      first_success=first_success, in_di_up_to_horizon=ok)


# ---------------------------------------------------------------------------
# multiplicative approximation


def pi_product(x) -> float:
    """Product of |x_i|."""
    out = 1.0
    for v in x:
        out *= abs(float(v))
    return out


def pi_plus(x) -> float:
    """Product of max(|x_i|, 1)."""
    out = 1.0
    for v in x:
        out *= max(abs(float(v)), 1.0)
    return out


@dataclass
class VWMAEvidence:
    q_max: int
    delta_grid: list
    degenerate: bool
    shell_counts: dict  # delta -> list of (shell_hi, count)
    exact_zero_solutions: int
    consistent: bool

    def to_json(self):
        return {
            "q_max": self.q_max,
            "delta_grid": list(self.delta_grid),
            "degenerate": self.degenerate,
            "shell_counts": {str(d): v for d, v in self.shell_counts.items()},
            "exact_zero_solutions": self.exact_zero_solutions,
            "consistent_with_vwma": self.consistent,
        }


def vwma_scan(y: SystemY, delta_grid, q_max: int, *, chunk: int = 1 << 18,
              margin: float = 0.25) -> VWMAEvidence:
    """Count solutions of Pi(Yq + p) < Pi_plus(q)^-(1+delta) up to the horizon.

    Two passes: a float sweep flags candidates near the threshold, exact
    arithmetic confirms them.  A finite horizon cannot tell "infinitely
    many" from sporadic boundary hits, so the consistency verdict demands
    a deep hit in the tail: some solution with ||q||_inf >= sqrt(q_max)
    whose observed exponent -log Pi / log Pi_plus clears (1+delta) by the
    relative ``margin`` (exact rational relations count as depth inf).
    """
    deltas = sorted(float(d) for d in delta_grid)
    if any(d <= 0 for d in deltas):
        raise ValueError("delta grid must be positive")
    degenerate = any(all(v == 0 for v in row) for row in y.entries)
    if degenerate:
        return VWMAEvidence(q_max=q_max, delta_grid=deltas, degenerate=True,
                            shell_counts={d: [] for d in deltas},
                            exact_zero_solutions=0, consistent=False)
    yf = y.float_entries()
    d_min = deltas[0]
    counts = {d: {} for d in deltas}
    deep_tail_hit = {d: False for d in deltas}
    tail_norm = math.sqrt(q_max)
    zero_hits = 0
    err_abs = (abs(yf).max() * y.n * q_max + 1) * 2.0**-46
    for block in _half_box_blocks(y.n, q_max, chunk):
        vals = block.astype(float) @ yf.T
        res = np.abs(vals - np.round(vals))
        piq = np.prod(np.maximum(np.abs(block.astype(float)), 1.0), axis=1)
        lhs = np.prod(np.maximum(res, 1e-300), axis=1)
        thresh = piq ** -(1.0 + d_min)
        near = np.nonzero((lhs < thresh * 4.0) | (res.min(axis=1) < err_abs * 4))[0]
        for idx in near:
            qvec = [int(v) for v in block[idx]]
            qn = max(abs(c) for c in qvec)
            dist_rows = _exact_residues(y, qvec)
            pq = pi_plus(qvec)
            if any(r == 0 for r in dist_rows):
                zero_hits += 1
                for d in deltas:
                    _bump(counts[d], qn)
                    if qn >= tail_norm:
                        deep_tail_hit[d] = True
                continue
            lhs_exact = mpq(1)
            for r in dist_rows:
                lhs_exact *= r
            if pq <= 1.0:
                continue
            observed = -math.log(float(lhs_exact)) / math.log(pq)
            for d in deltas:
                if float(lhs_exact) < pq ** -(1.0 + d):
                    _bump(counts[d], qn)
                    if qn >= tail_norm and observed >= (1.0 + d) * (1.0 + margin):
                        deep_tail_hit[d] = True
    shells = {d: sorted(counts[d].items()) for d in deltas}
    consistent = any(deep_tail_hit[d] for d in deltas)
    return VWMAEvidence(q_max=q_max, delta_grid=deltas, degenerate=False,
                        shell_counts=shells, exact_zero_solutions=zero_hits,
                        consistent=consistent)


def _bump(d, qnorm):
    shell = 1 << max(0, (int(qnorm)).bit_length() - 1)
    d[shell * 2 - 1] = d.get(shell * 2 - 1, 0) + 1


def _exact_residues(y: SystemY, qvec) -> list:
    out = []
    for coeffs, d in y.exact_rows():
        r = sum(c * int(x) for c, x in zip(coeffs, qvec)) % d
        out.append(mpq(min(r, d - r), d))
    return out


def _half_box_blocks(n: int, q_max: int, chunk: int):
    """Numpy blocks covering {q != 0, first nonzero > 0, ||q||_inf <= q_max}."""
    if n == 1:
        qs = np.arange(1, q_max + 1, dtype=np.int64).reshape(-1, 1)
        for i in range(0, len(qs), chunk):
            yield qs[i:i + chunk]
        return
    # first coordinate 0 with remainder in the (n-1)-half-box, or >= 1 with free rest
    for sub in _half_box_blocks(n - 1, q_max, chunk):
        yield np.hstack([np.zeros((len(sub), 1), dtype=np.int64), sub])
    rest = np.arange(-q_max, q_max + 1, dtype=np.int64)
    grids = [rest] * (n - 1)
    mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, n - 1)
    width = max(1, chunk // len(mesh))
    for start in range(1, q_max + 1, width):
        firsts = np.arange(start, min(start + width, q_max + 1), dtype=np.int64)
        col = np.repeat(firsts, len(mesh)).reshape(-1, 1)
        block = np.hstack([col, np.tile(mesh, (len(firsts), 1))])
        for i in range(0, len(block), chunk):
            yield block[i:i + chunk]


# ---------------------------------------------------------------------------
# weighted singularity


def weighted_singular_scan(y: SystemY, phi, tset: WeightSet, c_grid, norm_cap: float,
                           *, budget: int = 300000) -> SingularEvidence:
    """(phi, T)-singularity evidence: per t in T and c, solvability of
    |Y_i q - p_i| < c phi(t) e^{-t_i}, |q_j| < c phi(t) e^{t_{m+j}}.
    """
    ctx = y.ctx
    points = tset.points(norm_cap)
    if not points:
        raise ValueError("empty weight set truncation")
    per_c = []
    consistent = True
    horizon = max(w.norm for w in points)
    for c in sorted(float(c) for c in c_grid):
        last_fail = None
        fails = 0
        unknowns = 0
        for w in points:
            pv = float(phi(w.norm)) if isinstance(phi, RateFunction) else float(phi(w))
            with ctx.active():
                rows = [c * pv * gmpy2.exp(-mpfr(w.t[i])) for i in range(y.m)]
                cols = [c * pv * gmpy2.exp(mpfr(w.t[y.m + j])) for j in range(y.n)]
            status, _w = solve_box(y, rows, cols, budget=budget)
            if status == "unsolvable":
                fails += 1
                last_fail = w.norm
            elif status == "unknown":
                unknowns += 1
        per_c.append((c, last_fail, fails, unknowns))
        if last_fail is not None and last_fail >= horizon * (1 - 1e-12):
            consistent = False
        if unknowns:
            consistent = False
    return SingularEvidence(horizon=horizon, n_grid=[w.norm for w in points],
                            per_c=per_c, consistent=consistent,
                            dirichlet_exponent=y.n / y.m)


# ---------------------------------------------------------------------------
# transference + series diagnostics


@dataclass
class TransferenceReport:
    omega: ExponentFit
    omega_transpose: ExponentFit
    vwa: bool
    vwa_transpose: bool
    singular: SingularEvidence
    singular_transpose: SingularEvidence
    vwa_agree: bool
    singular_agree: bool

    def to_json(self):
        return {
            "omega": self.omega.to_json(),
            "omega_transpose": self.omega_transpose.to_json(),
            "vwa": self.vwa, "vwa_transpose": self.vwa_transpose,
            "vwa_agree": self.vwa_agree,
            "singular": self.singular.to_json(),
            "singular_transpose": self.singular_transpose.to_json(),
            "singular_agree": self.singular_agree,
        }


def vwa_verdict(fit: ExponentFit, m: int, n: int, margin: float = VWA_MARGIN) -> bool:
    """Very-well-approximable evidence: exponent above the Dirichlet value
    by the relative margin (rational points count as VWA).

    Uses the regression slope: it is centered on the true exponent for
    generic points, where the sup-type estimators carry an upward bias
    that varies with (m, n) at desk horizons.
    """
    if fit.rational_point:
        return True
    return fit.ls_slope > (n / m) * (1 + margin)


def transference_check(y: SystemY, *, q_max: int = 10**4, n_max: float = 10**4,
                       c_grid=(0.5, 0.25), tail: int = 16) -> TransferenceReport:
    """Compare VWA/singular verdicts of Y and its transpose."""
    yt = y.transpose()
    recs = best_approximations(y, q_max)
    recs_t = best_approximations(yt, q_max)
    fit = omega_estimate(recs, tail=tail, m=y.m, n=y.n)
    fit_t = omega_estimate(recs_t, tail=tail, m=yt.m, n=yt.n)
    from .rates import ONE

    sing = singular_scan(y, ONE, c_grid, n_max)
    sing_t = singular_scan(yt, ONE, c_grid, n_max)
    vwa = vwa_verdict(fit, y.m, y.n)
    vwa_t = vwa_verdict(fit_t, yt.m, yt.n)
    return TransferenceReport(
        omega=fit, omega_transpose=fit_t, vwa=vwa, vwa_transpose=vwa_t,
        singular=sing, singular_transpose=sing_t,
        vwa_agree=(vwa == vwa_t),
        singular_agree=(sing.consistent == sing_t.consistent),
    )


@dataclass
class SeriesReport:
    partial_sums: list  # (K, S_K)
    final: float
    diagnostic: str  # "converges" | "diverges" | "inconclusive"
    tail_exponent: float

    def to_json(self):
        return {"partial_sums": [[k, s] for k, s in self.partial_sums],
                "final": self.final, "diagnostic": self.diagnostic,
                "tail_exponent": self.tail_exponent}


def khintchine_groshev_sum(phi: RateFunction, m: int, n: int, k_max: int) -> SeriesReport:
    """Partial sums of sum_k k^(n-1) phi(k)^m with a tail-exponent diagnostic.

    The series converges iff the terms decay faster than 1/k; the
    diagnostic fits the local exponent of the term sequence at the tail
    and reports inconclusive inside a +-0.05 band around the threshold.
    """
    ks = np.arange(1, k_max + 1, dtype=float)
    terms = ks ** (n - 1) * phi.eval_array(ks) ** m
    csum = np.cumsum(terms)
    checkpoints = []
    kk = 10
    while kk < k_max:
        checkpoints.append((kk, float(csum[kk - 1])))
        kk *= 10
    checkpoints.append((k_max, float(csum[-1])))
    lo, hi = max(1, k_max // 2), k_max
    with np.errstate(divide="ignore"):
        slope = (math.log(terms[hi - 1]) - math.log(terms[lo - 1])) / \
            (math.log(hi) - math.log(lo)) if terms[hi - 1] > 0 and terms[lo - 1] > 0 \
            else -math.inf
    p_hat = -slope
    if p_hat > 1.05:
        diag = "converges"
    elif p_hat < 0.95:
        diag = "diverges"
    else:
        # boundary exponent: compare dyadic partial-sum increments.
        # Divergent tails (harmonic-like) add a non-shrinking amount per
        # doubling; convergent ones shrink geometrically.
        inc1 = float(csum[-1] - csum[k_max // 2 - 1])
        inc0 = float(csum[k_max // 2 - 1] - csum[k_max // 4 - 1])
        if inc0 <= 0:
            diag = "converges"
        else:
            ratio = inc1 / inc0
            if ratio > 0.9:
                diag = "diverges"
            elif ratio < 0.8:
                diag = "converges"
            else:
                diag = "inconclusive"
    return SeriesReport(partial_sums=checkpoints, final=float(csum[-1]),
                        diagnostic=diag, tail_exponent=p_hat)
