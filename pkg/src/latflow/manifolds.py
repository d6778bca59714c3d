"""Parameterized analytic families of linear-form systems and the
experiment harnesses that probe them.

Families are registered by name so specs serialize cleanly; evaluation
keeps rational parameter values exact (a rational point on a curve is a
genuinely rational system).  All samplers draw from a counter-based
Philox generator keyed by the experiment seed, so every report is
reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

from . import diophantine as dio
from . import flows
from . import lattice
from .errors import FlatFunction, UnachievableRate
from .rates import ONE, RateFunction
from .scalars import ScalarContext, to_scalar
from .systems import SystemY

# ---------------------------------------------------------------------------
# manifold specs


@dataclass
class ManifoldSpec:
    """Analytic family U -> M_{m,n}, from a registered evaluator."""

    family: str
    m: int
    n: int
    d: int
    domain: tuple  # ((lo, hi), ...) of length d
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if len(self.domain) != self.d:
            raise ValueError("domain box dimension disagrees with d")

    def __call__(self, x, ctx: Optional[ScalarContext] = None) -> SystemY:
        ctx = ctx or ScalarContext()
        return _FAMILIES[self.family](self, _as_param(x, self.d), ctx)

    def to_json(self) -> dict:
        params = {}
        for key, val in self.params.items():
            if isinstance(val, np.ndarray):
                params[key] = [[str(v) for v in row] for row in np.atleast_2d(val)]
            else:
                params[key] = val
        return {"family": self.family, "m": self.m, "n": self.n, "d": self.d,
                "domain": [[float(a), float(b)] for a, b in self.domain],
                "params": params}

    @classmethod
    def from_json(cls, d: dict) -> "ManifoldSpec":
        params = dict(d.get("params", {}))
        for key in ("a_prime", "a0"):
            if key in params and isinstance(params[key], list):
                params[key] = np.array([[_parse_param(v) for v in row]
                                        for row in params[key]], dtype=object)
        return cls(family=d["family"], m=d["m"], n=d["n"], d=d["d"],
                   domain=tuple((a, b) for a, b in d["domain"]), params=params)


def _parse_param(text):
    from .systems import parse_entry

    return parse_entry(str(text), ScalarContext())


def _as_param(x, d):
    if np.isscalar(x) or isinstance(x, (mpfr, mpq)):
        return np.array([x], dtype=object) if d == 1 else np.array(x, dtype=object)
    return np.asarray(x, dtype=object).reshape(-1)


def _exactify(v):
    """floats become exact dyadic rationals; exact types pass through."""
    if isinstance(v, (int, mpq)):
        return mpq(v)
    if isinstance(v, float):
        from fractions import Fraction

        f = Fraction(v)
        return mpq(f.numerator, f.denominator)
    return v


def _eval_mahler_curve(spec: ManifoldSpec, x, ctx: ScalarContext) -> SystemY:
    x0 = _exactify(x[0])
    n = spec.n
    with ctx.active():
        row = []
        acc = to_scalar(1, ctx) if not isinstance(x0, mpq) else mpq(1)
        for _ in range(n):
            acc = acc * x0
            row.append(acc)
    return SystemY.from_rows([row], ctx, label=f"mahler_curve({n})")


def _eval_affine(spec: ManifoldSpec, x, ctx: ScalarContext) -> SystemY:
    a_prime = spec.params["a_prime"]  # s x (n - s)
    a0 = spec.params["a0"]  # 1 x (n - s)
    s = a_prime.shape[0]
    xs = [_exactify(v) for v in x]
    if len(xs) != s:
        raise ValueError(f"parameter has length {len(xs)}, expected {s}")
    with ctx.active():
        tail = []
        for j in range(a_prime.shape[1]):
            acc = a0[0, j]
            for i in range(s):
                acc = acc + xs[i] * a_prime[i, j]
            tail.append(acc)
    return SystemY.from_rows([list(xs) + tail], ctx, label="affine")


def _eval_matrix_mahler(spec: ManifoldSpec, x, ctx: ScalarContext) -> SystemY:
    m = spec.m
    degree = spec.params.get("degree", spec.n // m)
    xmat = np.array([_exactify(v) for v in x], dtype=object).reshape(m, m)
    with ctx.active():
        blocks = []
        acc = xmat
        for _ in range(degree):
            blocks.append(acc.copy())
            acc = acc @ xmat
    rows = [[blocks[b][i, j] for b in range(degree) for j in range(m)]
            for i in range(m)]
    return SystemY.from_rows(rows, ctx, label=f"matrix_mahler({degree})")


def _eval_poly(spec: ManifoldSpec, x, ctx: ScalarContext) -> SystemY:
    coeffs = spec.params["coeffs"]  # m x n x (deg+1) nested lists
    x0 = _exactify(x[0])
    with ctx.active():
        rows = []
        for crow in coeffs:
            row = []
            for cs in crow:
                acc = mpq(0) if isinstance(x0, mpq) else to_scalar(0, ctx)
                for c in reversed([_exactify(v) for v in cs]):
                    acc = acc * x0 + c
                row.append(acc)
            rows.append(row)
    return SystemY.from_rows(rows, ctx, label="poly")


_FAMILIES: dict = {
    "mahler_curve": _eval_mahler_curve,
    "affine": _eval_affine,
    "matrix_mahler": _eval_matrix_mahler,
    "poly": _eval_poly,
}


def mahler_curve(n: int, domain=(1.0, 2.0)) -> ManifoldSpec:
    """x -> (x, x^2, ..., x^n), the classical extremal curve family."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return ManifoldSpec(family="mahler_curve", m=1, n=n, d=1, domain=(tuple(domain),))


def affine_subspace(a_prime, a0, domain=None) -> ManifoldSpec:
    """x -> (x, x A' + a0) as a 1 x n system; d = s parameters.

    The composite matrix stacking a0 over A' drives the approximation
    properties every point of the subspace inherits.
    """
    ap = np.array([[v for v in row] for row in np.atleast_2d(a_prime)], dtype=object)
    a0r = np.array([[v for v in np.ravel(a0)]], dtype=object)
    s, rest = ap.shape
    if a0r.shape[1] != rest:
        raise ValueError("a0 width disagrees with a_prime")
    n = s + rest
    domain = domain or tuple((0.0, 1.0) for _ in range(s))
    return ManifoldSpec(family="affine", m=1, n=n, d=s, domain=tuple(domain),
                        params={"a_prime": ap, "a0": a0r})


def composite_matrix(spec: ManifoldSpec) -> np.ndarray:
    """A = [a0; A'] in M_{s+1, n-s} for an affine spec."""
    if spec.family != "affine":
        raise ValueError("composite matrix only defined for affine specs")
    return np.vstack([spec.params["a0"], spec.params["a_prime"]])


def matrix_mahler(degree: int, m: int, box=(1.0, 2.0)) -> ManifoldSpec:
    """X -> (X, X^2, ..., X^degree) on m x m matrices; d = m^2 parameters."""
    dom = []
    for i in range(m):
        for j in range(m):
            dom.append(tuple(box) if i == j else (-0.5, 0.5))
    return ManifoldSpec(family="matrix_mahler", m=m, n=m * degree, d=m * m,
                        domain=tuple(dom), params={"degree": degree})


# ---------------------------------------------------------------------------
# samplers


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator: one master seed, per-purpose streams."""
    return np.random.Generator(np.random.Philox(key=[seed, stream]))


def sample_points(domain, count: int, seed: int, stream: int = 0) -> np.ndarray:
    """Stratified cells (one uniform draw per cell) plus plain uniform points.

    Cell centers themselves are never emitted: exact low-height rational
    parameters are measure-zero special points and would corrupt
    "almost every" statistics; they are handled by the special-point
    machinery instead.
    """
    d = len(domain)
    lo = np.array([a for a, _ in domain], dtype=float)
    hi = np.array([b for _, b in domain], dtype=float)
    rng = philox(seed, stream)
    n_strat = count // 2
    pts = []
    if n_strat > 0:
        per_axis = max(1, int(round(n_strat ** (1.0 / d))))
        cells = np.stack(np.meshgrid(*[np.arange(per_axis)] * d, indexing="ij"),
                         axis=-1).reshape(-1, d)
        reps = int(math.ceil(n_strat / len(cells)))
        cells = np.tile(cells, (reps, 1))[:n_strat]
        width = (hi - lo) / per_axis
        pts.append(lo + (cells + rng.random((n_strat, d))) * width)
    n_rand = count - sum(len(p) for p in pts)
    pts.append(lo + (hi - lo) * rng.random((n_rand, d)))
    return np.vstack(pts)[:count]


# ---------------------------------------------------------------------------
# (C, alpha)-good empirical fits


@dataclass
class GoodFit:
    """Empirical sublevel-measure fit: fraction(eps) ~ C (eps/sup)^alpha."""

    c_const: float
    alpha: float
    ball: tuple
    eps_grid: list
    fractions: list
    sup_value: float
    r_squared: float

    def to_json(self):
        return {"C": self.c_const, "alpha": self.alpha,
                "ball": [float(self.ball[0]), float(self.ball[1])],
                "eps_grid": list(self.eps_grid), "fractions": list(self.fractions),
                "sup": self.sup_value, "r_squared": self.r_squared}


def cag_estimate(f: Callable, ball, eps_grid=None, *, samples: int = 20001,
                 seed: int = 0, flat_tol: float = 1e-12) -> GoodFit:
    """Monte Carlo + grid estimate of sublevel-set measure ratios.

    Fits alpha as the log-log slope of fraction against eps/sup and C as
    the max residual intercept, so the bound fraction <= C (eps/sup)^alpha
    holds on every grid point.
    """
    center, radius = float(ball[0]), float(ball[1])
    n_grid = samples // 2
    xs_grid = np.linspace(center - radius, center + radius, max(n_grid, 2))
    rng = philox(seed, stream=7)
    xs_rand = center + radius * (2 * rng.random(samples - len(xs_grid)) - 1)
    xs = np.concatenate([xs_grid, xs_rand])
    vals = np.abs(_vector_eval(f, xs))
    sup = float(vals.max())
    if sup < flat_tol:
        raise FlatFunction(f"sup |f| = {sup:.3e} below tolerance on the ball")
    if eps_grid is None:
        eps_grid = [sup * 2.0 ** (-j) for j in range(1, 11)]
    eps_grid = sorted(float(e) for e in eps_grid)
    if any(e <= 0 or e >= sup for e in eps_grid):
        raise ValueError("eps grid must lie in (0, sup |f|)")
    if len(eps_grid) < 8:
        raise ValueError("need at least 8 eps values for a usable fit")
    fractions = [float((vals < e).mean()) for e in eps_grid]
    log_rel = [math.log(e / sup) for e in eps_grid]
    pos = [(lr, math.log(fr)) for lr, fr in zip(log_rel, fractions) if fr > 0]
    if len(pos) < 3:
        raise FlatFunction("sublevel fractions vanish on almost the whole grid")
    xs_f = np.array([p[0] for p in pos])
    ys_f = np.array([p[1] for p in pos])
    alpha = float(np.polyfit(xs_f, ys_f, 1)[0])
    alpha = min(max(alpha, 1e-9), 1.0)
    c_const = max(fr / (e / sup) ** alpha for e, fr in zip(eps_grid, fractions))
    resid = ys_f - (alpha * xs_f + (ys_f - alpha * xs_f).mean())
    ss_tot = float(((ys_f - ys_f.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return GoodFit(c_const=float(c_const), alpha=alpha, ball=(center, radius),
                   eps_grid=eps_grid, fractions=fractions, sup_value=sup,
                   r_squared=r2)


def _vector_eval(f, xs: np.ndarray) -> np.ndarray:
    try:
        out = f(xs)
        out = np.asarray(out, dtype=float)
        if out.shape == xs.shape:
            return out
    except Exception:
        pass
    return np.array([float(f(float(x))) for x in xs])


# ---------------------------------------------------------------------------
# quantitative nondivergence harness


@dataclass
class NondivergenceReport:
    weights: tuple
    ball: tuple
    shrunk_ball: tuple
    rho: float
    eps_grid: list
    fractions: list
    slope: float
    rho_check_value: float
    rho_condition_met: bool
    n_samples: int
    seed: int

    def to_json(self):
        return {"weights": [float(v) for v in self.weights],
                "ball": list(self.ball), "shrunk_ball": list(self.shrunk_ball),
                "rho": self.rho, "eps_grid": list(self.eps_grid),
                "fractions": list(self.fractions), "slope": self.slope,
                "rho_check_value": self.rho_check_value,
                "rho_condition_met": self.rho_condition_met,
                "n_samples": self.n_samples, "seed": self.seed}


def nondivergence_check(spec: ManifoldSpec, w: flows.Weights, ball, rho: float,
                        eps_grid=None, *, g=None, samples: int = 10**4,
                        seed: int = 0, height_cap: int = 2,
                        ctx: Optional[ScalarContext] = None) -> NondivergenceReport:
    """Empirical measure of {x in B : delta(g_t u_F(x) g Z^k) < eps}.

    B is the stated 3^-(k-1) shrink of the given ball.  The covolume
    floor condition is evaluated at the sample point maximizing delta,
    over a height-capped list of rational subspaces.
    """
    ctx = ctx or ScalarContext()
    if not (0 < rho <= 1):
        raise ValueError("rho must lie in (0, 1]")
    k = w.k
    center, radius = float(ball[0]), float(ball[1])
    shrink = 3.0 ** (-(k - 1))
    b_small = (center, radius * shrink)
    if spec.d != 1:
        raise ValueError("nondivergence harness currently samples 1-parameter families")
    if eps_grid is None:
        eps_grid = [rho * 2.0 ** (-j) for j in range(1, 9)]
    eps_grid = sorted(float(e) for e in eps_grid)
    if any(e > rho for e in eps_grid):
        raise ValueError("eps values must not exceed rho")
    xs = sample_points(((b_small[0] - b_small[1], b_small[0] + b_small[1]),),
                       samples, seed, stream=3).ravel()
    deltas = np.empty(len(xs))
    best_idx = 0
    for i, x in enumerate(xs):
        y = spec(x, ctx)
        basis = flows.orbit_basis(w, y, ctx, g=g)
        res = lattice.shortest_vector(basis, ctx=ctx)
        deltas[i] = float(res.length)
        if deltas[i] > deltas[best_idx]:
            best_idx = i
    fractions = [float((deltas < e).mean()) for e in eps_grid]
    pos = [(math.log(e), math.log(fr)) for e, fr in zip(eps_grid, fractions) if fr > 0]
    slope = float("nan")
    if len(pos) >= 2:
        xs_f = np.array([p[0] for p in pos])
        ys_f = np.array([p[1] for p in pos])
        slope = float(np.polyfit(xs_f, ys_f, 1)[0])
    # condition (ii): covolume floor at the delta-maximizing sample
    y_star = spec(xs[best_idx], ctx)
    h_star = flows.orbit_basis(w, y_star, ctx, g=g)
    rho_val = math.inf
    for sub in lattice.enumerate_rational_subspaces(k, height_cap, per_dim_budget=400):
        ell = float(lattice.subspace_covolume(sub, h_star, ctx=ctx))
        rho_val = min(rho_val, ell ** (1.0 / sub.dim))
    return NondivergenceReport(
        weights=w.as_floats(), ball=(center, radius), shrunk_ball=b_small, rho=rho,
        eps_grid=eps_grid, fractions=fractions, slope=slope,
        rho_check_value=rho_val, rho_condition_met=bool(rho_val >= rho),
        n_samples=len(xs), seed=seed)


# ---------------------------------------------------------------------------
# singular subspace construction


@dataclass
class SingularConstruction:
    """Affine-subspace data whose points admit scheduled Dirichlet improvements.

    ``witnesses`` hold (N_j, q_j, p_j) for the composite matrix; the
    emitted scan schedule (``scan_n_grid``) is where sampled points of
    the subspace solve the rate-phi system (with margin for parameters
    of sup norm <= x_cap).  Entries are truncated fast series, so exact
    rational relations exist only far beyond the last scheduled scale.
    """

    a_prime: np.ndarray
    a0: np.ndarray
    composite: SystemY
    witnesses: list
    exponents: list
    scan_n_grid: list
    target_rate: RateFunction
    c_ref: float
    x_cap: float
    trivial: bool
    ctx: ScalarContext

    def spec(self, domain=None) -> ManifoldSpec:
        return affine_subspace(self.a_prime, self.a0,
                               domain=domain or tuple((0.0, 1.0)
                                                      for _ in range(self.a_prime.shape[0])))


def singular_subspace_construct(target_rate: RateFunction, s: int, n: int, *,
                                levels: int = 3, c_ref: float = 0.05,
                                x_cap: float = 2.0) -> SingularConstruction:
    """Build A = [a0; A'] whose affine subspace scans singular at a schedule.

    Entries are lacunary decimal series with exponent gaps chosen so the
    truncation witness at scale j clears the ambient-system bound
    c phi(N_j) / N_j^n with ||q|| < c N_j at the scheduled N_j, for every
    c >= c_ref and parameters up to sup norm x_cap.  A rate that never
    decays below the trivial Dirichlet box is flagged (any matrix works).
    """
    if not (1 <= s < n):
        raise ValueError("need 1 <= s < n")
    if target_rate(10.0) <= 0:
        raise UnachievableRate("rate function must be positive")
    n_a, m_a = n - s, s + 1
    if target_rate(10.0) >= 10.0:
        a0 = np.array([[mpq(0)] * n_a], dtype=object)
        ap = np.array([[mpq(0)] * n_a for _ in range(s)], dtype=object)
        comp = SystemY.from_rows([[mpq(0)] * n_a for _ in range(m_a)],
                                 ScalarContext(), label="trivial")
        return SingularConstruction(a_prime=ap, a0=a0, composite=comp, witnesses=[],
                                    exponents=[], scan_n_grid=[],
                                    target_rate=target_rate, c_ref=c_ref, x_cap=x_cap,
                                    trivial=True, ctx=ScalarContext())
    kappa = float(n)  # ambient Dirichlet exponent for 1 x n rows
    safety = 20.0 * (1.0 + x_cap * s) / c_ref
    exps = [2]
    n_sched = []
    for j in range(levels):
        n_j = int(math.ceil(10 ** exps[j] / c_ref)) * 2
        n_sched.append(n_j)
        # witness j must clear the bound at its own scheduled scale:
        # 10 * safety * 10^(u_j - u_next) <= c_ref phi(N_j) / N_j^kappa
        rhs = c_ref * float(target_rate(n_j)) / float(n_j) ** kappa
        if rhs <= 0:
            raise UnachievableRate("rate function vanished on the schedule")
        need = exps[j] + math.log10(10.0 * safety / rhs)
        nxt = max(int(math.ceil(need)) + 1, exps[j] * (j + 2), exps[j] + 3)
        exps.append(nxt)
    # extend the tail so entries are not plainly rational at scan scales
    prec = int(64 + math.ceil(exps[-1] * math.log2(10))) * 2
    prec = 1 << max(9, (prec - 1).bit_length())
    build_ctx = ScalarContext(precision_bits=min(prec, 4096))
    tail = exps[-1]
    all_exps = list(exps)
    while tail * math.log2(10) < build_ctx.precision_bits + 16:
        tail *= 3
        all_exps.append(tail)
    rows = []
    with build_ctx.active():
        for r in range(m_a):
            row = []
            for c in range(n_a):
                val = mpfr(0)
                for i, u in enumerate(all_exps):
                    dgt = 1 + (3 * r + 5 * c + 2 * i) % 9  # distinct digit streams per entry
                    val += mpfr(dgt) * mpfr(10) ** (-u)
                row.append(val)
            rows.append(row)
    comp = SystemY.from_rows(rows, build_ctx, label="singular-construction")
    witnesses = []
    for j in range(levels):
        qvec = np.array([10 ** exps[j]] + [0] * (n_a - 1), dtype=object)
        pvec = -comp.nearest_p(qvec)
        witnesses.append((n_sched[j], qvec, pvec))
    a0 = comp.entries[:1].copy()
    ap = comp.entries[1:].copy()
    return SingularConstruction(a_prime=ap, a0=a0, composite=comp,
                                witnesses=witnesses, exponents=exps[:levels + 1],
                                scan_n_grid=[float(v) for v in n_sched],
                                target_rate=target_rate, c_ref=c_ref, x_cap=x_cap,
                                trivial=False, ctx=build_ctx)


# ---------------------------------------------------------------------------
# dichotomy experiment


@dataclass
class PointVerdict:
    x: list
    omega: Optional[float] = None
    omega_rational: bool = False
    singular_consistent: Optional[bool] = None
    di_verdict: Optional[bool] = None
    vwma_consistent: Optional[bool] = None
    gamma: Optional[float] = None

    def to_json(self):
        return {"x": self.x, "omega": self.omega, "omega_rational": self.omega_rational,
                "singular_consistent": self.singular_consistent,
                "di_verdict": self.di_verdict, "vwma_consistent": self.vwma_consistent,
                "gamma": self.gamma}


@dataclass
class DichotomyScans:
    omega: bool = True
    singular: bool = False
    di_epsilon: Optional[float] = None
    vwma: bool = False
    gamma: bool = False
    q_max: int = 10**4
    singular_c_grid: tuple = (0.5, 0.25, 0.1)
    singular_n_max: float = 10**4
    singular_n_grid: Optional[tuple] = None
    singular_rate: RateFunction = ONE
    di_t_grid: tuple = tuple(float(t) for t in range(1, 16))
    vwma_delta_grid: tuple = (0.5,)
    vwma_q_max: int = 2000
    gamma_t_max: float = 15.0
    tail: int = 16


@dataclass
class DichotomyReport:
    spec_json: dict
    n_samples: int
    seed: int
    points: list
    specials: list
    omega_quantiles: Optional[dict]
    singular_fraction: Optional[float]
    special_singular_fraction: Optional[float]
    horizons: dict

    def to_json(self):
        return {"spec": self.spec_json, "n_samples": self.n_samples, "seed": self.seed,
                "points": [p.to_json() for p in self.points],
                "specials": [p.to_json() for p in self.specials],
                "omega_quantiles": self.omega_quantiles,
                "singular_fraction": self.singular_fraction,
                "special_singular_fraction": self.special_singular_fraction,
                "horizons": self.horizons}


def _scan_point(y: SystemY, scans: DichotomyScans, x) -> PointVerdict:
    out = PointVerdict(x=[float(v) for v in np.atleast_1d(x)])
    if scans.omega:
        recs = dio.best_approximations(y, scans.q_max)
        try:
            fit = dio.omega_estimate(recs, tail=scans.tail, m=y.m, n=y.n)
            out.omega = fit.estimate
            out.omega_rational = fit.rational_point
        except Exception:
            out.omega = None
    if scans.singular:
        rep = dio.singular_scan(y, scans.singular_rate, scans.singular_c_grid,
                                scans.singular_n_max, n_grid=scans.singular_n_grid)
        out.singular_consistent = rep.consistent
    if scans.di_epsilon is not None:
        rep = dio.di_epsilon_test(y, scans.di_epsilon, scans.di_t_grid)
        out.di_verdict = rep.in_di_up_to_horizon
    if scans.vwma:
        rep = dio.vwma_scan(y, scans.vwma_delta_grid, scans.vwma_q_max)
        out.vwma_consistent = rep.consistent
    if scans.gamma:
        tset = flows.WeightSet(m=y.m, n=y.n, kind="central_ray")
        samples = flows.trajectory(y, tset, scans.gamma_t_max * 2, ctx=y.ctx)
        out.gamma = flows.growth_exponent(samples).estimate
    return out


def auto_special_points(spec: ManifoldSpec, max_den: int = 6, cap: int = 8) -> list:
    """Low-height rational parameter values inside the domain box (d = 1)."""
    if spec.d != 1:
        return []
    lo, hi = spec.domain[0]
    out = []
    for den in range(1, max_den + 1):
        for num in range(math.ceil(lo * den), math.floor(hi * den) + 1):
            val = mpq(num, den)
            if math.gcd(num, den) == 1 and lo <= float(val) <= hi:
                out.append(val)
            if len(out) >= cap:
                return out
    return out


def dichotomy_experiment(spec: ManifoldSpec, count: int, seed: int,
                         scans: DichotomyScans, *, special_points=None,
                         ctx: Optional[ScalarContext] = None,
                         auto_specials: bool = True) -> DichotomyReport:
    """Run the configured scans at seeded sample parameters and specials.

    The interesting contrast lives between the bulk (almost-every
    behavior) and designated special points (rational values, constructed
    subspaces), summarized as quantiles and verdict fractions.
    """
    ctx = ctx or ScalarContext()
    pts = sample_points(spec.domain, count, seed, stream=1)
    specials = list(special_points or [])
    if auto_specials:
        specials.extend(auto_special_points(spec))
    verdicts = [_scan_point(spec(x if spec.d > 1 else x[0], ctx), scans, x)
                for x in pts]
    special_verdicts = [_scan_point(spec(x, ctx), scans, [float(x)])
                        for x in specials]
    omegas = [p.omega for p in verdicts if p.omega is not None and not p.omega_rational
              and math.isfinite(p.omega)]
    oq = None
    if omegas:
        arr = np.array(sorted(omegas))
        oq = {"q10": float(np.quantile(arr, 0.1)), "q25": float(np.quantile(arr, 0.25)),
              "median": float(np.quantile(arr, 0.5)), "q75": float(np.quantile(arr, 0.75)),
              "q90": float(np.quantile(arr, 0.9))}
    sf = None
    ssf = None
    flags = [p.singular_consistent for p in verdicts if p.singular_consistent is not None]
    if flags:
        sf = sum(flags) / len(flags)
    sflags = [p.singular_consistent for p in special_verdicts
              if p.singular_consistent is not None]
    if sflags:
        ssf = sum(sflags) / len(sflags)
    return DichotomyReport(
        spec_json=spec.to_json(), n_samples=count, seed=seed, points=verdicts,
        specials=special_verdicts, omega_quantiles=oq, singular_fraction=sf,
        special_singular_fraction=ssf,
        horizons={"q_max": scans.q_max, "singular_n_max": scans.singular_n_max,
                  "vwma_q_max": scans.vwma_q_max})
