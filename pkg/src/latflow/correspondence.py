"""The dictionary between approximation exponents and orbit growth.

Rate statements on the central ray live in two normalizations: the ray
parameter t (first block expands like e^{t/m}) and the weight norm used
by the flows module, which equals 2t there.  The conversion factor is
computed in exactly one place (:func:`ray_norm_factor`) and applied in
exactly one direction, so dictionary values cannot be double-converted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

from . import diophantine as dio
from . import flows
from .errors import DomainError, SolveFailure
from .fitting import ExponentFit
from .rates import ONE, RateFunction
from .scalars import ScalarContext
from .systems import SystemY


def ray_norm_factor(m: int, n: int) -> int:
    """Norm of the central-ray weight at ray parameter 1.

    The package norm is the sum of all weight coordinates, so this is
    m * (1/m) + n * (1/n) = 2 for every (m, n); kept as a function so the
    conversion has a single source of truth.
    """
    w = flows.central_ray(m, n, 1)
    total = sum(w.t)
    assert total == 2
    return int(total)


def gamma_from_omega(omega, m: int, n: int):
    """Growth exponent (per unit ray parameter) from the Diophantine exponent.

    gamma = ((m/n) omega - 1) / (m omega + 1), defined for omega >= n/m;
    increases from 0 to 1/n.  Exact rational arithmetic on rational input.
    +inf maps to the limit 1/n.
    """
    if omega == float("inf"):
        return mpq(1, n)
    om = mpq(omega) if isinstance(omega, (int, mpq)) else mpq(_frac(omega))
    if om < mpq(n, m):
        raise DomainError(f"omega = {float(om)} below the Dirichlet exponent {n}/{m}")
    return (mpq(m, n) * om - 1) / (m * om + 1)


def omega_from_gamma(gamma, m: int, n: int):
    """Inverse dictionary: omega = n(1 + gamma) / (m(1 - n gamma))."""
    ga = mpq(gamma) if isinstance(gamma, (int, mpq)) else mpq(_frac(gamma))
    if ga < 0 or ga >= mpq(1, n):
        raise DomainError(f"gamma = {float(ga)} outside [0, 1/{n})")
    return mpq(n) * (1 + ga) / (m * (1 - n * ga))


def threshold_rate(v, m: int, n: int):
    """Decay-rate exponent in the ray parameter: (mv - n) / (n(mv + 1)).

    delta(g_t u_Y Z^k) dips below e^{-rate t} along an unbounded set of t
    exactly when the approximation inequality with exponent v has
    infinitely many solutions.  Algebraically identical to
    :func:`gamma_from_omega`; kept separate because one is a statement
    about delta thresholds and the other about the growth exponent.
    """
    if v == float("inf"):
        return mpq(1, n)
    vv = mpq(v) if isinstance(v, (int, mpq)) else mpq(_frac(v))
    if vv < mpq(n, m):
        raise DomainError(f"v = {float(vv)} below the Dirichlet exponent {n}/{m}")
    return (m * vv - n) / (n * (m * vv + 1))


def _frac(x):
    from fractions import Fraction

    return Fraction(float(x))


def psi_from_phi(phi: RateFunction, m: int, n: int, t_grid, *,
                 ctx: Optional[ScalarContext] = None) -> RateFunction:
    """Translate an approximation rate into an orbit-decay rate.

    For each t solve e^{((m+n)/(mn)) t} = N^{1+n/m} / phi(N) for N by
    monotone bisection (the right side strictly increases in N), then
    psi(t) = e^{-t/n} N.  Returned as a table over ``t_grid``; the solve
    runs in MPFR so the relative tolerance 2^(-P/2) on N is real.
    """
    ctx = ctx or ScalarContext()
    pairs = []
    with ctx.active():
        for t in sorted(float(t) for t in t_grid):
            n_val = _solve_n_of_t(phi, m, n, t, ctx)
            psi_val = gmpy2.exp(mpfr(-t) / n) * n_val
            pairs.append((t, float(psi_val)))
    non_inc = all(b <= a * (1 + 1e-9) for (_, a), (_, b) in zip(pairs, pairs[1:]))
    return RateFunction(kind="table", table=tuple(pairs), non_increasing=non_inc)


def _phi_mpfr(phi: RateFunction, nv):
    """Rate function value in MPFR (closed forms natively, tables via float)."""
    if phi.kind == "const":
        return mpfr(phi.c)
    if phi.kind == "power":
        return mpfr(phi.c) * nv ** mpfr(phi.exponent)
    if phi.kind == "logpower":
        return mpfr(phi.c) * gmpy2.log(nv + mpfr(phi.x0)) ** mpfr(phi.exponent)
    return mpfr(phi(float(nv)))


def _solve_n_of_t(phi: RateFunction, m: int, n: int, t: float, ctx: ScalarContext):
    target = mpfr(m + n) / (m * n) * t  # log of the left side
    expo = 1 + mpfr(n) / m

    def logrhs(nv):
        pv = _phi_mpfr(phi, nv)
        if pv <= 0:
            raise SolveFailure(f"phi({float(nv)}) = {float(pv)} not positive")
        return expo * gmpy2.log(nv) - gmpy2.log(pv)

    lo, hi = mpfr(1), mpfr(2)
    guard = 0
    while logrhs(hi) < target:
        hi *= 2
        guard += 1
        if guard > 100000:
            raise SolveFailure("bisection bracket ran away; phi not usable")
    if logrhs(lo) > target:
        raise SolveFailure("target below N = 1; rate function too large")
    rel_tol = mpfr(2) ** (-(ctx.precision_bits // 2))
    for _ in range(8 * ctx.precision_bits):
        mid = gmpy2.sqrt(lo * hi)
        if logrhs(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * lo:
            break
    else:
        raise SolveFailure("bisection failed to converge")
    # monotonicity sanity on the solved branch
    if float(_phi_mpfr(phi, hi * 2)) > float(_phi_mpfr(phi, hi)) * (1 + 1e-9):
        raise SolveFailure("phi violates monotonicity near the solution")
    return gmpy2.sqrt(lo * hi)


# ---------------------------------------------------------------------------
# cross validation of the two sides


@dataclass
class XValConfig:
    m: int = 1
    n: int = 1
    q_max: int = 10**5
    ray_t_max: float = 25.0
    ray_step: float = 1.0
    window: float = 0.6
    tail: int = 16
    c_grid: tuple = (0.5, 0.25, 0.1)
    singular_n_max: float = 10**4


@dataclass
class XValReport:
    omega_direct: ExponentFit
    gamma_fit: ExponentFit
    gamma_hat: float
    omega_from_orbit: float
    gamma_from_direct: float
    omega_discrepancy: float
    gamma_discrepancy: float
    singular: dio.SingularEvidence
    divergence: flows.DivergenceEvidence
    verdicts_agree: bool
    horizon_q: int
    horizon_t: float

    def to_json(self):
        return {
            "omega_direct": self.omega_direct.to_json(),
            "gamma_fit": self.gamma_fit.to_json(),
            "gamma_hat": self.gamma_hat,
            "omega_from_orbit": self.omega_from_orbit,
            "gamma_from_direct": self.gamma_from_direct,
            "omega_discrepancy": self.omega_discrepancy,
            "gamma_discrepancy": self.gamma_discrepancy,
            "singular": self.singular.to_json(),
            "divergence": self.divergence.to_json(),
            "verdicts_agree": self.verdicts_agree,
            "horizon_q": self.horizon_q,
            "horizon_t": self.horizon_t,
        }


def cross_validate(y: SystemY, config: XValConfig) -> XValReport:
    """Estimate omega directly and through the orbit; compare via the dictionary.

    The singularity scan verdict is compared against divergence (psi == 1)
    of the central-ray trajectory, the two faces of the same property.
    """
    m, n = y.m, y.n
    factor = ray_norm_factor(m, n)
    records = dio.best_approximations(y, config.q_max)
    omega_fit = dio.omega_estimate(records, tail=config.tail, m=m, n=n)

    tset = flows.WeightSet(m=m, n=n, kind="central_ray", step=config.ray_step)
    samples = flows.trajectory(y, tset, config.ray_t_max * factor, ctx=y.ctx)
    gamma_fit = flows.growth_exponent(samples, window=config.window)
    gamma_hat = gamma_fit.estimate

    # orbit -> omega: gamma_hat is per weight norm; dictionary speaks ray parameter
    gamma_ray = gamma_hat * factor
    cap = 1.0 / n - 1e-12
    gamma_ray_c = min(max(gamma_ray, 0.0), cap)
    omega_orbit = float(omega_from_gamma(gamma_ray_c, m, n))

    if omega_fit.rational_point:
        gamma_direct_ray = float(mpq(1, n))
        omega_direct_val = float("inf")
        omega_disc = abs(1.0 / n - gamma_ray_c) * factor  # compare on the gamma side
    else:
        omega_direct_val = omega_fit.estimate
        gamma_direct_ray = float(gamma_from_omega(max(omega_direct_val, n / m), m, n))
        omega_disc = abs(omega_direct_val - omega_orbit)
    gamma_disc = abs(gamma_direct_ray / factor - gamma_hat)

    singular = dio.singular_scan(y, ONE, config.c_grid, config.singular_n_max)
    divergence = flows.diverges_faster(samples, ONE, config.c_grid, psi_label="1")
    return XValReport(
        omega_direct=omega_fit, gamma_fit=gamma_fit, gamma_hat=gamma_hat,
        omega_from_orbit=omega_orbit, gamma_from_direct=gamma_direct_ray / factor,
        omega_discrepancy=omega_disc, gamma_discrepancy=gamma_disc,
        singular=singular, divergence=divergence,
        verdicts_agree=(singular.consistent == divergence.consistent),
        horizon_q=config.q_max, horizon_t=config.ray_t_max,
    )


def record_to_orbit_time(record: dio.ApproxRecord, m: int, n: int) -> float:
    """Ray parameter balancing a record's two scales:
    e^{t/m} dist = e^{-t/n} qnorm."""
    d = record.dist_float()
    if d <= 0:
        raise DomainError("rational record has no balancing time")
    return m * n / (m + n) * math.log(record.qnorm / d)
