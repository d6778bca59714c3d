import math

import gmpy2
import pytest
from gmpy2 import mpfr, mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from latflow import correspondence as cor
from latflow import diophantine as dio
from latflow import flows, lattice
from latflow.errors import DomainError, SolveFailure
from latflow.rates import ONE, RateFunction, const_rate, power_rate
from latflow.scalars import ScalarContext
from latflow.systems import SystemY


# ---------------------------------------------------------------------------
# dictionary formulas


def test_gamma_at_dirichlet_exponent_is_zero():
    # almost every system sits exactly at the Dirichlet exponent
    assert cor.gamma_from_omega(mpq(1), 1, 1) == 0
    assert cor.gamma_from_omega(mpq(2), 1, 2) == 0
    assert cor.gamma_from_omega(mpq(3, 2), 2, 3) == 0


def test_gamma_from_omega_known_value():
    assert cor.gamma_from_omega(3, 1, 1) == mpq(1, 2)


def test_gamma_limit_is_one_over_n():
    assert cor.gamma_from_omega(float("inf"), 1, 2) == mpq(1, 2)
    assert float(cor.gamma_from_omega(mpq(10**9), 1, 3)) == pytest.approx(1 / 3, abs=1e-8)


def test_gamma_domain_error():
    with pytest.raises(DomainError):
        cor.gamma_from_omega(mpq(1, 2), 1, 1)


def test_omega_from_gamma_examples():
    assert cor.omega_from_gamma(0, 1, 1) == 1
    assert cor.omega_from_gamma(mpq(1, 2), 1, 1) == 3
    with pytest.raises(DomainError):
        cor.omega_from_gamma(mpq(1, 2) + mpq(1, 100), 1, 2)


@settings(max_examples=100, deadline=None)
@given(num=st.integers(0, 400), den=st.integers(1, 40),
       m=st.integers(1, 3), n=st.integers(1, 3))
def test_round_trip_exact_on_rationals(num, den, m, n):
    omega = mpq(n, m) + mpq(num, den)
    gamma = cor.gamma_from_omega(omega, m, n)
    assert 0 <= gamma < mpq(1, n)
    assert cor.omega_from_gamma(gamma, m, n) == omega


def test_gamma_strictly_increasing_and_bounded():
    vals = [cor.gamma_from_omega(mpq(1) + mpq(j, 7), 1, 1) for j in range(30)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(v < 1 for v in vals)


def test_threshold_rate_examples():
    assert cor.threshold_rate(mpq(1), 1, 1) == 0
    assert cor.threshold_rate(mpq(2), 1, 2) == 0
    assert cor.threshold_rate(4, 1, 2) == mpq(2, 10)


def test_threshold_rate_equals_gamma_formula_exactly():
    for m in (1, 2, 3):
        for n in (1, 2, 3):
            for j in range(8):
                v = mpq(n, m) + mpq(j, 5)
                assert cor.threshold_rate(v, m, n) == cor.gamma_from_omega(v, m, n)


def test_ray_norm_factor_is_two():
    for m, n in ((1, 1), (1, 2), (2, 3)):
        assert cor.ray_norm_factor(m, n) == 2


# ---------------------------------------------------------------------------
# rate translation


def test_psi_from_constant_is_constant():
    for c in (1.0, 0.5, 2.0):
        psi = cor.psi_from_phi(const_rate(c), 1, 1, [1, 4, 9, 16])
        vals = [v for _t, v in psi.table]
        for v in vals:
            assert abs(v - vals[0]) <= abs(vals[0]) * 1e-12


def test_psi_from_one_is_one():
    # phi == 1 forces N(t) = e^(t/n) and psi == 1, for any (m, n)
    for m, n in ((1, 1), (1, 2), (2, 1)):
        psi = cor.psi_from_phi(ONE, m, n, [0.5, 2, 7, 13])
        for _t, v in psi.table:
            assert abs(v - 1.0) < 1e-12


def test_psi_from_inverse_rate_closed_form():
    # m = n = 1, phi(N) = 1/N: e^{2t} = N^3, psi(t) = e^{-t/3}
    psi = cor.psi_from_phi(power_rate(1.0, -1.0), 1, 1, [1, 3, 6, 9])
    for t, v in psi.table:
        assert abs(v - math.exp(-t / 3)) < 1e-10


def test_psi_monotone_when_phi_monotone():
    phi = power_rate(1.0, -0.7)
    psi = cor.psi_from_phi(phi, 1, 2, [1, 2, 4, 8, 16])
    assert psi.non_increasing
    vals = [v for _t, v in psi.table]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


def test_psi_solver_rejects_increasing_phi():
    bad = RateFunction(kind="power", c=1.0, exponent=0.5, non_increasing=False)
    with pytest.raises(SolveFailure):
        cor.psi_from_phi(bad, 1, 1, [1, 2, 4])


# ---------------------------------------------------------------------------
# record-to-orbit transfer


@pytest.mark.parametrize("expr", ["phi", "sqrt(2)"])
def test_record_to_short_vector_transfer(expr, ctx):
    y = SystemY.from_expression(expr, ctx)
    records = dio.best_approximations(y, 2000)
    for rec in records:
        if rec.qnorm < 2:
            continue
        t_star = cor.record_to_orbit_time(rec, 1, 1)
        w = flows.central_ray(1, 1, mpq(int(round(t_star * 4096)), 4096))
        basis = flows.orbit_basis(w, y, ctx)
        delta = float(lattice.shortest_vector(basis, ctx=ctx).length)
        bound = 2 * max(float(rec.dist) * math.exp(t_star),
                        rec.qnorm * math.exp(-t_star))
        assert delta <= bound * (1 + 1e-6)


def test_liouville_record_maps_to_deep_orbit_dip():
    ctx = ScalarContext(precision_bits=512)
    y = SystemY.from_expression("liouville", ctx)
    rec = dio.best_approximations(y, 10**6)[-1]
    assert rec.qnorm == 10**6
    t_star = cor.record_to_orbit_time(rec, 1, 1)
    w = flows.central_ray(1, 1, mpq(int(round(t_star * 1024)), 1024))
    basis = flows.orbit_basis(w, y, ctx)
    delta = float(lattice.shortest_vector(basis, ctx=ctx).length)
    # the orbit dips below the threshold-rate envelope for v ~ 3
    assert delta < math.exp(-0.4 * t_star)


# ---------------------------------------------------------------------------
# cross validation


def test_cross_validate_golden(ctx):
    rep = cor.cross_validate(SystemY.from_expression("phi", ctx),
                             cor.XValConfig(q_max=10**4, ray_t_max=20.0))
    assert rep.gamma_hat <= 0.05
    assert abs(rep.omega_direct.estimate - rep.omega_from_orbit) < 0.1
    assert not rep.singular.consistent and not rep.divergence.consistent
    assert rep.verdicts_agree


def test_cross_validate_rational(ctx):
    rep = cor.cross_validate(SystemY.from_expression("1/3", ctx),
                             cor.XValConfig(q_max=100, ray_t_max=15.0))
    assert rep.omega_direct.rational_point
    assert rep.singular.consistent and rep.divergence.consistent
    assert rep.verdicts_agree
    # delta = 3 e^{-t} exactly from t >= 2 on the sampled ray
    with ctx.active():
        for s in [s for s in _samples_of(rep) if float(s.weights.t[0]) >= 2]:
            t = float(s.weights.t[0])
            expected = 3 * gmpy2.exp(mpfr(-t))
            assert abs(s.delta - expected) <= expected * mpfr(2) ** (-64)


def _samples_of(rep):
    # re-run the tiny trajectory; cross_validate does not retain samples
    ctx = ScalarContext()
    y = SystemY.from_expression("1/3", ctx)
    ts = flows.WeightSet(m=1, n=1, kind="central_ray")
    return flows.trajectory(y, ts, 30.0, ctx=ctx)
