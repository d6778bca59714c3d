"""Acceptance gate: one test per criterion, one PASS/FAIL line each.

Run with `pytest -s tests/test_acceptance.py` to see the lines as they
complete.  Tolerances and horizons are pinned here, not configurable.
"""

import time

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpfr, mpq

from latflow import correspondence as cor
from latflow import diophantine as dio
from latflow import flows
from latflow import lattice
from latflow import manifolds as man
from latflow.config import ExperimentConfig, run
from latflow.rates import ONE
from latflow.scalars import ScalarContext
from latflow.systems import SystemY

from conftest import cf_convergent_denominators, random_mpfr, random_unimodular

CTX = ScalarContext()


def _verdict(num, name, ok, detail=""):
    print(f"\nACCEPTANCE {num:02d} [{name}]: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


# ---------------------------------------------------------------------------


def test_criterion_01_golden_ratio_exponent():
    started = time.monotonic()
    y = SystemY.from_expression("phi", CTX)
    records = dio.best_approximations(y, 10**5)
    fit = dio.omega_estimate(records, m=1, n=1)
    elapsed = time.monotonic() - started
    got_q = [int(r.q[0]) for r in records]
    oracle = cf_convergent_denominators("phi", 10**5)
    ok = 0.95 <= fit.estimate <= 1.05 and got_q == oracle and elapsed < 5.0
    _verdict(1, "golden ratio exponent", ok,
             f"omega={fit.estimate:.4f} in [0.95, 1.05]; records==Fibonacci: "
             f"{got_q == oracle}; {elapsed:.2f}s < 5s")


def test_criterion_02_liouville_detection():
    started = time.monotonic()
    ctx = ScalarContext(precision_bits=512)
    y = SystemY.from_expression("liouville", ctx)
    records = dio.best_approximations(y, 10**6)
    fit = dio.omega_estimate(records, m=1, n=1)
    elapsed = time.monotonic() - started
    ok = fit.estimate >= 3.9 and elapsed < 30.0
    _verdict(2, "Liouville detection", ok,
             f"omega={fit.estimate:.3f} >= 3.9; {elapsed:.2f}s < 30s")


def test_criterion_03_dictionary_cross_validation():
    golden = cor.cross_validate(SystemY.from_expression("phi", CTX),
                                cor.XValConfig(q_max=10**5, ray_t_max=25.0))
    ok_golden = golden.gamma_hat <= 0.05 and golden.omega_discrepancy < 0.1

    y3 = SystemY.from_expression("1/3", CTX)
    rational = cor.cross_validate(y3, cor.XValConfig(q_max=100, ray_t_max=25.0))
    ok_agree = (rational.singular.consistent and rational.divergence.consistent
                and rational.verdicts_agree)
    # delta(t) = 3 e^{-t} exactly (within 2^(-P/2)) for t >= 2
    ts = flows.WeightSet(m=1, n=1, kind="central_ray")
    samples = flows.trajectory(y3, ts, 50.0, ctx=CTX)
    ok_delta = True
    with CTX.active():
        for s in samples:
            t = float(s.weights.t[0])
            if t >= 2:
                expected = 3 * gmpy2.exp(mpfr(-t))
                ok_delta &= bool(abs(s.delta - expected) <= expected * mpfr(2) ** (-64))
    ok = ok_golden and ok_agree and ok_delta
    _verdict(3, "dictionary cross-validation", ok,
             f"golden gamma={golden.gamma_hat:.4f} <= 0.05, "
             f"disc={golden.omega_discrepancy:.4f} < 0.1; "
             f"1/3 singular+divergent agree: {ok_agree}; delta=3e^-t exact: {ok_delta}")


def test_criterion_04_formula_identities():
    rng = np.random.default_rng(404)
    ok_round = True
    for _ in range(100):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(1, 4))
        omega = mpq(n, m) + mpq(int(rng.integers(0, 4000)), int(rng.integers(1, 50)))
        back = cor.omega_from_gamma(cor.gamma_from_omega(omega, m, n), m, n)
        ok_round &= back == omega  # exact rational arithmetic: 0 <= 2^(-P/2)
    ok_thresh = True
    for m in (1, 2, 3):
        for n in (1, 2, 3):
            for j in range(10):
                v = mpq(n, m) + mpq(j, 3)
                ok_thresh &= cor.threshold_rate(v, m, n) == cor.gamma_from_omega(v, m, n)
    psi = cor.psi_from_phi(ONE, 1, 1, [0.5, 1, 2, 5, 10, 20, 40])
    ok_psi = all(abs(v - 1.0) <= 2.0 ** (-64) * 1.0 + 1e-13 for _t, v in psi.table)
    ok = ok_round and ok_thresh and ok_psi
    _verdict(4, "formula identities", ok,
             f"round-trip exact on 100 draws: {ok_round}; "
             f"threshold==gamma formula: {ok_thresh}; psi(1)==1: {ok_psi}")


def test_criterion_05_minkowski_inequality():
    started = time.monotonic()
    rng = np.random.default_rng(505)
    violations = 0
    checked_v = 0
    checked_lines = 0
    for i in range(500):
        k = 2 + i % 4  # 125 lattices per dimension 2..5
        e_k = lattice.minkowski_constant(k, CTX)
        u = random_unimodular(k, rng, shears=5, bound=2)
        t = float(rng.uniform(0.3, 1.5))
        g = lattice.identity(k, CTX)
        with CTX.active():
            m_block = (k + 1) // 2
            n_block = k - m_block
            for j in range(m_block):
                g[j, j] = gmpy2.exp(mpfr(t) / m_block)
            for j in range(n_block):
                g[m_block + j, m_block + j] = gmpy2.exp(mpfr(-t) / n_block)
            gm = lattice.matrix(u.tolist(), CTX) @ g
        delta = lattice.shortest_vector(gm, ctx=CTX).length
        with CTX.active():
            slack = 1 + mpfr(2) ** (-48)
            if not delta <= e_k * slack:  # Minkowski at covolume 1
                violations += 1
            subs = lattice.enumerate_rational_subspaces(k, 3, per_dim_budget=300)
            for v in subs:
                ell = lattice.subspace_covolume(v, gm, ctx=CTX)
                bound = e_k * (ell if v.dim == 1 else gmpy2.root(ell, v.dim))
                checked_v += 1
                if not delta <= bound * slack:
                    violations += 1
            lines_checked = 0
            for v in subs:
                if v.dim < 2:
                    continue
                line, ell_line = lattice.minkowski_sub_line(v, gm, ctx=CTX)
                ell_v = lattice.subspace_covolume(v, gm, ctx=CTX)
                checked_lines += 1
                if not ell_line <= e_k * gmpy2.root(ell_v, v.dim) * slack:
                    violations += 1
                if not delta <= e_k * ell_line * slack:
                    violations += 1
                lines_checked += 1
                if lines_checked >= 8:
                    break
    elapsed = time.monotonic() - started
    ok = violations == 0 and elapsed < 120.0
    _verdict(5, "Minkowski inequality", ok,
             f"0 violations over 500 lattices ({checked_v} subspace bounds, "
             f"{checked_lines} returned lines): {violations == 0}; "
             f"{elapsed:.1f}s < 120s")


def test_criterion_06_cag_closed_forms():
    details = []
    ok = True
    for n in (1, 2, 3, 4):
        fit = man.cag_estimate(lambda x, n=n: x**n, (0.0, 1.0), samples=20001, seed=606)
        rel = abs(fit.alpha - 1.0 / n) * n
        ok &= rel <= 0.10
        details.append(f"n={n}: alpha={fit.alpha:.4f} (off {100 * rel:.1f}%)")
    _verdict(6, "(C,alpha)-good closed forms", ok, "; ".join(details))


def test_criterion_07_nondivergence_decay():
    spec = man.mahler_curve(2)
    w = flows.central_ray(1, 2, 5)
    rep = man.nondivergence_check(spec, w, (1.5, 0.5), 1.0, samples=10**4,
                                  seed=707, ctx=CTX)
    monotone = all(b >= a for a, b in zip(rep.fractions, rep.fractions[1:]))
    ok = monotone and rep.slope >= 0.25
    _verdict(7, "nondivergence decay", ok,
             f"fractions monotone: {monotone}; log-log slope={rep.slope:.2f} >= 0.25 "
             f"(eps = 2^-8..2^-1 * rho, rho=1, 10^4 samples)")


def test_criterion_08_dichotomy_desk_scale():
    started = time.monotonic()
    # (a) bulk of the degree-2 curve
    spec = man.mahler_curve(2, domain=(1.0, 2.0))
    scans = man.DichotomyScans(omega=True, singular=True, q_max=10**4,
                               singular_c_grid=(0.5, 0.25, 0.1),
                               singular_n_max=10**4)
    rep = man.dichotomy_experiment(spec, 100, seed=808, scans=scans, ctx=CTX,
                                   auto_specials=False)
    median = rep.omega_quantiles["median"]
    none_singular = rep.singular_fraction == 0.0
    ok_a = 1.9 <= median <= 2.4 and none_singular

    # (b) constructed subspace vs a random line, at the witness schedule
    con = man.singular_subspace_construct(ONE, 1, 2)
    rng = np.random.default_rng(808)
    xs = [random_mpfr(rng, con.ctx, 0.0, 1.0) for _ in range(20)]
    line_spec = con.spec()
    grid = con.scan_n_grid
    constructed_ok = 0
    for x in xs:
        y = line_spec(x, con.ctx)
        r = dio.singular_scan(y, ONE, (0.5, 0.25, 0.1), grid[-1], n_grid=grid)
        constructed_ok += r.consistent
    a_rand = random_mpfr(rng, con.ctx, 1.0, 2.0)
    b_rand = random_mpfr(rng, con.ctx, 0.0, 1.0)
    random_line = man.affine_subspace([[a_rand]], [b_rand])
    random_ok = 0
    for x in xs:
        y = random_line(x, con.ctx)
        r = dio.singular_scan(y, ONE, (0.5, 0.25, 0.1), grid[-1], n_grid=grid)
        random_ok += r.consistent
    elapsed = time.monotonic() - started
    ok_b = constructed_ok == 20 and random_ok == 0
    ok = ok_a and ok_b and elapsed < 300.0
    _verdict(8, "dichotomy at desk scale", ok,
             f"(a) omega median={median:.3f} in [1.9, 2.4], none singular: "
             f"{none_singular}; (b) constructed 20/20 consistent={constructed_ok}, "
             f"random line 0/20 consistent={random_ok}; {elapsed:.1f}s < 300s")


def test_criterion_09_transference_sanity():
    suite = ["1/3", "2/7,1/5", "phi", "sqrt(2)", "sqrt(2),sqrt(3)",
             "sqrt(2);sqrt(3)", "sqrt(2),sqrt(3);sqrt(5),sqrt(7)",
             "1/2,1/3;1/5,1/7"]
    rows = []
    ok = True
    for expr in suite:
        y = SystemY.from_expression(expr, CTX)
        rep = dio.transference_check(y, q_max=10**4, n_max=10**4)
        ok &= rep.vwa_agree and rep.singular_agree
        rows.append(f"{expr}: vwa {rep.vwa}/{rep.vwa_transpose} "
                    f"sing {rep.singular.consistent}/{rep.singular_transpose.consistent}")
    _verdict(9, "transference sanity", ok, "; ".join(rows))


def test_criterion_10_reproducibility(tmp_path):
    # identical config + seed + precision => byte-identical artifacts
    byte_ok = True
    for kind, params in (
        ("exponent", {"y": "phi", "q_max": 10**4}),
        ("orbit", {"y": "1/3", "t_max": 12.0}),
        ("cag", {"fn": "x^2"}),
    ):
        recs = []
        for _ in range(2):
            cfg = ExperimentConfig(kind=kind, params=dict(params), seed=10,
                                   out_dir=str(tmp_path))
            recs.append(run(cfg))
        assert recs[0].config_hash == recs[1].config_hash
        for p1, p2 in zip(recs[0].artifacts, recs[1].artifacts):
            byte_ok &= open(p1, "rb").read() == open(p2, "rb").read()

    # doubling precision moves every reported scalar by < 2^(-P/4)
    tol = 2.0 ** (-32)
    scalars = {}
    for ctx in (ScalarContext(), ScalarContext(precision_bits=256)):
        y = SystemY.from_expression("phi", ctx)
        fit = dio.omega_estimate(dio.best_approximations(y, 10**4), m=1, n=1)
        ts = flows.WeightSet(m=1, n=1, kind="central_ray")
        samples = flows.trajectory(y, ts, 30.0, ctx=ctx)
        gamma = flows.growth_exponent(samples, window=0.5).estimate
        with ctx.active():
            y3 = SystemY.from_expression("1/3", ctx)
            basis = flows.orbit_basis(flows.central_ray(1, 1, 5), y3, ctx)
        delta5 = float(lattice.shortest_vector(basis, ctx=ctx).length)
        cov = float(lattice.subspace_covolume(
            lattice.RationalSubspace(basis=[[1], [1]]), lattice.identity(2, ctx),
            ctx=ctx))
        scalars[ctx.precision_bits] = [fit.estimate, gamma, delta5, cov]
    drifts = [abs(a - b) / max(abs(b), 1e-300)
              for a, b in zip(scalars[128], scalars[256])]
    prec_ok = all(d < tol for d in drifts)
    ok = byte_ok and prec_ok
    _verdict(10, "reproducibility", ok,
             f"byte-identical artifacts: {byte_ok}; "
             f"max relative drift on doubling = {max(drifts):.2e} < 2^-32: {prec_ok}")
