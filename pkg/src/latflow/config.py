"""Experiment configuration, dispatch, persistence and reporting.

A config is a plain dict-shaped object with a canonical serialized form
(sorted keys, normalized number strings); its hash names the artifacts,
so identical config + seed + precision reproduces byte-identical files.
Every run appends one line to an append-only ledger; artifacts are never
mutated.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from dataclasses import dataclass, field
import numpy as np

from . import __version__ as _version
from . import correspondence as cor
from . import diophantine as dio
from . import flows
from . import manifolds as man
from .errors import ConfigInvalid, MissingArtifact
from .rates import ONE, RateFunction
from .scalars import ScalarContext
from .systems import SystemY, parse_system

KINDS = ("approx", "exponent", "singular", "di", "vwma", "kg-sum", "orbit",
         "gamma", "xval", "dichotomy", "nondiv", "cag", "construct-singular")


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)
    precision_bits: int = 128
    seed: int = 0
    out_dir: str = "runs"

    def validate(self):
        errors = {}
        if self.kind not in KINDS:
            errors["kind"] = f"unknown kind {self.kind!r}"
        if self.precision_bits < 2 or self.precision_bits > 4096:
            errors["precision_bits"] = "must lie in [2, 4096]"
        if not isinstance(self.seed, int) or self.seed < 0:
            errors["seed"] = "must be a nonnegative integer"
        need = _REQUIRED.get(self.kind, ())
        for key in need:
            if key not in self.params:
                errors[f"params.{key}"] = "required"
        for key in ("c_grid", "delta_grid", "eps_grid", "t_grid"):
            if key in self.params and not self.params[key]:
                errors[f"params.{key}"] = "grid must be non-empty"
        for key in ("q_max", "n_max", "t_max", "k_max", "samples", "count"):
            if key in self.params and float(self.params[key]) <= 0:
                errors[f"params.{key}"] = "horizon must be positive"
        if errors:
            raise ConfigInvalid(errors)
        return self

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params,
                "precision_bits": self.precision_bits, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict, out_dir: str = "runs") -> "ExperimentConfig":
        return cls(kind=d["kind"], params=dict(d.get("params", {})),
                   precision_bits=int(d.get("precision_bits", 128)),
                   seed=int(d.get("seed", 0)), out_dir=d.get("out_dir", out_dir))


def _normalize(obj):
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        # integral floats normalize to ints; json emits the shortest
        # round-trip decimal for the rest, already canonical
        f = float(obj)
        if f.is_integer() and abs(f) < 2**53:
            return int(f)
        return f
    return str(obj)


def canonical_json(obj) -> str:
    return json.dumps(_normalize(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(config.to_dict()).encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    kind: str
    config_hash: str
    version: str
    wall_time_s: float
    verdicts: dict
    artifacts: list
    exit_code: int = 0

    def to_json(self):
        return {"kind": self.kind, "config_hash": self.config_hash,
                "version": self.version, "wall_time_s": self.wall_time_s,
                "verdicts": self.verdicts, "artifacts": self.artifacts,
                "exit_code": self.exit_code}


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(payload))
        fh.write("\n")


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def run(config: ExperimentConfig) -> RunRecord:
    """Validate, dispatch, persist artifacts, append to the run ledger."""
    config.validate()
    chash = config_hash(config)
    os.makedirs(config.out_dir, exist_ok=True)
    started = time.monotonic()
    runner = _RUNNERS[config.kind]
    verdicts, artifacts, exit_code = runner(config, chash)
    record = RunRecord(kind=config.kind, config_hash=chash, version=_version,
                       wall_time_s=round(time.monotonic() - started, 3),
                       verdicts=verdicts, artifacts=artifacts, exit_code=exit_code)
    ledger = os.path.join(config.out_dir, "runs.jsonl")
    with open(ledger, "a", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(record.to_json(), sort_keys=True))
        fh.write("\n")
    return record


def report(record: RunRecord) -> str:
    """Human-readable summary; artifacts must still exist."""
    for path in record.artifacts:
        if not os.path.exists(path):
            raise MissingArtifact(path)
    lines = [f"{record.kind} run {record.config_hash} (toolkit {record.version})"]
    for key, val in sorted(record.verdicts.items()):
        lines.append(f"  {key}: {val}")
    for path in record.artifacts:
        lines.append(f"  artifact: {path}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# runners (one per experiment kind)


def _ctx(config) -> ScalarContext:
    return ScalarContext(precision_bits=config.precision_bits)


def _system(config) -> SystemY:
    return parse_system(str(config.params["y"]), _ctx(config))


def _rate(params, key="phi") -> RateFunction:
    spec = params.get(key)
    if spec is None:
        return ONE
    if isinstance(spec, dict):
        return RateFunction.from_json(spec)
    if isinstance(spec, (int, float)):
        return RateFunction(kind="const", c=float(spec))
    raise ConfigInvalid({f"params.{key}": "expected a rate-function object"})


def _art(config, chash, name) -> str:
    return os.path.join(config.out_dir, f"{config.kind}-{chash}-{name}")


def _records_rows(records):
    for r in records:
        yield [r.qnorm, float(r.dist),
               ";".join(str(int(v)) for v in r.q),
               ";".join(str(int(v)) for v in r.p)]


def _run_approx(config, chash):
    y = _system(config)
    recs = dio.best_approximations(y, int(config.params["q_max"]))
    path = _art(config, chash, "records.csv")
    _write_csv(path, ["qnorm", "dist", "q", "p"], _records_rows(recs))
    verdicts = {"n_records": len(recs), "horizon_q": int(config.params["q_max"]),
                "rational": any(r.dist == 0 for r in recs)}
    return verdicts, [path], 0


def _run_exponent(config, chash):
    y = _system(config)
    recs = dio.best_approximations(y, int(config.params["q_max"]))
    fit = dio.omega_estimate(recs, tail=int(config.params.get("tail", 16)),
                             m=y.m, n=y.n)
    csv_path = _art(config, chash, "records.csv")
    _write_csv(csv_path, ["qnorm", "dist", "q", "p"], _records_rows(recs))
    json_path = _art(config, chash, "fit.json")
    _write_json(json_path, fit.to_json())
    return {"omega": fit.estimate, "rational": fit.rational_point,
            "horizon_q": int(config.params["q_max"])}, \
        [csv_path, json_path], 0


def _run_singular(config, chash):
    y = _system(config)
    rep = dio.singular_scan(y, _rate(config.params), config.params["c_grid"],
                            float(config.params["n_max"]),
                            n_grid=config.params.get("n_grid"))
    path = _art(config, chash, "report.json")
    _write_json(path, rep.to_json())
    return {"consistent_with_singular": rep.consistent,
            "horizon": rep.horizon}, [path], 0


def _run_di(config, chash):
    y = _system(config)
    rep = dio.di_epsilon_test(y, float(config.params["epsilon"]),
                              config.params["t_grid"])
    path = _art(config, chash, "report.json")
    _write_json(path, rep.to_json())
    return {"in_di_up_to_horizon": rep.in_di_up_to_horizon,
            "horizon": rep.t_grid[-1]}, [path], 0


def _run_vwma(config, chash):
    y = _system(config)
    rep = dio.vwma_scan(y, config.params["delta_grid"], int(config.params["q_max"]))
    path = _art(config, chash, "report.json")
    _write_json(path, rep.to_json())
    return {"consistent_with_vwma": rep.consistent, "horizon_q": rep.q_max,
            "degenerate": rep.degenerate}, [path], 0


def _run_kg(config, chash):
    rep = dio.khintchine_groshev_sum(_rate(config.params), int(config.params["m"]),
                                     int(config.params["n"]),
                                     int(config.params["k_max"]))
    path = _art(config, chash, "report.json")
    _write_json(path, rep.to_json())
    return {"diagnostic": rep.diagnostic, "final_sum": rep.final,
            "horizon_k": int(config.params["k_max"])}, [path], 0


def _weight_set(config, y) -> flows.WeightSet:
    ray = config.params.get("ray", "central")
    if ray == "central":
        return flows.WeightSet(m=y.m, n=y.n, kind="central_ray",
                               step=float(config.params.get("step", 1.0)))
    if isinstance(ray, str) and ray.startswith("weights="):
        direction = tuple(float(v) for v in ray.split("=", 1)[1].split(":"))
        return flows.WeightSet(m=y.m, n=y.n, kind="weighted_ray",
                               direction=direction,
                               step=float(config.params.get("step", 1.0)))
    if ray == "grid":
        return flows.WeightSet(m=y.m, n=y.n, kind="grid",
                               step=float(config.params.get("step", 1.0)))
    raise ConfigInvalid({"params.ray": f"unknown ray spec {ray!r}"})


def _orbit_rows(samples):
    for s in samples:
        yield list(s.weights.as_floats()) + [
            float(s.delta), s.certified,
            ";".join(str(int(v)) for v in s.witness)]


def _run_orbit(config, chash):
    y = _system(config)
    for key, want in (("m", y.m), ("n", y.n)):
        if key in config.params and int(config.params[key]) != want:
            raise ConfigInvalid({f"params.{key}": f"Y is {y.m}x{y.n}"})
    tset = _weight_set(config, y)
    t_max = float(config.params["t_max"])
    samples = flows.trajectory(y, tset, t_max * cor.ray_norm_factor(y.m, y.n),
                               ctx=_ctx(config))
    k = y.m + y.n
    path = _art(config, chash, "trajectory.csv")
    _write_csv(path, [f"t_{i + 1}" for i in range(k)] + ["delta", "certified", "witness"],
               _orbit_rows(samples))
    partial = any(not s.certified for s in samples)
    return {"n_samples": len(samples), "all_certified": not partial,
            "horizon_t": float(config.params["t_max"])}, \
        [path], 3 if partial else 0


def _run_gamma(config, chash):
    y = _system(config)
    tset = _weight_set(config, y)
    samples = flows.trajectory(y, tset,
                               float(config.params["t_max"]) * cor.ray_norm_factor(y.m, y.n),
                               ctx=_ctx(config))
    fit = flows.growth_exponent(samples, window=float(config.params.get("window", 0.5)))
    csv_path = _art(config, chash, "trajectory.csv")
    k = y.m + y.n
    _write_csv(csv_path, [f"t_{i + 1}" for i in range(k)] + ["delta", "certified", "witness"],
               _orbit_rows(samples))
    json_path = _art(config, chash, "fit.json")
    _write_json(json_path, fit.to_json())
    return {"gamma": fit.estimate,
            "horizon_t": float(config.params["t_max"])}, [csv_path, json_path], 0


def _run_xval(config, chash):
    y = _system(config)
    xcfg = cor.XValConfig(m=y.m, n=y.n,
                          q_max=int(config.params.get("q_max", 10**5)),
                          ray_t_max=float(config.params.get("t_max", 25.0)),
                          tail=int(config.params.get("tail", 16)))
    rep = cor.cross_validate(y, xcfg)
    path = _art(config, chash, "report.json")
    _write_json(path, rep.to_json())
    comp_path = _art(config, chash, "comparison.csv")
    _write_csv(comp_path, ["quantity", "direct", "from_orbit", "discrepancy"],
               [["omega", rep.omega_direct.estimate, rep.omega_from_orbit,
                 rep.omega_discrepancy],
                ["gamma", rep.gamma_from_direct, rep.gamma_hat,
                 rep.gamma_discrepancy]])
    return {"omega_discrepancy": rep.omega_discrepancy,
            "verdicts_agree": rep.verdicts_agree,
            "horizon_q": rep.horizon_q, "horizon_t": rep.horizon_t}, \
        [path, comp_path], 0


def _manifold(config) -> man.ManifoldSpec:
    spec = config.params["manifold"]
    if isinstance(spec, str):
        with open(spec, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    return man.ManifoldSpec.from_json(spec)


def _run_dichotomy(config, chash):
    spec = _manifold(config)
    scans = man.DichotomyScans(
        omega="omega" in config.params.get("scan", ["omega"]),
        singular="singular" in config.params.get("scan", []),
        q_max=int(config.params.get("q_max", 10**4)),
        singular_n_max=float(config.params.get("n_max", 10**4)))
    rep = man.dichotomy_experiment(spec, int(config.params["count"]), config.seed,
                                   scans, ctx=_ctx(config))
    path = _art(config, chash, "report.json")
    _write_json(path, rep.to_json())
    table = _art(config, chash, "points.csv")
    _write_csv(table, ["x", "omega", "rational", "singular_consistent"],
               [[";".join(f"{v}" for v in p.x), p.omega, p.omega_rational,
                 p.singular_consistent] for p in rep.points + rep.specials])
    verdicts = {"omega_median": None if rep.omega_quantiles is None
                else rep.omega_quantiles["median"],
                "singular_fraction": rep.singular_fraction,
                "horizons": rep.horizons}
    return verdicts, [path, table], 0


def _run_nondiv(config, chash):
    spec = _manifold(config)
    y_probe = spec(sum(spec.domain[0]) / 2.0)
    w = flows.central_ray(y_probe.m, y_probe.n, float(config.params["t"]))
    ball = tuple(config.params.get("ball", ((spec.domain[0][0] + spec.domain[0][1]) / 2,
                                            (spec.domain[0][1] - spec.domain[0][0]) / 2)))
    rep = man.nondivergence_check(spec, w, ball, float(config.params["rho"]),
                                  config.params.get("eps_grid"),
                                  samples=int(config.params.get("samples", 10**4)),
                                  seed=config.seed, ctx=_ctx(config))
    path = _art(config, chash, "report.json")
    _write_json(path, rep.to_json())
    curve = _art(config, chash, "fraction-vs-eps.csv")
    _write_csv(curve, ["eps", "fraction"],
               [[e, f] for e, f in zip(rep.eps_grid, rep.fractions)])
    return {"slope": rep.slope, "rho_condition_met": rep.rho_condition_met,
            "horizon_samples": rep.n_samples}, \
        [path, curve], 0


def _run_cag(config, chash):
    expr = str(config.params["fn"])
    degree_map = {"x": 1, "x^2": 2, "x^3": 3, "x^4": 4}
    if expr in degree_map:
        deg = degree_map[expr]
        fn = lambda x, d=deg: x**d  # noqa: E731
    else:
        raise ConfigInvalid({"params.fn": f"unsupported function {expr!r}"})
    ball = tuple(config.params.get("ball", (0.0, 1.0)))
    fit = man.cag_estimate(fn, ball, config.params.get("eps_grid"),
                           samples=int(config.params.get("samples", 20001)),
                           seed=config.seed)
    path = _art(config, chash, "fit.json")
    _write_json(path, fit.to_json())
    curve = _art(config, chash, "fraction-vs-eps.csv")
    _write_csv(curve, ["eps", "fraction"],
               [[e, f] for e, f in zip(fit.eps_grid, fit.fractions)])
    return {"alpha": fit.alpha, "C": fit.c_const}, [path, curve], 0


def _run_construct_singular(config, chash):
    con = man.singular_subspace_construct(
        _rate(config.params, "target_rate"), int(config.params["s"]),
        int(config.params["n"]), levels=int(config.params.get("levels", 3)))
    payload = {
        "trivial": con.trivial,
        "exponents": con.exponents,
        "scan_n_grid": con.scan_n_grid,
        "c_ref": con.c_ref,
        "precision_bits": con.ctx.precision_bits,
        "a0": [[_scalar_str(v, con.ctx) for v in row] for row in con.a0],
        "a_prime": [[_scalar_str(v, con.ctx) for v in row] for row in con.a_prime],
        "witnesses": [{"N": n_j, "q": [str(int(v)) for v in q],
                       "p": [str(int(v)) for v in p]}
                      for n_j, q, p in con.witnesses],
    }
    path = _art(config, chash, "construction.json")
    _write_json(path, payload)
    return {"trivial": con.trivial, "levels": len(con.witnesses)}, [path], 0


def _scalar_str(v, ctx):
    from .scalars import scalar_str

    return scalar_str(v, ctx)


_REQUIRED = {
    "approx": ("y", "q_max"),
    "exponent": ("y", "q_max"),
    "singular": ("y", "c_grid", "n_max"),
    "di": ("y", "epsilon", "t_grid"),
    "vwma": ("y", "delta_grid", "q_max"),
    "kg-sum": ("m", "n", "k_max"),
    "orbit": ("y", "t_max"),
    "gamma": ("y", "t_max"),
    "xval": ("y",),
    "dichotomy": ("manifold", "count"),
    "nondiv": ("manifold", "t", "rho"),
    "cag": ("fn",),
    "construct-singular": ("s", "n"),
}

_RUNNERS = {
    "approx": _run_approx,
    "exponent": _run_exponent,
    "singular": _run_singular,
    "di": _run_di,
    "vwma": _run_vwma,
    "kg-sum": _run_kg,
    "orbit": _run_orbit,
    "gamma": _run_gamma,
    "xval": _run_xval,
    "dichotomy": _run_dichotomy,
    "nondiv": _run_nondiv,
    "cag": _run_cag,
    "construct-singular": _run_construct_singular,
}
