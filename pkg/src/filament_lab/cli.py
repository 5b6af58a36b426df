"""Command-line runner: ``filament-lab <subcommand> [flags]``.

Each run is described by a flat key-value configuration (JSON), validated
against ``CONFIG_SCHEMA`` before any computation. Outputs go to
``$FILAMENT_LAB_OUT/<experiment>-<config digest>/`` together with a
snapshot of the configuration and ``report.json``. The process exits with
status 1 when any verdict fails or an experiment raises.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import acceptance
from .filament import (
    procrustes,
    reconstruct_self_similar,
    self_similar_curve,
    spiral_initial_curve,
    spiral_limit,
    trace_at_zero,
)
from .nls_evolution import Background, EvolutionConfig, decay_fit, evolve_v, interior_mask, window_l2
from .profile_ode import (
    MixedParams,
    OddParams,
    extract_asymptotics,
    integrate_gamma,
    integrate_profile_from_params,
    key_identity_residuals,
)
from .shooting import TEST_FUNCTIONS, TestFunction, pv_pairing, shoot_lambda, shot_profile
from .transforms import ComplexField, SpatialGrid
from .wave_operator import PicardDivergence, QuadratureError, WaveOpConfig, picard_solve

OUTPUT_ENV = "FILAMENT_LAB_OUT"
EXPERIMENTS = ("profile", "shoot", "pvtest", "evolve", "waveop", "spiral", "reconstruct", "suite")

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "family": {"enum": ["odd", "mixed"]},
        "a": {"type": "number", "not": {"const": 0}},
        "lam": {"type": "number", "minimum": -1, "maximum": 1},
        "c0": {"type": "number", "exclusiveMinimum": 0},
        "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "t0": {"type": "number", "exclusiveMinimum": 0},
        "t1": {"type": "number", "exclusiveMinimum": 0},
        "T_max": {"type": "number", "exclusiveMinimum": 0},
        "t": {"type": "number", "exclusiveMinimum": 0},
        "half_length": {"type": "number", "exclusiveMinimum": 0},
        "half_width": {"type": "number", "exclusiveMinimum": 0},
        "n": {"type": "integer", "minimum": 256},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "rho": {"type": "number", "exclusiveMinimum": 1},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "amplitude": {"type": "number", "minimum": 0},
        "nodes_per_decade": {"type": "integer", "minimum": 8},
        "test_functions": {"type": "array", "items": {"enum": sorted(TEST_FUNCTIONS)}},
        "random_test_functions": {"type": "integer", "minimum": 0, "maximum": 16},
        "seed": {"type": "integer", "minimum": 0},
        "bundle": {"enum": sorted(acceptance.BUNDLES)},
        "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 12}},
        "output_dir": {"type": "string"},
    },
}

DEFAULTS = {
    "family": "odd", "a": 1.0, "lam": 0.3, "c0": 1.0, "gamma": 0.5, "t0": 1.0, "t1": 4.0,
    "T_max": 300.0, "t": 1.0, "half_length": 60.0, "half_width": 80.0, "n": 4096, "tol": 1e-10,
    "rho": 1.0025, "width": 2.0, "amplitude": 0.03, "nodes_per_decade": 320,
    "test_functions": ["gauss_x", "gauss_x3", "bump_odd", "shifted_bump_odd", "gauss"],
    "random_test_functions": 0, "seed": 0, "bundle": "quick",
}


class ConfigError(ValueError):
    pass


def validate_config(config: dict) -> dict:
    """Schema check, then defaults for the missing keys."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(k) for k in exc.absolute_path)
        raise ConfigError(f"{where}: {exc.message}" if where else exc.message) from exc
    full = dict(DEFAULTS)
    full.update(config)
    return full


@dataclass
class RunReport:
    config: dict
    checks: list = field(default_factory=list)
    seconds: float = 0.0
    artifacts: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c["verdict"] == "PASS" for c in self.checks)

    def verdict(self, name: str, ok: bool, measured: dict, tolerance: str) -> None:
        self.checks.append({"name": name, "verdict": "PASS" if ok else "FAIL",
                            "measured": {k: acceptance._jsonable(v) for k, v in measured.items()},
                            "tolerance": tolerance})

    def to_json(self) -> dict:
        return {"config": self.config, "passed": self.passed, "checks": self.checks,
                "seconds": self.seconds, "artifacts": self.artifacts, "error": self.error}


def run_directory(config: dict) -> Path:
    root = Path(config.get("output_dir") or os.environ.get(OUTPUT_ENV, "runs"))
    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:12]
    return root / f"{config['experiment']}-{digest}"


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=acceptance._jsonable) + "\n")


def _params(cfg: dict):
    if cfg["family"] == "mixed":
        return MixedParams(cfg["a"], cfg["c0"])
    return OddParams(cfg["a"], cfg["lam"])


# ------------------------------------------------------------ experiments

def _profile(cfg, out, rep):
    p = _params(cfg)
    curve = integrate_gamma(p, cfg["half_length"], cfg["tol"])
    sol = integrate_profile_from_params(p, cfg["half_length"], cfg["tol"])
    asym = extract_asymptotics(curve, sol)
    sol.to_csv(out / "profile.csv")
    curve.to_csv(out / "curve_profile.csv")
    _write_json(out / "asymptotics.json", asym.to_json())
    rep.artifacts += ["profile.csv", "curve_profile.csv", "asymptotics.json"]
    res = key_identity_residuals(curve, sol, p.a)
    rep.verdict("energy", sol.residual < 100 * cfg["tol"], {"residual": sol.residual},
                "< 100 tol")
    rep.verdict("identities", max(res) < 1e-6,
                {"modulus": res.modulus, "derivative": res.derivative}, "< 1e-6")


def _shoot(cfg, out, rep):
    r = shoot_lambda(cfg["a"])
    _write_json(out / "shooting.json", r.to_json())
    rep.artifacts.append("shooting.json")
    a = abs(cfg["a"])
    rep.verdict("root", abs(r.F_value) < 1e-8, {"F": r.F_value}, "|F| < 1e-8")
    rep.verdict("alpha", r.alpha_residual < 1e-6, {"alpha_residual": r.alpha_residual}, "< 1e-6")
    rep.verdict("z0 band", np.sqrt(3) / 2 * a <= r.z0_modulus < a,
                {"z0_over_a": r.z0_modulus / a}, "[sqrt(3)/2, 1)")


def _random_odd_functions(count: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        s = float(rng.uniform(0.5, 2.0))
        c = float(rng.uniform(-0.5, 0.5))
        out.append(TestFunction(f"random_odd_{k}",
                                lambda x, s=s, c=c: (x / s + c * (x / s) ** 3) * np.exp(-(x / s) ** 2),
                                6.5 * s, "odd"))
    return out


def _pvtest(cfg, out, rep):
    r = shoot_lambda(cfg["a"])
    sol = shot_profile(cfg["a"], r.lambda_a)
    asym = extract_asymptotics(None, sol)
    ts = np.logspace(-1, -4, 13)
    phis = [TEST_FUNCTIONS[n] for n in cfg["test_functions"]]
    phis += _random_odd_functions(cfg["random_test_functions"], cfg["seed"])
    fits = []
    for phi in phis:
        pr = pv_pairing(sol, asym, phi, ts)
        path = out / f"pairing_{phi.name}.csv"
        with open(path, "w") as fh:
            fh.write("t,re_P,im_P,error\n")
            for row in pr.rows():
                fh.write(",".join(repr(v) for v in row) + "\n")
        rep.artifacts.append(path.name)
        if phi.parity == "odd":
            fits.append(pr.z0_fit)
    predicted = 2 * abs(asym.fp_inf)
    if fits:
        fits = np.array(fits)
        spread = float(np.max(np.abs(fits - fits.mean())) / abs(fits.mean()))
        gap = float(np.max(np.abs(np.abs(fits) - predicted)) / predicted)
        rep.verdict("z0 agreement", spread < 0.02, {"spread": spread}, "< 2%")
        rep.verdict("z0 modulus", gap < 0.02, {"gap": gap}, "< 2% of 2|f'|inf")


def _evolve(cfg, out, rep):
    sol = integrate_profile_from_params(_params(cfg), cfg["half_length"], 1e-12)
    bg = Background(sol, extract_asymptotics(None, sol))
    grid = SpatialGrid.symmetric(cfg["half_width"], cfg["n"])
    ecfg = EvolutionConfig(cfg["t0"], cfg["t1"], sol.A, rho=cfg["rho"])
    traj = evolve_v(ComplexField(grid, bg.vf(grid.x, cfg["t0"]), cfg["t0"]), ecfg)
    mask = interior_mask(grid)
    errs = [window_l2(f.values - bg.vf(grid.x, f.time), grid, mask) for f in traj.fields]
    traj.fields[-1].to_csv(out / "v_final.csv")
    with open(out / "self_similar_error.csv", "w") as fh:
        fh.write("t,error\n")
        for t, e in zip(traj.times, errs):
            fh.write(f"{t!r},{e!r}\n")
    rep.artifacts += ["v_final.csv", "self_similar_error.csv"]
    rep.verdict("self-similar", max(errs) < 1e-4, {"max_error": max(errs)}, "< 1e-4")


def _waveop(cfg, out, rep):
    bg, _ = acceptance.small_a_background(cfg["a"])
    grid = SpatialGrid.symmetric(cfg["half_width"], cfg["n"])
    u_plus = acceptance.odd_perturbation(grid, cfg["width"], cfg["amplitude"])
    wcfg = WaveOpConfig(cfg["t0"], cfg["T_max"], gamma=cfg["gamma"],
                        quad_nodes_per_decade=cfg["nodes_per_decade"])
    try:
        z, hist = picard_solve(u_plus, wcfg, bg)
    except PicardDivergence as exc:
        rep.verdict("contraction", False, {"ratios": exc.ratios}, "ratio < 1")
        return
    except QuadratureError as exc:
        rep.verdict("quadrature", False, {"message": str(exc)}, "estimate below quad_tol")
        return
    fit = decay_fit(z, gamma=cfg["gamma"], t_range=(wcfg.t0, min(100 * wcfg.t0, wcfg.T_max / 3)))
    z.fields[0].to_csv(out / "z_t0.csv")
    with open(out / "z_norms.csv", "w") as fh:
        fh.write("t,l2,l4_tail\n")
        for t, e, l4 in zip(fit.times, fit.errors, fit.l4_tail):
            fh.write(f"{t!r},{e!r},{l4!r}\n")
    rep.artifacts += ["z_t0.csv", "z_norms.csv"]
    rep.verdict("contraction", max(hist.ratios, default=0.0) < 0.5,
                {"ratios": hist.ratios}, "< 0.5")
    rep.verdict("residual", hist.residual < 10 * wcfg.tol, {"residual": hist.residual}, "< 10 tol")
    nu_ok = fit.nu is not None and fit.nu >= cfg["gamma"] / 4 - 0.05
    rep.verdict("decay", nu_ok, {"nu": fit.nu, "note": fit.note}, "nu >= gamma/4 - 0.05")


def _spiral(cfg, out, rep):
    curve = integrate_gamma(_params(cfg), cfg["half_length"], 1e-11)
    L = curve.half_length
    ts = np.geomspace(1.0, 1 / (0.95 * L) ** 2, 25)
    sp = spiral_limit(curve, ts)
    x = np.linspace(-1.0, 1.0, 401)
    traj = [self_similar_curve(curve, t=t, x=x) for t in ts]
    for k in (0, len(ts) // 2, len(ts) - 1):
        traj[k].to_csv(out / f"curve_t{k:02d}.csv")
        rep.artifacts.append(f"curve_t{k:02d}.csv")
    ref = spiral_initial_curve(x, curve.a, sp.A_plus, sp.A_minus)
    tr = trace_at_zero(traj, reference=ref)
    _write_json(out / "spiral.json", {**sp.to_json(), "trace_exponent": tr.exponent})
    rep.artifacts.append("spiral.json")
    rep.verdict("spiral bound", sp.holds, {"worst_ratio": sp.worst_ratio}, "<= 1")
    rep.verdict("trace exponent", 0.45 <= tr.exponent <= 0.55, {"exponent": tr.exponent},
                "[0.45, 0.55]")


def _reconstruct(cfg, out, rep):
    p = _params(cfg).to_gamma()
    curve = integrate_gamma(p, cfg["half_length"], 1e-11)
    sol = integrate_profile_from_params(p, cfg["half_length"], 1e-11)
    t = cfg["t"]
    x = np.linspace(-10, 10, 2001) * np.sqrt(t)
    rec = reconstruct_self_similar(curve, sol, t, x)
    ref = self_similar_curve(curve, t=t, x=x)
    rec.to_csv(out / "reconstructed.csv")
    ref.to_csv(out / "closed_form.csv")
    rep.artifacts += ["reconstructed.csv", "closed_form.csv"]
    pr = procrustes(ref.points, rec.points)
    rep.verdict("procrustes", pr.max_distance < 1e-5, {"max_distance": pr.max_distance}, "< 1e-5")


def _suite(cfg, out, rep):
    criteria = cfg.get("criteria") or acceptance.BUNDLES[cfg["bundle"]]
    for check in acceptance.run_battery(criteria):
        print(check.line(), flush=True)
        rep.checks.append(check.to_json())
    _write_json(out / "acceptance.json", rep.checks)
    rep.artifacts.append("acceptance.json")


RUNNERS = {"profile": _profile, "shoot": _shoot, "pvtest": _pvtest, "evolve": _evolve,
           "waveop": _waveop, "spiral": _spiral, "reconstruct": _reconstruct, "suite": _suite}


def run(config: dict) -> RunReport:
    """Validate, dispatch and write the run directory."""
    cfg = validate_config(config)
    out = run_directory(cfg)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg)
    rep = RunReport(cfg, artifacts=["config.json"])
    start = time.perf_counter()
    try:
        RUNNERS[cfg["experiment"]](cfg, out, rep)
    except Exception as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    rep.seconds = time.perf_counter() - start
    _write_json(out / "report.json", rep.to_json())
    rep.run_dir = out
    return rep


# -------------------------------------------------------------------- argv

FLAG_HELP = {
    "family": "profile family: odd (a, lam) or mixed (a, c0)",
    "a": "profile parameter a (non-zero)",
    "lam": "odd-family parameter lambda in [-1, 1]",
    "c0": "mixed-family amplitude c0 > 0",
    "gamma": "decay index gamma in (0, 1)",
    "t0": "initial time",
    "t1": "final time of a forward evolution",
    "T_max": "horizon of the truncated fixed-point problem",
    "t": "time of a reconstruction",
    "half_length": "half length of the profile integration interval",
    "half_width": "half width of the periodic spatial cell",
    "n": "number of grid points (power of two, >= 256)",
    "tol": "integrator tolerance",
    "rho": "ratio of successive evolution times",
    "width": "width of the odd scattering datum",
    "amplitude": "amplitude of the odd scattering datum",
    "nodes_per_decade": "quadrature nodes per decade of time",
    "random_test_functions": "number of seeded random odd test functions",
    "seed": "seed for random test functions",
    "bundle": "acceptance bundle for suite (quick, full, empty)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="filament-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON file with configuration keys; flags override it")
        p.add_argument("--output-dir", dest="output_dir",
                       help=f"output root (default ${OUTPUT_ENV} or ./runs)")
        for key, text in FLAG_HELP.items():
            kind = CONFIG_SCHEMA["properties"][key].get("type")
            conv = int if kind == "integer" else float if kind == "number" else str
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=conv, help=text)
        p.add_argument("--test-functions", dest="test_functions", nargs="+",
                       help="named test functions for pvtest")
        p.add_argument("--criteria", type=int, nargs="+", help="criterion numbers for suite")
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    config = {}
    if args.config:
        config.update(json.loads(Path(args.config).read_text()))
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            config[key] = value
    try:
        rep = run(config)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    for c in rep.checks if config["experiment"] != "suite" else []:
        print(f"{c['verdict']} {c['name']}: {c['measured']}")
    if rep.error:
        print(f"error: {rep.error}", file=sys.stderr)
    print(f"run directory: {rep.run_dir}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
