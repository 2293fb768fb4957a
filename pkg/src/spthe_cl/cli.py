"""Command-line runner for switched concurrent-learning experiments.

Subcommands
-----------
example           run the built-in benchmark (standard CL, HE or PT variant)
simulate          run an experiment described by a JSON config file
bounds            print certificate constants and a bound table
verify-switching  check the dwell/activation constraints of a trace
classify-dataset  print the richness report of a registry file

Exit codes: 0 success, 1 validation error, 2 certificate failure, 3 I/O error.

Config schema (JSON, ``"version": 1``)::

    {
      "version": 1,
      "model": {"kind": "section5", "disturbed": true},
      "datasets": {"source": "section5", "modes": [1, 2, 3, 4]},
                   # or {"source": "file", "path": "registry.json"}
      "law": {"ell": "inf", "upsilon": 8, "mu0": 1},
             # or "prescribed_time": 8 instead of "mu0"; "ell": "frozen" for mu = 1
      "weights": {"k_t": 1, "k_r": 1},
      "automaton": {"tau_d": 2, "tau_a": 25, "n0": 2, "t0": 1},
      "policy": {"kind": "random", "min_dwell": 0.5, "max_dwell": 3, "seed": 0},
                # or {"kind": "scripted", "steps": [[dwell, mode], ...], "cycle": true}
                # or {"kind": "fixed", "mode": 2}
      "run": {"mode": "dilated", "dt": 0.001, "eps_stop": 0.01, "horizon": null},
      "theta0": [0, 0, 0]
    }

Every key except ``version`` is optional; defaults reproduce the benchmark
with the prescribed-time law.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .datasets import DatasetRegistry, SchemaError, load_registry, save_registry, section5_registry
from .estimator import (
    EmptySufficientSet,
    EstimatorConfig,
    NegativeLambda,
    RunResult,
    bound_curve,
    diagnostics_columns,
    input_bound,
    run,
    theorem_constants,
    write_diagnostics_csv,
)
from .gain_laws import GainLaw, blow_up_time, dilate, prescribed_mu0
from .linalg import spectral_norm
from .signal_model import TrueSystem, section5_model
from .switching import (
    AutomatonParams,
    PolicyInfeasible,
    RandomPolicy,
    ScriptedPolicy,
    SwitchingSignal,
    verify_daat,
    verify_dadt,
)

CONFIG_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CERTIFICATE = 2
EXIT_IO = 3


class ConfigError(ValueError):
    pass


class CertificateFailure(RuntimeError):
    pass


@dataclass
class Experiment:
    cfg: EstimatorConfig
    policy: object  # RandomPolicy, ScriptedPolicy or None (fixed mode)
    initial_mode: Optional[int]
    run_mode: Optional[str]
    dt: float
    eps_stop: float
    horizon: Optional[float]
    doc: dict


# --------------------------------------------------------------------------
# config parsing


def _line_of(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for k, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return k
    return None


class _Reader:
    """Typed access to the config dict; errors name the key and its line."""

    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def fail(self, key: str, msg: str):
        line = _line_of(self.text, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: '{key}': {msg}")

    def section(self, doc, key):
        val = doc.get(key, {})
        if not isinstance(val, dict):
            self.fail(key, "expected an object")
        return val

    def number(self, doc, key, default=None, positive=False, allow_none=False):
        if key not in doc or doc[key] is None:
            if allow_none or default is not None:
                return default
            self.fail(key, "is required")
        val = doc[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(key, f"expected a number, got {val!r}")
        if not math.isfinite(val) or (positive and val <= 0):
            self.fail(key, f"expected a positive finite number, got {val!r}")
        return float(val)


def parse_config(text: str, source: str = "<config>", seed: Optional[int] = None,
                 law_override: Optional[str] = None, eps_stop: Optional[float] = None) -> Experiment:
    """Parse and validate an experiment config."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    r = _Reader(text, source)
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}:1: the config must be a JSON object")
    if doc.get("version") != CONFIG_VERSION:
        r.fail("version", f"unsupported config version {doc.get('version')!r} (expected {CONFIG_VERSION})")

    model = r.section(doc, "model")
    if model.get("kind", "section5") != "section5":
        r.fail("kind", f"unknown model kind {model.get('kind')!r}; only 'section5' is built in")
    disturbed = bool(model.get("disturbed", True))
    system, regressor = section5_model(disturbed)
    if "theta_star" in model:
        try:
            system = TrueSystem(np.asarray(model["theta_star"], dtype=float), system.disturbance,
                                system.disturbance_bound)
        except (TypeError, ValueError) as exc:
            r.fail("theta_star", str(exc))

    data = r.section(doc, "datasets")
    src = data.get("source", "section5")
    try:
        if src == "section5":
            registry = section5_registry(disturbed, tuple(int(q) for q in data.get("modes", (1, 2, 3, 4))))
        elif src == "file":
            if "path" not in data:
                r.fail("path", "is required when source is 'file'")
            path = Path(data["path"])
            if not path.is_absolute():
                path = Path(source).parent / path
            registry = load_registry(path)
        else:
            r.fail("source", f"unknown dataset source {src!r}")
    except (KeyError, SchemaError) as exc:
        r.fail("datasets", str(exc))

    law_doc = r.section(doc, "law")
    token = law_override if law_override is not None else law_doc.get("ell", "inf")
    upsilon = r.number(law_doc, "upsilon", 8.0, positive=True)
    try:
        law = GainLaw.parse(str(token), upsilon)
    except ValueError as exc:
        r.fail("ell", str(exc))
    if "prescribed_time" in law_doc:
        horizon_T = r.number(law_doc, "prescribed_time", positive=True)
        try:
            mu0 = prescribed_mu0(law, horizon_T)
        except ValueError as exc:
            r.fail("prescribed_time", str(exc))
    else:
        mu0 = r.number(law_doc, "mu0", 1.0)
        if mu0 < 1:
            r.fail("mu0", "must be >= 1")

    weights = r.section(doc, "weights")
    k_t = r.number(weights, "k_t", 1.0)
    k_r = r.number(weights, "k_r", 1.0, positive=True)
    if k_t < 0:
        r.fail("k_t", "must be >= 0")

    auto = r.section(doc, "automaton")
    try:
        params = AutomatonParams.for_registry(
            registry,
            tau_d=r.number(auto, "tau_d", 2.0, positive=True),
            tau_a=r.number(auto, "tau_a", 25.0, positive=True),
            n0=r.number(auto, "n0", 2.0, positive=True),
            t0=r.number(auto, "t0", 1.0, positive=True),
        )
    except ValueError as exc:
        r.fail("automaton", str(exc))

    theta0 = doc.get("theta0")
    try:
        cfg = EstimatorConfig(system, regressor, registry, law, mu0, params, k_t, k_r, theta0)
    except ValueError as exc:
        r.fail("theta0" if theta0 is not None else "model", str(exc))

    pol = r.section(doc, "policy")
    kind = pol.get("kind", "random")
    initial_mode = None
    if kind == "random":
        weights_doc = pol.get("weights")
        try:
            policy = RandomPolicy(
                r.number(pol, "min_dwell", 0.5),
                r.number(pol, "max_dwell", 3.0),
                int(seed if seed is not None else pol.get("seed", 0)),
                None if weights_doc is None else {int(k): float(v) for k, v in weights_doc.items()},
                pol.get("initial_mode"),
            )
        except (TypeError, ValueError) as exc:
            r.fail("policy", str(exc))
    elif kind == "scripted":
        try:
            policy = ScriptedPolicy(tuple((d, m) for d, m in pol.get("steps", ())), bool(pol.get("cycle", True)))
        except (TypeError, ValueError) as exc:
            r.fail("steps", str(exc))
    elif kind == "fixed":
        policy = None
        initial_mode = int(pol.get("mode", min(registry.sufficient or registry.modes)))
        if initial_mode not in registry.modes:
            r.fail("mode", f"mode {initial_mode} is not in the registry")
    else:
        r.fail("kind", f"unknown policy kind {kind!r}")

    run_doc = r.section(doc, "run")
    run_mode = run_doc.get("mode")
    if run_mode not in (None, "dilated", "direct"):
        r.fail("mode", f"run mode must be 'dilated' or 'direct', got {run_mode!r}")
    dt = r.number(run_doc, "dt", 1e-3, positive=True)
    eps = eps_stop if eps_stop is not None else r.number(run_doc, "eps_stop", 0.01, positive=True)
    if not 0 < eps < 1:
        raise ConfigError(f"{source}: eps_stop must lie in (0, 1), got {eps}")
    horizon = r.number(run_doc, "horizon", None, positive=True, allow_none=True)
    if not law.blows_up and horizon is None:
        r.fail("horizon", f"law {law.label()} does not blow up, so a run horizon is required")
    return Experiment(cfg, policy, initial_mode, run_mode, dt, eps, horizon, doc)


def example_config(variant: str, seed: int = 0, eps_stop: float = 0.01) -> Experiment:
    """The benchmark experiments: ``standard`` (mu = 1, fixed second dataset), ``he`` or ``pt``."""
    doc = {"version": CONFIG_VERSION, "policy": {"kind": "random", "min_dwell": 0.5, "max_dwell": 3.0, "seed": seed},
           "run": {"eps_stop": eps_stop}}
    if variant == "pt":
        doc["law"] = {"ell": "inf", "upsilon": 8.0, "prescribed_time": 8.0}
    elif variant == "he":
        doc["law"] = {"ell": 1, "upsilon": 8.0, "mu0": 1.0}
        doc["run"]["horizon"] = 8.0
    elif variant == "standard":
        doc["law"] = {"ell": "frozen"}
        doc["datasets"] = {"source": "section5", "modes": [2]}
        doc["policy"] = {"kind": "fixed", "mode": 2}
        doc["run"]["horizon"] = 8.0
    else:
        raise ConfigError(f"unknown variant {variant!r}")
    return parse_config(json.dumps(doc, indent=2), f"<example {variant}>")


# --------------------------------------------------------------------------
# reports


def dataset_rows(registry: DatasetRegistry) -> list[dict]:
    return [
        {"id": q, "classification": ds.kind, "alpha": ds.alpha, "norm": spectral_norm(ds.data_matrix)}
        for q, ds in registry.datasets.items()
    ]


def format_dataset_rows(rows) -> list[str]:
    out = []
    for row in rows:
        alpha = "-" if math.isnan(row["alpha"]) else f"{row['alpha']:.5f}"
        out.append(f"dataset {row['id']}: {row['classification']:<9} alpha={alpha:<8} |Phi|={row['norm']:.5f}")
    return out


def certificate_section(cfg: EstimatorConfig) -> dict:
    try:
        c = theorem_constants(cfg)
    except EmptySufficientSet as exc:
        return {"certified": False, "status": f"condition (a) violated: {exc}"}
    out = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in c.as_dict().items()}
    out["u_sup"] = input_bound(cfg)
    if c.certified:
        out["status"] = "certified"
    else:
        out["status"] = (f"condition (b) violated: tau_a = {cfg.automaton.tau_a} must exceed "
                         f"{c.tau_a_threshold:.6g}")
    return out


def bound_table(cfg: EstimatorConfig, t_values, j_values) -> list[dict]:
    c = theorem_constants(cfg)
    curve = bound_curve(c, cfg.law, cfg.mu0, float(np.linalg.norm(cfg.theta0 - cfg.system.theta_star)),
                        input_bound(cfg))
    return [{"t": float(t), "j": int(j), "bound": curve(float(t), int(j))} for t in t_values for j in j_values]


def build_report(exp: Experiment, result: RunResult) -> dict:
    cfg = exp.cfg
    arc = result.arc
    rows = dataset_rows(cfg.registry)
    for row in rows:
        if math.isnan(row["alpha"]):
            row["alpha"] = None
    cert = certificate_section(cfg)
    if cert.get("certified"):
        ts = np.linspace(0.0, float(arc.t[-1]), 9)
        cert["bound_table"] = bound_table(cfg, ts, range(3))
    return {
        "law": {"kind": cfg.law.kind, "ell": cfg.law.label(), "upsilon": cfg.law.upsilon, "mu0": cfg.mu0,
                "blow_up_time": blow_up_time(cfg.law, cfg.mu0) if cfg.law.blows_up else None},
        "weights": {"k_t": cfg.k_t, "k_r": cfg.k_r},
        "automaton": {"tau_d": cfg.automaton.tau_d, "tau_a": cfg.automaton.tau_a,
                      "n0": cfg.automaton.n0, "t0": cfg.automaton.t0},
        "datasets": rows,
        "run": {"mode": result.run_mode, "dt": exp.dt, "eps_stop": exp.eps_stop,
                "termination": arc.termination.value, "final_time": float(arc.t[-1]),
                "jumps": arc.jump_count, "final_error": result.final_error,
                "final_theta": arc.x[-1, : cfg.dimension].tolist()},
        "switching": {
            "initial_mode": result.signal.initial_mode,
            "jumps": [[t, m] for t, m in result.signal.jumps],
            "reports": [_report_dict(result.dadt), _report_dict(result.daat)],
        },
        "certificate": cert,
    }


def _report_dict(rep) -> dict:
    return {"name": rep.name, "ok": rep.ok, "worst_margin": rep.worst_margin,
            "witness": None if rep.witness is None else [list(p) for p in rep.witness],
            "text": str(rep)}


def error_svg(t, err, title: str = "estimation error", width: int = 640, height: int = 360) -> str:
    """Static line chart of ``log10 |theta - theta*|`` against ``t``."""
    t = np.asarray(t, dtype=float)
    y = np.log10(np.maximum(np.asarray(err, dtype=float), 1e-16))
    # thin to at most ~2000 points
    step = max(1, len(t) // 2000)
    t, y = t[::step], y[::step]
    pad = 50
    t0, t1 = float(t.min()), float(t.max()) if t.max() > t.min() else float(t.min()) + 1.0
    y0, y1 = math.floor(float(y.min())), math.ceil(float(y.max()))
    if y1 == y0:
        y1 = y0 + 1
    sx = lambda v: pad + (v - t0) / (t1 - t0) * (width - 2 * pad)  # noqa: E731
    sy = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)  # noqa: E731
    pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t, y))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
    ]
    for e in range(y0, y1 + 1):
        yy = sy(e)
        lines.append(f'<text x="{pad - 6}" y="{yy + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                     f'font-size="10">1e{e}</text>')
    for k in range(5):
        tv = t0 + (t1 - t0) * k / 4
        lines.append(f'<text x="{sx(tv):.2f}" y="{height - pad + 16}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="10">{tv:.3g}</text>')
    lines.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_outputs(exp: Experiment, result: RunResult, out_dir: Path, title: str) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_diagnostics_csv(out_dir / "trace.csv", result)
    report = build_report(exp, result)
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    save_registry(exp.cfg.registry, out_dir / "registry.json")
    (out_dir / "error.svg").write_text(error_svg(result.arc.t, result.error, title))
    return report


def execute(exp: Experiment) -> RunResult:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run(exp.cfg, exp.policy, mode=exp.run_mode, dt=exp.dt, eps_stop=exp.eps_stop,
                   horizon=exp.horizon, initial_mode=exp.initial_mode)


def _print_summary(report: dict, out) -> None:
    r = report["run"]
    print(f"law {report['law']['ell']}: {r['termination']} at t={r['final_time']:.6g}, "
          f"{r['jumps']} jumps, final error {r['final_error']:.6e}", file=out)
    for line in format_dataset_rows([{**d, "alpha": math.nan if d["alpha"] is None else d["alpha"]}
                                     for d in report["datasets"]]):
        print(line, file=out)
    for rep in report["switching"]["reports"]:
        print(rep["text"], file=out)
    print(f"certificate: {report['certificate']['status']}", file=out)


# --------------------------------------------------------------------------
# subcommands


def cmd_example(args) -> int:
    exp = example_config(args.variant, seed=args.seed or 0, eps_stop=args.eps_stop or 0.01)
    result = execute(exp)
    report = write_outputs(exp, result, Path(args.out), f"{args.variant}: |theta - theta*|")
    _print_summary(report, sys.stdout)
    return EXIT_OK


def _load(args) -> Experiment:
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, str(path), seed=getattr(args, "seed", None),
                        law_override=getattr(args, "law", None), eps_stop=getattr(args, "eps_stop", None))


def cmd_simulate(args) -> int:
    exp = _load(args)
    if not exp.cfg.registry.sufficient:
        raise ConfigError("condition (a) violated: the registry has no sufficiently rich dataset")
    result = execute(exp)
    report = write_outputs(exp, result, Path(args.out), "|theta - theta*|")
    _print_summary(report, sys.stdout)
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_bounds(args) -> int:
    exp = _load(args)
    cfg = exp.cfg
    cert = certificate_section(cfg)
    for key, val in cert.items():
        print(f"{key:>16}: {val}")
    if not cert.get("certified"):
        raise CertificateFailure(cert["status"])
    T = blow_up_time(cfg.law, cfg.mu0)
    end = (1 - exp.eps_stop) * T if math.isfinite(T) else (exp.horizon or 1.0)
    ts = _float_list(args.t) if args.t else [end * k / 8 for k in range(9)]
    js = [int(v) for v in _float_list(args.j)] if args.j else [0, 1, 2]
    print(f"{'t':>12} {'D(t)':>12} " + " ".join(f"{'j=' + str(j):>14}" for j in js))
    table = bound_table(cfg, ts, js)
    for k, t in enumerate(ts):
        vals = table[k * len(js):(k + 1) * len(js)]
        print(f"{t:12.6g} {dilate(cfg.law, cfg.mu0, t):12.6g} " + " ".join(f"{v['bound']:14.6e}" for v in vals))
    return EXIT_OK


def read_trace_signal(path) -> tuple[SwitchingSignal, float]:
    """Rebuild the switching signal (and final time) from a trace with ``t, j, q`` columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t", "j", "q"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: trace needs columns t, j and q")
        rows = []
        for line, row in enumerate(reader, start=2):
            try:
                rows.append((float(row["t"]), int(float(row["j"])), int(float(row["q"]))))
            except (TypeError, ValueError):
                raise ConfigError(f"{path}:{line}: malformed row") from None
    if not rows:
        raise ConfigError(f"{path}: empty trace")
    jumps = []
    for (t0, j0, _), (t1, j1, q1) in zip(rows, rows[1:]):
        if j1 == j0 + 1:
            jumps.append((t1, q1))
        elif j1 != j0:
            raise ConfigError(f"{path}: jump counter skips from {j0} to {j1}")
    horizon = rows[-1][0]
    if jumps and jumps[-1][0] >= horizon:
        horizon = math.nextafter(jumps[-1][0], math.inf)
    return SwitchingSignal(rows[0][2], tuple(jumps), horizon), horizon


def _parse_params(text: str) -> dict:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        key, _, val = item.partition("=")
        key = key.strip()
        if key not in ("tau_d", "tau_a", "n0", "t0"):
            raise ConfigError(f"--params: unknown key {key!r} (expected tau_d, tau_a, n0, t0)")
        out[key] = float(val)
    missing = {"tau_d", "tau_a", "n0", "t0"} - set(out)
    if missing:
        raise ConfigError(f"--params: missing {sorted(missing)}")
    return out


def cmd_verify_switching(args) -> int:
    signal, _ = read_trace_signal(args.trace)
    if args.config:
        exp = _load(args)
        law, mu0, a = exp.cfg.law, exp.cfg.mu0, exp.cfg.automaton
        params = {"tau_d": a.tau_d, "tau_a": a.tau_a, "n0": a.n0, "t0": a.t0}
        bad = a.uninformative
    else:
        if not args.params:
            raise ConfigError("verify-switching needs --params (or --config)")
        params = _parse_params(args.params)
        law = GainLaw.parse(args.law or "inf", args.upsilon)
        mu0 = args.mu0
        bad = frozenset(int(v) for v in _float_list(args.uninformative or ""))
    dadt = verify_dadt(signal, law, mu0, params["tau_d"], params["n0"])
    daat = verify_daat(signal, law, mu0, params["tau_a"], params["t0"], bad)
    print(f"{len(signal.jumps)} jumps, law {law.label()}, mu0={mu0}")
    print(dadt)
    print(daat)
    return EXIT_OK if dadt.ok and daat.ok else EXIT_VALIDATION


def cmd_classify_dataset(args) -> int:
    registry = load_registry(args.registry)
    for line in format_dataset_rows(dataset_rows(registry)):
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spthe-cl", description="Switched concurrent learning with dynamic gains")
    sub = p.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("example", help="run a built-in benchmark variant")
    ex.add_argument("--variant", choices=("standard", "he", "pt"), default="pt")
    ex.add_argument("--out", default="out")
    ex.add_argument("--seed", type=int, default=None)
    ex.add_argument("--eps-stop", type=float, default=None)
    ex.set_defaults(func=cmd_example)

    sim = sub.add_parser("simulate", help="run an experiment config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", default="out")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--law", default=None, help="override the gain law: a number, 'inf' or 'frozen'")
    sim.add_argument("--eps-stop", type=float, default=None)
    sim.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="print certificate constants and bound values")
    b.add_argument("--config", required=True)
    b.add_argument("--law", default=None)
    b.add_argument("--eps-stop", type=float, default=None)
    b.add_argument("--t", default=None, help="comma-separated times")
    b.add_argument("--j", default=None, help="comma-separated jump counts")
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("verify-switching", help="check D-ADT and D-AAT on a trace file")
    v.add_argument("trace")
    v.add_argument("--config", default=None)
    v.add_argument("--law", default=None)
    v.add_argument("--params", default=None, help="tau_d=..,tau_a=..,n0=..,t0=..")
    v.add_argument("--upsilon", type=float, default=8.0)
    v.add_argument("--mu0", type=float, default=1.0)
    v.add_argument("--uninformative", default=None, help="comma-separated IR/corrupted modes")
    v.set_defaults(func=cmd_verify_switching)

    c = sub.add_parser("classify-dataset", help="print the richness report of a registry file")
    c.add_argument("registry")
    c.set_defaults(func=cmd_classify_dataset)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CertificateFailure as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except NegativeLambda as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, SchemaError, PolicyInfeasible, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
