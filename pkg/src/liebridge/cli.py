"""Command-line front door: sampling, density estimation, metric recovery.

Every subcommand writes its outputs plus a ``manifest.json`` that records the
command, the fully resolved configuration, the seed, the code version, and the
wall time.  ``liebridge replay manifest.json --out DIR`` re-executes any
recorded run and reproduces its output files byte for byte, independent of
worker count.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 target at the cut locus, 5 degenerate importance weights.
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bridge import FORMULAS, sample_guided_bridges
from .density import Q_CONVENTIONS, estimate_heat_kernel
from .errors import (
    ArgumentError,
    CutLocusError,
    DegenerateWeights,
    DomainError,
    HorizonError,
    NonFiniteLikelihood,
    NotSPDError,
    NumericalError,
)
from .group import MetricTensor, distance, group_exp, group_log
from .kernels import BACKEND_ENV, backend_name
from .mle import MleConfig, MleTrace, fit_metric, sample_observations
from .sde import SCHEMES, IntegratorConfig, sample_brownian_paths, uniform_grid

SEED_ENV = "LIEBRIDGE_SEED"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CUT_LOCUS = 4
EXIT_DEGENERATE = 5

PATH_HEADER = "t,r00,r01,r02,r10,r11,r12,r20,r21,r22"
FRAMES_HEADER = "t,e1x,e1y,e1z,e2x,e2y,e2z,e3x,e3y,e3z"
BRIDGE_HEADER = PATH_HEADER + ",r,log_phi_cum"
TRACE_HEADER = "iter,a11,a22,a33,loglik,gradnorm"

EXPERIMENT_FIELDS = (
    "true_metric",
    "n_obs",
    "T",
    "steps",
    "bridges_per_obs",
    "lr",
    "iters",
    "init_metric",
    "seed",
    "formula",
    "q_convention",
)


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------

def _fnum(x: float) -> str:
    # 17 significant digits round-trip any double exactly
    return format(float(x), ".17g")


def _json_text(value, level: int = 0) -> str:
    """Deterministic JSON with floats rendered at 17 significant digits."""
    pad = "  " * level
    if isinstance(value, dict):
        if not value:
            return "{}"
        rows = []
        for key, item in value.items():
            rows.append("  " * (level + 1) + json.dumps(str(key)) + ": "
                        + _json_text(item, level + 1))
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_json_text(item, level) for item in value) + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return _fnum(x) if np.isfinite(x) else "null"
    if value is None:
        return "null"
    return json.dumps(str(value))


def _write_json(path: Path, obj) -> None:
    Path(path).write_text(_json_text(obj) + "\n")


def _write_rows(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(_fnum(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _metric_rows(a: np.ndarray):
    return [[float(v) for v in row] for row in np.asarray(a, dtype=float)]


# ---------------------------------------------------------------------------
# Argument and config parsing
# ---------------------------------------------------------------------------

def _parse_floats(text: str, flag: str):
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as err:
        raise ArgumentError(f"{flag}: expected comma-separated numbers, got {text!r}") from err


def _parse_metric(text: str) -> np.ndarray:
    """'identity', a comma diagonal 'a11,a22,a33', or 9 row-major entries."""
    if text.strip().lower() == "identity":
        return np.eye(3)
    vals = _parse_floats(text, "--metric")
    if len(vals) == 3:
        return np.diag(vals)
    if len(vals) == 9:
        return np.array(vals, dtype=float).reshape(3, 3)
    raise ArgumentError("--metric: expected 'identity', 3 diagonal entries, or 9 entries")


def _parse_vec3(text: str, flag: str) -> np.ndarray:
    vals = _parse_floats(text, flag)
    if len(vals) != 3:
        raise ArgumentError(f"{flag}: expected 3 comma-separated components")
    return np.array(vals, dtype=float)


def _config_metric(value, field: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape == (3,):
        arr = np.diag(arr)
    if arr.shape != (3, 3):
        raise ArgumentError(f"{field}: expected a diagonal triple or a 3x3 matrix")
    return arr


def _resolve_seed(seed: int) -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return int(seed)
    try:
        return int(env)
    except ValueError as err:
        raise ArgumentError(f"{SEED_ENV}: expected an integer, got {env!r}") from err


def _load_experiment(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ArgumentError(f"cannot read experiment config {path}: {err}") from err
    if not isinstance(raw, dict):
        raise ArgumentError("experiment config must be a JSON object")
    missing = [name for name in EXPERIMENT_FIELDS if name not in raw]
    if missing:
        raise ArgumentError("experiment config missing field(s): " + ", ".join(missing))
    unknown = [name for name in raw if name not in EXPERIMENT_FIELDS]
    if unknown:
        raise ArgumentError("experiment config has unknown field(s): " + ", ".join(unknown))
    return {name: raw[name] for name in EXPERIMENT_FIELDS}


def _require_positive(name: str, value: int) -> int:
    value = int(value)
    if value < 1:
        raise ArgumentError(f"{name} must be at least 1, got {value}")
    return value


# ---------------------------------------------------------------------------
# Runners: a plain config dict in, files out.  Shared with replay.
# ---------------------------------------------------------------------------

def _pad_width(n: int) -> int:
    return max(3, len(str(max(n - 1, 0))))


def _run_sample_bm(config: dict, out_dir: Path) -> str:
    a = np.array(config["metric"], dtype=float)
    T = float(config["T"])
    k = _require_positive("--steps", config["steps"])
    n = _require_positive("--paths", config["paths"])
    cfg = IntegratorConfig(scheme=config["scheme"], seed=int(config["seed"]))
    states = sample_brownian_paths(a, T, k, n, cfg, workers=int(config["workers"]))
    grid = uniform_grid(T, k)
    width = _pad_width(n)
    for j in range(n):
        flat = states[j].reshape(k + 1, 9)
        rows = np.column_stack([grid.t, flat])
        _write_rows(out_dir / f"path_{j:0{width}d}.csv", PATH_HEADER, rows)
        if config["frames"]:
            # columns of the rotation are the moved basis vectors e1, e2, e3
            cols = states[j].transpose(0, 2, 1).reshape(k + 1, 9)
            frame_rows = np.column_stack([grid.t, cols])
            _write_rows(out_dir / f"frames_{j:0{width}d}.csv", FRAMES_HEADER, frame_rows)
    return ""


def _run_sample_bridge(config: dict, out_dir: Path) -> str:
    w = np.array(config["target_axis_angle"], dtype=float)
    a = np.array(config["metric"], dtype=float)
    T = float(config["T"])
    k = int(config["steps"])
    n = _require_positive("--paths", config["paths"])
    target = group_exp(w)
    group_log(target)  # raises CutLocusError for targets at or past the cut locus
    cfg = IntegratorConfig(scheme=config["scheme"], seed=int(config["seed"]))
    samples = sample_guided_bridges(target, a, T, k, n, cfg,
                                    workers=int(config["workers"]),
                                    formula=config["formula"])
    grid = uniform_grid(T, k)
    metric = MetricTensor(a)
    width = _pad_width(n)
    dists = []
    cut_hits = 0
    for j, sample in enumerate(samples):
        flat = sample.path.states.reshape(k + 1, 9)
        rows = np.column_stack([grid.t, flat, sample.radial, sample.log_phi_series])
        _write_rows(out_dir / f"bridge_{j:0{width}d}.csv", BRIDGE_HEADER, rows)
        dists.append(distance(sample.path.states[-1], target, metric))
        cut_hits += sample.cut_hits
    summary = {
        "target": [float(v) for v in w],
        "T": T,
        "k": k,
        "seed": int(config["seed"]),
        "formula": config["formula"],
        "cut_hits": int(cut_hits),
        "paths": n,
        "mean_endpoint_distance": float(np.mean(dists)),
    }
    _write_json(out_dir / "summary.json", summary)
    return ""


def _run_estimate_density(config: dict, out_dir: Path) -> str:
    w = np.array(config["target_axis_angle"], dtype=float)
    a = np.array(config["metric"], dtype=float)
    target = group_exp(w)
    group_log(target)
    cfg = IntegratorConfig(scheme=config["scheme"], seed=int(config["seed"]))
    result = estimate_heat_kernel(target, a, float(config["T"]), int(config["steps"]),
                                  int(config["bridges"]), cfg,
                                  formula=config["formula"],
                                  q_convention=config["q_convention"],
                                  workers=int(config["workers"]),
                                  return_log_weights=config["weights"])
    if config["weights"]:
        report, log_weights = result
        _write_rows(out_dir / "weights.csv", "log_weight",
                    [[v] for v in log_weights])
    else:
        report = result
    payload = {
        "p_hat": report.p_hat,
        "log_p_hat": report.log_p_hat,
        "stderr": report.stderr,
        "ess": report.ess,
        "n_bridges": report.n_bridges,
        "formula": report.formula,
        "q_convention": report.q_convention,
        "q_value": report.q_value,
        "n_cut_hits": report.n_cut_hits,
    }
    text = _json_text(payload) + "\n"
    (out_dir / "report.json").write_text(text)
    return text


def _write_trace_csv(path: Path, trace: MleTrace) -> None:
    rows = []
    for row in trace.rows:
        diag = np.diag(np.asarray(row.a, dtype=float))
        rows.append([row.iteration, diag[0], diag[1], diag[2], row.loglik, row.gradnorm])
    _write_rows(path, TRACE_HEADER, rows)


def _run_fit_metric(config: dict, out_dir: Path) -> str:
    exp = config["experiment"]
    a_true = _config_metric(exp["true_metric"], "true_metric")
    init = _config_metric(exp["init_metric"], "init_metric")
    seed = int(exp["seed"])
    workers = int(config["workers"])
    obs = sample_observations(a_true, int(exp["n_obs"]), float(exp["T"]),
                              int(exp["steps"]), seed, workers=workers)
    mle_cfg = MleConfig(lr=float(exp["lr"]), iters=int(exp["iters"]),
                        bridges_per_obs=int(exp["bridges_per_obs"]),
                        steps=int(exp["steps"]), formula=exp["formula"],
                        q_convention=exp["q_convention"], workers=workers)
    try:
        trace = fit_metric(obs, init, mle_cfg, seed)
    except NonFiniteLikelihood as err:
        if err.trace is not None and err.trace.rows:
            _write_trace_csv(out_dir / "trace.csv", err.trace)
        raise
    _write_trace_csv(out_dir / "trace.csv", trace)
    _write_json(out_dir / "metric.json", {"a": _metric_rows(trace.fitted.a)})
    return ""


_RUNNERS = {
    "sample-bm": _run_sample_bm,
    "sample-bridge": _run_sample_bridge,
    "estimate-density": _run_estimate_density,
    "fit-metric": _run_fit_metric,
}


def _config_seed(command: str, config: dict) -> int:
    if command == "fit-metric":
        return int(config["experiment"]["seed"])
    return int(config["seed"])


def _execute(command: str, config: dict, out_dir: Path) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.monotonic()
    text = _RUNNERS[command](config, out_dir)
    manifest = {
        "command": command,
        "config": config,
        "seed": _config_seed(command, config),
        "version": __version__,
        "backend": backend_name(),
        "wall_time_s": time.monotonic() - t0,
    }
    _write_json(out_dir / "manifest.json", manifest)
    return text


# ---------------------------------------------------------------------------
# Subcommand adapters
# ---------------------------------------------------------------------------

def _cmd_sample_bm(args) -> int:
    config = {
        "metric": _metric_rows(_parse_metric(args.metric)),
        "T": args.T,
        "steps": args.steps,
        "paths": args.paths,
        "seed": _resolve_seed(args.seed),
        "scheme": args.scheme,
        "frames": bool(args.frames),
        "workers": args.workers,
    }
    _execute("sample-bm", config, Path(args.out))
    return EXIT_OK


def _cmd_sample_bridge(args) -> int:
    config = {
        "target_axis_angle": [float(v) for v in _parse_vec3(args.target_axis_angle,
                                                            "--target-axis-angle")],
        "metric": _metric_rows(_parse_metric(args.metric)),
        "T": args.T,
        "steps": args.steps,
        "paths": args.paths,
        "formula": args.formula,
        "seed": _resolve_seed(args.seed),
        "scheme": args.scheme,
        "workers": args.workers,
    }
    _execute("sample-bridge", config, Path(args.out))
    return EXIT_OK


def _cmd_estimate_density(args) -> int:
    config = {
        "target_axis_angle": [float(v) for v in _parse_vec3(args.target_axis_angle,
                                                            "--target-axis-angle")],
        "metric": _metric_rows(_parse_metric(args.metric)),
        "T": args.T,
        "steps": args.steps,
        "bridges": args.bridges,
        "formula": args.formula,
        "q_convention": args.q_convention,
        "seed": _resolve_seed(args.seed),
        "scheme": args.scheme,
        "weights": bool(args.weights),
        "workers": args.workers,
    }
    text = _execute("estimate-density", config, Path(args.out))
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_fit_metric(args) -> int:
    experiment = _load_experiment(args.config)
    experiment["seed"] = _resolve_seed(experiment["seed"])
    config = {"experiment": experiment, "workers": args.workers}
    _execute("fit-metric", config, Path(args.out))
    return EXIT_OK


def _cmd_replay(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ArgumentError(f"cannot read manifest {args.manifest}: {err}") from err
    command = manifest.get("command")
    if command not in _RUNNERS:
        raise ArgumentError(f"manifest names unknown command {command!r}")
    config = manifest.get("config")
    if not isinstance(config, dict):
        raise ArgumentError("manifest is missing its config echo")
    if args.workers is not None:
        config["workers"] = args.workers
    backend = manifest.get("backend")
    if backend:
        os.environ[BACKEND_ENV] = str(backend)
    text = _execute(command, config, Path(args.out))
    sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(sub, scheme: bool = True) -> None:
    sub.add_argument("--metric", default="identity",
                     help="'identity', diagonal 'a11,a22,a33', or 9 row-major entries")
    sub.add_argument("--T", type=float, default=1.0, help="time horizon")
    sub.add_argument("--steps", type=int, default=20, help="number of grid steps")
    sub.add_argument("--seed", type=int, default=0,
                     help=f"base seed (env {SEED_ENV} overrides)")
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument("--workers", type=int, default=1,
                     help="thread count; never changes results")
    if scheme:
        sub.add_argument("--scheme", choices=SCHEMES, default="euler_heun")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liebridge",
        description="Brownian motion, guided bridges, heat-kernel estimation, "
                    "and metric recovery on the rotation group.")
    subs = parser.add_subparsers(dest="command", required=True)

    bm = subs.add_parser("sample-bm", help="sample Brownian motion paths")
    _add_common(bm)
    bm.add_argument("--paths", type=int, default=4, help="number of paths")
    bm.add_argument("--frames", action="store_true",
                    help="also write the rotated basis vectors per grid point")
    bm.set_defaults(func=_cmd_sample_bm)

    br = subs.add_parser("sample-bridge", help="sample guided bridge paths")
    _add_common(br)
    br.add_argument("--target-axis-angle", required=True,
                    help="bridge target as axis-angle components 'wx,wy,wz'")
    br.add_argument("--paths", type=int, default=4, help="number of bridges")
    br.add_argument("--formula", choices=FORMULAS, default="derived")
    br.set_defaults(func=_cmd_sample_bridge)

    de = subs.add_parser("estimate-density", help="importance-sampled heat kernel value")
    _add_common(de)
    de.add_argument("--target-axis-angle", required=True,
                    help="evaluation point as axis-angle components 'wx,wy,wz'")
    de.add_argument("--bridges", type=int, default=1024, help="number of bridges")
    de.add_argument("--formula", choices=FORMULAS, default="derived")
    de.add_argument("--q-convention", choices=Q_CONVENTIONS, default="euclidean_consistent")
    de.add_argument("--weights", action="store_true",
                    help="also write per-bridge log-weights to weights.csv")
    de.set_defaults(func=_cmd_estimate_density)

    fit = subs.add_parser("fit-metric", help="run the metric-recovery experiment")
    fit.add_argument("--config", required=True, help="experiment JSON file")
    fit.add_argument("--out", default=".", help="output directory")
    fit.add_argument("--workers", type=int, default=1,
                     help="thread count; never changes results")
    fit.set_defaults(func=_cmd_fit_metric)

    rp = subs.add_parser("replay", help="re-run a recorded manifest")
    rp.add_argument("manifest", help="path to a manifest.json from a previous run")
    rp.add_argument("--out", default=".", help="output directory")
    rp.add_argument("--workers", type=int, default=None,
                    help="override recorded thread count; never changes results")
    rp.set_defaults(func=_cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArgumentError, NotSPDError, HorizonError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except CutLocusError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CUT_LOCUS
    except DegenerateWeights as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NonFiniteLikelihood as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NumericalError, DomainError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
