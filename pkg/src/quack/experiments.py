"""Experiment orchestration shared by the CLI subcommands.

Each run is deterministic given the config: the data seed fixes the
series, the BO seed fixes tuning, and all numeric output is printed with
17 significant digits, so repeated runs produce byte-identical numeric
files.  Wall-clock timings live in a separate ``timings`` field of the
run record and are the only non-reproducible values written.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bayesopt, gpr, kernels, metrics, timeseries
from .config import ExperimentConfig, snapshot
from .errors import ConfigError

# Two-sided 97.5% standard normal quantile for the 95% band.
Z95 = 1.959964

COMPARE_KINDS = ("iqp", "rbf", "matern", "rq", "periodic")


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def build_series(cfg: ExperimentConfig, n_steps: int | None = None) -> timeseries.Series:
    """Generate and standardize the configured series."""
    gen = dataclasses.replace(cfg.gen)
    if n_steps is not None:
        gen.n_steps = n_steps
    return timeseries.standardize(timeseries.generate(gen))


def search_space_for(kind: str, cfg: ExperimentConfig) -> bayesopt.SearchSpace:
    """Tuning box per kernel kind: kernel parameters, then noise, then mean."""
    kernel_dims = {
        "iqp": [("alpha", 0.0, 1.0)],
        "rbf": [("l_r", 0.1, 30.0)],
        "matern": [("l_m", 0.1, 30.0)],
        "rq": [("beta", 0.1, 10.0), ("l_q", 0.1, 30.0)],
        "periodic": [("p", 5.0, 35.0), ("l_p", 0.1, 30.0)],
    }
    if kind not in kernel_dims:
        raise ConfigError(f"unknown kernel kind {kind!r}")
    dims = kernel_dims[kind] + [
        ("noise_var", cfg.noise_lo, cfg.noise_hi),
        ("mean_const", cfg.mean_lo, cfg.mean_hi),
    ]
    return bayesopt.SearchSpace(dims=tuple(dims))


def hyperparams_from_theta(
    kind: str, names: tuple[str, ...], theta, cfg: ExperimentConfig,
    matern_nu: float | None = None,
) -> gpr.GprHyperparams:
    """Unpack a tuner point into GP hyperparameters for the given kind."""
    values = dict(zip(names, np.asarray(theta, dtype=float)))
    noise_var = values.pop("noise_var")
    mean_const = values.pop("mean_const")
    if kind == "matern":
        values["nu"] = cfg.matern_nu if matern_nu is None else matern_nu
    model = kernels.KernelModel(kind=kind, params={k: float(v) for k, v in values.items()})
    return gpr.GprHyperparams(mean_const=float(mean_const), noise_var=float(noise_var), kernel=model)


@dataclass
class TuneResult:
    kind: str
    theta: dict[str, float]
    incumbent_value: float
    trace: bayesopt.TuneTrace
    trace_path: Path | None
    seconds: float


def run_tune(
    cfg: ExperimentConfig,
    kind: str,
    series: timeseries.Series,
    out_dir: Path | None = None,
    window: int | None = None,
    train_overlap: int | None = None,
    matern_nu: float | None = None,
) -> TuneResult:
    """Maximize the training MLL over the kind's hyperparameter box."""
    w = cfg.window if window is None else window
    overlap = cfg.train_overlap if train_overlap is None else train_overlap
    train, _ = timeseries.split(series, w, cfg.train_frac, overlap)
    space = search_space_for(kind, cfg)

    def objective(theta):
        hp = hyperparams_from_theta(kind, space.names, theta, cfg, matern_nu)
        return gpr.mll(train.X, train.y, hp, cfg.qubit_ceiling)

    trace_path = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        trace_path = out_dir / "trace.csv"
    started = time.perf_counter()
    trace = bayesopt.tune(
        objective, space, cfg.n0, cfg.n_query, cfg.seed_bo,
        restarts=cfg.restarts, trace_path=trace_path,
    )
    seconds = time.perf_counter() - started
    theta = {name: float(v) for name, v in zip(space.names, trace.incumbent_theta)}
    result = TuneResult(
        kind=kind, theta=theta, incumbent_value=trace.incumbent_value,
        trace=trace, trace_path=trace_path, seconds=seconds,
    )
    if out_dir is not None:
        payload = {
            "kind": kind,
            "theta": theta,
            "incumbent_value": trace.incumbent_value,
            "n0": cfg.n0,
            "n_query": cfg.n_query,
            "seed_bo": cfg.seed_bo,
            "timings": {"tune_s": seconds},
        }
        (out_dir / "tuned.json").write_text(json.dumps(payload, indent=2) + "\n")
    return result


@dataclass
class PredictResult:
    kind: str
    theta: dict[str, float]
    target_indices: np.ndarray  # 1-based time index of each test target
    targets: np.ndarray
    means: np.ndarray
    var_latent: np.ndarray
    var_predictive: np.ndarray
    evaluation: metrics.Evaluation
    seconds: float


def run_predict(
    cfg: ExperimentConfig,
    kind: str,
    theta: dict[str, float],
    series: timeseries.Series,
    out_dir: Path | None = None,
    window: int | None = None,
    train_overlap: int | None = None,
    matern_nu: float | None = None,
) -> PredictResult:
    """Fit on the training windows and walk the test range at stride 1."""
    w = cfg.window if window is None else window
    overlap = cfg.train_overlap if train_overlap is None else train_overlap
    train, test = timeseries.split(series, w, cfg.train_frac, overlap)
    space = search_space_for(kind, cfg)
    theta_vec = np.array([theta[name] for name in space.names])
    hp = hyperparams_from_theta(kind, space.names, theta_vec, cfg, matern_nu)
    started = time.perf_counter()
    model = gpr.fit(train.X, train.y, hp, cfg.qubit_ceiling)
    means, var_latent = gpr.predict_batch(model, test.X)
    seconds = time.perf_counter() - started
    var_predictive = var_latent + hp.noise_var
    evaluation = metrics.evaluate_forecast(means, var_predictive, test.y)
    result = PredictResult(
        kind=kind, theta=dict(theta),
        target_indices=test.starts + w + 1,
        targets=test.y, means=means,
        var_latent=var_latent, var_predictive=var_predictive,
        evaluation=evaluation, seconds=seconds,
    )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_predictions_csv(out_dir / "predictions.csv", result)
        (out_dir / "record.json").write_text(
            json.dumps(run_record(cfg, result), indent=2) + "\n"
        )
    return result


def _write_predictions_csv(path: Path, result: PredictResult) -> None:
    half = Z95 * np.sqrt(result.var_predictive)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,target,mean,var_latent,var_predictive,lower95,upper95\n")
        for i in range(result.targets.shape[0]):
            row = (
                str(int(result.target_indices[i])),
                _fmt(result.targets[i]),
                _fmt(result.means[i]),
                _fmt(result.var_latent[i]),
                _fmt(result.var_predictive[i]),
                _fmt(result.means[i] - half[i]),
                _fmt(result.means[i] + half[i]),
            )
            fh.write(",".join(row) + "\n")


def run_record(cfg: ExperimentConfig, result: PredictResult) -> dict:
    """JSON-serializable record of one prediction run."""
    return {
        "kind": result.kind,
        "config": snapshot(cfg),
        "theta": result.theta,
        "posteriors": [
            {
                "index": int(result.target_indices[i]),
                "target": float(result.targets[i]),
                "mean": float(result.means[i]),
                "var_latent": float(result.var_latent[i]),
                "var_predictive": float(result.var_predictive[i]),
                "lower95": float(result.means[i] - Z95 * np.sqrt(result.var_predictive[i])),
                "upper95": float(result.means[i] + Z95 * np.sqrt(result.var_predictive[i])),
            }
            for i in range(result.targets.shape[0])
        ],
        "evaluation": result.evaluation.as_dict(),
        "timings": {"predict_s": result.seconds},
    }


@dataclass
class CompareRow:
    kind: str
    evaluation: metrics.Evaluation | None
    theta: dict[str, float] | None
    error: str | None = None
    matern_nu: float | None = None


def run_compare(cfg: ExperimentConfig, out_dir: Path | None = None) -> list[CompareRow]:
    """Tune, predict and evaluate every kernel on the same series and split.

    A kernel that fails is recorded with its error and the run continues.
    With ``matern_all`` the three Matern smoothness values are tuned
    separately and the best by test log likelihood is reported.
    """
    series = build_series(cfg)
    rows: list[CompareRow] = []
    for kind in COMPARE_KINDS:
        kind_dir = out_dir / kind if out_dir is not None else None
        try:
            if kind == "matern" and cfg.matern_all:
                row = _best_matern(cfg, series, kind_dir)
            else:
                nu = cfg.matern_nu if kind == "matern" else None
                tuned = run_tune(cfg, kind, series, kind_dir, matern_nu=nu)
                pred = run_predict(cfg, kind, tuned.theta, series, kind_dir, matern_nu=nu)
                row = CompareRow(kind=kind, evaluation=pred.evaluation, theta=tuned.theta,
                                 matern_nu=nu)
        except Exception as exc:  # noqa: BLE001 - per-kernel isolation is the contract
            row = CompareRow(kind=kind, evaluation=None, theta=None, error=str(exc))
        rows.append(row)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_compare_tables(out_dir, rows)
    return rows


def _best_matern(cfg: ExperimentConfig, series, kind_dir: Path | None) -> CompareRow:
    best: CompareRow | None = None
    for nu in kernels.MATERN_NUS:
        sub = kind_dir / f"nu_{nu}" if kind_dir is not None else None
        tuned = run_tune(cfg, "matern", series, sub, matern_nu=nu)
        pred = run_predict(cfg, "matern", tuned.theta, series, sub, matern_nu=nu)
        row = CompareRow(kind="matern", evaluation=pred.evaluation, theta=tuned.theta,
                         matern_nu=nu)
        if best is None or row.evaluation.ll_total > best.evaluation.ll_total:
            best = row
    return best


def _write_compare_tables(out_dir: Path, rows: list[CompareRow]) -> None:
    header = "kernel," + ",".join(metrics.Evaluation.METRIC_FIELDS)
    table_lines = [header]
    for row in rows:
        if row.evaluation is None:
            cells = ["nan"] * len(metrics.Evaluation.METRIC_FIELDS)
        else:
            ev = row.evaluation.as_dict()
            cells = [_fmt(ev[name]) for name in metrics.Evaluation.METRIC_FIELDS]
        table_lines.append(row.kind + "," + ",".join(cells))
    (out_dir / "table.csv").write_text("\n".join(table_lines) + "\n")

    flag_lines = [header]
    flags = compare_flags(rows)
    for row in rows:
        flag_lines.append(row.kind + "," + ",".join(flags[row.kind]))
    (out_dir / "flags.csv").write_text("\n".join(flag_lines) + "\n")

    failures = {row.kind: row.error for row in rows if row.error}
    if failures:
        (out_dir / "failures.json").write_text(json.dumps(failures, indent=2) + "\n")


def compare_flags(rows: list[CompareRow]) -> dict[str, list[str]]:
    """Best / second-best markers per metric column; LL ranks descending."""
    out = {row.kind: [""] * len(metrics.Evaluation.METRIC_FIELDS) for row in rows}
    for col, name in enumerate(metrics.Evaluation.METRIC_FIELDS):
        scored = [
            (row.evaluation.as_dict()[name], row.kind)
            for row in rows
            if row.evaluation is not None
        ]
        if not scored:
            continue
        reverse = name == "ll_total"
        ranked = sorted(scored, key=lambda pair: pair[0], reverse=reverse)
        out[ranked[0][1]][col] = "best"
        if len(ranked) > 1:
            out[ranked[1][1]][col] = "second"
    return out


def landscape_grid(cfg: ExperimentConfig, alpha: float, series: timeseries.Series) -> tuple[np.ndarray, np.ndarray]:
    """Fidelity against the zero window over a 2-d slice of input space.

    The first two window coordinates sweep [series min, series max] (the
    exact origin is inserted if the grid misses it); remaining
    coordinates stay at zero.  Returns (axis values, value matrix).
    """
    w = cfg.window
    lo = float(series.values.min())
    hi = float(series.values.max())
    axis = np.linspace(lo, hi, cfg.landscape_grid)
    if not np.any(axis == 0.0):
        axis = np.sort(np.append(axis, 0.0))
    m = axis.shape[0]
    grid_points = np.zeros((w, m * m))
    xs, ys = np.meshgrid(axis, axis, indexing="ij")
    grid_points[0, :] = xs.ravel()
    if w > 1:
        grid_points[1, :] = ys.ravel()
    model = kernels.KernelModel(kind="iqp", params={"alpha": float(alpha)})
    reference = np.zeros((w, 1))
    values = kernels.cross(model, reference, grid_points, cfg.qubit_ceiling)[0]
    return axis, values.reshape(m, m)


def run_landscape(cfg: ExperimentConfig, alpha: float, out_dir: Path | None = None) -> tuple[np.ndarray, np.ndarray]:
    series = build_series(cfg)
    axis, values = landscape_grid(cfg, alpha, series)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "landscape.csv", "w", encoding="utf-8") as fh:
            fh.write("x1,x2,value\n")
            for i, x1 in enumerate(axis):
                for j, x2 in enumerate(axis):
                    fh.write(f"{_fmt(x1)},{_fmt(x2)},{_fmt(values[i, j])}\n")
    return axis, values


@dataclass
class AblateRow:
    qubits: int
    ll_total: float | None
    mae: float | None
    theta: dict[str, float] | None = None
    error: str | None = None


def run_ablate(cfg: ExperimentConfig, out_dir: Path | None = None) -> list[AblateRow]:
    """Retune and re-predict the quantum model at each window length.

    Uses the ablation profile: longer series and wider window overlap so
    the larger windows keep enough training pairs.  Per-size failures
    are recorded and the sweep continues.
    """
    series = build_series(cfg, n_steps=cfg.ablate_n_steps)
    rows: list[AblateRow] = []
    for w in cfg.ablate_qubits:
        sub = out_dir / f"qubits_{w}" if out_dir is not None else None
        try:
            tuned = run_tune(
                cfg, "iqp", series, sub, window=w, train_overlap=cfg.ablate_train_overlap
            )
            pred = run_predict(
                cfg, "iqp", tuned.theta, series, sub,
                window=w, train_overlap=cfg.ablate_train_overlap,
            )
            rows.append(AblateRow(
                qubits=w, ll_total=pred.evaluation.ll_total,
                mae=pred.evaluation.mae, theta=tuned.theta,
            ))
        except Exception as exc:  # noqa: BLE001 - per-size isolation is the contract
            rows.append(AblateRow(qubits=w, ll_total=None, mae=None, error=str(exc)))
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        lines = ["qubits,ll_total,mae"]
        for row in rows:
            ll = "nan" if row.ll_total is None else _fmt(row.ll_total)
            mae = "nan" if row.mae is None else _fmt(row.mae)
            lines.append(f"{row.qubits},{ll},{mae}")
        (out_dir / "ablate.csv").write_text("\n".join(lines) + "\n")
        failures = {str(row.qubits): row.error for row in rows if row.error}
        if failures:
            (out_dir / "failures.json").write_text(json.dumps(failures, indent=2) + "\n")
    return rows


def run_generate(cfg: ExperimentConfig, out_dir: Path) -> tuple[Path, Path]:
    """Write the standardized series CSV and its statistics sidecar."""
    raw = timeseries.generate(cfg.gen)
    std = timeseries.standardize(raw)
    out_dir.mkdir(parents=True, exist_ok=True)
    series_path = out_dir / "series.csv"
    stats_path = out_dir / "series_stats.json"
    timeseries.save_csv(std, series_path)
    stats_path.write_text(
        json.dumps({"mean": std.mean, "sd": std.sd, "n_steps": len(std)}, indent=2) + "\n"
    )
    return series_path, stats_path
