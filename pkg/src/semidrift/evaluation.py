"""Prequential experiment runner, drift metrics and benchmark grids."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .baselines import BASELINES, make_baseline
from .density import DensityDriftDetector, DetectorConfig, DriftState
from .generators import (DriftSchedule, HyperplaneGenerator, LabelInversionGenerator,
                         SEAGenerator)
from .hoeffding import HoeffdingTreeClassifier
from .knowledge import LabelBudget, discover
from .stream import LabelOracle, iter_windows, read_csv_stream

METHODS = ("density", *BASELINES)
GENERATORS = ("sea", "hyperplane", "inversion")
DEFAULT_DRIFTS = {"sea": (25_000, 50_000, 75_000), "hyperplane": (75_000,),
                  "inversion": (50_000,)}
METHOD_LABELS = {"density": "DensityEst", "ph": "PH", "adwin": "ADW", "eddm": "EDDM",
                 "ddm": "DDM"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines one run.

    ``dataset`` is a generator name (``sea``, ``hyperplane``, ``inversion``)
    or a CSV path. ``drift_points`` are where the generator injects drift and
    the reference for delay metrics; ``None`` means the generator's default
    (or no reference points for a CSV). ``baseline_budget`` is the label
    fraction the supervised baselines see; ``None`` gives them ``alpha``.
    ``scale_alpha`` is the label fraction the detector's scaling factor is
    computed for; ``None`` uses ``alpha``.
    """

    dataset: str = "sea"
    method: str = "density"
    alpha: float = 1.0
    window: int = 1000
    seed: int = 1
    length: int = 100_000
    drift_points: Optional[tuple] = None
    noise: Optional[float] = None
    n_features: int = 10
    kd: str = "active"
    tau: float = 0.05
    phi: float = 0.1
    delta: float = 0.0
    statistic: str = "calibrated"
    baseline_budget: Optional[float] = 1.0
    tolerance: int = 3000
    stability_windows: int = 10
    scale_alpha: Optional[float] = None

    def __post_init__(self):
        if self.drift_points is not None:
            object.__setattr__(self, "drift_points", tuple(int(p) for p in self.drift_points))
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.window < 1:
            raise ValueError(f"window size must be >= 1, got {self.window}")
        for name in ("alpha", "baseline_budget", "scale_alpha"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.kd not in ("active", "pu"):
            raise ValueError(f"unknown knowledge-discovery method {self.kd!r}")
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.noise is not None and not 0.0 <= self.noise < 0.5:
            raise ValueError(f"noise must lie in [0, 0.5), got {self.noise}")
        self.detector_config()  # validates thresholds

    @property
    def is_generated(self) -> bool:
        return self.dataset in GENERATORS

    @property
    def budget(self) -> float:
        """Label fraction this run's method actually gets."""
        if self.method != "density" and self.baseline_budget is not None:
            return self.baseline_budget
        return self.alpha

    def true_drifts(self) -> tuple:
        if self.drift_points is not None:
            return self.drift_points
        if self.is_generated:
            return tuple(p for p in DEFAULT_DRIFTS[self.dataset] if p < self.length)
        return ()

    def detector_config(self) -> DetectorConfig:
        alpha = self.alpha if self.scale_alpha is None else self.scale_alpha
        return DetectorConfig(tau=self.tau, phi=self.phi, delta=self.delta, alpha=alpha,
                              window=self.window, statistic=self.statistic)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def make_source(cfg: ExperimentConfig):
    """Build the configured stream source (generator or CSV)."""
    if not cfg.is_generated:
        return read_csv_stream(cfg.dataset)
    drifts = cfg.true_drifts()
    kinds = {"sea": SEAGenerator, "hyperplane": HyperplaneGenerator,
             "inversion": LabelInversionGenerator}
    default_noise = {"sea": 0.1, "hyperplane": 0.05, "inversion": 0.1}
    noise = default_noise[cfg.dataset] if cfg.noise is None else cfg.noise
    schedule = DriftSchedule(drifts, noise)
    if cfg.dataset == "hyperplane":
        return HyperplaneGenerator(cfg.seed, cfg.length, cfg.n_features, schedule)
    return kinds[cfg.dataset](cfg.seed, cfg.length, schedule)


@dataclass
class RunResult:
    """Per-window trace and summary metrics of one run."""

    config: ExperimentConfig
    records: list
    events: list
    query_count: int
    accuracy: float
    delays: list
    false_alarms: int
    n_instances: int
    runtime: float = 0.0
    error: str = ""

    @property
    def n_drifts(self) -> int:
        return len(self.events)

    @property
    def detected(self) -> int:
        return sum(d is not None and d <= self.config.tolerance for d in self.delays)

    @property
    def run_id(self) -> str:
        c = self.config
        return f"{c.method}-{Path(c.dataset).stem}-a{c.alpha:g}-s{c.seed}"


def detection_delay(events: Sequence[int], true_points: Sequence[int]) -> list:
    """Delay of the first event at or after each true point (and before the next), else None."""
    events = sorted(events)
    out = []
    for k, p in enumerate(true_points):
        nxt = true_points[k + 1] if k + 1 < len(true_points) else math.inf
        hit = next((e for e in events if p <= e < nxt), None)
        out.append(None if hit is None else hit - p)
    return out


def false_alarms(events: Sequence[int], true_points: Sequence[int], tolerance_window: int) -> int:
    """Events not inside ``[p, p + tolerance_window]`` for any true point ``p``."""
    if tolerance_window < 0:
        raise ValueError("tolerance_window must be >= 0")
    return sum(not any(p <= e <= p + tolerance_window for p in true_points) for e in events)


def _seeds(seed: int):
    kd, reveal = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(kd), np.random.default_rng(reveal)


def _prepare(cfg: ExperimentConfig):
    source = make_source(cfg)
    kd_rng, reveal_rng = _seeds(cfg.seed)
    if cfg.kd == "pu":
        alpha = cfg.budget
        source.revealed = lambda y, idx: (y == 1) & (reveal_rng.random(len(y)) < alpha)
    return source, LabelOracle(budget=cfg.budget), kd_rng


def _run_density(cfg, source, oracle, rng):
    detector = DensityDriftDetector(cfg.detector_config())
    budget = LabelBudget(cfg.budget)
    records, events, correct, seen = [], [], 0, 0
    for w in iter_windows(source, cfg.window, oracle):
        truth = oracle.truth(w.indices)
        model = detector.incremental_
        pred = model.predict(w.X) if model is not None else np.zeros(len(w), np.int64)
        hits = int(np.count_nonzero(pred == truth))
        correct, seen = correct + hits, seen + len(w)
        rl = discover(w, cfg.kd, oracle, budget, rng)
        verdict, _ = detector.detect(w, rl)
        if verdict.state is DriftState.DRIFT:
            events.append(w.end_index)
        note = "; ".join(filter(None, [verdict.note, *rl.flags]))
        records.append(dict(window_end_index=w.end_index, accuracy=hits / len(w),
                            epsilon=verdict.epsilon, state=verdict.state.value,
                            drift_flag=int(verdict.state is DriftState.DRIFT),
                            rl_size=len(rl), query_count=oracle.query_count, note=note))
    return records, events, correct, seen


def _run_baseline(cfg, source, oracle, rng):
    detector = make_baseline(cfg.method)
    budget = LabelBudget(cfg.budget)
    model, background, bg_age = HoeffdingTreeClassifier(), None, 0
    records, events, correct, seen = [], [], 0, 0
    for w in iter_windows(source, cfg.window, oracle):
        truth = oracle.truth(w.indices)
        rl = discover(w, cfg.kd, oracle, budget, rng)
        labels = dict(zip((rl.indices - w.start_index).tolist(), rl.y.tolist()))
        hits, worst = 0, DriftState.STABLE
        for j, x in enumerate(w.X.tolist()):
            pred = model.predict_one(x)
            hits += pred == truth[j]
            if j not in labels:
                continue
            y = labels[j]
            state = detector.update(int(pred != y))
            if state is DriftState.DRIFT:
                model = background if background is not None else HoeffdingTreeClassifier()
                background = None
                events.append(w.start_index + j)
                worst = DriftState.DRIFT
            elif state is DriftState.WARNING:
                if background is None:
                    background, bg_age = HoeffdingTreeClassifier(), 0
                if worst is DriftState.STABLE:
                    worst = DriftState.WARNING
            model.train_one(x, y)
            if background is not None:
                background.train_one(x, y)
        if background is not None:
            bg_age += 1
            if bg_age > cfg.stability_windows:
                background = None
        correct, seen = correct + hits, seen + len(w)
        records.append(dict(window_end_index=w.end_index, accuracy=hits / len(w),
                            epsilon=None, state=worst.value,
                            drift_flag=int(worst is DriftState.DRIFT), rl_size=len(rl),
                            query_count=oracle.query_count, note="; ".join(rl.flags)))
    return records, events, correct, seen


def prequential_run(cfg: ExperimentConfig) -> RunResult:
    """Test-then-train run of one method over one stream."""
    t0 = time.perf_counter()
    source, oracle, rng = _prepare(cfg)
    runner = _run_density if cfg.method == "density" else _run_baseline
    records, events, correct, seen = runner(cfg, source, oracle, rng)
    truths = cfg.true_drifts()
    return RunResult(cfg, records, events, oracle.query_count,
                     correct / seen if seen else 0.0, detection_delay(events, truths),
                     false_alarms(events, truths, cfg.tolerance), seen,
                     time.perf_counter() - t0)


# -- grids and reports --------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    method: str
    alpha: float
    dataset: str
    accuracy: float
    accuracy_std: float
    drifts: float
    mean_delay: Optional[float]
    false_alarms: float
    queries: float
    runs: int
    failures: int = 0

    @property
    def label(self) -> str:
        name = METHOD_LABELS.get(self.method, self.method)
        return f"{name} ({self.alpha:.1f})" if self.method == "density" else name


def summarize(results: Sequence[RunResult]) -> SummaryRow:
    cfg = results[0].config
    ok = [r for r in results if not r.error]
    nan = float("nan")
    if not ok:
        return SummaryRow(cfg.method, cfg.budget, cfg.dataset, nan, nan, nan, None, nan, nan,
                          0, len(results))
    delays = [d for r in ok for d in r.delays if d is not None]
    acc = np.array([r.accuracy for r in ok])
    return SummaryRow(cfg.method, cfg.budget, cfg.dataset, float(acc.mean()), float(acc.std()),
                      float(np.mean([r.n_drifts for r in ok])),
                      float(np.mean(delays)) if delays else None,
                      float(np.mean([r.false_alarms for r in ok])),
                      float(np.mean([r.query_count for r in ok])), len(ok),
                      len(results) - len(ok))


def _safe_run(cfg: ExperimentConfig) -> RunResult:
    try:
        return prequential_run(cfg)
    except Exception as exc:  # one broken cell must not sink the grid
        return RunResult(cfg, [], [], 0, float("nan"), [], 0, 0, error=f"{type(exc).__name__}: {exc}")


def bench_grid(methods: Sequence[str], budgets: Sequence[float], datasets: Sequence[str],
               seeds: Sequence[int], base: Optional[ExperimentConfig] = None, jobs: int = 1):
    """Run every (method, budget, dataset, seed) cell and average over seeds.

    Baselines run once per dataset at their own budget rather than once per
    entry of ``budgets``.

    Returns
    -------
    rows : list of SummaryRow
    results : list of RunResult
    """
    if not (methods and budgets and datasets and seeds):
        raise ValueError("benchmark grid is empty")
    base = base or ExperimentConfig()
    cells = []
    for ds in datasets:
        for m in methods:
            cell_budgets = budgets if m == "density" or base.baseline_budget is None else budgets[:1]
            for a in cell_budgets:
                cells.append([dataclasses.replace(base, dataset=ds, method=m, alpha=a, seed=s)
                              for s in seeds])
    flat = [c for cell in cells for c in cell]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_safe_run, flat))
    else:
        done = [_safe_run(c) for c in flat]
    rows, k = [], 0
    for cell in cells:
        rows.append(summarize(done[k:k + len(cell)]))
        k += len(cell)
    return rows, done


RESULT_FIELDS = ["run_id", "method", "dataset", "alpha", "window_end_index", "accuracy",
                 "epsilon", "state", "drift_flag", "rl_size", "query_count", "note"]
SUMMARY_FIELDS = ["method", "alpha", "dataset", "accuracy", "accuracy_std", "drifts",
                  "mean_delay", "false_alarms", "queries", "runs", "failures"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(round(v, 10))
    return v


def _header(fh, header: Optional[dict]):
    for k, v in (header or {}).items():
        fh.write(f"# {k} = {v}\n")


def write_results(results: Sequence[RunResult], path, header: Optional[dict] = None) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        _header(fh, header)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_FIELDS)
        for r in results:
            c = r.config
            for rec in r.records:
                w.writerow([_fmt(v) for v in (r.run_id, c.method, c.dataset, c.alpha,
                                              *(rec[f] for f in RESULT_FIELDS[4:]))])
    return path


def write_events(results: Sequence[RunResult], path, header: Optional[dict] = None) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        _header(fh, header)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "instance_index"])
        for r in results:
            for e in r.events:
                w.writerow([r.run_id, e])
    return path


def write_summary(rows: Sequence[SummaryRow], path, header: Optional[dict] = None) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        _header(fh, header)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for row in rows:
            w.writerow([_fmt(getattr(row, f)) for f in SUMMARY_FIELDS])
    return path


def read_summary(path) -> list[SummaryRow]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(io.StringIO("".join(lines))):
        if set(SUMMARY_FIELDS) - set(rec):
            raise ValueError(f"{path}: not a summary file (missing columns)")

        def num(key):
            return float(rec[key]) if rec[key] != "" else float("nan")
        rows.append(SummaryRow(rec["method"], float(rec["alpha"]), rec["dataset"], num("accuracy"),
                               num("accuracy_std"), num("drifts"),
                               float(rec["mean_delay"]) if rec["mean_delay"] else None,
                               num("false_alarms"), num("queries"), int(rec["runs"]),
                               int(rec["failures"])))
    return rows


def format_table(rows: Sequence[SummaryRow], markdown: bool = False) -> str:
    """Methods as rows, per-dataset accuracy and drift-count columns."""
    datasets = list(dict.fromkeys(r.dataset for r in rows))
    labels = list(dict.fromkeys(r.label for r in rows))
    cell = {(r.label, r.dataset): r for r in rows}
    head = ["Method"]
    for ds in datasets:
        name = Path(ds).stem
        head += [f"{name} Avg Accuracy", f"{name} Num of Drift"]
    body = []
    for lab in labels:
        line = [lab]
        for ds in datasets:
            r = cell.get((lab, ds))
            if r is None or r.runs == 0:
                line += ["-", "-"]
            else:
                acc = f"{r.accuracy:.3f}" + (f" ±{r.accuracy_std:.3f}" if r.runs > 1 else "")
                line += [acc, f"{r.drifts:g}"]
        body.append(line)
    if markdown:
        out = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        out += ["| " + " | ".join(b) + " |" for b in body]
        return "\n".join(out) + "\n"
    widths = [max(len(str(x[i])) for x in [head, *body]) for i in range(len(head))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join(fmt.format(*x).rstrip() for x in [head, *body]) + "\n"
