"""Evaluation reports, timed fits and one-parameter sweeps."""

from __future__ import annotations

import csv
import dataclasses
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .em import FitResult, coda_mode, detect
from .metrics import ca_accuracy, od_accuracy
from .params import ConfigError, Hyperparams
from .synth import SynthConfig, SynthDataset, make_dataset

CSV_HEADER = ("param", "seed", "od_acc_node", "od_acc_edge", "ca_acc", "runtime_ms")


@dataclass
class EvalReport:
    """Scores for one fit.

    ``od_acc_edge`` is None without edge ground truth; ``runtime_ms`` is None
    when scoring predictions that were produced elsewhere.
    """

    od_acc_node: float
    od_acc_edge: Optional[float]
    ca_acc: float
    runtime_ms: Optional[float]
    config: dict
    seed: int
    param: str = ""

    def __post_init__(self):
        for name in ("od_acc_node", "od_acc_edge", "ca_acc"):
            val = getattr(self, name)
            if val is not None and not 0.0 <= val <= 1.0:
                raise ValueError(f"{name}={val} outside [0, 1]")
        if self.runtime_ms is not None and not self.runtime_ms > 0:
            raise ValueError("runtime must be positive")

    def row(self, timing: bool = True) -> list[str]:
        return [
            self.param,
            str(self.seed),
            _fmt(self.od_acc_node),
            _fmt(self.od_acc_edge),
            _fmt(self.ca_acc),
            f"{self.runtime_ms:.3f}" if timing and self.runtime_ms is not None else "",
        ]


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def score(result: FitResult, truth: SynthDataset, runtime_ms: float, hp: Hyperparams,
          seed: int, param: str = "") -> EvalReport:
    """Compare a fit against the truth stored in ``truth``."""
    od_edge = None
    if truth.true_edge_labels is not None and not hp.coda and truth.graph.n_edges:
        od_edge = od_accuracy(result.edge_outliers, np.flatnonzero(truth.true_edge_labels == 0))
    return EvalReport(
        od_acc_node=od_accuracy(result.node_outliers, np.flatnonzero(truth.true_node_labels == 0)),
        od_acc_edge=od_edge,
        ca_acc=ca_accuracy(result.node_labels, truth.true_node_labels),
        runtime_ms=runtime_ms,
        config=dataclasses.asdict(hp),
        seed=seed,
        param=param,
    )


def timed_detect(ds: SynthDataset, hp: Hyperparams) -> tuple[FitResult, float]:
    start = time.perf_counter()
    res = detect(ds.graph, hp)
    # clamp so the positive-runtime invariant survives coarse clocks
    return res, max((time.perf_counter() - start) * 1e3, 1e-3)


def evaluate(ds: SynthDataset, hp: Hyperparams, param: str = "") -> tuple[FitResult, EvalReport]:
    if ds.true_node_labels is None:
        raise ValueError("dataset has no ground truth")
    res, ms = timed_detect(ds, hp)
    return res, score(res, ds, ms, hp, hp.seed, param)


def write_reports(reports: Sequence[EvalReport], fh, timing: bool = True) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rep in reports:
        writer.writerow(rep.row(timing))


def reports_csv(reports: Sequence[EvalReport], timing: bool = True) -> str:
    buf = io.StringIO()
    write_reports(reports, buf, timing)
    return buf.getvalue()


def _coerce(param: str, value, hp: Hyperparams, synth: SynthConfig):
    if param in Hyperparams.field_names():
        return hp.replace(**{param: value}), synth
    if param in SynthConfig.field_names():
        return hp, synth.replace(**{param: value})
    raise ConfigError(f"unknown sweep parameter {param!r}")


def _job(args):
    param, value, seed, hp, synth, data = args
    hp, synth = _coerce(param, value, hp, synth)
    hp = hp.replace(seed=seed)
    ds = data if data is not None else make_dataset(synth, seed)
    _, rep = evaluate(ds, hp, param=f"{param}={value}")
    return rep


def mean_report(reports: Sequence[EvalReport], param: str) -> EvalReport:
    """Average of per-seed reports, tagged with seed ``-1`` in memory."""
    edge = [r.od_acc_edge for r in reports if r.od_acc_edge is not None]
    return EvalReport(
        od_acc_node=float(np.mean([r.od_acc_node for r in reports])),
        od_acc_edge=float(np.mean(edge)) if len(edge) == len(reports) else None,
        ca_acc=float(np.mean([r.ca_acc for r in reports])),
        runtime_ms=float(np.mean([r.runtime_ms for r in reports])) if all(
            r.runtime_ms is not None for r in reports) else None,
        config=reports[0].config,
        seed=-1,
        param=param,
    )


@dataclass
class SweepResult:
    per_seed: list[EvalReport]
    means: list[EvalReport]

    def csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rep in self.per_seed:
            writer.writerow(rep.row(timing))
        for rep in self.means:
            row = rep.row(timing)
            row[1] = "mean"
            writer.writerow(row)
        return buf.getvalue()


def sweep(param: str, values: Sequence, hp: Hyperparams, seeds: Sequence[int],
          synth: Optional[SynthConfig] = None, data: Optional[SynthDataset] = None,
          workers: int = 1) -> SweepResult:
    """One fit per (value, seed).

    Each seed generates its own dataset from ``synth`` unless a fixed
    ``data`` set is given, in which case only the fit seed varies.  Rows
    come back in grid order then seed order regardless of ``workers``.
    """
    if not len(values):
        raise ConfigError("sweep grid is empty")
    if not len(seeds):
        raise ConfigError("sweep needs at least one seed")
    synth = synth or SynthConfig()
    jobs = [(param, v, s, hp, synth, data) for v in values for s in seeds]
    _coerce(param, values[0], hp, synth)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(_job, jobs))
    else:
        per_seed = [_job(j) for j in jobs]
    n = len(seeds)
    means = [mean_report(per_seed[i * n:(i + 1) * n], f"{param}={v}") for i, v in enumerate(values)]
    return SweepResult(per_seed, means)


def compare_baseline(ds: SynthDataset, hp: Hyperparams) -> tuple[EvalReport, EvalReport]:
    """HCODA and CODA reports on the same data and seed."""
    _, full = evaluate(ds, hp, param="hcoda")
    _, base = evaluate(ds, coda_mode(hp), param="coda")
    return full, base
