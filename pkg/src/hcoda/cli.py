"""Batch command line: ``hcoda synth|fit|eval|sweep``.

Configs are flat JSON objects whose keys are Hyperparams or SynthConfig
field names, plus ``preset``, ``node_kind``/``edge_kind`` for loading and
``sweep_param``/``sweep_values``/``n_seeds`` for sweeps.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import formats
from .em import coda_mode
from .evaluation import EvalReport, reports_csv, score, sweep, timed_detect
from .graph import CONTINUOUS, GraphError
from .metrics import ca_accuracy, od_accuracy
from .params import ConfigError, Hyperparams
from .synth import SynthConfig, make_dataset, preset

EXTRA_KEYS = {"preset", "node_kind", "edge_kind", "sweep_param", "sweep_values", "n_seeds"}
FIT_REQUIRED = ("K", "lambda1", "lambda2", "lambda3")

logger = logging.getLogger("hcoda")


class CliError(Exception):
    """Carries an exit status alongside the message."""

    def __init__(self, message: str, status: int = 1):
        super().__init__(message)
        self.status = status


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}", 2) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config is not valid JSON: {exc}", 2) from None
    if not isinstance(cfg, dict):
        raise CliError("config must be a JSON object", 2)
    known = set(Hyperparams.field_names()) | set(SynthConfig.field_names()) | EXTRA_KEYS
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise CliError(f"unknown config key: {unknown[0]}", 2)
    return cfg


def hyperparams_from(cfg: dict, seed: Optional[int], baseline: str) -> Hyperparams:
    for key in FIT_REQUIRED:
        if key not in cfg:
            raise CliError(f"missing config key: {key}", 2)
    if "rate" not in cfg and "threshold" not in cfg:
        raise CliError("missing config key: rate (or threshold)", 2)
    kwargs = {k: v for k, v in cfg.items() if k in Hyperparams.field_names()}
    kwargs.setdefault("rate", None)
    kwargs.setdefault("threshold", None)
    if seed is not None:
        kwargs["seed"] = seed
    try:
        hp = Hyperparams(**kwargs)
    except (ConfigError, TypeError) as exc:
        raise CliError(f"bad config: {exc}", 2) from None
    return coda_mode(hp) if baseline == "coda" else hp


def synth_config_from(cfg: dict, preset_name: Optional[str], seed: Optional[int]) -> SynthConfig:
    kwargs = {k: v for k, v in cfg.items() if k in SynthConfig.field_names()}
    if seed is not None:
        kwargs["seed"] = seed
    name = preset_name or cfg.get("preset")
    try:
        return preset(name, **kwargs) if name else SynthConfig(**kwargs)
    except (ConfigError, TypeError) as exc:
        raise CliError(f"bad config: {exc}", 2) from None


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _load_data(data_dir: str, cfg: dict):
    try:
        return formats.load_dataset_dir(data_dir, cfg.get("node_kind", CONTINUOUS),
                                        cfg.get("edge_kind", CONTINUOUS))
    except OSError as exc:
        raise CliError(f"cannot read dataset: {exc}") from None
    except (formats.DatasetError, GraphError) as exc:
        raise CliError(str(exc)) from None


def cmd_synth(args, cfg) -> None:
    sc = synth_config_from(cfg, args.preset, args.seed)
    ds = make_dataset(sc)
    out = Path(args.out)
    formats.write_dataset(ds, out)
    _write_text(out / "synth_config.json", json.dumps(dataclasses.asdict(sc), indent=2, sort_keys=True) + "\n")
    logger.info("wrote %d nodes, %d edges to %s", ds.graph.n_nodes, ds.graph.n_edges, out)


def cmd_fit(args, cfg) -> None:
    hp = hyperparams_from(cfg, args.seed, args.baseline)
    ds = _load_data(args.data, cfg)
    try:
        res, ms = timed_detect(ds, hp)
    except GraphError as exc:
        raise CliError(str(exc)) from None
    method = "coda" if hp.coda else "hcoda"
    out = Path(args.out)
    g = ds.graph
    out.mkdir(parents=True, exist_ok=True)
    formats.write_labels(out / f"{method}_node_labels.tsv", g.node_ids, res.node_labels)
    if not hp.coda:
        formats.write_labels(out / f"{method}_edge_labels.tsv", range(g.n_edges), res.edge_labels)
    lines = [f"node\t{g.node_ids[i]}\n" for i in res.node_outliers]
    lines += [f"edge\t{e}\n" for e in res.edge_outliers]
    _write_text(out / f"{method}_outliers.tsv", "".join(lines))
    if ds.true_node_labels is not None:
        rep = score(res, ds, None if args.no_timing else ms, hp, hp.seed, param=method)
        _write_text(out / f"{method}_report.csv", reports_csv([rep], timing=not args.no_timing))
        _write_text(out / f"{method}_report.json", json.dumps(
            {"report": {k: v for k, v in dataclasses.asdict(rep).items() if k != "config"},
             "config": rep.config}, indent=2, sort_keys=True) + "\n")
        print(reports_csv([rep], timing=not args.no_timing), end="")


def cmd_eval(args, cfg) -> None:
    ds = _load_data(args.data, cfg)
    if ds.true_node_labels is None:
        raise CliError(f"no ground truth in {args.data}")
    g = ds.graph
    try:
        pred_nodes, pred_edges = formats.truth_arrays(
            g, formats.load_labels(args.pred),
            formats.load_labels(args.pred_edges) if args.pred_edges else None)
    except OSError as exc:
        raise CliError(f"cannot read predictions: {exc}") from None
    except formats.DatasetError as exc:
        raise CliError(str(exc)) from None
    od_edge = None
    if pred_edges is not None and ds.true_edge_labels is not None:
        od_edge = od_accuracy(np.flatnonzero(pred_edges == 0), np.flatnonzero(ds.true_edge_labels == 0))
    rep = EvalReport(
        od_acc_node=od_accuracy(np.flatnonzero(pred_nodes == 0), np.flatnonzero(ds.true_node_labels == 0)),
        od_acc_edge=od_edge,
        ca_acc=ca_accuracy(pred_nodes, ds.true_node_labels),
        runtime_ms=None,
        config=cfg,
        seed=args.seed if args.seed is not None else 0,
        param="eval",
    )
    text = reports_csv([rep])
    if args.out:
        _write_text(Path(args.out) / "eval_report.csv", text)
    print(text, end="")


def cmd_sweep(args, cfg) -> None:
    for key in ("sweep_param", "sweep_values"):
        if key not in cfg:
            raise CliError(f"missing config key: {key}", 2)
    hp = hyperparams_from(cfg, args.seed, args.baseline)
    sc = synth_config_from(cfg, args.preset, None)
    base = hp.seed
    seeds = list(range(base, base + int(cfg.get("n_seeds", 5))))
    data = _load_data(args.data, cfg) if args.data else None
    try:
        result = sweep(cfg["sweep_param"], list(cfg["sweep_values"]), hp, seeds, sc, data, args.workers)
    except (ConfigError, TypeError) as exc:
        raise CliError(f"bad config: {exc}", 2) from None
    text = result.csv(timing=not args.no_timing)
    _write_text(Path(args.out) / "sweep.csv", text)
    print(text, end="")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hcoda", description="Community outlier detection on edge-attributed graphs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="flat JSON config")
        p.add_argument("--seed", type=int, help="single source of randomness")
        p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("synth", help="generate a planted dataset")
    common(p)
    p.add_argument("--preset", choices=["graphA", "graphB", "graphC"])
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="detect outliers and communities")
    common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--baseline", choices=["coda", "none"], default="none")
    p.add_argument("--no-timing", action="store_true", help="leave runtime blank for byte-stable reports")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="score predicted labels against ground truth")
    common(p, out_required=False)
    p.add_argument("--data", required=True)
    p.add_argument("--pred", required=True, help="predicted node labels, id<TAB>label")
    p.add_argument("--pred-edges", help="predicted edge labels, row<TAB>label")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid over one parameter")
    common(p)
    p.add_argument("--preset", choices=["graphA", "graphB", "graphC"])
    p.add_argument("--data", help="fixed dataset instead of per-seed synthetic data")
    p.add_argument("--baseline", choices=["coda", "none"], default="none")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        args.func(args, cfg)
    except CliError as exc:
        print(f"hcoda: error: {exc}", file=sys.stderr)
        return exc.status
    return 0


if __name__ == "__main__":
    sys.exit(main())
