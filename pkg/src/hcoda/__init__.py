"""Holistic community outlier detection on edge-attributed graphs."""

from .em import FitResult, coda_mode, detect, fit, fit_with_restarts
from .evaluation import EvalReport, sweep
from .formats import load_dataset, load_dataset_dir, write_dataset
from .graph import AttributedGraph, Hmrf, build_hmrf, validate_graph
from .metrics import ca_accuracy, od_accuracy
from .params import ConfigError, Hyperparams
from .synth import SynthConfig, generate, inject_outliers, make_dataset, preset

__all__ = [
    "AttributedGraph", "ConfigError", "EvalReport", "FitResult", "Hmrf", "Hyperparams",
    "SynthConfig", "build_hmrf", "ca_accuracy", "coda_mode", "detect", "fit",
    "fit_with_restarts", "generate", "inject_outliers", "load_dataset", "load_dataset_dir",
    "make_dataset", "od_accuracy", "preset", "sweep", "validate_graph", "write_dataset",
]
