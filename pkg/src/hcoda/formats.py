"""Tab-separated dataset files.

node file    ``id<TAB>a1,a2,...``
edge file    ``src<TAB>dst<TAB>strength<TAB>b1,b2,...``
truth files  ``id<TAB>label`` (label 0 = outlier); edge ids are 0-based
             row numbers of the edge file.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Optional

import numpy as np

from .graph import CONTINUOUS, COUNTS, AttributedGraph, GraphError, validate_graph
from .synth import SynthDataset

NODE_FILE = "nodes.tsv"
EDGE_FILE = "edges.tsv"
NODE_TRUTH_FILE = "node_truth.tsv"
EDGE_TRUTH_FILE = "edge_truth.tsv"

_INT = re.compile(r"^-?\d+$")


class DatasetError(ValueError):
    pass


def _parse_id(text: str):
    return int(text) if _INT.match(text) else text


def _fmt_value(x: float, kind: str) -> str:
    if kind == COUNTS:
        return str(int(x))
    return repr(float(x))


def _fmt_vec(row, kind: str) -> str:
    return ",".join(_fmt_value(x, kind) for x in np.ravel(row))


def _parse_vec(text: str, path, lineno: int) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",")], dtype=float)
    except ValueError:
        raise DatasetError(f"{path}:{lineno}: bad attribute vector {text!r}") from None


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if line and not line.startswith("#"):
                yield lineno, line


def load_dataset(node_file, edge_file, node_kind: str = CONTINUOUS,
                 edge_kind: str = CONTINUOUS) -> AttributedGraph:
    """Read and validate a graph; errors name the offending file and line."""
    nodes = []
    for lineno, line in _lines(node_file):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetError(f"{node_file}:{lineno}: expected 2 tab-separated fields, got {len(parts)}")
        nodes.append((_parse_id(parts[0]), _parse_vec(parts[1], node_file, lineno)))
    edges = []
    for lineno, line in _lines(edge_file):
        parts = line.split("\t")
        if len(parts) != 4:
            raise DatasetError(f"{edge_file}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
        try:
            strength = float(parts[2])
        except ValueError:
            raise DatasetError(f"{edge_file}:{lineno}: bad strength {parts[2]!r}") from None
        edges.append((_parse_id(parts[0]), _parse_id(parts[1]), strength,
                      _parse_vec(parts[3], edge_file, lineno)))
    g = AttributedGraph.from_records(nodes, edges, node_kind, edge_kind)
    report = validate_graph(g)
    if not report.ok:
        raise GraphError("; ".join(report.violations))
    return g


def load_labels(path) -> dict:
    """``id -> label`` from a truth or prediction file."""
    out = {}
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetError(f"{path}:{lineno}: expected id<TAB>label")
        try:
            out[_parse_id(parts[0])] = int(parts[1])
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: bad label {parts[1]!r}") from None
    return out


def write_graph(g: AttributedGraph, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / NODE_FILE, "w", encoding="utf-8") as fh:
        for nid, row in zip(g.node_ids, g.node_attrs):
            fh.write(f"{nid}\t{_fmt_vec(row, g.node_kind)}\n")
    with open(out / EDGE_FILE, "w", encoding="utf-8") as fh:
        for (a, b), w, row in zip(g.edges, g.strengths, g.edge_attrs):
            fh.write(f"{a}\t{b}\t{float(w)!r}\t{_fmt_vec(row, g.edge_kind)}\n")


def write_labels(path, ids, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in zip(ids, labels):
            fh.write(f"{i}\t{int(lab)}\n")


def write_dataset(ds: SynthDataset, out_dir) -> None:
    out = Path(out_dir)
    write_graph(ds.graph, out)
    write_labels(out / NODE_TRUTH_FILE, ds.graph.node_ids, ds.true_node_labels)
    write_labels(out / EDGE_TRUTH_FILE, range(ds.graph.n_edges), ds.true_edge_labels)


def truth_arrays(g: AttributedGraph, node_truth: dict, edge_truth: Optional[dict] = None):
    """Align truth dictionaries with graph order; missing ids raise."""
    try:
        nodes = np.array([node_truth[i] for i in g.node_ids], dtype=np.int64)
        edges = None
        if edge_truth is not None:
            edges = np.array([edge_truth[e] for e in range(g.n_edges)], dtype=np.int64)
    except KeyError as exc:
        raise DatasetError(f"ground truth has no label for id {exc.args[0]!r}") from None
    return nodes, edges


def load_dataset_dir(data_dir, node_kind: str = CONTINUOUS, edge_kind: str = CONTINUOUS):
    """Load a directory written by :func:`write_dataset`.

    Returns a :class:`SynthDataset`; truth arrays are None when the truth
    files are absent.
    """
    d = Path(data_dir)
    g = load_dataset(d / NODE_FILE, d / EDGE_FILE, node_kind, edge_kind)
    node_truth = edge_truth = None
    if (d / NODE_TRUTH_FILE).exists():
        edge_map = load_labels(d / EDGE_TRUTH_FILE) if (d / EDGE_TRUTH_FILE).exists() else None
        node_truth, edge_truth = truth_arrays(g, load_labels(d / NODE_TRUTH_FILE), edge_map)
    outlier_nodes = np.flatnonzero(node_truth == 0) if node_truth is not None else None
    outlier_edges = np.flatnonzero(edge_truth == 0) if edge_truth is not None else None
    return SynthDataset(g, node_truth, edge_truth, outlier_nodes, outlier_edges)
