"""Graph loading, plain-text checkpoints and CSV output."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import CorruptCheckpoint
from .gcnn import GCNNConfig, GCNNParams
from .graph_core import Graph, build_graph, circular_graph, graph_from_edges, paper8_graph

CHECKPOINT_HEADER = "# gmf-gcnn checkpoint v1"
_LINE = re.compile(r"^([A-Za-z_][\w.]*)(?:\[([\d,]*)\])?\s*=\s*(.*)$")


def read_graph(spec: str) -> Graph:
    """``paper8``, ``ring:N``, a ``.csv`` dense weight matrix, or an edge
    list file with lines ``i j [w]`` (1-based, ``#`` comments)."""
    spec = spec.strip()
    if spec == "paper8":
        return paper8_graph()
    if spec.startswith("ring:"):
        return circular_graph(int(spec[5:]))
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"unknown graph {spec!r}: not paper8, ring:N or an existing file")
    if path.suffix.lower() == ".csv":
        return build_graph(np.loadtxt(path, delimiter=",", ndmin=2))
    edges, weights, n = [], [], 0
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) not in (2, 3):
            raise ValueError(f"{path}:{lineno}: expected 'i j [w]'")
        i, j = int(parts[0]), int(parts[1])
        edges.append((i, j))
        weights.append(float(parts[2]) if len(parts) == 3 else 1.0)
        n = max(n, i, j)
    return graph_from_edges(n, edges, weights)


def read_signal(path) -> np.ndarray:
    """One value per line or a single comma-separated row."""
    text = Path(path).read_text().replace(",", " ").split()
    return np.array([float(v) for v in text])


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v


def write_train_log(path, log):
    return write_csv(path, log.columns, log.rows)


@dataclass
class Checkpoint:
    config: GCNNConfig
    params: GCNNParams
    rng: dict


def _encode(arr: np.ndarray) -> str:
    return " ".join(format(float(v), ".17g") for v in np.ravel(arr))


def checkpoint_text(config: GCNNConfig, params: GCNNParams, rng: dict | None = None) -> str:
    lines = [CHECKPOINT_HEADER]
    for f in fields(config):
        lines.append(f"config.{f.name} = {getattr(config, f.name)!r}")
    for name in ("conv_weights", "biases", "fc_weights"):
        arr = getattr(params, name)
        shape = ",".join(str(s) for s in arr.shape)
        lines.append(f"{name}[{shape}] = {_encode(arr)}")
    for key, val in (rng or {}).items():
        lines.append(f"rng.{key} = {val!r}")
    return "\n".join(lines) + "\n"


def write_checkpoint(path, config: GCNNConfig, params: GCNNParams, rng: dict | None = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(checkpoint_text(config, params, rng))
    return path


def _literal(text: str, key: str):
    text = text.strip()
    if text in ("True", "False"):
        return text == "True"
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise CorruptCheckpoint(f"cannot parse value of {key!r}: {text!r}") from None


def parse_checkpoint(text: str) -> Checkpoint:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CHECKPOINT_HEADER:
        raise CorruptCheckpoint("missing checkpoint header")
    cfg, arrays, rng = {}, {}, {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        m = _LINE.match(line.strip())
        if not m:
            raise CorruptCheckpoint(f"line {lineno}: malformed entry")
        key, shape, value = m.groups()
        if shape is not None:
            try:
                dims = tuple(int(s) for s in shape.split(",") if s)
                vals = np.array([float(v) for v in value.split()], dtype=np.float64)
            except ValueError as exc:
                raise CorruptCheckpoint(f"line {lineno}: {exc}") from None
            if vals.size != int(np.prod(dims)):
                raise CorruptCheckpoint(f"line {lineno}: {key} holds {vals.size} values for shape {dims}")
            arrays[key] = vals.reshape(dims)
        elif key.startswith("config."):
            cfg[key[7:]] = _literal(value, key)
        elif key.startswith("rng."):
            rng[key[4:]] = _literal(value, key)
        else:
            raise CorruptCheckpoint(f"line {lineno}: unknown key {key!r}")
    missing = {"conv_weights", "biases", "fc_weights"} - arrays.keys()
    if missing:
        raise CorruptCheckpoint(f"missing arrays: {sorted(missing)}")
    try:
        config = GCNNConfig(**cfg)
        params = GCNNParams(arrays["conv_weights"], arrays["biases"], arrays["fc_weights"])
        params.check(config)
    except (TypeError, ValueError) as exc:
        raise CorruptCheckpoint(str(exc)) from None
    return Checkpoint(config, params, rng)


def read_checkpoint(path) -> Checkpoint:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise CorruptCheckpoint(f"cannot read checkpoint: {exc}") from None
    return parse_checkpoint(text)
