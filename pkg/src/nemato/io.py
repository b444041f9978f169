"""Deterministic plain-text outputs: ledger CSV, state snapshots and reports.

All floats are written with 17 significant digits (``%.17g``), which
round-trips every IEEE double exactly; files use LF line endings.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .fem import Mesh, State

__all__ = ["LEDGER_COLUMNS", "fmt", "write_ledger", "read_ledger", "write_snapshot", "read_snapshot", "write_text"]

LEDGER_COLUMNS = ("t", "elastic", "nematic", "loads", "total", "dissipation_step", "variation", "power", "aux_power", "min_det")


def fmt(x: float) -> str:
    """17-significant-digit text for a float (``inf``, ``-inf``, ``nan`` spelled out)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def ledger_rows(trajectory):
    for r in trajectory.records:
        e = r.energy
        yield (r.t, e.elastic, e.nematic, e.loads, e.total, r.dissipation_step, r.variation, r.power, r.aux_power, r.min_det)


def write_ledger(trajectory, path) -> None:
    """Write one CSV row per trajectory record in :data:`LEDGER_COLUMNS` order."""
    path = Path(path)
    with path.open("w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for row in ledger_rows(trajectory):
            w.writerow([fmt(v) for v in row])


def read_ledger(path) -> dict:
    """Read a ledger back into ``column -> ndarray``."""
    with Path(path).open("r", encoding="ascii", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


def write_snapshot(path, t: float, state: State) -> None:
    """ASCII snapshot.

    Line 1 is ``# t nodes elements`` with the values, then one line per node
    ``id x y u1 u2 m1 m2`` (``u = y - x``) in ascending id, then one line
    per element ``id a b c``.
    """
    mesh = state.mesh
    u = np.asarray(state.y) - mesh.nodes
    lines = [f"# {fmt(t)} {mesh.n_nodes} {mesh.n_elements}"]
    for i in range(mesh.n_nodes):
        x, y = mesh.nodes[i]
        lines.append(" ".join([str(i), fmt(x), fmt(y), fmt(u[i, 0]), fmt(u[i, 1]), fmt(state.m[i, 0]), fmt(state.m[i, 1])]))
    for e, (a, b, c) in enumerate(mesh.elements):
        lines.append(f"{e} {a} {b} {c}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def read_snapshot(path, mesh: Mesh | None = None):
    """Read a snapshot; returns ``(t, nodes, y, m, elements)``."""
    text = Path(path).read_text(encoding="ascii").splitlines()
    _, t, nn, ne = text[0].split()
    nn, ne = int(nn), int(ne)
    node = np.array([[float(v) for v in ln.split()[1:]] for ln in text[1 : 1 + nn]])
    elems = np.array([[int(v) for v in ln.split()[1:]] for ln in text[1 + nn : 1 + nn + ne]], dtype=np.int64)
    X = node[:, :2]
    return float(t), X, X + node[:, 2:4], node[:, 4:6], elems


def write_text(path, text: str) -> None:
    Path(path).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8", newline="\n")
