"""Readers and writers for run artifacts.

CSV files start with a ``# config_hash=<hex>`` comment line followed by the
column header. Floats are written with ``repr`` so they round-trip exactly.
Binary formats are little-endian throughout.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .constraints import KINDS, ConstraintSet
from .nn import ACTIVATIONS, Layer, Network
from .scenario import UePlacement

CSI_MAGIC = b"CCSI"
CSI_VERSION = 1
NET_MAGIC = b"CCNN"
NET_VERSION = 1


class FormatError(ValueError):
    pass


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path, header: list[str], rows, config_hash: str | None = None) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        if config_hash is not None:
            fh.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path) -> tuple[list[str], list[list[str]], str | None]:
    """Return ``(header, rows, config_hash)``; the hash is None if absent."""
    config_hash = None
    with Path(path).open(newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# config_hash="):
                    config_hash = line.strip().split("=", 1)[1]
                continue
            lines.append(line)
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{path}: missing header") from None
    return header, [row for row in reader if row], config_hash


def _expect(path, header, expected) -> None:
    if header != expected:
        raise FormatError(f"{path}: expected header {expected}, got {header}")


# positions.csv

POSITIONS_HEADER = ["id", "x", "y", "z", "is_anchor", "traj_order"]


def write_positions(path, placement: UePlacement, config_hash: str | None = None) -> None:
    anchor = placement.anchor_mask()
    order = placement.trajectory_order()
    rows = (
        [n, _fmt(p[0]), _fmt(p[1]), _fmt(p[2]), int(anchor[n]), int(order[n])]
        for n, p in enumerate(placement.positions)
    )
    write_csv(path, POSITIONS_HEADER, rows, config_hash)


def read_positions(path) -> tuple[UePlacement, str | None]:
    header, rows, config_hash = read_csv(path)
    _expect(path, header, POSITIONS_HEADER)
    ids = np.array([int(r[0]) for r in rows])
    if not np.array_equal(ids, np.arange(len(rows))):
        raise FormatError(f"{path}: ids must run 0..N-1 in order")
    pos = np.array([[float(r[1]), float(r[2]), float(r[3])] for r in rows]).reshape(-1, 3)
    anchor = np.array([int(r[4]) for r in rows], dtype=bool)
    order = np.array([int(r[5]) for r in rows], dtype=np.int64)
    on_traj = np.flatnonzero(order >= 0)
    traj = on_traj[np.argsort(order[on_traj], kind="stable")]
    placement = UePlacement(pos, traj.astype(np.int64), np.flatnonzero(anchor).astype(np.int64))
    return placement, config_hash


# CSI, binary and CSV

def write_csi(path, csi: np.ndarray) -> None:
    csi = np.asarray(csi)
    n, m = csi.shape
    body = np.empty((n, m, 2), dtype="<f4")
    body[..., 0] = csi.real
    body[..., 1] = csi.imag
    with Path(path).open("wb") as fh:
        fh.write(CSI_MAGIC)
        fh.write(struct.pack("<HII", CSI_VERSION, n, m))
        fh.write(body.tobytes(order="C"))


def read_csi(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != CSI_MAGIC:
        raise FormatError(f"{path}: not a CSI file")
    version, n, m = struct.unpack_from("<HII", data, 4)
    if version != CSI_VERSION:
        raise FormatError(f"{path}: unsupported CSI version {version}")
    body = np.frombuffer(data, dtype="<f4", offset=14)
    if body.size != 2 * n * m:
        raise FormatError(f"{path}: expected {n}x{m} entries, found {body.size // 2}")
    body = body.reshape(n, m, 2).astype(np.float64)
    return body[..., 0] + 1j * body[..., 1]


def write_csi_csv(path, csi: np.ndarray, config_hash: str | None = None) -> None:
    csi = np.asarray(csi)
    m = csi.shape[1]
    header = ["id"] + [c for k in range(m) for c in (f"re_{k}", f"im_{k}")]
    rows = ([n] + [_fmt(v) for z in row for v in (z.real, z.imag)] for n, row in enumerate(csi))
    write_csv(path, header, rows, config_hash)


def read_csi_csv(path) -> np.ndarray:
    header, rows, _ = read_csv(path)
    m = (len(header) - 1) // 2
    expected = ["id"] + [c for k in range(m) for c in (f"re_{k}", f"im_{k}")]
    _expect(path, header, expected)
    vals = np.array([[float(v) for v in r[1:]] for r in rows]).reshape(len(rows), m, 2)
    return vals[..., 0] + 1j * vals[..., 1]


def load_csi(path) -> np.ndarray:
    """Binary or CSV, chosen by content."""
    with Path(path).open("rb") as fh:
        magic = fh.read(4)
    return read_csi(path) if magic == CSI_MAGIC else read_csi_csv(path)


# features.csv

def write_features(path, entries: np.ndarray, config_hash: str | None = None) -> None:
    entries = np.asarray(entries)
    header = ["id"] + [f"f_{k}" for k in range(entries.shape[1])]
    write_csv(path, header, ([n] + [_fmt(v) for v in row] for n, row in enumerate(entries)), config_hash)


def read_features(path) -> np.ndarray:
    header, rows, _ = read_csv(path)
    _expect(path, header, ["id"] + [f"f_{k}" for k in range(len(header) - 1)])
    return np.array([[float(v) for v in r[1:]] for r in rows]).reshape(len(rows), len(header) - 1)


# constraints.csv

CONSTRAINTS_HEADER = ["kind", "i", "j", "anchor_u", "anchor_v", "d", "weight"]


def write_constraints(path, constraints: ConstraintSet, config_hash: str | None = None) -> None:
    rows = []
    for c in constraints:
        anchor = ["", ""] if c.anchor is None else [_fmt(c.anchor[0]), _fmt(c.anchor[1])]
        rows.append([c.kind, c.i, "" if c.j is None else c.j, *anchor, _fmt(c.target), _fmt(c.weight)])
    write_csv(path, CONSTRAINTS_HEADER, rows, config_hash)


def read_constraints(path) -> ConstraintSet:
    header, rows, _ = read_csv(path)
    _expect(path, header, CONSTRAINTS_HEADER)
    if not rows:
        return ConstraintSet.empty()
    kinds, i, j, anchors, d, w = [], [], [], [], [], []
    for r in rows:
        if r[0] not in KINDS:
            raise FormatError(f"{path}: unknown constraint kind {r[0]!r}")
        kinds.append(KINDS.index(r[0]))
        i.append(int(r[1]))
        j.append(int(r[2]) if r[2] else -1)
        anchors.append([float(r[3]), float(r[4])] if r[3] else [np.nan, np.nan])
        d.append(float(r[5]))
        w.append(float(r[6]))
    return ConstraintSet(kinds, i, j, np.array(anchors), d, w)


# chart.csv

CHART_HEADER = ["id", "u", "v", "true_x", "true_y", "is_anchor", "traj_order"]


def export_chart(path, embedding: np.ndarray, placement: UePlacement, config_hash: str | None = None) -> None:
    y = np.asarray(embedding, dtype=np.float64)
    if y.shape != (placement.num_users, 2):
        raise FormatError(f"chart shape {y.shape} does not match {placement.num_users} users")
    anchor = placement.anchor_mask()
    order = placement.trajectory_order()
    rows = (
        [n, _fmt(y[n, 0]), _fmt(y[n, 1]), _fmt(p[0]), _fmt(p[1]), int(anchor[n]), int(order[n])]
        for n, p in enumerate(placement.positions)
    )
    write_csv(path, CHART_HEADER, rows, config_hash)


def read_chart(path):
    """Return ``(embedding, true_xy, is_anchor, traj_order, config_hash)``."""
    header, rows, config_hash = read_csv(path)
    _expect(path, header, CHART_HEADER)
    vals = np.array([[float(v) for v in r[1:5]] for r in rows]).reshape(len(rows), 4)
    anchor = np.array([int(r[5]) for r in rows], dtype=bool)
    order = np.array([int(r[6]) for r in rows], dtype=np.int64)
    return vals[:, :2], vals[:, 2:4], anchor, order, config_hash


# report.csv

REPORT_HEADER = ["metric", "K", "value"]


def write_report(path, rows, config_hash: str | None = None) -> None:
    write_csv(path, REPORT_HEADER, ([m, k, _fmt(v)] for m, k, v in rows), config_hash)


def read_report(path) -> dict[tuple[str, str], float]:
    header, rows, _ = read_csv(path)
    _expect(path, header, REPORT_HEADER)
    return {(r[0], r[1]): float(r[2]) for r in rows}


# network checkpoint

_ACT_TAG = {name: n for n, name in enumerate(ACTIVATIONS)}


def save_network(path, net: Network) -> None:
    """``CCNN``, u16 version, u32 layer count, then per layer u32 rows,
    u32 cols, u8 activation tag, float64 weights (row-major), float64 biases."""
    with Path(path).open("wb") as fh:
        fh.write(NET_MAGIC)
        fh.write(struct.pack("<HI", NET_VERSION, len(net.layers)))
        for layer in net.layers:
            rows, cols = layer.weight.shape
            fh.write(struct.pack("<IIB", rows, cols, _ACT_TAG[layer.activation]))
            fh.write(np.ascontiguousarray(layer.weight, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())


def load_network(path) -> Network:
    """The bottleneck is recovered as the first narrowest hidden layer."""
    data = Path(path).read_bytes()
    if data[:4] != NET_MAGIC:
        raise FormatError(f"{path}: not a network checkpoint")
    version, count = struct.unpack_from("<HI", data, 4)
    if version != NET_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    offset = 10
    layers = []
    for _ in range(count):
        rows, cols, tag = struct.unpack_from("<IIB", data, offset)
        offset += 9
        w = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
        offset += 8 * rows * cols
        b = np.frombuffer(data, dtype="<f8", count=cols, offset=offset)
        offset += 8 * cols
        layers.append(Layer(w.astype(np.float64), b.astype(np.float64), ACTIVATIONS[tag]))
    if offset != len(data):
        raise FormatError(f"{path}: trailing bytes after {count} layers")
    widths = [layer.weight.shape[1] for layer in layers[:-1]]
    return Network(layers, int(np.argmin(widths)))
