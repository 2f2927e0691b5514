"""Surface snapshots (npz with a parameter echo) and long-format CSV export.

Every writer here is byte-deterministic: zip members carry a fixed timestamp
and floats are printed with 17 significant digits.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import zipfile
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .hjb_solver import Grid, SchemeConfig, SolutionSurface
from .model import ModelParams

_EPOCH = (1980, 1, 1, 0, 0, 0)
FLOAT_FMT = "%.17g"


def fmt(x: float) -> str:
    return FLOAT_FMT % x


def _write_zip(path: Path, members: dict[str, bytes]):
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(members):
            info = zipfile.ZipInfo(name, date_time=_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, members[name])


def _array_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


def save_surface(surface: SolutionSurface, path) -> Path:
    """Write ``surface`` as an ``.npz`` archive readable by :func:`numpy.load`."""
    path = Path(path)
    meta = {
        "params": surface.params.to_dict(),
        "scheme": asdict(surface.scheme),
        "log_spacing": bool(surface.grid.log_spacing),
    }
    members = {
        "t_nodes.npy": _array_bytes(surface.grid.t_nodes),
        "z_nodes.npy": _array_bytes(surface.grid.z_nodes),
        "u_values.npy": _array_bytes(surface.u_values),
        "pi_values.npy": _array_bytes(surface.pi_values),
        "meta.npy": _array_bytes(np.array(json.dumps(meta, sort_keys=True))),
    }
    _write_zip(path, members)
    return path


def load_surface(path) -> SolutionSurface:
    """Inverse of :func:`save_surface`; arrays round-trip bit for bit."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(data["meta"].item())
        grid = Grid(data["t_nodes"].copy(), data["z_nodes"].copy(), meta["log_spacing"])
        u = data["u_values"].copy()
        pi = data["pi_values"].copy()
    params = ModelParams.from_dict(meta["params"])
    return SolutionSurface(grid, u, pi, params, SchemeConfig(**meta["scheme"]))


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def surface_rows(surface: SolutionSurface):
    """Yield ``(t, z, u, pi)`` in time-major order."""
    g = surface.grid
    for i, t in enumerate(g.t_nodes):
        for j, z in enumerate(g.z_nodes):
            yield t, z, surface.u_values[i, j], surface.pi_values[i, j]


def export_surface_csv(surface: SolutionSurface, path) -> Path:
    return write_csv(path, ("t", "z", "u", "pi"), surface_rows(surface))


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    body = np.array([[float(v) for v in r] for r in rows[1:]]) if len(rows) > 1 else np.empty((0, len(rows[0])))
    return rows[0], body


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dump_json(obj, path=None) -> str:
    """Canonical JSON: sorted keys, no whitespace variation, one line."""
    text = json.dumps(obj, sort_keys=True, separators=(", ", ": "), allow_nan=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
