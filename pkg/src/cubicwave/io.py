"""On-disk formats: binary snapshots, trajectory directories, CSV tables.

Snapshot layout (little-endian)::

    b"CWI1" | n:u32 | L:f64 | time:f64 | s:f64 | N:f64
    n^3 complex128 coefficients of u      (k ascending from -n/2 on each axis,
    n^3 complex128 coefficients of u_t     row-major, last axis fastest)

s and N are NaN when no multiplier profile is attached.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .dynamics import Trajectory, WaveState
from .spectral import Grid3, MultiplierProfile, SpectralField

MAGIC = b"CWI1"
_HEADER = struct.Struct("<4sIdddd")
MANIFEST = "manifest.json"


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON form of ``config``."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def write_snapshot(path, state: WaveState, prof: Optional[MultiplierProfile] = None) -> Path:
    path = Path(path)
    g = state.grid
    s, N = (prof.s, prof.N) if prof is not None else (math.nan, math.nan)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.n, g.box_length, state.t, s, N))
        for fld in (state.u, state.ut):
            block = np.fft.fftshift(fld.coefficients).astype("<c16")
            fh.write(block.tobytes(order="C"))
    return path


def read_snapshot(path) -> tuple[WaveState, Optional[MultiplierProfile]]:
    """Inverse of ``write_snapshot``; also returns the stored profile, if any."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size or data[:4] != MAGIC:
        raise ValueError(f"{path}: not a CWI1 snapshot")
    _, n, L, t, s, N = _HEADER.unpack_from(data)
    grid = Grid3(n, L)
    count = n**3
    expected = _HEADER.size + 2 * count * 16
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for n={n}, found {len(data)}")
    raw = np.frombuffer(data, dtype="<c16", offset=_HEADER.size)
    u, ut = (
        SpectralField(grid, np.fft.ifftshift(raw[i * count : (i + 1) * count].reshape(grid.shape)))
        for i in range(2)
    )
    prof = None if math.isnan(s) else MultiplierProfile(s, N)
    return WaveState(t, u, ut), prof


def snapshot_name(index: int) -> str:
    return f"snap_{index:06d}.cwi"


def write_trajectory(directory, traj: Trajectory, config: Optional[dict] = None, prof=None) -> Path:
    """Write every snapshot plus ``manifest.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for i, st in enumerate(traj.states):
        write_snapshot(directory / snapshot_name(i), st, prof)
        files.append(snapshot_name(i))
    manifest = {
        "dt": traj.dt,
        "stride": traj.stride,
        "coupling": traj.coupling,
        "times": [float(t) for t in traj.times],
        "files": files,
        "config_hash": config_hash(config) if config is not None else None,
    }
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory


def read_trajectory(directory) -> Trajectory:
    directory = Path(directory)
    manifest_path = directory / MANIFEST
    if not manifest_path.exists():
        raise ValueError(f"{directory}: no {MANIFEST}; not a trajectory directory")
    manifest = json.loads(manifest_path.read_text())
    states = [read_snapshot(directory / name)[0] for name in manifest["files"]]
    return Trajectory(states, manifest["dt"], manifest["stride"], manifest.get("coupling", 1.0))


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> Path:
    """CSV with optional leading ``# key=value`` comment lines."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    return path


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Return (comment lines, rows as dicts of strings)."""
    lines = Path(path).read_text().splitlines()
    comments = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return comments, list(csv.DictReader(body))
