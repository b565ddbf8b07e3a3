"""On-disk formats: SCF1 binary fields, P5 graymaps, phase-plan text files,
homography files, CSV traces, and output manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .camera import Homography
from .optimize import PhasePlan

__all__ = [
    "write_scf",
    "read_scf",
    "write_pgm",
    "read_pgm",
    "write_plan",
    "read_plan",
    "write_homography",
    "read_homography",
    "write_loss_csv",
    "write_twin_csv",
    "write_manifest",
]

_SCF_MAGIC = b"SCF1"
_SCF_AMPLITUDE = 1  # row-major little-endian f64 values
_SCF_COMPLEX = 2  # row-major little-endian (re, im) f64 pairs


def write_scf(path, values: np.ndarray) -> None:
    """Flat binary field: 16-byte header (magic, u32 W, u32 H, u32 kind)."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("SCF stores 2-D fields")
    kind = _SCF_COMPLEX if np.iscomplexobj(values) else _SCF_AMPLITUDE
    ny, nx = values.shape
    with open(path, "wb") as fh:
        fh.write(_SCF_MAGIC)
        fh.write(struct.pack("<III", nx, ny, kind))
        if kind == _SCF_COMPLEX:
            inter = np.empty((ny, nx, 2))
            inter[..., 0] = values.real
            inter[..., 1] = values.imag
            fh.write(inter.astype("<f8").tobytes())
        else:
            fh.write(values.astype("<f8").tobytes())


def read_scf(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != _SCF_MAGIC:
            raise ValueError("not an SCF1 field file")
        nx, ny, kind = struct.unpack("<III", header[4:])
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if kind == _SCF_COMPLEX:
        raw = raw.reshape(ny, nx, 2)
        return raw[..., 0] + 1j * raw[..., 1]
    if kind == _SCF_AMPLITUDE:
        return raw.reshape(ny, nx).copy()
    raise ValueError(f"unknown SCF payload kind {kind}")


def write_pgm(path, values: np.ndarray, bits: int = 8) -> None:
    """P5 graymap of values scaled from [0, max] to full range."""
    values = np.asarray(values, dtype=np.float64)
    if bits not in (8, 16):
        raise ValueError("P5 supports 8 or 16 bits")
    maxval = (1 << bits) - 1
    peak = values.max()
    scaled = values / peak if peak > 0 else values
    quant = np.clip(np.round(scaled * maxval), 0, maxval)
    ny, nx = values.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n{maxval}\n".encode())
        if bits == 8:
            fh.write(quant.astype(np.uint8).tobytes())
        else:
            fh.write(quant.astype(">u2").tobytes())


def read_pgm(path) -> np.ndarray:
    """P5 graymap as floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a P5 graymap")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    nx, ny, maxval = fields
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    pixels = np.frombuffer(data, dtype=dtype, count=nx * ny, offset=pos)
    return pixels.reshape(ny, nx).astype(np.float64) / maxval


def write_plan(path, plan: PhasePlan, levels: int | None = None, discretized: np.ndarray | None = None) -> None:
    """Phase plan text file: header with F, M (and levels), one frame per line."""
    with open(path, "w") as fh:
        if discretized is not None:
            if levels is None:
                raise ValueError("discretized plans must record their level count")
            fh.write(f"frames {discretized.shape[0]} transducers {discretized.shape[1]} levels {levels}\n")
            for row in discretized:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
        else:
            fh.write(f"frames {plan.frames} transducers {plan.num_transducers}\n")
            for row in plan.wrapped():
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_plan(path):
    """Returns (PhasePlan, None) or (integer array, levels) for discretized files."""
    with open(path) as fh:
        header = fh.readline().split()
        rows = [line.split() for line in fh if line.strip()]
    frames = int(header[1])
    transducers = int(header[3])
    levels = int(header[5]) if len(header) > 4 and header[4] == "levels" else None
    if len(rows) != frames or any(len(r) != transducers for r in rows):
        raise ValueError("plan file body does not match its header")
    if levels is not None:
        return np.array(rows, dtype=np.int64), levels
    return PhasePlan(np.array(rows, dtype=np.float64)), None


def write_homography(path, h: Homography) -> None:
    """9 whitespace-separated decimals, row-major."""
    with open(path, "w") as fh:
        fh.write(" ".join(repr(float(v)) for v in h.matrix.ravel()) + "\n")


def read_homography(path) -> Homography:
    values = np.loadtxt(path).ravel()
    if values.size != 9:
        raise ValueError("homography file must hold 9 values")
    return Homography(values.reshape(3, 3))


def write_loss_csv(path, losses) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        for step, loss in enumerate(losses):
            writer.writerow([step, repr(float(loss))])


def write_twin_csv(path, losses, contrasts=None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "L_dt", "weber_contrast"])
        for step, loss in enumerate(losses):
            weber = "" if contrasts is None else repr(float(contrasts[step]))
            writer.writerow([step, repr(float(loss)), weber])


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, outputs) -> None:
    """JSON manifest of produced files with their content hashes."""
    entries = {str(Path(p).name): sha256_of(p) for p in outputs}
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=2, sort_keys=True)
        fh.write("\n")
