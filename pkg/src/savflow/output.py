"""On-disk formats: diagnostics CSV, raw and PGM snapshots.

Snapshot raw format
-------------------
A 64-byte fixed ASCII header followed by the nodal values as
little-endian IEEE-754 float64, row-major (x-major, nx*ny values):

====== ======= ==================================================
bytes  width   content
====== ======= ==================================================
0      1       format version, currently ``1``
1-4    4       nx, zero-padded decimal
5-8    4       ny, zero-padded decimal
9-15   7       step index, zero-padded decimal
16-31  16      lx as 16 hex digits of the big-endian float64
32-47  16      ly, same encoding
48-63  16      time t, same encoding
====== ======= ==================================================

The hex-float encoding makes the header pure ASCII while round-tripping
domain lengths and times bit-exactly.

The PGM companion is an 8-bit grayscale P5 image rescaled by the field
min/max; the affine scale is recorded in a ``<name>.scale`` sidecar so
values can be recovered approximately (raw files are the exact record).
"""

from __future__ import annotations

import struct

import numpy as np

from .spectral import Field, make_grid

CSV_HEADER = ("step,t,dt,gamma,xi,r,energy,modified_energy,"
              "discrete_energy_H,newton_residual,mass,h2_seminorm")

SNAPSHOT_VERSION = b"1"
HEADER_BYTES = 64


def _fmt(x: float) -> str:
    # repr keeps the shortest decimal that parses back to the same float.
    return repr(float(x))


def write_records_csv(path, records, every: int = 1) -> None:
    """Write per-step diagnostics; ``every`` thins the rows (first and
    last steps are always included)."""
    lines = [CSV_HEADER]
    last = len(records) - 1
    for i, r in enumerate(records):
        if i % every and i != last:
            continue
        lines.append(",".join([
            str(r.step), _fmt(r.t_np1), _fmt(r.dt_np1), _fmt(r.gamma_np1),
            _fmt(r.xi), _fmt(r.r), _fmt(r.energy), _fmt(r.modified_energy),
            _fmt(r.discrete_energy_H), _fmt(r.newton_residual),
            _fmt(r.mass), _fmt(r.h2_seminorm),
        ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_convergence_csv(path, study) -> None:
    lines = ["N,tau,max_gamma,error_linf,error_l2,order,xi_err"]
    for r in study.rows:
        lines.append(",".join([
            str(r.N), _fmt(r.tau), _fmt(r.max_gamma), _fmt(r.error_linf),
            _fmt(r.error_l2), _fmt(r.order), _fmt(r.xi_err),
        ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_dt_csv(path, records) -> None:
    lines = ["step,t,dt"]
    for r in records:
        lines.append(f"{r.step},{_fmt(r.t_np1)},{_fmt(r.dt_np1)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _hex_f64(x: float) -> bytes:
    return struct.pack(">d", float(x)).hex().encode("ascii")


def _unhex_f64(b: bytes) -> float:
    return struct.unpack(">d", bytes.fromhex(b.decode("ascii")))[0]


def write_snapshot(path, field: Field, t: float, step: int) -> None:
    """Raw snapshot: 64-byte ASCII header + row-major float64 payload."""
    g = field.grid
    if g.nx > 9999 or g.ny > 9999:
        raise ValueError(f"grid {g.nx}x{g.ny} exceeds the 4-digit header fields")
    if not 0 <= step <= 9_999_999:
        raise ValueError(f"step {step} exceeds the 7-digit header field")
    header = b"".join([
        SNAPSHOT_VERSION,
        b"%04d" % g.nx,
        b"%04d" % g.ny,
        b"%07d" % step,
        _hex_f64(g.lx),
        _hex_f64(g.ly),
        _hex_f64(t),
    ])
    assert len(header) == HEADER_BYTES
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.data, dtype="<f8").tobytes())


def read_snapshot(path):
    """Read a raw snapshot back; returns (Field, meta) with meta = {t, step}."""
    with open(path, "rb") as fh:
        header = fh.read(HEADER_BYTES)
        if len(header) != HEADER_BYTES:
            raise ValueError(f"{path}: truncated snapshot header")
        if header[0:1] != SNAPSHOT_VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {header[0:1]!r}")
        nx = int(header[1:5])
        ny = int(header[5:9])
        step = int(header[9:16])
        lx = _unhex_f64(header[16:32])
        ly = _unhex_f64(header[32:48])
        t = _unhex_f64(header[48:64])
        payload = fh.read(nx * ny * 8)
    if len(payload) != nx * ny * 8:
        raise ValueError(f"{path}: payload holds {len(payload) // 8} values, expected {nx * ny}")
    data = np.frombuffer(payload, dtype="<f8").reshape(nx, ny)
    return Field(make_grid(nx, ny, lx, ly), data.copy()), {"t": t, "step": step}


def write_snapshot_pgm(path, field: Field) -> None:
    """8-bit grayscale P5 rendering with a `<path>.scale` sidecar."""
    data = field.data
    lo, hi = float(data.min()), float(data.max())
    if hi > lo:
        pixels = np.round((data - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        pixels = np.zeros_like(data, dtype=np.uint8)
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(f"P5\n{g.ny} {g.nx}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
    with open(f"{path}.scale", "w") as fh:
        fh.write(f"min {_fmt(lo)}\nmax {_fmt(hi)}\n")
