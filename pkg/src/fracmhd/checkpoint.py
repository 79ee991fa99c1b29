"""Checkpoint files: a JSON metadata document plus a raw coefficient block.

``<stem>.json`` holds the grid size, parameters, time and (optionally) the
diagnostics accumulators.  ``<stem>.bin`` holds the vorticity coefficients
followed by the current coefficients, each as ``n*n`` little-endian
complex128 values (interleaved real, imaginary float64 pairs) in row-major
FFT index order ``[k1 index, k2 index]``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from fracmhd.dynamics import MhdState, PhysParams
from fracmhd.spectral import GridSpec, SpectralField

FORMAT_NAME = "fracmhd-checkpoint"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<c16")


def checkpoint_paths(stem: str | Path) -> tuple[Path, Path]:
    stem = Path(stem)
    return stem.with_name(stem.name + ".json"), stem.with_name(stem.name + ".bin")


def write_checkpoint(
    stem: str | Path,
    state: MhdState,
    params: PhysParams,
    extra: dict | None = None,
) -> tuple[Path, Path]:
    """Write ``<stem>.json`` and ``<stem>.bin``; returns both paths."""
    meta_path, bin_path = checkpoint_paths(stem)
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    block = np.concatenate(
        [state.omega_hat.coeffs.ravel(), state.j_hat.coeffs.ravel()]
    ).astype(_DTYPE, copy=False)
    bin_path.write_bytes(block.tobytes())
    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "grid_n": state.grid.n,
        "params": params.as_dict(),
        "time": state.time,
        "binary": bin_path.name,
        "layout": "omega_hat then j_hat; <c16 row-major [k1_index, k2_index], FFT order",
    }
    if extra:
        meta["extra"] = extra
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta_path, bin_path


def read_checkpoint(path: str | Path) -> tuple[MhdState, PhysParams, dict]:
    """Load a checkpoint from its ``.json`` path or its stem.

    Returns:
        The state, the stored parameters and the ``extra`` mapping (empty if absent).
    """
    path = Path(path)
    meta_path = path if path.suffix == ".json" else checkpoint_paths(path)[0]
    meta = json.loads(meta_path.read_text())
    if meta.get("format") != FORMAT_NAME:
        raise ValueError(f"{meta_path} is not a {FORMAT_NAME} document")
    if meta.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {meta.get('version')!r}")
    n = int(meta["grid_n"])
    grid = GridSpec(n)
    raw = (meta_path.parent / meta["binary"]).read_bytes()
    block = np.frombuffer(raw, dtype=_DTYPE)
    if block.size != 2 * n * n:
        raise ValueError(f"binary block has {block.size} values, expected {2 * n * n}")
    block = block.astype(np.complex128)
    omega = SpectralField(grid, block[: n * n].reshape(n, n))
    j = SpectralField(grid, block[n * n :].reshape(n, n))
    p = meta["params"]
    params = PhysParams(p["alpha"], p["beta"], p["nu"], p["kappa"])
    return MhdState(omega, j, float(meta["time"])), params, meta.get("extra", {})
