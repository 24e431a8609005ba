"""Snapshot, checkpoint and run-directory formats.

Snapshot file
    An ASCII header line ``HMHD1 <n> <ncomp>`` terminated by a newline,
    followed by ``ncomp * n**3`` little-endian float64 physical samples.
    Components are stored one after another; within a component the first
    coordinate ``x1`` varies fastest.

Checkpoint directory
    One snapshot per state component (``u.hmhd``, ``B.hmhd`` and ``J.hmhd``
    or ``v.hmhd``) and ``meta.txt`` with ``key = value`` lines holding the
    time, parameters, grid and configuration hash.

Run directory
    ``manifest.json``, ``diagnostics.csv`` and ``checkpoints/step_XXXXXXX``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .equations import ElectronState, ExtendedState, PhysParams
from .spectral import Grid, SpectralField

__all__ = [
    "SnapshotError",
    "write_snapshot",
    "read_snapshot",
    "write_field",
    "read_field",
    "write_checkpoint",
    "read_checkpoint",
    "Checkpoint",
    "list_checkpoints",
    "load_run",
    "RunData",
]

MAGIC = "HMHD1"


class SnapshotError(ValueError):
    """Malformed snapshot or checkpoint."""


def write_snapshot(path: str | Path, samples: np.ndarray) -> None:
    """Write physical samples of shape ``(ncomp, n, n, n)`` or ``(n, n, n)``."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 3:
        samples = samples[None]
    if samples.ndim != 4 or len(set(samples.shape[1:])) != 1:
        raise SnapshotError(f"expected (ncomp, n, n, n) samples, got {samples.shape}")
    ncomp, n = samples.shape[0], samples.shape[1]
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {n} {ncomp}\n".encode("ascii"))
        for comp in samples:
            fh.write(comp.astype("<f8").tobytes(order="F"))


def read_snapshot(path: str | Path) -> np.ndarray:
    """Read samples written by :func:`write_snapshot` as ``(ncomp, n, n, n)``."""
    data = Path(path).read_bytes()
    head, sep, body = data.partition(b"\n")
    if not sep:
        raise SnapshotError(f"{path}: missing header line")
    parts = head.decode("ascii", errors="replace").split()
    if len(parts) != 3 or parts[0] != MAGIC:
        raise SnapshotError(f"{path}: bad header {head[:40]!r}")
    try:
        n, ncomp = int(parts[1]), int(parts[2])
    except ValueError:
        raise SnapshotError(f"{path}: bad header {head[:40]!r}") from None
    expected = ncomp * n**3 * 8
    if len(body) != expected:
        raise SnapshotError(f"{path}: expected {expected} data bytes, found {len(body)}")
    flat = np.frombuffer(body, dtype="<f8").reshape(ncomp, n**3)
    return np.stack([c.reshape((n, n, n), order="F") for c in flat]).astype(np.float64)


def write_field(path: str | Path, f: SpectralField) -> None:
    samples = f.physical()
    write_snapshot(path, samples.reshape((-1,) + f.grid.shape))


def read_field(path: str | Path, grid: Grid | None = None) -> SpectralField:
    samples = read_snapshot(path)
    n = samples.shape[-1]
    grid = grid or Grid(n)
    if grid.n != n:
        raise SnapshotError(f"{path}: snapshot has n={n}, expected {grid.n}")
    if samples.shape[0] == 1:
        samples = samples[0]
    elif samples.shape[0] == 9:
        samples = samples.reshape((3, 3) + grid.shape)
    return SpectralField.from_physical(grid, samples)


@dataclass(frozen=True)
class Checkpoint:
    state: ExtendedState | ElectronState
    params: PhysParams
    meta: dict[str, str]


def _format_meta(meta: dict[str, object]) -> str:
    lines = []
    for key, value in meta.items():
        text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def _parse_meta(text: str, path: Path) -> dict[str, str]:
    meta = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SnapshotError(f"{path}:{lineno}: expected 'key = value'")
        meta[key.strip()] = value.strip()
    return meta


def write_checkpoint(
    directory: str | Path,
    state: ExtendedState | ElectronState,
    params: PhysParams,
    config_hash: str = "",
    step: int | None = None,
) -> Path:
    """Write one state as a checkpoint directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    kind = "extended" if isinstance(state, ExtendedState) else "electron"
    names = ("u", "B", "J") if kind == "extended" else ("u", "B", "v")
    for name, f in zip(names, state.fields):
        write_field(directory / f"{name}.hmhd", f)
    meta = {
        "format": "hmhd-checkpoint-1",
        "kind": kind,
        "t": float(state.t),
        "step": "" if step is None else int(step),
        "n": state.grid.n,
        "length": float(state.grid.length),
        "mu": params.mu,
        "nu": params.nu,
        "h": params.h,
        "config_hash": config_hash,
    }
    (directory / "meta.txt").write_text(_format_meta(meta))
    return directory


def read_checkpoint(directory: str | Path) -> Checkpoint:
    directory = Path(directory)
    meta_path = directory / "meta.txt"
    if not meta_path.is_file():
        raise SnapshotError(f"{directory}: no meta.txt")
    meta = _parse_meta(meta_path.read_text(), meta_path)
    try:
        grid = Grid(int(meta["n"]), float(meta["length"]))
        params = PhysParams(float(meta["mu"]), float(meta["nu"]), float(meta["h"]))
        t = float(meta["t"])
        kind = meta["kind"]
    except KeyError as exc:
        raise SnapshotError(f"{meta_path}: missing key {exc}") from None
    names = ("u", "B", "J") if kind == "extended" else ("u", "B", "v")
    fields = [read_field(directory / f"{name}.hmhd", grid) for name in names]
    cls = ExtendedState if kind == "extended" else ElectronState
    return Checkpoint(cls(*fields, t=t), params, meta)


def list_checkpoints(run_dir: str | Path) -> list[Path]:
    return sorted(p for p in (Path(run_dir) / "checkpoints").glob("step_*") if p.is_dir())


@dataclass(frozen=True)
class RunData:
    manifest: dict
    times: list[float]
    states: list
    params: PhysParams


def load_run(run_dir: str | Path) -> RunData:
    """Load the manifest and every checkpoint of a run directory."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise SnapshotError(f"{run_dir}: not a run directory (no manifest.json)")
    manifest = json.loads(manifest_path.read_text())
    checkpoints = [read_checkpoint(p) for p in list_checkpoints(run_dir)]
    if not checkpoints:
        raise SnapshotError(f"{run_dir}: no checkpoints")
    params = checkpoints[0].params
    return RunData(
        manifest, [c.state.t for c in checkpoints], [c.state for c in checkpoints], params
    )
