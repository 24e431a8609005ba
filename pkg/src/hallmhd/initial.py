"""Named families of divergence-free initial data.

Every family returns a consistent :class:`ExtendedState` (``J = curl B``).

``single_mode``
    ``u = A e_u sin(k_u . x)`` and ``B = A e_B sin(k_B . x)`` with unit
    polarizations ``e`` orthogonal to their wavevectors.
``two_mode_interaction``
    Two modes in ``u`` (sine and cosine) and two in ``B``.
``taylor_green_like``
    ``u = A (sin x cos y cos z, -cos x sin y cos z, 0)`` and
    ``B = A (0, cos x sin y cos z, -cos x cos y sin z)``.
``random_bandlimited``
    Gaussian samples restricted to ``|k_i| <= band``, Leray-projected and
    scaled to RMS amplitude ``A`` per field.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .equations import ExtendedState
from .spectral import Grid, SpectralField, leray_project

__all__ = [
    "FAMILIES",
    "polarization",
    "single_mode",
    "two_mode_interaction",
    "taylor_green_like",
    "random_bandlimited",
    "random_vector_field",
    "make_initial_state",
]

DEFAULT_SINGLE_MODES = ((1, 0, 0), (0, 1, 0))
DEFAULT_TWO_MODES = ((1, 0, 0), (0, 1, 1), (0, 0, 1), (1, 1, 0))


def polarization(k: Sequence[int]) -> np.ndarray:
    """Unit vector orthogonal to ``k`` (``k x e3``, or ``k x e1`` if parallel)."""
    k = np.asarray(k, dtype=np.float64)
    if not np.any(k):
        raise ValueError("the zero mode carries no divergence-free field")
    e = np.cross(k, [0.0, 0.0, 1.0])
    if not np.any(e):
        e = np.cross(k, [1.0, 0.0, 0.0])
    return e / np.linalg.norm(e)


def _mode_field(grid: Grid, k: Sequence[int], amplitude: float, phase: str) -> np.ndarray:
    x = grid.coordinates() * grid.scale
    arg = np.tensordot(np.asarray(k, dtype=np.float64), x, axes=1)
    wave = np.sin(arg) if phase == "sin" else np.cos(arg)
    return amplitude * polarization(k)[:, None, None, None] * wave


def _check_modes(grid: Grid, modes, count: int) -> list[tuple[int, int, int]]:
    modes = [tuple(int(c) for c in m) for m in modes]
    if len(modes) != count:
        raise ValueError(f"expected {count} modes, got {len(modes)}")
    for m in modes:
        if len(m) != 3 or max(abs(c) for c in m) >= grid.n // 2:
            raise ValueError(f"mode {m} is not resolved on n={grid.n}")
    return modes


def single_mode(grid: Grid, amplitude: float, modes=DEFAULT_SINGLE_MODES) -> ExtendedState:
    ku, kb = _check_modes(grid, modes, 2)
    u = SpectralField.from_physical(grid, _mode_field(grid, ku, amplitude, "sin"))
    B = SpectralField.from_physical(grid, _mode_field(grid, kb, amplitude, "sin"))
    return ExtendedState.consistent(u, B)


def two_mode_interaction(grid: Grid, amplitude: float, modes=DEFAULT_TWO_MODES) -> ExtendedState:
    k1, k2, k3, k4 = _check_modes(grid, modes, 4)
    u = _mode_field(grid, k1, amplitude, "sin") + _mode_field(grid, k2, amplitude, "cos")
    B = _mode_field(grid, k3, amplitude, "sin") + _mode_field(grid, k4, amplitude, "cos")
    return ExtendedState.consistent(
        SpectralField.from_physical(grid, u), SpectralField.from_physical(grid, B)
    )


def taylor_green_like(grid: Grid, amplitude: float) -> ExtendedState:
    x, y, z = grid.coordinates() * grid.scale
    u = amplitude * np.stack([
        np.sin(x) * np.cos(y) * np.cos(z),
        -np.cos(x) * np.sin(y) * np.cos(z),
        np.zeros_like(x),
    ])
    B = amplitude * np.stack([
        np.zeros_like(x),
        np.cos(x) * np.sin(y) * np.cos(z),
        -np.cos(x) * np.cos(y) * np.sin(z),
    ])
    return ExtendedState.consistent(
        SpectralField.from_physical(grid, u), SpectralField.from_physical(grid, B)
    )


def random_vector_field(
    grid: Grid, rng: np.random.Generator, band: int | None = None, solenoidal: bool = True,
    rms: float | None = None, comp_shape: tuple[int, ...] = (3,),
) -> SpectralField:
    """Random real field with modes ``|k_i| <= band``.

    Args:
        grid: Target grid.
        rng: Random generator.
        band: Largest retained index per axis (all modes when None).
        solenoidal: Leray-project the result (vector fields only).
        rms: Rescale to this root-mean-square pointwise magnitude.
        comp_shape: ``()`` for a scalar, ``(3,)`` for a vector.
    """
    samples = rng.standard_normal(comp_shape + grid.shape)
    f = SpectralField.from_physical(grid, samples)
    if band is not None:
        f = f.multiply(np.all(np.abs(grid.index) <= band, axis=0))
    if solenoidal and comp_shape == (3,):
        f = leray_project(f)
    if rms is not None:
        norm = f.norm()
        f = f * (rms * np.sqrt(grid.volume) / norm) if norm > 0 else f
    return f


def random_bandlimited(grid: Grid, amplitude: float, seed: int = 0, band: int = 3) -> ExtendedState:
    rng = np.random.default_rng(seed)
    u = random_vector_field(grid, rng, band, rms=amplitude)
    B = random_vector_field(grid, rng, band, rms=amplitude)
    return ExtendedState.consistent(u, B)


FAMILIES = ("single_mode", "two_mode_interaction", "taylor_green_like", "random_bandlimited")


def make_initial_state(
    grid: Grid,
    family: str,
    amplitude: float,
    modes=None,
    seed: int = 0,
    band: int = 3,
) -> ExtendedState:
    """Build initial data from a named family."""
    if family == "single_mode":
        return single_mode(grid, amplitude, modes or DEFAULT_SINGLE_MODES)
    if family == "two_mode_interaction":
        return two_mode_interaction(grid, amplitude, modes or DEFAULT_TWO_MODES)
    if family == "taylor_green_like":
        return taylor_green_like(grid, amplitude)
    if family == "random_bandlimited":
        return random_bandlimited(grid, amplitude, seed, band)
    raise ValueError(f"unknown initial-condition family {family!r}; expected one of {FAMILIES}")
