"""Fourier representation of real periodic fields on the 3-torus.

Fields are stored as the non-redundant half of their Fourier-series
coefficients (the layout of ``scipy.fft.rfftn``).  The forward transform
divides by ``n**3`` so that the samples of ``cos(x1)`` map to coefficients
of one half at ``k = +-e1``.

Conventions applied to every :class:`SpectralField`:

* the mean mode ``k = 0`` is zero (homogeneous spaces on the torus);
* every mode with some ``|k_i| = n/2`` is zero, so the stored coefficients
  describe a genuine real trigonometric polynomial whose derivatives are
  again real.

Component axes come first: a scalar field has coefficients of shape
``(n, n, n//2 + 1)``, a vector field ``(3, n, n, n//2 + 1)`` and a rank-2
tensor ``(3, 3, n, n, n//2 + 1)``.  For a gradient the derivative index is
appended last, so ``grad(w)[i, j] = d_j w_i``.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "SpectralField",
    "set_fft_workers",
    "strict_deterministic",
    "fft_forward",
    "fft_inverse",
    "transform",
    "gradient",
    "divergence",
    "curl",
    "laplacian",
    "differential",
    "curl_inverse",
    "leray_project",
    "pointwise_product",
    "inner_product",
    "divergence_defect",
]

_AXES = (-3, -2, -1)
_fft_state = {"workers": 1}


def set_fft_workers(workers: int) -> None:
    """Set the number of threads used by the FFT backend.

    One worker (the default) gives a fixed reduction order, hence
    bit-reproducible results across runs on the same machine.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    _fft_state["workers"] = int(workers)


@contextlib.contextmanager
def strict_deterministic() -> Iterator[None]:
    """Run the enclosed block with single-threaded transforms."""
    previous = _fft_state["workers"]
    _fft_state["workers"] = 1
    try:
        yield
    finally:
        _fft_state["workers"] = previous


@dataclass(frozen=True)
class Grid:
    """Uniform ``n**3`` collocation grid on the torus ``[0, length)**3``.

    Attributes:
        n: Points (and modes) per axis; even and at least 4.
        length: Period of the box.  Wavevectors are ``(2 pi / length)``
            times integer triples with entries in ``[-n/2, n/2)``.
    """

    n: int
    length: float = 2.0 * np.pi

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise TypeError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 4 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 4, got {self.n}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise ValueError(f"domain length must be positive, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def scale(self) -> float:
        """Wavenumber of the fundamental mode."""
        return 2.0 * np.pi / self.length

    @property
    def volume(self) -> float:
        return self.length**3

    @property
    def cell_volume(self) -> float:
        return (self.length / self.n) ** 3

    @cached_property
    def index(self) -> np.ndarray:
        """Signed integer mode indices, shape ``(3, n, n, n//2 + 1)``."""
        full = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        half = np.arange(self.n // 2 + 1, dtype=np.int64)
        return np.stack(np.meshgrid(full, full, half, indexing="ij"))

    @cached_property
    def k(self) -> np.ndarray:
        """Physical wavevectors, shape ``(3, n, n, n//2 + 1)``."""
        return self.scale * self.index.astype(np.float64)

    @cached_property
    def k2(self) -> np.ndarray:
        return self.scale**2 * np.sum(self.index**2, axis=0).astype(np.float64)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def inv_k2(self) -> np.ndarray:
        """``1/|k|**2`` with the mean mode mapped to zero."""
        out = np.zeros_like(self.k2)
        np.divide(1.0, self.k2, out=out, where=self.k2 > 0)
        return out

    @cached_property
    def keep_mask(self) -> np.ndarray:
        """Modes allowed by the field conventions (no mean, no Nyquist)."""
        nyq = np.any(np.abs(self.index) == self.n // 2, axis=0)
        mean = np.all(self.index == 0, axis=0)
        return ~(nyq | mean)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Modes kept by the 2/3 rule: every ``|k_i| < n/3``."""
        band = np.all(3 * np.abs(self.index) < self.n, axis=0)
        return band & self.keep_mask

    @cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        return w

    def coordinates(self) -> np.ndarray:
        """Grid point coordinates, shape ``(3, n, n, n)``."""
        x = np.arange(self.n) * (self.length / self.n)
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))


def fft_forward(samples: np.ndarray) -> np.ndarray:
    """Raw forward transform over the last three axes, divided by ``n**3``."""
    return sfft.rfftn(
        np.asarray(samples, dtype=np.float64),
        axes=_AXES,
        norm="forward",
        workers=_fft_state["workers"],
    )


def fft_inverse(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Raw inverse of :func:`fft_forward`."""
    return sfft.irfftn(
        coeffs, s=(n, n, n), axes=_AXES, norm="forward", workers=_fft_state["workers"]
    )


class SpectralField:
    """Immutable real field of rank 0, 1 or 2 held in Fourier space.

    Args:
        grid: The grid the coefficients live on.
        coeffs: Complex coefficients of shape ``(*components, n, n, n//2+1)``.
            Modes forbidden by the conventions are zeroed on construction.
    """

    __slots__ = ("_grid", "_coeffs")

    def __init__(self, grid: Grid, coeffs: np.ndarray) -> None:
        coeffs = np.asarray(coeffs)
        if coeffs.shape[-3:] != grid.spectral_shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match grid "
                f"spectral shape {grid.spectral_shape}"
            )
        if coeffs.ndim > 5 or any(c != 3 for c in coeffs.shape[:-3]):
            raise ValueError(f"unsupported component shape {coeffs.shape[:-3]}")
        self._set(grid, np.where(grid.keep_mask, coeffs, 0).astype(np.complex128))

    def _set(self, grid: Grid, coeffs: np.ndarray) -> None:
        coeffs.flags.writeable = False
        object.__setattr__(self, "_grid", grid)
        object.__setattr__(self, "_coeffs", coeffs)

    @classmethod
    def _wrap(cls, grid: Grid, coeffs: np.ndarray) -> SpectralField:
        # Trusted constructor: the caller guarantees the conventions hold
        # and hands over ownership of ``coeffs``.
        obj = cls.__new__(cls)
        obj._set(grid, coeffs)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    @property
    def grid(self) -> Grid:
        return self._grid

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def comp_shape(self) -> tuple[int, ...]:
        return self._coeffs.shape[:-3]

    @property
    def rank(self) -> int:
        return len(self.comp_shape)

    @property
    def components(self) -> tuple[SpectralField, ...]:
        """The leading-axis components (three scalar fields for a vector)."""
        if self.rank == 0:
            raise ValueError("a scalar field has no components")
        return tuple(self[i] for i in range(3))

    def __getitem__(self, i: int) -> SpectralField:
        return SpectralField._wrap(self._grid, self._coeffs[i].copy())

    # Construction helpers

    @classmethod
    def zeros(cls, grid: Grid, comp_shape: tuple[int, ...] = (3,)) -> SpectralField:
        return cls._wrap(grid, np.zeros(comp_shape + grid.spectral_shape, np.complex128))

    @classmethod
    def from_physical(cls, grid: Grid, samples: np.ndarray) -> SpectralField:
        """Transform real samples and apply the mean/Nyquist conventions."""
        samples = np.asarray(samples, dtype=np.float64)
        if samples.shape[-3:] != grid.shape:
            raise ValueError(f"sample shape {samples.shape} does not match grid {grid.shape}")
        return cls(grid, fft_forward(samples))

    @classmethod
    def stack(cls, fields: Sequence[SpectralField]) -> SpectralField:
        """Stack equal-rank fields along a new leading component axis."""
        grid = _common_grid(*fields)
        return cls._wrap(grid, np.stack([f.coeffs for f in fields]))

    def physical(self) -> np.ndarray:
        """Real samples on the grid, shape ``(*components, n, n, n)``."""
        return fft_inverse(self._coeffs, self._grid.n)

    def with_coeffs(self, coeffs: np.ndarray) -> SpectralField:
        return SpectralField(self._grid, coeffs)

    def multiply(self, multiplier: np.ndarray) -> SpectralField:
        """Apply a real or complex Fourier multiplier to every component."""
        return SpectralField._wrap(self._grid, self._coeffs * multiplier)

    def norm(self) -> float:
        """L2 norm over the box (Euclidean over components)."""
        g = self._grid
        sq = np.sum(g.weights * (self._coeffs.real**2 + self._coeffs.imag**2))
        return float(np.sqrt(g.volume * sq))

    def max_abs_coeff(self) -> float:
        return float(np.max(np.abs(self._coeffs))) if self._coeffs.size else 0.0

    # Linear structure

    def _check(self, other: SpectralField) -> None:
        if not isinstance(other, SpectralField):
            raise TypeError(f"expected SpectralField, got {type(other).__name__}")
        if other._grid != self._grid or other.comp_shape != self.comp_shape:
            raise ValueError("fields live on different grids or have different ranks")

    def __add__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField._wrap(self._grid, self._coeffs + other._coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return SpectralField._wrap(self._grid, self._coeffs - other._coeffs)

    def __neg__(self) -> SpectralField:
        return SpectralField._wrap(self._grid, -self._coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return SpectralField._wrap(self._grid, self._coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> SpectralField:
        return self * (1.0 / scalar)

    def __repr__(self) -> str:
        return f"SpectralField(n={self._grid.n}, comp_shape={self.comp_shape})"


def _common_grid(*fields: SpectralField) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError("fields live on different grids")
    return grid


def transform(obj: np.ndarray | SpectralField, grid: Grid | None = None):
    """Map physical samples to a field, or a field to physical samples.

    Args:
        obj: Real samples of shape ``(*components, n, n, n)`` or a field.
        grid: Required when ``obj`` is an array.

    Returns:
        A :class:`SpectralField` for array input, samples for field input.
    """
    if isinstance(obj, SpectralField):
        return obj.physical()
    if grid is None:
        raise ValueError("a grid is required to transform physical samples")
    return SpectralField.from_physical(grid, obj)


# Differential operators (exact Fourier multipliers)


def gradient(f: SpectralField) -> SpectralField:
    """Gradient; the derivative index is appended as the last component axis."""
    if f.rank > 1:
        raise ValueError("gradient is defined for scalar and vector fields")
    ik = 1j * f.grid.k
    c = f.coeffs[..., None, :, :, :] * ik
    return SpectralField._wrap(f.grid, c)


def divergence(f: SpectralField) -> SpectralField:
    """Contract the last component axis with ``i k``."""
    if f.rank == 0:
        raise ValueError("divergence needs a vector or tensor field")
    c = np.sum(f.coeffs * (1j * f.grid.k), axis=-4)
    return SpectralField._wrap(f.grid, c)


def curl(f: SpectralField) -> SpectralField:
    if f.rank != 1:
        raise ValueError("curl is defined for vector fields")
    return SpectralField._wrap(f.grid, _cross(1j * f.grid.k, f.coeffs))


def laplacian(f: SpectralField) -> SpectralField:
    return f.multiply(-f.grid.k2)


_DIFFERENTIALS = {
    "gradient": gradient,
    "divergence": divergence,
    "curl": curl,
    "laplacian": laplacian,
}


def differential(f: SpectralField, kind: str) -> SpectralField:
    """Apply one of ``gradient``, ``divergence``, ``curl`` or ``laplacian``."""
    try:
        op = _DIFFERENTIALS[kind]
    except KeyError:
        raise ValueError(f"unknown differential {kind!r}") from None
    return op(f)


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def curl_inverse(J: SpectralField) -> SpectralField:
    """Divergence-free ``B`` with ``coeff_B = i k x coeff_J / |k|**2``."""
    if J.rank != 1:
        raise ValueError("curl_inverse is defined for vector fields")
    g = J.grid
    return SpectralField._wrap(g, _cross(1j * g.k, J.coeffs) * g.inv_k2)


def leray_project(u: SpectralField) -> SpectralField:
    """Orthogonal projection onto divergence-free fields."""
    if u.rank != 1:
        raise ValueError("the Leray projector acts on vector fields")
    return SpectralField._wrap(u.grid, _leray(u.grid, u.coeffs))


def _leray(grid: Grid, c: np.ndarray) -> np.ndarray:
    k = grid.k
    kdotc = np.sum(k * c, axis=0)
    return c - k * (kdotc * grid.inv_k2)


def divergence_defect(f: SpectralField) -> float:
    """``max |k . coeff| / max |coeff|`` (zero for the zero field)."""
    cmax = f.max_abs_coeff()
    if cmax == 0.0:
        return 0.0
    return float(np.max(np.abs(np.sum(f.grid.k * f.coeffs, axis=0))) / cmax)


# Products


def to_physical(f: SpectralField, dealias: bool) -> np.ndarray:
    """Samples of ``f``, optionally after the 2/3 truncation."""
    c = f.coeffs * f.grid.dealias_mask if dealias else f.coeffs
    return fft_inverse(c, f.grid.n)


def from_physical(grid: Grid, samples: np.ndarray, dealias: bool) -> SpectralField:
    """Transform samples, applying the conventions and optional truncation."""
    mask = grid.dealias_mask if dealias else grid.keep_mask
    return SpectralField._wrap(grid, fft_forward(samples) * mask)


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[:, None] * b[None, :]


_PRODUCTS = {
    "mul": lambda a, b: a * b,
    "dot": lambda a, b: np.sum(a * b, axis=0),
    "cross": _cross,
    "outer": _outer,
}


def pointwise_product(
    a: SpectralField, b: SpectralField, dealias: bool = False, kind: str = "mul"
) -> SpectralField:
    """Product of two fields evaluated on the physical grid.

    Args:
        a: First factor.
        b: Second factor.
        dealias: Truncate both inputs and the output with the 2/3 rule.
        kind: ``mul`` (broadcast componentwise, e.g. scalar times vector),
            ``dot``, ``cross`` or ``outer``.

    Returns:
        The product with its mean removed.
    """
    grid = _common_grid(a, b)
    try:
        op = _PRODUCTS[kind]
    except KeyError:
        raise ValueError(f"unknown product kind {kind!r}") from None
    if kind != "mul" and (a.rank != 1 or b.rank != 1):
        raise ValueError(f"{kind} product needs two vector fields")
    pa, pb = to_physical(a, dealias), to_physical(b, dealias)
    return from_physical(grid, op(pa, pb), dealias)


def inner_product(a: SpectralField, b: SpectralField, method: str = "spectral") -> float:
    """L2 pairing over the box, summed over components.

    ``method="spectral"`` sums coefficient products (Parseval); ``"quadrature"``
    integrates the physical samples with the grid rule.  Both agree up to
    round-off for grid fields.
    """
    grid = _common_grid(a, b)
    if a.comp_shape != b.comp_shape:
        raise ValueError("fields have different ranks")
    if method == "spectral":
        prod = a.coeffs * np.conj(b.coeffs)
        return float(grid.volume * np.sum(grid.weights * prod.real))
    if method == "quadrature":
        return float(grid.cell_volume * np.sum(a.physical() * b.physical()))
    raise ValueError(f"unknown method {method!r}")
