"""Dyadic frequency decomposition and the norms built on it.

Two block profiles are available.

``sharp``
    ``Delta_j`` keeps the modes with ``2**j <= |k| < 2**(j+1)``.  Blocks are
    disjoint, so partition of unity and orthogonality hold exactly.

``smooth``
    ``Delta_j`` multiplies by ``phi(2**-j |k|)`` with
    ``phi(r) = chi(r/2) - chi(r)``.  ``chi`` equals one on ``r <= inner``,
    zero on ``r >= outer`` and in between is the C-infinity step

        chi(r) = 1 - S((r - inner) / (outer - inner)),
        S(t)   = e(t) / (e(t) + e(1 - t)),   e(t) = exp(-1/t) for t > 0, else 0.

    The defaults ``inner = 3/4`` and ``outer = 4/3`` give ``phi`` supported in
    ``3/4 <= |xi| <= 8/3``.

Only blocks that meet the grid spectrum are enumerated, so every sum over
``j`` below is finite.  Block Lebesgue norms for ``p = 2`` are evaluated from
coefficients; other exponents use the physical grid (quadrature for finite
``p``, the collocation maximum for ``p = inf``).  Pointwise magnitudes of
vector and tensor fields are Euclidean.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    fft_forward,
    fft_inverse,
    gradient,
)

__all__ = [
    "BlockProfile",
    "SHARP",
    "SMOOTH",
    "BesovSpec",
    "block_indices",
    "dyadic_block",
    "low_cutoff",
    "block_lp_norms",
    "lp_norm",
    "besov_norm",
    "sobolev_norm",
    "bony_decomposition",
    "block_commutator",
    "chemin_lerner_norm",
    "InequalityReport",
    "inequality_ratio",
    "NormRow",
    "write_norm_csv",
]


def _bump(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    a, b = _bump(t), _bump(1.0 - np.asarray(t, dtype=np.float64))
    return a / (a + b)


@dataclass(frozen=True)
class BlockProfile:
    """Shape of the dyadic blocks.

    Attributes:
        kind: ``"sharp"`` or ``"smooth"``.
        inner: Radius below which the smooth cut-off ``chi`` equals one.
        outer: Radius beyond which ``chi`` vanishes (the taper width is
            ``outer - inner``).  Ignored for the sharp profile.
    """

    kind: str = "sharp"
    inner: float = 0.75
    outer: float = 4.0 / 3.0

    def __post_init__(self) -> None:
        if self.kind not in ("sharp", "smooth"):
            raise ValueError(f"unknown block profile {self.kind!r}")
        if not 0 < self.inner < self.outer:
            raise ValueError("need 0 < inner < outer")

    def chi(self, r: np.ndarray) -> np.ndarray:
        """Low-pass symbol at radius ``r`` (the smooth cut-off function)."""
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "sharp":
            return (r < 1.0).astype(np.float64)
        return 1.0 - smooth_step((r - self.inner) / (self.outer - self.inner))

    def phi(self, r: np.ndarray) -> np.ndarray:
        """Annulus symbol ``chi(r/2) - chi(r)``."""
        r = np.asarray(r, dtype=np.float64)
        return self.chi(r / 2.0) - self.chi(r)

    @property
    def support_radius(self) -> float:
        """Outer radius of ``phi`` relative to ``2**j``."""
        return 2.0 if self.kind == "sharp" else 2.0 * self.outer

    @property
    def label(self) -> str:
        if self.kind == "sharp":
            return "sharp"
        return f"smooth({self.inner:g},{self.outer:g})"


SHARP = BlockProfile("sharp")
SMOOTH = BlockProfile("smooth")


def _check_exponent(name: str, value: float) -> float:
    value = float(value)
    if not (value >= 1.0 or value == math.inf):
        raise ValueError(f"{name} must lie in [1, inf], got {value}")
    return value


@dataclass(frozen=True)
class BesovSpec:
    """Exponents of a homogeneous Besov norm ``B^s_{p,r}``."""

    s: float
    p: float = 2.0
    r: float = 1.0
    profile: BlockProfile = field(default=SHARP)

    def __post_init__(self) -> None:
        if not math.isfinite(self.s):
            raise ValueError("regularity exponent must be finite")
        object.__setattr__(self, "p", _check_exponent("p", self.p))
        object.__setattr__(self, "r", _check_exponent("r", self.r))


@dataclass(frozen=True)
class _BlockTable:
    js: tuple[int, ...]
    multipliers: dict[int, np.ndarray]
    shell: np.ndarray | None  # sharp only: block index of every mode


def _sharp_shell(grid: Grid) -> np.ndarray:
    # floor(log2 |k|) computed exactly from the binary exponent.
    _, expo = np.frexp(grid.kmag)
    shell = (expo - 1).astype(np.int64)
    return np.where(grid.keep_mask, shell, np.iinfo(np.int64).min)


@lru_cache(maxsize=32)
def _block_table(grid: Grid, profile: BlockProfile) -> _BlockTable:
    kmag = grid.kmag
    present = kmag[grid.keep_mask]
    if profile.kind == "sharp":
        shell = _sharp_shell(grid)
        js = tuple(sorted(set(np.unique(shell[grid.keep_mask]).tolist())))
        mult = {j: (shell == j).astype(np.float64) for j in js}
        return _BlockTable(js, mult, shell)
    lo = math.floor(math.log2(present.min() / profile.support_radius)) - 1
    hi = math.ceil(math.log2(present.max() / profile.inner)) + 1
    mult: dict[int, np.ndarray] = {}
    for j in range(lo, hi + 1):
        m = profile.phi(kmag / 2.0**j) * grid.keep_mask
        if np.any(m != 0):
            mult[j] = m
    return _BlockTable(tuple(sorted(mult)), mult, None)


def block_indices(grid: Grid, profile: BlockProfile = SHARP) -> tuple[int, ...]:
    """Indices ``j`` of the blocks that are not identically zero on ``grid``."""
    return _block_table(grid, profile).js


def dyadic_block(f: SpectralField, j: int, profile: BlockProfile = SHARP) -> SpectralField:
    """Homogeneous dyadic block ``Delta_j f``."""
    table = _block_table(f.grid, profile)
    m = table.multipliers.get(j)
    if m is None:
        return SpectralField.zeros(f.grid, f.comp_shape)
    return f.multiply(m)


def low_cutoff(f: SpectralField, j: int, profile: BlockProfile = SHARP) -> SpectralField:
    """Low-frequency cut-off ``S_j f`` (the sum of the blocks below ``j``)."""
    if profile.kind == "sharp":
        return f.multiply((f.grid.kmag < 2.0**j).astype(np.float64))
    return f.multiply(profile.chi(f.grid.kmag / 2.0**j))


def _pointwise_magnitude(samples: np.ndarray) -> np.ndarray:
    if samples.ndim == 3:
        return np.abs(samples)
    axes = tuple(range(samples.ndim - 3))
    return np.sqrt(np.sum(samples**2, axis=axes))


def lp_norm(f: SpectralField | np.ndarray, p: float, grid: Grid | None = None) -> float:
    """Lebesgue norm of a field (or of physical samples) over the box."""
    if isinstance(f, SpectralField):
        if p == 2.0:
            return f.norm()
        grid, samples = f.grid, f.physical()
    else:
        samples = f
    mag = _pointwise_magnitude(samples)
    if p == math.inf:
        return float(mag.max())
    return float((grid.cell_volume * np.sum(mag**p)) ** (1.0 / p))


def block_lp_norms(
    f: SpectralField, p: float = 2.0, profile: BlockProfile = SHARP
) -> dict[int, float]:
    """Map ``j -> ||Delta_j f||_{L^p}`` over the blocks present on the grid."""
    grid = f.grid
    table = _block_table(grid, profile)
    p = _check_exponent("p", p)
    power = f.coeffs.real**2 + f.coeffs.imag**2
    if f.rank:
        power = power.sum(axis=tuple(range(f.rank)))
    power = grid.volume * grid.weights * power
    if p == 2.0:
        if table.shell is not None:
            keep = grid.keep_mask
            js = np.asarray(table.js)
            sums = np.bincount(table.shell[keep] - js[0], weights=power[keep], minlength=len(js))
            return {j: float(np.sqrt(sums[j - js[0]])) for j in table.js}
        return {j: float(np.sqrt(np.sum(power * m**2))) for j, m in table.multipliers.items()}
    out = {}
    for j, m in table.multipliers.items():
        samples = fft_inverse(f.coeffs * m, grid.n)
        out[j] = lp_norm(samples, p, grid)
    return out


def _lr_sum(values: Iterable[float], r: float) -> float:
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        return 0.0
    if r == math.inf:
        return float(values.max())
    if r == 1.0:
        return float(values.sum())
    return float(np.sum(values**r) ** (1.0 / r))


def besov_norm(f: SpectralField, spec: BesovSpec) -> float:
    """Homogeneous Besov norm: l^r over j of ``2**(j s) ||Delta_j f||_{L^p}``."""
    norms = block_lp_norms(f, spec.p, spec.profile)
    return _lr_sum((2.0 ** (j * spec.s) * v for j, v in norms.items()), spec.r)


def _besov(f: SpectralField, s: float, p: float, r: float, profile: BlockProfile) -> float:
    return besov_norm(f, BesovSpec(s, p, r, profile))


def sobolev_norm(f: SpectralField, s: float, homogeneous: bool = True) -> float:
    """Sobolev norm of order ``s``.

    The homogeneous norm is ``(vol * sum |k|**(2s) |c_k|**2)**(1/2)``.  The
    inhomogeneous norm is the Hilbert norm
    ``(||f||_{L^2}**2 + ||f||_{H^s-dot}**2)**(1/2)``, equivalent to the sum of
    the two terms.
    """
    g = f.grid
    power = f.coeffs.real**2 + f.coeffs.imag**2
    if f.rank:
        power = power.sum(axis=tuple(range(f.rank)))
    weight = np.zeros_like(g.kmag)
    np.power(g.kmag, 2.0 * s, out=weight, where=g.keep_mask)
    hom = float(np.sqrt(g.volume * np.sum(g.weights * weight * power)))
    if homogeneous:
        return hom
    return float(np.hypot(f.norm(), hom))


# Paraproducts and commutators


def _block_samples(f: SpectralField, profile: BlockProfile) -> dict[int, np.ndarray]:
    table = _block_table(f.grid, profile)
    return {j: fft_inverse(f.coeffs * m, f.grid.n) for j, m in table.multipliers.items()}


def bony_decomposition(
    u: SpectralField, v: SpectralField, profile: BlockProfile = SHARP
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Split ``u v`` into paraproducts and remainder.

    Returns:
        ``(T_u v, T_v u, R(u, v))`` with ``T_u v = sum_j S_{j-1} u Delta_j v``
        and ``R = sum_j sum_{|j'-j|<=1} Delta_j u Delta_j' v``.  Products are
        computed without dealiasing, so the three parts add up to the plain
        product ``u v``.  ``S_{j-1}`` is evaluated as the sum of the blocks
        below ``j - 1``.
    """
    grid = u.grid
    if v.grid != grid:
        raise ValueError("fields live on different grids")
    ub, vb = _block_samples(u, profile), _block_samples(v, profile)
    js = block_indices(grid, profile)
    shape = np.broadcast_shapes(u.comp_shape + grid.shape, v.comp_shape + grid.shape)
    t_uv, t_vu, rem = (np.zeros(shape) for _ in range(3))
    # low_* accumulates S_{j-1}, i.e. the blocks j' <= j - 2.
    low_u = np.zeros(u.comp_shape + grid.shape)
    low_v = np.zeros(v.comp_shape + grid.shape)
    for j in range(js[0], js[-1] + 1):
        if j - 2 in ub:
            low_u += ub[j - 2]
            low_v += vb[j - 2]
        if j not in ub:
            continue
        t_uv += low_u * vb[j]
        t_vu += low_v * ub[j]
        for jj in (j - 1, j, j + 1):
            if jj in vb:
                rem += ub[j] * vb[jj]
    return tuple(SpectralField(grid, fft_forward(x)) for x in (t_uv, t_vu, rem))


def block_commutator(
    b: SpectralField, a: SpectralField, j: int, profile: BlockProfile = SHARP
) -> SpectralField:
    """``[Delta_j, b] a = Delta_j(b a) - b Delta_j a`` with scalar ``b``."""
    if b.rank != 0:
        raise ValueError("the commutator multiplier b must be a scalar field")
    grid = a.grid
    pb = b.physical()
    ba = SpectralField(grid, fft_forward(pb * a.physical()))
    b_da = SpectralField(grid, fft_forward(pb * dyadic_block(a, j, profile).physical()))
    return dyadic_block(ba, j, profile) - b_da


# Time-dependent (Chemin-Lerner) norms


def _time_norm(values: np.ndarray, dt: float, rho: float) -> np.ndarray:
    """``L^rho`` norm in time (axis 0) by the trapezoid rule."""
    if rho == math.inf:
        return values.max(axis=0)
    return np.trapezoid(values**rho, dx=dt, axis=0) ** (1.0 / rho)


def _block_time_table(
    fields: Sequence[SpectralField], p: float, profile: BlockProfile
) -> tuple[tuple[int, ...], np.ndarray]:
    js = block_indices(fields[0].grid, profile)
    rows = []
    for f in fields:
        norms = block_lp_norms(f, p, profile)
        rows.append([norms[j] for j in js])
    return js, np.asarray(rows)


def chemin_lerner_norm(
    fields: Sequence[SpectralField], dt: float, rho: float, spec: BesovSpec
) -> float:
    """Tilde norm ``L~^rho_T(B^s_{p,r})`` of uniformly sampled fields.

    Args:
        fields: Samples at times ``0, dt, 2 dt, ...``.
        dt: Sample spacing.
        rho: Time exponent in ``[1, inf]``.
        spec: Space exponents.

    Raises:
        ValueError: With fewer than two samples.
    """
    if len(fields) < 2:
        raise ValueError("a time norm needs at least two samples")
    rho = _check_exponent("rho", rho)
    js, table = _block_time_table(fields, spec.p, spec.profile)
    tn = _time_norm(table, dt, rho)
    return _lr_sum((2.0 ** (j * spec.s) * v for j, v in zip(js, tn)), spec.r)


# Empirical inequality checks


@dataclass(frozen=True)
class InequalityReport:
    """Both sides of an inequality evaluated with constant one."""

    name: str
    lhs: float
    rhs: float
    ratio: float
    params: dict


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


def _product(u: SpectralField, v: SpectralField) -> SpectralField:
    return SpectralField(u.grid, fft_forward(u.physical() * v.physical()))


def _linf(f: SpectralField) -> float:
    return lp_norm(f, math.inf)


def _ineq_tame(fields, sigma: float = 1.0, **_):
    _require(sigma >= 0, "tame needs sigma >= 0")
    f, g = fields
    lhs = sobolev_norm(_product(f, g), sigma)
    rhs = _linf(f) * sobolev_norm(g, sigma) + _linf(g) * sobolev_norm(f, sigma)
    return lhs, rhs


def _ineq_tame1(fields, s: float = 1.0, p: float = 2.0, r: float = 1.0, profile=SHARP, **_):
    _require(s > 0, "tame1 needs s > 0")
    u, v = fields
    lhs = _besov(_product(u, v), s, p, r, profile)
    rhs = _linf(u) * _besov(v, s, p, r, profile) + _linf(v) * _besov(u, s, p, r, profile)
    return lhs, rhs


def _ineq_prod1(fields, s1: float = 1.5, s2: float = 1.5, p: float = 2.0, profile=SHARP, **_):
    d = 3.0
    _require(s1 <= d / p and s2 <= d / p, "prod1 needs s1, s2 <= d/p")
    _require(s1 + s2 > d * max(0.0, 2.0 / p - 1.0), "prod1 needs s1 + s2 > d max(0, 2/p - 1)")
    u, v = fields
    lhs = _besov(_product(u, v), s1 + s2 - d / p, p, 1.0, profile)
    rhs = _besov(u, s1, p, 1.0, profile) * _besov(v, s2, p, 1.0, profile)
    return lhs, rhs


def _ineq_prod2(fields, rho: float = 4.0, profile=SHARP, **_):
    _require(rho > 2, "prod2 needs rho > 2")
    a, b = fields
    lo, hi = 2.0 / rho - 1.0, 2.5 - 2.0 / rho
    lhs = _besov(_product(a, b), 1.5, 2.0, 1.0, profile)
    rhs = _besov(a, lo, math.inf, math.inf, profile) * _besov(b, hi, 2.0, 1.0, profile)
    rhs += _besov(b, lo, math.inf, math.inf, profile) * _besov(a, hi, 2.0, 1.0, profile)
    return lhs, rhs


def _ineq_com01(fields, s: float = 1.0, profile=SHARP, **_):
    _require(0 < s <= 1.5, "com01 needs s in (0, 3/2]")
    b, a = fields
    js = block_indices(a.grid, profile)
    lhs = sum(2.0 ** (j * s) * block_commutator(b, a, j, profile).norm() for j in js)
    gb = gradient(b)
    rhs = _linf(gb) * _besov(a, s - 1.0, 2.0, 1.0, profile)
    rhs += _besov(a, -1.0, math.inf, math.inf, profile) * _besov(gb, s, 2.0, 1.0, profile)
    return lhs, rhs


def _ineq_com2(fields, dt: float = None, s: float = 1.0, rho: float = 4.0, r: float = 1.0,
               profile=SHARP, **_):
    _require(0 < s <= 1.5, "com2 needs s in (0, 3/2]")
    _require(rho > 2, "com2 needs rho in (2, inf]")
    r = _check_exponent("r", r)
    _require(dt is not None and dt > 0, "com2 needs the sample spacing dt")
    b_traj, a_traj = fields
    _require(len(b_traj) == len(a_traj) >= 2, "com2 needs two equal-length sequences")
    rho_c = 1.0 if rho == math.inf else rho / (rho - 1.0)
    js = block_indices(a_traj[0].grid, profile)
    comm = np.array(
        [[block_commutator(b, a, j, profile).norm() for j in js] for b, a in zip(b_traj, a_traj)]
    )
    lhs = _lr_sum((2.0 ** (j * s) * v for j, v in zip(js, _time_norm(comm, dt, 1.0))), r)
    gb = [gradient(b) for b in b_traj]

    def cl(traj, rho_t, s_, p_, r_):
        return chemin_lerner_norm(traj, dt, rho_t, BesovSpec(s_, p_, r_, profile))

    inf = math.inf
    rhs = cl(gb, rho, 2.0 / rho - 1.0, inf, inf) * cl(a_traj, rho_c, s - 2.0 / rho, 2.0, r)
    rhs += cl(gb, rho_c, s + 1.0 - 2.0 / rho, 2.0, r) * cl(a_traj, rho, 2.0 / rho - 2.0, inf, inf)
    return lhs, rhs


def _ineq_bernstein(fields, j: int = 0, profile=SHARP, **_):
    (f,) = fields
    block = dyadic_block(f, j, profile)
    lhs = gradient(block).norm()
    rhs = profile.support_radius * 2.0**j * block.norm()
    return lhs, rhs


def _ineq_interpolation(fields, theta: float = 0.5, s: float = 0.0, s_tilde: float = 1.0,
                        p: float = 2.0, profile=SHARP, **_):
    _require(0 < theta < 1, "interpolation needs theta in (0, 1)")
    _require(s < s_tilde, "interpolation needs s < s_tilde")
    (u,) = fields
    lhs = _besov(u, theta * s + (1 - theta) * s_tilde, p, 1.0, profile)
    rhs = (_besov(u, s, p, math.inf, profile) ** theta
           * _besov(u, s_tilde, p, math.inf, profile) ** (1 - theta))
    return lhs, rhs


_INEQUALITIES: dict[str, Callable] = {
    "tame": _ineq_tame,
    "tame1": _ineq_tame1,
    "prod1": _ineq_prod1,
    "prod2": _ineq_prod2,
    "com01": _ineq_com01,
    "com2": _ineq_com2,
    "bernstein": _ineq_bernstein,
    "interpolation": _ineq_interpolation,
}


def inequality_ratio(name: str, fields: Sequence, **params) -> InequalityReport:
    """Evaluate an inequality with constant one and report ``lhs / rhs``.

    Args:
        name: One of ``tame``, ``tame1``, ``prod1``, ``prod2``, ``com01``,
            ``com2``, ``bernstein``, ``interpolation``.
        fields: The fields entering the inequality (for ``com2``, two
            equally spaced sequences ``(b_samples, a_samples)``; for the
            commutators ``b`` is a scalar field).
        **params: Exponents, e.g. ``s``, ``p``, ``r``, ``rho``, ``theta``,
            ``j``; ``dt`` for ``com2``; ``profile`` for the block shape.

    Raises:
        ValueError: Unknown name or exponents outside the stated range.
    """
    try:
        fn = _INEQUALITIES[name]
    except KeyError:
        raise ValueError(f"unknown inequality {name!r}") from None
    lhs, rhs = fn(fields, **params)
    return InequalityReport(name, float(lhs), float(rhs), _ratio(lhs, rhs), dict(params))


# Serialization


@dataclass(frozen=True)
class NormRow:
    quantity: str
    s: float
    p: float
    r: float
    profile: str
    value: float


NORM_CSV_COLUMNS = ("quantity", "s", "p", "r", "profile", "value")


def write_norm_csv(rows: Iterable[NormRow], path: str | Path) -> None:
    """Write norm reports, one row per quantity, with a header line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(NORM_CSV_COLUMNS)
        for row in rows:
            writer.writerow([row.quantity, repr(row.s), repr(row.p), repr(row.r),
                             row.profile, repr(row.value)])
