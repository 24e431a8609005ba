"""Right-hand sides of the incompressible Hall-MHD system.

Three formulations are provided.

Extended ``(u, B, J)``
    ``J`` is evolved as an independent unknown.  With ``A = curl^{-1} J`` and
    ``w = h J - u`` the nonlinearity is

        Q(U, U) = (Q_a(B, B) - Q_a(u, u),  Q_b(B, w),  curl Q_b(A, w)),

    where ``Q_a(v, w) = P(div(v (x) w) + div(w (x) v)) / 2`` and
    ``Q_b(v, w) = div(v (x) w) - div(w (x) v)``.  Diffusion is
    ``(mu Lap u, nu Lap B, nu Lap J)``.

Electron ``(u, B, v)`` with ``v = u - h J`` (only for ``mu == nu``)
    Terms are assembled in advective form, each Leray-projected.

Velocity-field ``(u, B)``
    Used by the Galerkin scheme; see :func:`rhs_velocity_field`.

Pressure is eliminated by the Leray projector throughout.  Products are
dealiased by the 2/3 rule unless ``dealias=False`` is passed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    _cross,
    _leray,
    curl,
    curl_inverse,
    fft_forward,
    fft_inverse,
    inner_product,
    from_physical,
    to_physical,
)

__all__ = [
    "PhysParams",
    "ExtendedState",
    "ElectronState",
    "q_a",
    "q_b",
    "advect",
    "bilinear_Q",
    "nonlinear_Q",
    "rhs_extended",
    "rhs_electron",
    "electron_nonlinear",
    "rhs_velocity_field",
    "to_electron",
    "to_extended",
    "state_convert",
    "cancellation_residual",
    "pressure",
    "dilate_modes",
    "contract_modes",
    "rescale",
    "unscale",
]

Triple = tuple[SpectralField, SpectralField, SpectralField]


@dataclass(frozen=True)
class PhysParams:
    """Viscosity ``mu``, resistivity ``nu`` and Hall number ``h``."""

    mu: float = 1.0
    nu: float = 1.0
    h: float = 1.0

    def __post_init__(self) -> None:
        for name in ("mu", "nu", "h"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.mu <= 0 or self.nu <= 0:
            raise ValueError("mu and nu must be positive")
        if self.h < 0:
            raise ValueError("h must be non-negative")


@dataclass(frozen=True)
class ExtendedState:
    """Velocity, magnetic field and current at time ``t``."""

    u: SpectralField
    B: SpectralField
    J: SpectralField
    t: float = 0.0

    def __post_init__(self) -> None:
        _check_vectors(self.u, self.B, self.J)

    @classmethod
    def consistent(cls, u: SpectralField, B: SpectralField, t: float = 0.0) -> ExtendedState:
        """State with ``J = curl B``."""
        return cls(u, B, curl(B), t)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def fields(self) -> Triple:
        return (self.u, self.B, self.J)

    def with_fields(self, fields: Triple, t: float) -> ExtendedState:
        return ExtendedState(*fields, t=t)


@dataclass(frozen=True)
class ElectronState:
    """Velocity, magnetic field and electron velocity ``v = u - h J``."""

    u: SpectralField
    B: SpectralField
    v: SpectralField
    t: float = 0.0

    def __post_init__(self) -> None:
        _check_vectors(self.u, self.B, self.v)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def fields(self) -> Triple:
        return (self.u, self.B, self.v)

    def with_fields(self, fields: Triple, t: float) -> ElectronState:
        return ElectronState(*fields, t=t)


def _check_vectors(*fields: SpectralField) -> None:
    grid = fields[0].grid
    for f in fields:
        if f.rank != 1:
            raise ValueError("state components must be vector fields")
        if f.grid != grid:
            raise ValueError("state components live on different grids")


# Array-level kernels.  Inputs are physical samples of shape (3, n, n, n);
# outputs are coefficient arrays already masked for the output truncation.

_SYM_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_SYM_INDEX = {(i, j): n for n, (i, j) in enumerate(_SYM_PAIRS)}
_SYM_INDEX.update({(j, i): n for (i, j), n in list(_SYM_INDEX.items())})


def _mask(grid: Grid, dealias: bool) -> np.ndarray:
    return grid.dealias_mask if dealias else grid.keep_mask


def _div_symmetric(grid: Grid, s_hat: np.ndarray) -> np.ndarray:
    """Divergence (over the second index) of a symmetric tensor in packed form."""
    ik = 1j * grid.k
    return np.stack(
        [sum(ik[j] * s_hat[_SYM_INDEX[i, j]] for j in range(3)) for i in range(3)]
    )


def _q_a_kernel(grid: Grid, pairs, dealias: bool) -> np.ndarray:
    """``sum_c sign_c Q_a(v_c, w_c)`` for physical pairs ``(sign, v, w)``."""
    sym = np.zeros((6,) + grid.shape)
    for sign, v, w in pairs:
        for n, (i, j) in enumerate(_SYM_PAIRS):
            sym[n] += sign * (v[i] * w[j] + w[i] * v[j])
    s_hat = fft_forward(sym) * _mask(grid, dealias)
    return 0.5 * _leray(grid, _div_symmetric(grid, s_hat))


def _q_b_kernel(grid: Grid, v: np.ndarray, w: np.ndarray, dealias: bool) -> np.ndarray:
    """``div(v (x) w - w (x) v)`` from the three independent tensor entries."""
    t12 = v[0] * w[1] - w[0] * v[1]
    t13 = v[0] * w[2] - w[0] * v[2]
    t23 = v[1] * w[2] - w[1] * v[2]
    t_hat = fft_forward(np.stack([t12, t13, t23])) * _mask(grid, dealias)
    ik = 1j * grid.k
    a12, a13, a23 = t_hat
    return np.stack(
        [
            ik[1] * a12 + ik[2] * a13,
            -ik[0] * a12 + ik[2] * a23,
            -ik[0] * a13 - ik[1] * a23,
        ]
    )


def _wrap(grid: Grid, c: np.ndarray) -> SpectralField:
    return SpectralField._wrap(grid, c)


def _common(*fields: SpectralField) -> Grid:
    grid = fields[0].grid
    if any(f.grid != grid for f in fields):
        raise ValueError("fields live on different grids")
    return grid


# Public bilinear forms


def q_a(v: SpectralField, w: SpectralField, dealias: bool = True) -> SpectralField:
    """Symmetric form ``P(div(v (x) w) + div(w (x) v)) / 2``."""
    grid = _common(v, w)
    pv, pw = to_physical(v, dealias), to_physical(w, dealias)
    return _wrap(grid, _q_a_kernel(grid, [(1.0, pv, pw)], dealias))


def q_b(v: SpectralField, w: SpectralField, dealias: bool = True) -> SpectralField:
    """Antisymmetric form ``div(v (x) w) - div(w (x) v)``."""
    grid = _common(v, w)
    pv, pw = to_physical(v, dealias), to_physical(w, dealias)
    return _wrap(grid, _q_b_kernel(grid, pv, pw, dealias))


def advect(a: SpectralField, b: SpectralField, dealias: bool = True) -> SpectralField:
    """Transport term ``(a . grad) b`` (not projected)."""
    grid = _common(a, b)
    pa = to_physical(a, dealias)
    c = b.coeffs * grid.dealias_mask if dealias else b.coeffs
    grad_b = fft_inverse(c[:, None] * (1j * grid.k)[None], grid.n)
    prod = np.einsum("j...,ij...->i...", pa, grad_b)
    return from_physical(grid, prod, dealias)


def bilinear_Q(V: Triple, W: Triple, params: PhysParams, dealias: bool = True) -> Triple:
    """The bilinear map ``Q(V, W)`` of the extended system.

    Args:
        V: Triple ``(V1, V2, V3)``; ``V3`` enters through ``curl^{-1}``.
        W: Triple ``(W1, W2, W3)``.
        params: Only ``h`` is used.
        dealias: Apply the 2/3 rule to inputs and outputs.

    Returns:
        ``(Q_a(V2, W2) - Q_a(V1, W1), Q_b(V2, h W3 - W1),
        curl Q_b(curl^{-1} V3, h W3 - W1))``.
    """
    grid = _common(*V, *W)
    h = params.h
    v1, v2 = to_physical(V[0], dealias), to_physical(V[1], dealias)
    a3 = to_physical(curl_inverse(V[2]), dealias)
    if W is V:
        w1, w2, w3 = v1, v2, to_physical(V[2], dealias)
    else:
        w1, w2, w3 = (to_physical(f, dealias) for f in W)
    w = h * w3 - w1
    du = _q_a_kernel(grid, [(1.0, v2, w2), (-1.0, v1, w1)], dealias)
    dB = _q_b_kernel(grid, v2, w, dealias)
    dJ = _cross(1j * grid.k, _q_b_kernel(grid, a3, w, dealias))
    return (_wrap(grid, du), _wrap(grid, dB), _wrap(grid, dJ))


def nonlinear_Q(U: ExtendedState, params: PhysParams, dealias: bool = True) -> Triple:
    """Quadratic nonlinearity ``Q(U, U)`` of the extended system."""
    return bilinear_Q(U.fields, U.fields, params, dealias)


def _diffusion(fields: Triple, kappas: tuple[float, float, float]) -> Triple:
    return tuple(f.multiply(-kappa * f.grid.k2) for f, kappa in zip(fields, kappas))


def _add(a: Triple, b: Triple) -> Triple:
    return tuple(x + y for x, y in zip(a, b))


def rhs_extended(
    U: ExtendedState, params: PhysParams, dealias: bool = True, nonlinear: bool = True
) -> Triple:
    """Time derivative of ``(u, B, J)``: ``Q(U, U)`` plus diagonal diffusion."""
    lin = _diffusion(U.fields, (params.mu, params.nu, params.nu))
    if not nonlinear:
        return lin
    return _add(nonlinear_Q(U, params, dealias), lin)


def electron_nonlinear(S: ElectronState, params: PhysParams, dealias: bool = True) -> Triple:
    """Nonlinear part of the electron formulation, term by term.

    ``du = P(B.grad B - u.grad u)``,
    ``dB = curl(v x B)``,
    ``dv = P(B.grad B - u.grad u - h curl((curl v) x B) + curl(v x u)
    + 2 h curl(v.grad B))``.
    """
    grid = S.grid
    h = params.h
    m = grid.dealias_mask if dealias else 1.0
    ik = 1j * grid.k
    u_c, B_c, v_c = (f.coeffs * m for f in S.fields)
    u, B, v = (fft_inverse(c, grid.n) for c in (u_c, B_c, v_c))
    grad_u = fft_inverse(u_c[:, None] * ik[None], grid.n)
    grad_B = fft_inverse(B_c[:, None] * ik[None], grid.n)
    curl_v = fft_inverse(_cross(ik, v_c), grid.n)

    def spec(x):
        return fft_forward(x) * _mask(grid, dealias)

    lorentz_minus_transport = spec(
        np.einsum("j...,ij...->i...", B, grad_B) - np.einsum("j...,ij...->i...", u, grad_u)
    )
    du = _leray(grid, lorentz_minus_transport)
    dB = _cross(ik, spec(_cross(v, B)))
    hall = _cross(ik, spec(_cross(curl_v, B)))
    mixed = _cross(ik, spec(_cross(v, u)))
    stretch = _cross(ik, spec(np.einsum("j...,ij...->i...", v, grad_B)))
    dv = _leray(grid, lorentz_minus_transport - h * hall + mixed + 2.0 * h * stretch)
    return (_wrap(grid, du), _wrap(grid, dB), _wrap(grid, dv))


def rhs_electron(
    S: ElectronState, params: PhysParams, dealias: bool = True, nonlinear: bool = True
) -> Triple:
    """Time derivative of ``(u, B, v)``; requires ``mu == nu``.

    Raises:
        ValueError: If ``params.mu != params.nu``.
    """
    if params.mu != params.nu:
        raise ValueError("the electron formulation requires mu == nu")
    lin = _diffusion(S.fields, (params.mu, params.mu, params.mu))
    if not nonlinear:
        return lin
    return _add(electron_nonlinear(S, params, dealias), lin)


def rhs_velocity_field(
    u: SpectralField,
    B: SpectralField,
    params: PhysParams,
    dealias: bool = True,
    project: Callable[[SpectralField], SpectralField] | None = None,
) -> tuple[SpectralField, SpectralField]:
    """Nonlinear part of the ``(u, B)`` system, optionally band-projected.

    With a projector ``E`` the terms are
    ``E P(E B . grad E B - E u . grad E u)`` and
    ``curl E((E u - h curl E B) x E B)``.
    """
    E = project or (lambda f: f)
    uE, BE = E(u), E(B)
    du = E(_wrap(u.grid, _leray(u.grid, (advect(BE, BE, dealias) - advect(uE, uE, dealias)).coeffs)))
    grid = u.grid
    m = grid.dealias_mask if dealias else 1.0
    v_c = (uE.coeffs - params.h * curl(BE).coeffs) * m
    cross = fft_forward(_cross(fft_inverse(v_c, grid.n), to_physical(BE, dealias)))
    dB = curl(E(_wrap(grid, cross * _mask(grid, dealias))))
    return du, dB


# Conversions


def to_electron(U: ExtendedState, h: float) -> ElectronState:
    """``v = u - h J``."""
    return ElectronState(U.u, U.B, U.u - h * U.J, t=U.t)


def to_extended(S: ElectronState, h: float) -> ExtendedState:
    """``J = (u - v) / h``; needs ``h > 0``."""
    if h <= 0:
        raise ValueError("recovering J from v needs h > 0")
    return ExtendedState(S.u, S.B, (S.u - S.v) / h, t=S.t)


def state_convert(state: ExtendedState | ElectronState, h: float):
    """Switch between the extended and electron representations."""
    if isinstance(state, ExtendedState):
        return to_electron(state, h)
    if isinstance(state, ElectronState):
        return to_extended(state, h)
    raise TypeError(f"cannot convert {type(state).__name__}")


def cancellation_residual(v: SpectralField, B: SpectralField, dealias: bool = False) -> float:
    """``< curl((curl v) x B), v >``, zero up to round-off."""
    grid = _common(v, B)
    cv = to_physical(curl(v), dealias)
    prod = from_physical(grid, _cross(cv, to_physical(B, dealias)), dealias)
    return inner_product(curl(prod), v)


def pressure(u: SpectralField, B: SpectralField, dealias: bool = True) -> SpectralField:
    """Mean-zero total pressure solving ``Lap Q = div div(B (x) B - u (x) u)``."""
    grid = _common(u, B)
    pu, pB = to_physical(u, dealias), to_physical(B, dealias)
    t = np.einsum("i...,j...->ij...", pB, pB) - np.einsum("i...,j...->ij...", pu, pu)
    t_hat = fft_forward(t) * _mask(grid, dealias)
    ik = 1j * grid.k
    dd = np.einsum("i...,j...,ij...->...", ik, ik, t_hat)
    return _wrap(grid, -dd * grid.inv_k2)


# Dyadic rescaling

BAND_TOL = 1e-14


def _dilation_targets(grid: Grid, m: int) -> tuple[np.ndarray, np.ndarray]:
    n = grid.n
    idx = grid.index
    scaled = idx * (1 << m)
    fits = np.all(np.abs(scaled) < n // 2, axis=0)
    return scaled, fits


def dilate_modes(f: SpectralField, m: int) -> SpectralField:
    """Coefficients of ``f(2**m x)``: mode ``k`` moves to ``2**m k``.

    Modes that would leave the resolved band must be negligible (below
    ``BAND_TOL`` times the largest coefficient); they are dropped.

    Raises:
        ValueError: If a significant mode would leave the resolved band.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    grid = f.grid
    if m == 0:
        return f
    scaled, fits = _dilation_targets(grid, m)
    mag = np.abs(f.coeffs).max(axis=tuple(range(f.rank))) if f.rank else np.abs(f.coeffs)
    significant = mag > BAND_TOL * mag.max()
    if np.any(significant & ~fits):
        raise ValueError(
            f"field is not band-limited enough for a dilation by 2**{m} on n={grid.n}"
        )
    n = grid.n
    out = np.zeros_like(f.coeffs)
    src = np.nonzero(fits & grid.keep_mask)
    dst = tuple(np.mod(scaled[d][src], n) if d < 2 else scaled[d][src] for d in range(3))
    out[(Ellipsis,) + dst] = f.coeffs[(Ellipsis,) + src]
    return SpectralField(grid, out)


def contract_modes(f: SpectralField, m: int) -> SpectralField:
    """Inverse of :func:`dilate_modes`: reads mode ``2**m k`` back into ``k``.

    Modes off the ``2**m`` sublattice are discarded.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    if m == 0:
        return f
    grid = f.grid
    n = grid.n
    scaled, fits = _dilation_targets(grid, m)
    out = np.zeros_like(f.coeffs)
    dst = np.nonzero(fits & grid.keep_mask)
    src = tuple(np.mod(scaled[d][dst], n) if d < 2 else scaled[d][dst] for d in range(3))
    out[(Ellipsis,) + dst] = f.coeffs[(Ellipsis,) + src]
    return SpectralField(grid, out)


def rescale(
    state: ExtendedState, params: PhysParams, m: int, regrid: bool = False
) -> tuple[ExtendedState, PhysParams, float]:
    """Map a state with ``h = 2**m`` to unit viscosity and Hall number.

    The new unknowns are ``u'(x) = (h/mu) u(h x)``, ``B'(x) = (h/mu) B(h x)``
    and ``J' = curl B' = (h**2/mu) J(h x)`` with parameters
    ``(1, nu/mu, 1)``; physical time ``t`` corresponds to ``t' = mu t / h**2``.

    Args:
        state: State on the torus of period ``L``.
        params: Parameters with ``h == 2**m``.
        m: Dyadic exponent.
        regrid: If False, the rescaled state lives on the same grid and
            modes are dilated (band-limiting is required).  If True, the same
            coefficients are reinterpreted on the torus of period ``L / h``,
            which is exact for any band.

    Returns:
        ``(state', params', h**2 / mu)``; the last entry is the factor
        converting rescaled time into physical time.
    """
    if m < 0 or int(m) != m:
        raise ValueError("m must be a non-negative integer")
    h = float(2**m)
    if params.h != h:
        raise ValueError(f"rescaling by 2**{m} needs h = {h}, got h = {params.h}")
    mu = params.mu
    amp_ub, amp_j = h / mu, h * h / mu
    if regrid:
        grid = Grid(state.grid.n, state.grid.length / h)
        u, B, J = (SpectralField(grid, f.coeffs) for f in state.fields)
    else:
        u, B, J = (dilate_modes(f, m) for f in state.fields)
    new_state = ExtendedState(amp_ub * u, amp_ub * B, amp_j * J, t=mu * state.t / h**2)
    new_params = PhysParams(1.0, params.nu / mu, 1.0)
    return new_state, new_params, h * h / mu


def unscale(state: ExtendedState, params: PhysParams, m: int) -> ExtendedState:
    """Pull a rescaled fixed-grid state back to the original variables.

    ``params`` are the original parameters (``h == 2**m``).
    """
    h, mu = float(2**m), params.mu
    u, B, J = (contract_modes(f, m) for f in state.fields)
    return ExtendedState((mu / h) * u, (mu / h) * B, (mu / h**2) * J, t=h * h * state.t / mu)

