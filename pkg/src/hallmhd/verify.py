"""Named invariant suites run by ``hallmhd verify``.

Every check measures a defect (or ratio) with fixed seeds and compares it
with a tolerance.  Suites return their checks in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .equations import (
    ElectronState,
    ExtendedState,
    PhysParams,
    advect,
    cancellation_residual,
    contract_modes,
    dilate_modes,
    q_a,
    q_b,
    rescale,
    rhs_electron,
    rhs_extended,
    unscale,
)
from .initial import random_vector_field, single_mode
from .littlewood_paley import (
    SHARP,
    SMOOTH,
    BesovSpec,
    besov_norm,
    block_indices,
    bony_decomposition,
    dyadic_block,
    inequality_ratio,
    sobolev_norm,
)
from .diagnostics import smallness_check
from .solver import (
    friedrichs_project,
    galerkin_run,
    picard_iterate,
    picard_iterate_split,
)
from .spectral import (
    Grid,
    SpectralField,
    curl,
    curl_inverse,
    divergence,
    divergence_defect,
    fft_forward,
    fft_inverse,
    gradient,
    inner_product,
    laplacian,
    leray_project,
    pointwise_product,
)

__all__ = ["Check", "SUITES", "run_suite"]


@dataclass(frozen=True)
class Check:
    """Outcome of one invariant check.

    Attributes:
        name: Short identifier.
        value: Measured defect or ratio (worst case over the ensemble).
        tol: Threshold; the check passes when ``value <= tol``.
    """

    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<40s} value={self.value:.3e}  tol={self.tol:.1e}"


def _rel(a: SpectralField, b: SpectralField) -> float:
    scale = max(a.norm(), b.norm())
    return (a - b).norm() / scale if scale > 0 else 0.0


def _worst(fn: Callable[[int], float], seeds: Iterable[int]) -> float:
    return max(fn(seed) for seed in seeds)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


# identities


def identities(n: int = 16, seeds: int = 10) -> list[Check]:
    grid = Grid(n)
    # products of fields with |k_i| < n/4 are alias-free without truncation
    band = n // 4 - 1
    seeds = range(seeds)

    def vec(seed, solenoidal=True, band_=None):
        return random_vector_field(grid, _rng(seed), band_, solenoidal=solenoidal)

    def round_trip(seed):
        x = _rng(seed).standard_normal(grid.shape)
        return float(np.max(np.abs(fft_inverse(fft_forward(x), n) - x)) / np.max(np.abs(x)))

    def parseval(seed):
        a, b = vec(seed, False), vec(seed + 1000, False)
        spectral = inner_product(a, b)
        quad = inner_product(a, b, method="quadrature")
        return abs(spectral - quad) / (a.norm() * b.norm())

    def curl_curl(seed):
        v = vec(seed, False)
        lhs = curl(curl(v)) + laplacian(v)
        return _rel(lhs, gradient(divergence(v)))

    def curl_inv(seed):
        B = vec(seed)
        return _rel(curl_inverse(curl(B)), B)

    def leray(seed):
        u = vec(seed, False)
        p = leray_project(u)
        return max(_rel(leray_project(p), p), divergence_defect(p))

    def reconstruction(profile):
        def fn(seed):
            f = vec(seed, False)
            total = SpectralField.zeros(grid)
            for j in block_indices(grid, profile):
                total = total + dyadic_block(f, j, profile)
            return _rel(total, f)
        return fn

    def bony(profile):
        def fn(seed):
            rng = _rng(seed)
            u = random_vector_field(grid, rng, None, False, comp_shape=())
            v = random_vector_field(grid, rng, None, False, comp_shape=())
            t_uv, t_vu, r = bony_decomposition(u, v, profile)
            exact = pointwise_product(u, v)
            return _rel(t_uv + t_vu + r, exact)
        return fn

    def hall(dealias):
        def fn(seed):
            v, B = vec(seed), vec(seed + 1000)
            res = cancellation_residual(v, B, dealias=dealias)
            scale = gradient(v).norm() * float(np.max(np.abs(B.physical()))) * v.norm()
            return abs(res) / scale
        return fn

    def qb_curl(seed):
        v, w = vec(seed, band_=band), vec(seed + 1000, band_=band)
        return _rel(q_b(v, w, dealias=False), curl(pointwise_product(v, w, kind="cross")))

    def qa_arrangement(seed):
        v, w = vec(seed, band_=band), vec(seed + 1000, band_=band)
        adv = advect(w, v, dealias=False) + advect(v, w, dealias=False)
        return _rel(q_a(v, w, dealias=False), 0.5 * leray_project(adv))

    def identity_1300(seed):
        w, z = vec(seed, band_=band), vec(seed + 1000, band_=band)
        lhs = curl(pointwise_product(w, z, kind="cross"))
        rhs = (
            pointwise_product(curl(w), z, kind="cross")
            + pointwise_product(curl(z), w, kind="cross")
            - 2.0 * advect(w, z, dealias=False)
            + gradient(pointwise_product(w, z, kind="dot"))
        )
        return _rel(lhs, rhs)

    def formulations(seed):
        params = PhysParams(1.0, 1.0, 0.7)
        u, B = vec(seed, band_=band), vec(seed + 1000, band_=band)
        J = curl(B)
        ext = rhs_extended(ExtendedState(u, B, J), params, dealias=False)
        el = rhs_electron(ElectronState(u, B, u - params.h * J), params, dealias=False)
        dj = (el[0] - el[2]) / params.h
        return _rel(dj, ext[2])

    def equivnorm(seed):
        B = vec(seed)
        a, b = sobolev_norm(gradient(B), 1.3), sobolev_norm(curl(B), 1.3)
        return abs(a - b) / b

    def besov_l2(seed):
        f = vec(seed, False)
        return abs(besov_norm(f, BesovSpec(0.0, 2.0, 2.0)) - f.norm()) / f.norm()

    return [
        Check("transform round trip", _worst(round_trip, seeds), 1e-13),
        Check("parseval", _worst(parseval, seeds), 1e-12),
        Check("curl curl + lap - grad div", _worst(curl_curl, seeds), 1e-13),
        Check("curl_inverse . curl", _worst(curl_inv, seeds), 1e-13),
        Check("leray idempotent and div-free", _worst(leray, seeds), 1e-12),
        Check("dyadic reconstruction (sharp)", _worst(reconstruction(SHARP), seeds), 1e-12),
        Check("dyadic reconstruction (smooth)", _worst(reconstruction(SMOOTH), seeds), 1e-12),
        Check("bony telescoping (sharp)", _worst(bony(SHARP), seeds), 1e-12),
        Check("bony telescoping (smooth)", _worst(bony(SMOOTH), seeds), 1e-12),
        Check("hall cancellation", _worst(hall(False), seeds), 1e-12),
        Check("hall cancellation (dealiased)", _worst(hall(True), seeds), 1e-12),
        Check("q_b = curl(v x w)", _worst(qb_curl, seeds), 1e-11),
        Check("q_a advective arrangement", _worst(qa_arrangement, seeds), 1e-11),
        Check("curl(w x z) expansion", _worst(identity_1300, seeds), 1e-11),
        Check("electron vs extended dJ/dt", _worst(formulations, seeds), 1e-10),
        Check("|grad B|_H^s = |curl B|_H^s", _worst(equivnorm, seeds), 1e-12),
        Check("B^0_{2,2} = L2", _worst(besov_l2, seeds), 1e-12),
    ]


# scaling


def scaling(n: int = 32, seeds: int = 5) -> list[Check]:
    grid = Grid(n)
    seeds = range(seeds)
    m = 1
    # dilated products stay below n/2, so undealiased products are exact
    band = n // 8 - 1

    def state(seed, amp=1.0):
        rng = _rng(seed)
        u = random_vector_field(grid, rng, band, rms=amp)
        B = random_vector_field(grid, rng, band, rms=amp)
        return ExtendedState.consistent(u, B)

    def shell_shift(seed):
        f = random_vector_field(grid, _rng(seed), band, solenoidal=False)
        g = dilate_modes(f, m)
        worst = 0.0
        for s in (-0.5, 0.5, 1.5):
            for r in (1.0, 2.0, math.inf):
                a = besov_norm(g, BesovSpec(s, 2.0, r))
                b = 2.0 ** (m * s) * besov_norm(f, BesovSpec(s, 2.0, r))
                worst = max(worst, abs(a - b) / b)
        return worst

    def rhs_equivariance(regrid):
        def fn(seed):
            params = PhysParams(0.7, 1.3, 2.0**m)
            U = state(seed)
            V, params_v, _ = rescale(U, params, m, regrid=regrid)
            lhs = rhs_extended(U, params, dealias=False)
            rhs_v = rhs_extended(V, params_v, dealias=False)
            h, mu = params.h, params.mu
            worst = 0.0
            for a, b, power in zip(lhs, rhs_v, (3, 3, 4)):
                pulled = SpectralField(grid, b.coeffs) if regrid else contract_modes(b, m)
                worst = max(worst, _rel(a, pulled * (mu**2 / h**power)))
            return worst
        return fn

    def smallness(seed):
        params = PhysParams(0.7, 1.3, 2.0**m)
        U = state(seed, 1e-2)
        V, params_v, _ = rescale(U, params, m, regrid=True)
        a = smallness_check(U, params).critical
        b = smallness_check(V, params_v).critical
        return abs(a - b) / a

    def round_trip(seed):
        params = PhysParams(0.7, 1.3, 2.0**m)
        U = state(seed)
        V, _, _ = rescale(U, params, m)
        W = unscale(V, params, m)
        return max(_rel(a, b) for a, b in zip(W.fields, U.fields))

    return [
        Check("besov shell shift (sharp)", _worst(shell_shift, seeds), 1e-12),
        Check("rhs equivariance (fixed torus)", _worst(rhs_equivariance(False), seeds), 1e-10),
        Check("rhs equivariance (regrid)", _worst(rhs_equivariance(True), seeds), 1e-10),
        Check("smallness invariance (regrid)", _worst(smallness, seeds), 1e-12),
        Check("unscale . rescale", _worst(round_trip, seeds), 1e-14),
    ]


# picard


def picard(n: int = 16, T: float = 0.2, dt: float = 1e-2) -> list[Check]:
    grid = Grid(n)
    params = PhysParams()
    U0 = single_mode(grid, 1e-3)
    tol = 1e-10
    traj, rep = picard_iterate(U0, T, params, tol=tol, dt=dt)
    traj_s, rep_s = picard_iterate_split(U0, T, params, tol=tol, dt=dt)
    dist = max(
        max(_rel(a, b) for a, b in zip(x.fields, y.fields))
        for x, y in zip(traj.states, traj_s.states)
    )
    zero_traj, zero_rep = picard_iterate(
        ExtendedState.consistent(SpectralField.zeros(grid), SpectralField.zeros(grid)),
        T, params, tol=tol, dt=dt,
    )
    zero_norm = max(f.norm() for s in zero_traj.states for f in s.fields)
    return [
        Check("zero data: fixed point", zero_norm + (zero_rep.iterations - 1), 0.0),
        Check("converged", 0.0 if rep.converged else 1.0, 0.0),
        Check("max contraction ratio", max(rep.contraction_ratios, default=0.0), 1.0 - 1e-12),
        Check("|x| / (2 |y|)", rep.norm_x / (2.0 * rep.norm_y), 1.0),
        Check("split converged", 0.0 if rep_s.converged else 1.0, 0.0),
        Check("split empirical operator norm", max(rep_s.operator_norm, default=0.0), 1.0 - 1e-12),
        Check("split vs plain fixed point", dist, max(tol, dt**2)),
    ]


# friedrichs


def friedrichs(n: int = 16, seeds: int = 50) -> list[Check]:
    grid = Grid(n)
    seeds = range(seeds)
    cuts = (1, 2, 4)

    def field(seed):
        return random_vector_field(grid, _rng(seed), None, solenoidal=False)

    def idempotent(seed):
        f = field(seed)
        return max(_rel(friedrichs_project(friedrichs_project(f, c), c), friedrichs_project(f, c))
                   for c in cuts)

    def approximation(seed):
        # |E_n f - f|_{B^s} <= n^{-1} |f|_{B^{s+1}}
        f = field(seed)
        worst = 0.0
        for c in cuts:
            for s in (-0.5, 0.5, 1.5):
                lhs = besov_norm(friedrichs_project(f, c) - f, BesovSpec(s, 2.0, 1.0))
                rhs = besov_norm(f, BesovSpec(s + 1.0, 2.0, 1.0)) / c
                worst = max(worst, lhs / rhs)
        return worst

    def bernstein(seed):
        # |E_n f|_{B^{s+1}} <= 2 n |f|_{B^s}
        f = field(seed)
        worst = 0.0
        for c in cuts:
            for s in (-0.5, 0.5, 1.5):
                lhs = besov_norm(friedrichs_project(f, c), BesovSpec(s + 1.0, 2.0, 1.0))
                rhs = 2.0 * c * besov_norm(f, BesovSpec(s, 2.0, 1.0))
                worst = max(worst, lhs / rhs)
        return worst

    params = PhysParams()
    U0 = single_mode(grid, 1e-3, modes=((1, 1, 0), (0, 1, 1)))
    traj = galerkin_run(U0, 1.2, 0.01, 1e-3, params)
    leak = max(
        (f - friedrichs_project(f, 1.2)).max_abs_coeff() for s in traj.states for f in s.fields[:2]
    )
    return [
        Check("projector idempotent", _worst(idempotent, seeds), 1e-15),
        Check("approximation ratio (k=1)", _worst(approximation, seeds), 1.0),
        Check("inverse estimate ratio (C=2)", _worst(bernstein, seeds), 1.0),
        Check("galerkin band invariance", leak, 0.0),
    ]


# inequalities


def inequalities(n: int = 16, seeds: int = 10) -> list[Check]:
    grid = Grid(n)
    band = n // 3
    checks = []

    def scalar(rng):
        return random_vector_field(grid, rng, band, solenoidal=False, comp_shape=())

    cases: dict[str, Callable[[np.random.Generator], tuple]] = {
        "tame": lambda rng: (inequality_ratio("tame", (scalar(rng), scalar(rng)), sigma=1.0),),
        "tame1": lambda rng: (inequality_ratio("tame1", (scalar(rng), scalar(rng)), s=1.0),),
        "prod1": lambda rng: (inequality_ratio("prod1", (scalar(rng), scalar(rng)), s1=1.5, s2=1.5),),
        "prod2": lambda rng: (inequality_ratio("prod2", (scalar(rng), scalar(rng)), rho=4.0),),
        "com01": lambda rng: (inequality_ratio("com01", (scalar(rng), scalar(rng)), s=1.0),),
        "com2": lambda rng: (_com2(grid, rng, scalar),),
        "interpolation": lambda rng: (
            inequality_ratio("interpolation", (scalar(rng),), theta=0.5, s=0.0, s_tilde=1.0),
        ),
    }
    for name, make in cases.items():
        ratios = [r.ratio for seed in range(seeds) for r in make(_rng(seed))]
        checks.append(Check(f"{name} max ratio (finite)", max(ratios), math.inf))
    bern = []
    for seed in range(seeds):
        f = scalar(_rng(seed))
        bern += [inequality_ratio("bernstein", (f,), j=j).ratio for j in block_indices(grid)]
    checks.append(Check("bernstein single block ratio", max(bern), 1.0))
    return checks


def _com2(grid: Grid, rng: np.random.Generator, scalar: Callable):
    b0, a0 = scalar(rng), scalar(rng)
    dt, steps = 0.05, 5
    decay = [math.exp(-i * dt) for i in range(steps)]
    return inequality_ratio(
        "com2", ([b0 * d for d in decay], [a0 * d for d in decay]), dt=dt, s=1.0, rho=4.0
    )


SUITES: dict[str, Callable[[], list[Check]]] = {
    "identities": identities,
    "scaling": scaling,
    "picard": picard,
    "friedrichs": friedrichs,
    "inequalities": inequalities,
}


def run_suite(name: str) -> list[Check]:
    try:
        suite = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}") from None
    return suite()
