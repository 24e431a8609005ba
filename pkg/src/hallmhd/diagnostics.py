"""Conservation, smallness, consistency and blow-up monitors.

Per-step quantities are collected in :class:`DiagnosticsRecord`; the
reports below integrate them in time with the composite trapezoid rule.
Sup norms are collocation maxima on the grid, hence lower bounds of the
true suprema.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .equations import ElectronState, ExtendedState, PhysParams
from .littlewood_paley import (
    SHARP,
    BesovSpec,
    BlockProfile,
    besov_norm,
    block_indices,
    block_lp_norms,
    dyadic_block,
    sobolev_norm,
)
from .spectral import (
    SpectralField,
    curl,
    divergence,
    divergence_defect,
    fft_inverse,
    gradient,
)

if TYPE_CHECKING:
    from .solver import Trajectory

__all__ = [
    "DiagnosticsRecord",
    "compute_record",
    "EnergyReport",
    "energy_report",
    "SmallnessReport",
    "smallness_check",
    "BlowupReport",
    "blowup_monitors",
    "ConsistencyReport",
    "consistency_check",
    "SobolevReport",
    "sobolev_monitor",
    "DIAGNOSTIC_COLUMNS",
    "write_diagnostics_csv",
]

BesovKey = tuple[float, float, float]


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Scalar monitors of one state.

    Attributes:
        t: Time.
        energy: ``||u||**2 + ||B||**2``.
        dissipation: ``mu ||grad u||**2 + nu ||grad B||**2``.
        besov_table: ``(s, p, r) -> ||U1|| + ||U2|| + ||U3||`` (sharp blocks)
            summed over the three state components.
        linf_table: ``(||u||_inf, ||B||_inf, ||grad B||_inf)``.
        consistency: ``||curl B - J||`` (for an electron state
            ``||u - v - h curl B||``).
        div_defects: Relative divergence defects of the three components.
    """

    t: float
    energy: float
    dissipation: float
    besov_table: dict[BesovKey, float]
    linf_table: tuple[float, float, float]
    consistency: float
    div_defects: tuple[float, float, float]

    def is_finite(self) -> bool:
        values = [self.energy, self.dissipation, self.consistency, *self.linf_table,
                  *self.besov_table.values()]
        return all(math.isfinite(v) for v in values)


def _grad_sq(f: SpectralField) -> float:
    g = f.grid
    power = np.sum(f.coeffs.real**2 + f.coeffs.imag**2, axis=0)
    return float(g.volume * np.sum(g.weights * g.k2 * power))


def _linf_samples(samples: np.ndarray) -> float:
    axes = tuple(range(samples.ndim - 3))
    return float(np.sqrt(np.max(np.sum(samples**2, axis=axes)))) if samples.size else 0.0


def compute_record(
    state: ExtendedState | ElectronState,
    params: PhysParams,
    besov_specs: Sequence[BesovKey] = (),
) -> DiagnosticsRecord:
    """Evaluate every monitor on one state."""
    u, B, third = state.fields
    grid = state.grid
    energy = u.norm() ** 2 + B.norm() ** 2
    dissipation = params.mu * _grad_sq(u) + params.nu * _grad_sq(B)
    table = {}
    for s, p, r in besov_specs:
        spec = BesovSpec(s, p, r)
        table[(s, p, r)] = sum(besov_norm(f, spec) for f in state.fields)
    grad_b = fft_inverse(gradient(B).coeffs, grid.n)
    linf = (_linf_samples(u.physical()), _linf_samples(B.physical()), _linf_samples(grad_b))
    if isinstance(state, ExtendedState):
        consistency = (curl(B) - third).norm()
    else:
        consistency = (u - third - params.h * curl(B)).norm()
    divs = tuple(divergence_defect(f) for f in state.fields)
    return DiagnosticsRecord(state.t, energy, dissipation, table, linf, consistency, divs)


# Energy balance


@dataclass(frozen=True)
class EnergyReport:
    """Energy-balance defect along a trajectory."""

    times: np.ndarray
    defect: np.ndarray
    relative_defect: np.ndarray
    max_defect: float
    max_relative_defect: float


def _energy_defect(records: Sequence[DiagnosticsRecord]) -> tuple[np.ndarray, ...]:
    times = np.array([r.t for r in records])
    energy = np.array([r.energy for r in records])
    diss = np.array([r.dissipation for r in records])
    if len(records) > 1:
        integral = cumulative_trapezoid(diss, times, initial=0.0)
    else:
        integral = np.zeros(1)
    defect = np.abs(energy + 2.0 * integral - energy[0])
    rel = defect / energy[0] if energy[0] > 0 else np.zeros_like(defect)
    return times, defect, rel


def energy_report(traj: Trajectory, params: PhysParams | None = None) -> EnergyReport:
    """Defect of ``E(t) + 2 int_0^t D - E(0)`` with trapezoid quadrature.

    The dissipation in the records already carries ``mu`` and ``nu``;
    ``params`` is accepted for symmetry with the other monitors.
    """
    times, defect, rel = _energy_defect(traj.diagnostics)
    return EnergyReport(times, defect, rel, float(defect.max()), float(rel.max()))


# Smallness


@dataclass(frozen=True)
class SmallnessReport:
    """Scale-invariant size of the data divided by the viscosity."""

    critical: float
    electron: float


def smallness_check(
    U0: ExtendedState,
    params: PhysParams,
    p: float = 2.0,
    r: float = 1.0,
    profile: BlockProfile = SHARP,
) -> SmallnessReport:
    """Evaluate the two global-existence smallness quantities.

    Returns:
        ``critical = (|u0| + |B0| + h |J0|) / mu`` in ``B^{3/p-1}_{p,1}`` and
        ``electron = (|u0| + |B0| + |u0 - h J0|) / mu`` in ``B^{1/2}_{2,r}``.
    """
    crit = BesovSpec(3.0 / p - 1.0, p, 1.0, profile)
    half = BesovSpec(0.5, 2.0, r, profile)
    h = params.h
    first = besov_norm(U0.u, crit) + besov_norm(U0.B, crit) + h * besov_norm(U0.J, crit)
    v0 = U0.u - h * U0.J
    second = besov_norm(U0.u, half) + besov_norm(U0.B, half) + besov_norm(v0, half)
    return SmallnessReport(first / params.mu, second / params.mu)


# Blow-up criteria


@dataclass(frozen=True)
class BlowupReport:
    """Trapezoid values of the three continuation integrals.

    ``cumulative_*`` hold the running integrals at ``times`` and
    ``tail_*`` the contribution of the second half of the interval.
    """

    rho: float
    times: np.ndarray
    I1: float
    I2: float
    I3: float
    cumulative_I1: np.ndarray
    cumulative_I2: np.ndarray
    cumulative_I3: np.ndarray
    tail_I1: float
    tail_I2: float
    tail_I3: float
    blowup_flag: bool


def _monitor_fields(state) -> list[SpectralField]:
    u, B = state.fields[0], state.fields[1]
    return [u, B, gradient(B)]


def _tuple_linf(fields: Sequence[SpectralField]) -> float:
    total = 0.0
    for f in fields:
        s = f.physical()
        total = total + np.sum(s**2, axis=tuple(range(s.ndim - 3)))
    return float(np.sqrt(np.max(total)))


def _tuple_besov(fields: Sequence[SpectralField], s: float, p: float, r: float,
                 profile: BlockProfile = SHARP) -> float:
    grid = fields[0].grid
    js = block_indices(grid, profile)
    if p == 2.0:
        tables = [block_lp_norms(f, 2.0, profile) for f in fields]
        blocks = [math.sqrt(sum(t[j] ** 2 for t in tables)) for j in js]
    elif p == math.inf:
        blocks = []
        for j in js:
            sq = 0.0
            for f in fields:
                b = dyadic_block(f, j, profile).physical()
                sq = sq + np.sum(b**2, axis=tuple(range(b.ndim - 3)))
            blocks.append(float(np.sqrt(np.max(sq))))
    else:
        raise ValueError("tuple Besov norms are implemented for p in {2, inf}")
    weighted = np.array([2.0 ** (j * s) * v for j, v in zip(js, blocks)])
    if r == math.inf:
        return float(weighted.max())
    return float(np.sum(weighted**r) ** (1.0 / r))


def blowup_monitors(traj: Trajectory, rho: float = 4.0) -> BlowupReport:
    """Integrals of ``||(u, B, grad B)||`` in the three critical norms.

    The integrands are ``||.||_{L^inf}**2``, ``||.||_{B^{5/2}_{2,1}}`` and
    ``||.||_{B^{2/rho-1}_{inf,inf}}**rho`` of the 15-component field
    ``(u, B, grad B)`` (pointwise Euclidean magnitude), sampled at the saved
    states.
    """
    if not 2.0 < rho < math.inf:
        raise ValueError("rho must lie in (2, inf)")
    times = np.asarray(traj.times, dtype=np.float64)
    i1, i2, i3 = [], [], []
    for state in traj.states:
        fields = _monitor_fields(state)
        i1.append(_tuple_linf(fields) ** 2)
        i2.append(_tuple_besov(fields, 2.5, 2.0, 1.0))
        i3.append(_tuple_besov(fields, 2.0 / rho - 1.0, math.inf, math.inf) ** rho)
    cums = []
    for vals in (i1, i2, i3):
        vals = np.asarray(vals)
        if len(vals) > 1:
            cums.append(cumulative_trapezoid(vals, times, initial=0.0))
        else:
            cums.append(np.zeros(len(vals)))
    half = np.searchsorted(times, times[-1] / 2.0) if len(times) else 0
    tails = [float(c[-1] - c[half]) if len(c) else 0.0 for c in cums]
    totals = [float(c[-1]) if len(c) else 0.0 for c in cums]
    return BlowupReport(
        rho, times, *totals, *cums, *tails, blowup_flag=bool(getattr(traj, "blowup", False))
    )


# Consistency


@dataclass(frozen=True)
class ConsistencyReport:
    """Relative divergence defects and the relative ``curl B - J`` defect."""

    divu: float
    divB: float
    divJ: float
    curlB_minus_J: float
    curlB_minus_J_abs: float


def _relative(num: float, den: float) -> float:
    return num / den if den > 0 else num


def consistency_check(state: ExtendedState) -> ConsistencyReport:
    """L2 defects normalized by ``||grad f||`` (divergence) or ``||J||``."""
    divs = [
        _relative(divergence(f).norm(), gradient(f).norm()) for f in state.fields
    ]
    abs_defect = (curl(state.B) - state.J).norm()
    return ConsistencyReport(*divs, _relative(abs_defect, state.J.norm()), abs_defect)


# Sobolev propagation


@dataclass(frozen=True)
class SobolevReport:
    """Sobolev norms along a trajectory and the Gronwall comparison.

    ``gronwall_lhs(t) = |u|_{H^s}**2 + |B|_{H^r}**2
    + int (mu |grad u|_{H^s}**2 + nu |grad B|_{H^r}**2)`` and
    ``gronwall_rhs(t) = (|u0|_{H^s}**2 + |B0|_{H^r}**2) exp(C int S)`` with
    ``S = |grad u|_inf + |grad B|_inf + |u|_inf**2 + |B|_inf**2 + |J|_inf**2``.
    """

    s: float
    r: float
    p: float
    in_range: bool
    times: np.ndarray
    u_norm: np.ndarray
    B_norm: np.ndarray
    u_dissipation: np.ndarray
    B_dissipation: np.ndarray
    S: np.ndarray
    gronwall_lhs: np.ndarray
    gronwall_rhs: np.ndarray
    constant: float = 1.0
    notes: list[str] = field(default_factory=list)

    @property
    def gronwall_holds(self) -> bool:
        return bool(np.all(self.gronwall_lhs <= self.gronwall_rhs * (1 + 1e-12)))


def regularity_range_ok(s: float, r: float, p: float = 2.0) -> bool:
    """Whether ``3/p - 1 < s <= r`` and ``3/p < r <= 1 + s``."""
    return (3.0 / p - 1.0 < s <= r) and (3.0 / p < r <= 1.0 + s)


def sobolev_monitor(
    traj: Trajectory,
    s: float,
    r_exp: float,
    params: PhysParams | None = None,
    p: float = 2.0,
    constant: float = 1.0,
) -> SobolevReport:
    """Track ``||u||_{H^s}``, ``||B||_{H^r}`` and the Gronwall bound."""
    params = params or getattr(traj, "params", PhysParams())
    times = np.asarray(traj.times, dtype=np.float64)
    un, bn, ud, bd, S = [], [], [], [], []
    for state in traj.states:
        u, B = state.fields[0], state.fields[1]
        J = curl(B)
        un.append(sobolev_norm(u, s, homogeneous=False))
        bn.append(sobolev_norm(B, r_exp, homogeneous=False))
        gu, gb = gradient(u), gradient(B)
        ud.append(sobolev_norm(gu, s, homogeneous=False) ** 2)
        bd.append(sobolev_norm(gb, r_exp, homogeneous=False) ** 2)
        S.append(
            _tuple_linf([gu]) + _tuple_linf([gb])
            + _tuple_linf([u]) ** 2 + _tuple_linf([B]) ** 2 + _tuple_linf([J]) ** 2
        )
    un, bn, ud, bd, S = map(np.asarray, (un, bn, ud, bd, S))

    def cum(x):
        return cumulative_trapezoid(x, times, initial=0.0) if len(x) > 1 else np.zeros(len(x))

    diss = params.mu * cum(ud) + params.nu * cum(bd)
    lhs = un**2 + bn**2 + diss
    rhs = (un[0] ** 2 + bn[0] ** 2) * np.exp(constant * cum(S)) if len(un) else np.zeros(0)
    notes = [] if regularity_range_ok(s, r_exp, p) else [
        f"(s, r) = ({s}, {r_exp}) lies outside the propagation range for p = {p}"
    ]
    return SobolevReport(
        s, r_exp, p, regularity_range_ok(s, r_exp, p), times, un, bn,
        cum(ud), cum(bd), S, lhs, rhs, constant, notes,
    )


# CSV output

DIAGNOSTIC_COLUMNS = (
    "t",
    "energy",
    "dissipation",
    "energy_defect",
    "energy_defect_rel",
    "consistency",
    "div_u",
    "div_B",
    "div_J",
    "linf_u",
    "linf_B",
    "linf_gradB",
)


def _besov_column(key: BesovKey) -> str:
    s, p, r = key
    return f"besov_s{s:g}_p{p:g}_r{r:g}"


def write_diagnostics_csv(records: Sequence[DiagnosticsRecord], path: str | Path) -> None:
    """Write one row per record with a fixed column order.

    Columns are :data:`DIAGNOSTIC_COLUMNS` followed by one column per Besov
    key in the order of the first record's table.  Floats use ``repr`` so the
    file is bit-faithful.
    """
    keys = list(records[0].besov_table) if records else []
    _, defect, rel = _energy_defect(records) if records else ([], [], [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(DIAGNOSTIC_COLUMNS) + [_besov_column(k) for k in keys])
        for rec, d, dr in zip(records, defect, rel):
            row = [rec.t, rec.energy, rec.dissipation, float(d), float(dr), rec.consistency,
                   *rec.div_defects, *rec.linf_table]
            row += [rec.besov_table[k] for k in keys]
            writer.writerow([repr(float(x)) for x in row])
