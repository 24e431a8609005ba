"""Time integration of the Hall-MHD system.

Three constructions are available.

* ``etd2``: second-order exponential time differencing (ETD2RK).  For
  ``dU/dt = L U + N(U)`` with diagonal ``L = -kappa |k|**2``::

      a      = e^{L dt} U + dt phi1(L dt) N(U)
      U_next = a + dt phi2(L dt) (N(a) - N(U))

  with ``phi1(z) = (e^z - 1)/z`` and ``phi2(z) = (e^z - 1 - z)/z**2``.  The
  linear part is propagated exactly, so a run without nonlinearity
  reproduces the heat semigroup.
* ``picard`` / ``picard_split``: fixed-point iteration of the Duhamel
  formula on a uniform time grid, the time integral being the composite
  trapezoid rule with the exact heat kernel between nodes.
* ``galerkin``: the ``(u, B)`` system with the band projector wrapped
  around the data and every nonlinear term.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .diagnostics import DiagnosticsRecord, compute_record
from .equations import (
    ElectronState,
    ExtendedState,
    PhysParams,
    bilinear_Q,
    electron_nonlinear,
    rhs_velocity_field,
    to_electron,
)
from .littlewood_paley import SHARP, BlockProfile, block_lp_norms, low_cutoff
from .spectral import Grid, SpectralField

__all__ = [
    "SolverConfig",
    "Trajectory",
    "PicardReport",
    "heat_propagate",
    "step_etd2",
    "step_etd2_electron",
    "run",
    "run_etd2",
    "picard_iterate",
    "picard_iterate_split",
    "working_norm",
    "friedrichs_project",
    "galerkin_run",
    "mollify_data",
]

log = logging.getLogger(__name__)

SCHEMES = ("etd2", "picard", "picard_split", "galerkin")
FORMULATIONS = ("extended", "electron")
Triple = tuple[SpectralField, SpectralField, SpectralField]


@dataclass(frozen=True)
class SolverConfig:
    """Numerical parameters of a run.

    Attributes:
        n: Grid points per axis.
        dt: Time step (for Picard schemes, the spacing of the time grid).
        T: Final time.
        scheme: ``etd2``, ``picard``, ``picard_split`` or ``galerkin``.
        params: Physical parameters.
        tol: Relative fixed-point tolerance of the Picard schemes.
        max_iter: Picard iteration cap.
        friedrichs_n: Band radius of the Galerkin projector.
        save_every: Stride (in steps) between stored states.
        formulation: ``extended`` or ``electron`` (``etd2`` only).
        dealias: Apply the 2/3 rule to products.
        besov_specs: ``(s, p, r)`` triples recorded in every diagnostics row.
        blowup_factor: Stop when the energy exceeds this multiple of its
            initial value.
    """

    n: int = 32
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "etd2"
    params: PhysParams = field(default_factory=PhysParams)
    tol: float = 1e-10
    max_iter: int = 50
    friedrichs_n: float | None = None
    save_every: int = 1
    formulation: str = "extended"
    dealias: bool = True
    besov_specs: tuple[tuple[float, float, float], ...] = ((0.5, 2.0, 1.0), (2.5, 2.0, 1.0))
    blowup_factor: float = 1e8

    def __post_init__(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError("T must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.scheme == "galerkin" and (self.friedrichs_n is None or self.friedrichs_n < 1):
            raise ValueError("the galerkin scheme needs friedrichs_n >= 1")
        self.steps  # validates T/dt

    @property
    def steps(self) -> int:
        steps = round(self.T / self.dt)
        if steps < 1 or abs(steps * self.dt - self.T) > 1e-9 * self.T:
            raise ValueError(f"T = {self.T} is not a multiple of dt = {self.dt}")
        return steps


@dataclass
class Trajectory:
    """States saved along a run plus one diagnostics record per step."""

    times: list[float]
    states: list
    diagnostics: list[DiagnosticsRecord]
    params: PhysParams
    blowup: bool = False
    blowup_reason: str | None = None
    report: object | None = None

    @property
    def grid(self) -> Grid:
        return self.states[0].grid


# Heat semigroup and ETD coefficients


def _heat_symbol(grid: Grid, kappa: float, t: float) -> np.ndarray:
    return np.exp(-(kappa * t) * grid.k2)


def heat_propagate(f: SpectralField, kappa: float, t: float) -> SpectralField:
    """Apply ``exp(t kappa Lap)``.

    Raises:
        ValueError: If ``t < 0``.
    """
    if t < 0:
        raise ValueError("heat propagation needs t >= 0")
    if t == 0:
        return f
    return f.multiply(_heat_symbol(f.grid, kappa, t))


@lru_cache(maxsize=64)
def _etd_coefficients(grid: Grid, kappa: float, dt: float):
    z = -(kappa * dt) * grid.k2
    e = _heat_symbol(grid, kappa, dt)
    phi1 = np.ones_like(z)
    phi2 = np.full_like(z, 0.5)
    nz = z != 0
    phi1[nz] = np.expm1(z[nz]) / z[nz]
    small = np.abs(z) < 1e-2
    zs = z[small]
    phi2[small] = 0.5 + zs * (1 / 6 + zs * (1 / 24 + zs * (1 / 120 + zs / 720)))
    big = ~small
    zb = z[big]
    phi2[big] = (np.expm1(zb) - zb) / zb**2
    return e, dt * phi1, dt * phi2


NonlinearFn = Callable[[Sequence[SpectralField]], Sequence[SpectralField]]


def _etd2(fields: Sequence[SpectralField], kappas: Sequence[float], dt: float,
          nonlinear: NonlinearFn | None) -> tuple[SpectralField, ...]:
    grid = fields[0].grid
    coeffs = [_etd_coefficients(grid, k, dt) for k in kappas]
    wrap = SpectralField._wrap
    if nonlinear is None:
        return tuple(wrap(grid, c[0] * f.coeffs) for f, c in zip(fields, coeffs))
    n0 = nonlinear(fields)
    a = tuple(wrap(grid, c[0] * f.coeffs + c[1] * q.coeffs)
              for f, q, c in zip(fields, n0, coeffs))
    n1 = nonlinear(a)
    return tuple(wrap(grid, x.coeffs + c[2] * (q1.coeffs - q0.coeffs))
                 for x, q0, q1, c in zip(a, n0, n1, coeffs))


def _extended_kappas(params: PhysParams) -> tuple[float, float, float]:
    return (params.mu, params.nu, params.nu)


def step_etd2(U: ExtendedState, dt: float, params: PhysParams, dealias: bool = True,
              nonlinear: bool = True) -> ExtendedState:
    """One ETD2RK step of the extended system."""
    fn = None
    if nonlinear:
        def fn(fs):
            fs = tuple(fs)
            return bilinear_Q(fs, fs, params, dealias)
    out = _etd2(U.fields, _extended_kappas(params), dt, fn)
    return ExtendedState(*out, t=U.t + dt)


def step_etd2_electron(S: ElectronState, dt: float, params: PhysParams, dealias: bool = True,
                       nonlinear: bool = True) -> ElectronState:
    """One ETD2RK step of the electron system (``mu == nu``)."""
    if params.mu != params.nu:
        raise ValueError("the electron formulation requires mu == nu")
    fn = None
    if nonlinear:
        def fn(fs):
            return electron_nonlinear(ElectronState(*fs), params, dealias)
    out = _etd2(S.fields, (params.mu,) * 3, dt, fn)
    return ElectronState(*out, t=S.t + dt)


# Time loop


def _record(state, params, config: SolverConfig) -> DiagnosticsRecord:
    return compute_record(state, params, config.besov_specs)


def _march(state0, config: SolverConfig, step: Callable, params: PhysParams,
           as_state: Callable = lambda s: s) -> Trajectory:
    """Advance ``state0`` with ``step(state, t_next)``, collecting diagnostics.

    ``as_state`` maps the integrator's internal state to the stored state.
    Times are computed as ``t0 + i dt`` to avoid accumulating round-off.
    """
    first = as_state(state0)
    rec0 = _record(first, params, config)
    traj = Trajectory([first.t], [first], [rec0], params)
    e0 = rec0.energy
    state = state0
    for i in range(1, config.steps + 1):
        state = step(state, first.t + i * config.dt)
        stored = as_state(state)
        rec = _record(stored, params, config)
        traj.diagnostics.append(rec)
        reason = None
        if not rec.is_finite():
            reason = f"non-finite diagnostics at step {i}"
        elif e0 > 0 and rec.energy > config.blowup_factor * e0:
            reason = f"energy grew by more than {config.blowup_factor:g} at step {i}"
        if reason or i % config.save_every == 0 or i == config.steps:
            traj.times.append(stored.t)
            traj.states.append(stored)
        if reason:
            log.warning("blow-up flagged: %s", reason)
            traj.blowup, traj.blowup_reason = True, reason
            break
    return traj


def run_etd2(U0: ExtendedState | ElectronState, config: SolverConfig,
             nonlinear: bool = True) -> Trajectory:
    """Integrate with ETD2RK in the formulation matching ``U0``."""
    params = config.params
    stepper = step_etd2_electron if isinstance(U0, ElectronState) else step_etd2

    def step(s, t_next):
        new = stepper(s, config.dt, params, config.dealias, nonlinear)
        return new.with_fields(new.fields, t_next)

    return _march(U0, config, step, params)


def run(U0: ExtendedState, config: SolverConfig) -> Trajectory:
    """Run the scheme selected in ``config`` from extended initial data."""
    if config.scheme == "etd2":
        if config.formulation == "electron":
            return run_etd2(to_electron(U0, config.params.h), config)
        return run_etd2(U0, config)
    if config.scheme == "picard":
        return picard_iterate(U0, config.T, config.params, config.tol, config.max_iter,
                              dt=config.dt, dealias=config.dealias)[0]
    if config.scheme == "picard_split":
        return picard_iterate_split(U0, config.T, config.params, config.tol, config.max_iter,
                                    dt=config.dt, dealias=config.dealias)[0]
    return galerkin_run(U0, config.friedrichs_n, config.T, config.dt, config.params,
                        save_every=config.save_every, dealias=config.dealias,
                        besov_specs=config.besov_specs)


# Picard iteration


@dataclass
class PicardReport:
    """Convergence history of a Picard construction.

    Attributes:
        iterations: Number of iterates computed after ``x0 = y``.
        converged: Whether both stopping distances fell below ``tol``.
        residuals_l2: Relative sup-in-time L2 distance between iterates.
        residuals_besov: Relative sup-in-time ``B^{1/2}_{2,1}`` distance.
        residuals_work: Working-norm distance between iterates.
        contraction_ratios: Ratios of consecutive working-norm distances.
        norm_x: Working norm of the final iterate.
        norm_y: Working norm of the free evolution ``y``.
        diverged: Iterates became non-finite or exploded.
        message: Human-readable outcome.
        operator_norm: Empirical norm of the linear part (split scheme).
    """

    iterations: int = 0
    converged: bool = False
    residuals_l2: list[float] = field(default_factory=list)
    residuals_besov: list[float] = field(default_factory=list)
    residuals_work: list[float] = field(default_factory=list)
    contraction_ratios: list[float] = field(default_factory=list)
    norm_x: float = 0.0
    norm_y: float = 0.0
    diverged: bool = False
    message: str = ""
    operator_norm: list[float] = field(default_factory=list)
    inner_iterations: list[int] = field(default_factory=list)

    @property
    def contracting(self) -> bool:
        return all(r < 1.0 for r in self.contraction_ratios)

    @property
    def lemma_bound_holds(self) -> bool:
        """The fixed point satisfies ``|x| <= 2 |y|`` in the working norm."""
        return self.norm_x <= 2.0 * self.norm_y

    @property
    def operator_norm_flag(self) -> bool:
        """True when the empirical linear-part norm reached one."""
        return any(m >= 1.0 for m in self.operator_norm)


Path = list[tuple[np.ndarray, np.ndarray, np.ndarray]]


def _node_norms(fields: Sequence[np.ndarray], grid: Grid) -> np.ndarray:
    """Per-component ``(B^{1/2}_{2,1}, B^{5/2}_{2,1})`` block sums, shape (3, 2)."""
    out = np.zeros((3, 2))
    for c, arr in enumerate(fields):
        norms = block_lp_norms(SpectralField._wrap(grid, arr), 2.0, SHARP)
        for j, v in norms.items():
            out[c, 0] += 2.0 ** (0.5 * j) * v
            out[c, 1] += 2.0 ** (2.5 * j) * v
    return out


def _path_norm_table(path: Path, grid: Grid) -> np.ndarray:
    return np.array([_node_norms(node, grid) for node in path])


def working_norm(path: Path | Sequence[ExtendedState], dt: float, grid: Grid | None = None) -> float:
    """``sum_c sup_t |U_c|_{B^{1/2}_{2,1}} + int |U_c|_{B^{5/2}_{2,1}} dt``."""
    if path and isinstance(path[0], ExtendedState):
        grid = path[0].grid
        path = [tuple(f.coeffs for f in s.fields) for s in path]
    table = _path_norm_table(path, grid)
    sup = table[:, :, 0].max(axis=0)
    integ = np.trapezoid(table[:, :, 1], dx=dt, axis=0) if len(path) > 1 else np.zeros(3)
    return float(np.sum(sup + integ))


def _l2(arrs: Sequence[np.ndarray], grid: Grid) -> float:
    total = 0.0
    for a in arrs:
        total += np.sum(grid.weights * (a.real**2 + a.imag**2))
    return float(np.sqrt(grid.volume * total))


class _Duhamel:
    """Trapezoid Duhamel sweeps ``I_i = E (I_{i-1} + dt/2 q_{i-1}) + dt/2 q_i``."""

    def __init__(self, U0: ExtendedState, params: PhysParams, dt: float, nodes: int,
                 dealias: bool):
        self.grid = U0.grid
        self.params = params
        self.dt = dt
        self.nodes = nodes
        self.dealias = dealias
        self.u0 = tuple(f.coeffs for f in U0.fields)
        kappas = _extended_kappas(params)
        self.step = [_heat_symbol(self.grid, k, dt) for k in kappas]
        self.kappas = kappas

    def y(self, i: int) -> tuple[np.ndarray, ...]:
        t = i * self.dt
        return tuple(_heat_symbol(self.grid, k, t) * c for k, c in zip(self.kappas, self.u0))

    def q(self, node: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
        fs = tuple(SpectralField._wrap(self.grid, c) for c in node)
        return tuple(f.coeffs for f in bilinear_Q(fs, fs, self.params, self.dealias))

    def sweep(self, integrand: Callable[[int], Sequence[np.ndarray]],
              offset: Callable[[int], Sequence[np.ndarray]] | None = None) -> Path:
        """Return ``offset_i + D[integrand]_i`` on every node.

        ``integrand(i)`` is evaluated once per node in increasing order, so
        it may read a path that this sweep's output overwrites later.
        """
        half = 0.5 * self.dt
        out: Path = []
        q_prev = integrand(0)
        acc = tuple(np.zeros_like(c) for c in q_prev)
        out.append(tuple(o.copy() for o in offset(0)) if offset else acc)
        for i in range(1, self.nodes):
            q_i = integrand(i)
            acc = tuple(e * (a + half * qp) + half * qi
                        for e, a, qp, qi in zip(self.step, acc, q_prev, q_i))
            q_prev = q_i
            out.append(tuple(o + a for o, a in zip(offset(i), acc)) if offset else acc)
        return out


def _picard_grid(T: float, dt: float) -> int:
    nodes = round(T / dt) + 1
    if nodes < 2 or abs((nodes - 1) * dt - T) > 1e-9 * T:
        raise ValueError(f"T = {T} is not a multiple of dt = {dt}")
    return nodes


def _path_distance(a: Path, b: Path, grid: Grid) -> tuple[float, float]:
    """Sup-in-time L2 and ``B^{1/2}_{2,1}`` distances between two paths."""
    d_l2 = d_b = 0.0
    for na, nb in zip(a, b):
        diff = tuple(x - y for x, y in zip(na, nb))
        d_l2 = max(d_l2, _l2(diff, grid))
        d_b = max(d_b, float(_node_norms(diff, grid)[:, 0].sum()))
    return d_l2, d_b


def _path_size(a: Path, grid: Grid) -> tuple[float, float]:
    s_l2 = s_b = 0.0
    for node in a:
        s_l2 = max(s_l2, _l2(node, grid))
        s_b = max(s_b, float(_node_norms(node, grid)[:, 0].sum()))
    return s_l2, s_b


def _diff_path(a: Path, b: Path) -> Path:
    return [tuple(x - y for x, y in zip(na, nb)) for na, nb in zip(a, b)]


def _rel(d: float, s: float) -> float:
    return d / s if s > 0 else d


def _to_trajectory(path: Path, grid: Grid, dt: float, params: PhysParams,
                   report: PicardReport) -> Trajectory:
    states = [ExtendedState(*(SpectralField._wrap(grid, c) for c in node), t=i * dt)
              for i, node in enumerate(path)]
    records = [compute_record(s, params) for s in states]
    return Trajectory([s.t for s in states], states, records, params, report=report)


def _finite(path: Path) -> bool:
    return all(np.all(np.isfinite(c)) for node in path for c in node)


def picard_iterate(
    U0: ExtendedState,
    T: float,
    params: PhysParams,
    tol: float = 1e-10,
    max_iter: int = 50,
    dt: float = 1e-2,
    dealias: bool = True,
) -> tuple[Trajectory, PicardReport]:
    """Fixed-point iteration ``x_{m+1} = y + B(x_m, x_m)``.

    ``y(t) = e^{t Lap_{mu,nu}} U0`` and ``B`` is the Duhamel integral of
    ``Q`` discretized on ``t_i = i dt`` by the trapezoid rule.  Iteration
    stops once the relative sup-in-time L2 and ``B^{1/2}_{2,1}`` distances
    between consecutive iterates are both below ``tol``.  Failure to do so
    within ``max_iter`` iterations is reported, not raised.
    """
    nodes = _picard_grid(T, dt)
    grid = U0.grid
    duh = _Duhamel(U0, params, dt, nodes, dealias)
    report = PicardReport()
    y_path = [duh.y(i) for i in range(nodes)]
    report.norm_y = working_norm(y_path, dt, grid)
    x = y_path
    prev_work = None
    for m in range(1, max_iter + 1):
        x_old = x
        x = duh.sweep(lambda i: duh.q(x_old[i]), duh.y)
        report.iterations = m
        if not _finite(x):
            report.diverged = True
            report.message = f"iterate {m} is not finite"
            x = x_old
            break
        d_l2, d_b = _path_distance(x, x_old, grid)
        s_l2, s_b = _path_size(x, grid)
        d_work = working_norm(_diff_path(x, x_old), dt, grid)
        report.residuals_l2.append(_rel(d_l2, s_l2))
        report.residuals_besov.append(_rel(d_b, s_b))
        report.residuals_work.append(d_work)
        if prev_work is not None and prev_work > 0:
            report.contraction_ratios.append(d_work / prev_work)
        prev_work = d_work
        if report.residuals_l2[-1] < tol and report.residuals_besov[-1] < tol:
            report.converged = True
            report.message = f"converged after {m} iterations"
            break
        if s_l2 > 1e6 * max(_path_size(y_path, grid)[0], np.finfo(float).tiny):
            report.diverged = True
            report.message = f"iterates exploded at iteration {m}"
            break
        del x_old
    if not report.converged and not report.message:
        report.message = (f"no convergence within {max_iter} iterations; "
                          f"last ratio {report.contraction_ratios[-1:]}")
    if not report.converged:
        report.message = "non-contraction: " + report.message
        log.warning("Picard iteration: %s", report.message)
    report.norm_x = working_norm(x, dt, grid)
    return _to_trajectory(x, grid, dt, params, report), report


def picard_iterate_split(
    U0: ExtendedState,
    T: float,
    params: PhysParams,
    tol: float = 1e-10,
    max_iter: int = 50,
    dt: float = 1e-2,
    dealias: bool = True,
    inner_max: int = 50,
) -> tuple[Trajectory, PicardReport]:
    """Solve ``V = y~ + L(V) + B(V, V)`` around the free evolution ``U^L``.

    Here ``U^L = y`` is the heat evolution of the data, ``y~ = B(U^L, U^L)``
    and ``L(V) = B(V, U^L) + B(U^L, V)``.  Each outer step solves the linear
    problem ``(I - L) V_{m+1} = y~ + B(V_m, V_m)`` by an inner fixed-point
    loop; the inner contraction ratio is an empirical estimate of the norm
    of ``L`` and is recorded in ``report.operator_norm``.  The returned
    trajectory is ``U = U^L + V``.
    """
    nodes = _picard_grid(T, dt)
    grid = U0.grid
    duh = _Duhamel(U0, params, dt, nodes, dealias)
    report = PicardReport()
    y_path = [duh.y(i) for i in range(nodes)]
    report.norm_y = working_norm(y_path, dt, grid)
    scale_l2 = _path_size(y_path, grid)[0]

    def q_shifted(i: int, node) -> tuple[np.ndarray, ...]:
        # Q(U^L + z) - Q(z) = Q(U^L, U^L) + L-integrand(z)
        full = duh.q(tuple(a + b for a, b in zip(y_path[i], node)))
        own = duh.q(node)
        return tuple(f - o for f, o in zip(full, own))

    v: Path = [tuple(np.zeros_like(c) for c in node) for node in y_path]
    prev_work = None
    for m in range(1, max_iter + 1):
        v_old = v
        b_m = duh.sweep(lambda i: duh.q(v_old[i]))
        z = [tuple(c.copy() for c in node) for node in v_old]
        inner_prev = None
        m_est = 0.0
        for k in range(1, inner_max + 1):
            z_old = z
            z = duh.sweep(lambda i: q_shifted(i, z_old[i]), lambda i: b_m[i])
            dz = working_norm(_diff_path(z, z_old), dt, grid)
            if inner_prev is not None and inner_prev > 0:
                m_est = max(m_est, dz / inner_prev)
            inner_prev = dz
            d_l2 = _path_distance(z, z_old, grid)[0]
            if not _finite(z) or _rel(d_l2, scale_l2) < 0.1 * tol:
                break
        report.inner_iterations.append(k)
        report.operator_norm.append(m_est)
        v = z
        report.iterations = m
        if not _finite(v):
            report.diverged = True
            report.message = f"iterate {m} is not finite"
            v = v_old
            break
        full = [tuple(a + b for a, b in zip(yn, vn)) for yn, vn in zip(y_path, v)]
        d_l2, d_b = _path_distance(v, v_old, grid)
        s_l2, s_b = _path_size(full, grid)
        d_work = working_norm(_diff_path(v, v_old), dt, grid)
        report.residuals_l2.append(_rel(d_l2, s_l2))
        report.residuals_besov.append(_rel(d_b, s_b))
        report.residuals_work.append(d_work)
        if prev_work is not None and prev_work > 0:
            report.contraction_ratios.append(d_work / prev_work)
        prev_work = d_work
        if report.residuals_l2[-1] < tol and report.residuals_besov[-1] < tol:
            report.converged = True
            report.message = f"converged after {m} outer iterations"
            break
        if s_l2 > 1e6 * max(scale_l2, np.finfo(float).tiny):
            report.diverged = True
            report.message = f"iterates exploded at iteration {m}"
            break
    if not report.converged:
        if not report.message:
            report.message = f"no convergence within {max_iter} iterations"
        report.message = "non-contraction: " + report.message
        log.warning("split Picard iteration: %s", report.message)
    if report.operator_norm_flag:
        log.warning("split Picard iteration: empirical norm of L reached %.3g",
                    max(report.operator_norm))
    full = [tuple(a + b for a, b in zip(yn, vn)) for yn, vn in zip(y_path, v)]
    report.norm_x = working_norm(full, dt, grid)
    return _to_trajectory(full, grid, dt, params, report), report


# Friedrichs projector and Galerkin scheme


def friedrichs_project(f: SpectralField, n_cut: float) -> SpectralField:
    """Keep the modes with ``1/n_cut <= |k| <= n_cut``."""
    if n_cut < 1:
        raise ValueError("n_cut must be >= 1")
    kmag = f.grid.kmag
    return f.multiply(((kmag >= 1.0 / n_cut) & (kmag <= n_cut)).astype(np.float64))


def galerkin_run(
    U0: ExtendedState,
    n_cut: float | None,
    T: float,
    dt: float,
    params: PhysParams,
    save_every: int = 1,
    dealias: bool = True,
    besov_specs: tuple = (),
) -> Trajectory:
    """Evolve the band-projected ``(u, B)`` system with ETD2RK.

    ``n_cut=None`` runs the same code path without projection.  Saved
    states carry ``J = curl B``.
    """
    if n_cut is None:
        def E(f):
            return f
    else:
        def E(f):
            return friedrichs_project(f, n_cut)

    def nonlinear(fs):
        return rhs_velocity_field(fs[0], fs[1], params, dealias, E)

    def step(pair, t_next):
        return (*_etd2(pair[:2], (params.mu, params.nu), dt, nonlinear), t_next)

    def as_state(pair):
        return ExtendedState.consistent(pair[0], pair[1], pair[2])

    config = SolverConfig(n=U0.grid.n, dt=dt, T=T, params=params, save_every=save_every,
                          besov_specs=besov_specs)
    return _march((E(U0.u), E(U0.B), U0.t), config, step, params, as_state)


def mollify_data(f: SpectralField, n: int, profile: BlockProfile = SHARP) -> SpectralField:
    """Apply ``S_n - S_{-n}``: keep the blocks ``-n <= j < n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return low_cutoff(f, n, profile) - low_cutoff(f, -n, profile)

