from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from hallmhd.diagnostics import (
    DIAGNOSTIC_COLUMNS,
    blowup_monitors,
    compute_record,
    consistency_check,
    energy_report,
    regularity_range_ok,
    smallness_check,
    sobolev_monitor,
    write_diagnostics_csv,
)
from hallmhd.equations import ExtendedState, PhysParams, rescale, to_electron
from hallmhd.initial import make_initial_state, random_vector_field
from hallmhd.littlewood_paley import BesovSpec, besov_norm
from hallmhd.solver import SolverConfig, Trajectory, heat_propagate, run, run_etd2
from hallmhd.spectral import Grid, SpectralField, transform

BOX = (2 * math.pi) ** 3


def sine_B(grid: Grid, amplitude: float) -> SpectralField:
    """``B = A (0, sin x, 0)``, so ``|B|**2 + |grad B|**2 = A**2`` everywhere."""
    x = grid.coordinates()[0]
    return transform(np.stack([0 * x, amplitude * np.sin(x), 0 * x]), grid)


def heat_trajectory(grid, amplitude, dt, T, kappa=1.0):
    """Exact linear evolution of ``u = 0`` and ``B = sine_B``."""
    B0 = sine_B(grid, amplitude)
    zero = SpectralField.zeros(grid)
    times = np.linspace(0.0, T, round(T / dt) + 1)
    states = [ExtendedState.consistent(zero, heat_propagate(B0, kappa, t), t) for t in times]
    params = PhysParams(kappa, kappa, 1.0)
    records = [compute_record(s, params) for s in states]
    return Trajectory(list(times), states, records, params)


class TestRecord:
    def test_single_mode_values(self, grid16):
        A = 0.3
        U = make_initial_state(grid16, "single_mode", A)
        p = PhysParams(0.5, 2.0, 1.0)
        rec = compute_record(U, p, [(0.0, 2.0, 2.0)])
        assert rec.energy == pytest.approx(2 * A**2 * BOX / 2, rel=1e-13)
        assert rec.dissipation == pytest.approx((0.5 + 2.0) * A**2 * BOX / 2, rel=1e-13)
        assert rec.linf_table == pytest.approx((A, A, A), rel=1e-13)
        assert rec.consistency == 0.0
        assert max(rec.div_defects) <= 1e-15
        expected_b = 3 * A * math.sqrt(BOX / 2)  # u, B and J = curl B share one norm
        assert rec.besov_table[(0.0, 2.0, 2.0)] == pytest.approx(expected_b, rel=1e-13)

    def test_electron_consistency(self, grid16):
        U = make_initial_state(grid16, "taylor_green_like", 1.0)
        p = PhysParams(h=0.8)
        assert compute_record(to_electron(U, 0.8), p).consistency <= 1e-14

    def test_finiteness(self, grid16):
        B = sine_B(grid16, math.nan)
        U = ExtendedState.consistent(SpectralField.zeros(grid16), B)
        assert not compute_record(U, PhysParams()).is_finite()


class TestEnergy:
    def test_heat_defect_matches_quadrature(self, grid16):
        dt, T = 0.01, 1.0
        traj = heat_trajectory(grid16, 1.0, dt, T)
        rep = energy_report(traj)
        E = np.array([r.energy for r in traj.diagnostics])
        D = np.array([r.dissipation for r in traj.diagnostics])
        oracle = abs(E[-1] + 2 * np.trapezoid(D, dx=dt) - E[0])
        assert rep.defect[-1] == pytest.approx(oracle, rel=1e-10)
        # D = E0 exp(-2t); the trapezoid error of int D is dt**2 / 12 (D'(T) - D'(0))
        predicted = 2 * dt**2 / 12 * 2 * E[0] * (1 - math.exp(-2 * T))
        assert rep.defect[-1] == pytest.approx(predicted, rel=1e-3)

    def test_small_data_run(self, grid16):
        U = make_initial_state(grid16, "single_mode", 1e-3)
        traj = run(U, SolverConfig(n=16, dt=1e-3, T=0.1))
        assert energy_report(traj).max_relative_defect <= 1e-6

    def test_energy_identity_column(self, grid16, tmp_path):
        U = make_initial_state(grid16, "single_mode", 1e-2)
        traj = run(U, SolverConfig(n=16, dt=1e-2, T=0.1, besov_specs=((0.5, 2.0, 1.0),)))
        path = tmp_path / "d.csv"
        write_diagnostics_csv(traj.diagnostics, path)
        rows = list(csv.DictReader(open(path)))
        rep = energy_report(traj)
        assert [float(r["energy_defect_rel"]) for r in rows] == list(rep.relative_defect)


class TestBlowupMonitors:
    def test_closed_forms(self, grid16):
        A, dt, T = 0.5, 1e-3, 1.0
        rep = blowup_monitors(heat_trajectory(grid16, A, dt, T), rho=4.0)
        assert rep.I1 == pytest.approx(A**2 * (1 - math.exp(-2 * T)) / 2, rel=1e-5)
        b_norm = A * math.sqrt(BOX / 2)
        assert rep.I2 == pytest.approx(math.sqrt(2) * b_norm * (1 - math.exp(-T)), rel=1e-5)
        # B^{-1/2}_{inf,inf}: only shell 0, sup of the 15-component block is A e^{-t}
        assert rep.I3 == pytest.approx(A**4 * (1 - math.exp(-4 * T)) / 4, rel=1e-5)
        assert rep.tail_I1 == pytest.approx(A**2 * (math.exp(-1) - math.exp(-2)) / 2, rel=1e-5)
        assert not rep.blowup_flag

    def test_cumulative_monotone(self, grid16):
        rep = blowup_monitors(heat_trajectory(grid16, 1.0, 0.05, 1.0))
        for c in (rep.cumulative_I1, rep.cumulative_I2, rep.cumulative_I3):
            assert c[0] == 0.0 and np.all(np.diff(c) >= 0)

    @pytest.mark.parametrize("rho", [2.0, math.inf, 1.0])
    def test_rho_range(self, grid16, rho):
        with pytest.raises(ValueError):
            blowup_monitors(heat_trajectory(grid16, 1.0, 0.5, 1.0), rho=rho)


class TestConsistency:
    def test_consistent_state(self, grid16):
        U = make_initial_state(grid16, "random_bandlimited", 1.0, seed=3)
        rep = consistency_check(U)
        assert max(rep.divu, rep.divB, rep.divJ) <= 1e-14
        assert rep.curlB_minus_J == 0.0

    def test_perturbed_current(self, grid16):
        U = make_initial_state(grid16, "single_mode", 1.0)
        bad = ExtendedState(U.u, U.B, 1.1 * U.J)
        rep = consistency_check(bad)
        assert rep.curlB_minus_J == pytest.approx(0.1 / 1.1, rel=1e-13)
        assert rep.curlB_minus_J_abs == pytest.approx(0.1 * U.J.norm(), rel=1e-13)

    def test_divergent_field(self, grid16):
        x = grid16.coordinates()[0]
        u = transform(np.stack([np.sin(x), 0 * x, 0 * x]), grid16)
        zero = SpectralField.zeros(grid16)
        assert consistency_check(ExtendedState(u, zero, zero)).divu == pytest.approx(1.0)


class TestSmallness:
    def test_definition(self, grid16):
        U = make_initial_state(grid16, "random_bandlimited", 0.1, seed=4)
        p = PhysParams(0.5, 1.0, 2.0)
        rep = smallness_check(U, p)
        spec = BesovSpec(0.5, 2.0, 1.0)
        crit = besov_norm(U.u, spec) + besov_norm(U.B, spec) + 2.0 * besov_norm(U.J, spec)
        assert rep.critical == pytest.approx(crit / 0.5, rel=1e-14)
        v = U.u - 2.0 * U.J
        elec = besov_norm(U.u, spec) + besov_norm(U.B, spec) + besov_norm(v, spec)
        assert rep.electron == pytest.approx(elec / 0.5, rel=1e-14)

    @pytest.mark.parametrize("m", [1, 2])
    def test_rescaling_invariance(self, grid16, m):
        U = make_initial_state(grid16, "random_bandlimited", 0.1, seed=5, band=7)
        p = PhysParams(0.3, 0.6, 2.0**m)
        V, q, _ = rescale(U, p, m, regrid=True)
        a, b = smallness_check(U, p), smallness_check(V, q)
        assert b.critical == pytest.approx(a.critical, rel=1e-12)
        assert b.electron == pytest.approx(a.electron, rel=1e-12)


class TestSobolev:
    @pytest.mark.parametrize(
        "s, r, ok", [(1.0, 2.0, True), (0.6, 1.6, True), (0.5, 1.0, False), (2.0, 1.8, False),
                     (0.6, 1.7, False)],
    )
    def test_range(self, s, r, ok):
        assert regularity_range_ok(s, r) is ok

    def test_gronwall_on_run(self, grid16):
        U = make_initial_state(grid16, "random_bandlimited", 0.2, seed=6)
        traj = run(U, SolverConfig(n=16, dt=1e-2, T=0.5))
        rep = sobolev_monitor(traj, 1.0, 2.0)
        assert rep.in_range and not rep.notes
        assert rep.gronwall_holds
        assert rep.gronwall_lhs[0] == pytest.approx(rep.gronwall_rhs[0])

    def test_out_of_range_noted(self, grid16):
        traj = heat_trajectory(grid16, 1.0, 0.1, 0.5)
        rep = sobolev_monitor(traj, 0.2, 3.0)
        assert not rep.in_range and rep.notes

    def test_heat_norms(self, grid16):
        traj = heat_trajectory(grid16, 1.0, 0.1, 0.5)
        rep = sobolev_monitor(traj, 1.0, 2.0)
        b0 = math.sqrt(BOX / 2)
        expected = [math.sqrt(1 + 1) * b0 * math.exp(-t) for t in traj.times]
        assert rep.B_norm == pytest.approx(expected, rel=1e-13)
        assert np.all(rep.u_norm == 0.0)


class TestCsv:
    def test_columns_and_round_trip(self, grid16, tmp_path):
        U = make_initial_state(grid16, "single_mode", 1e-2)
        cfg = SolverConfig(n=16, dt=1e-2, T=0.05, besov_specs=((0.5, 2.0, 1.0), (-1.0, math.inf, 2.0)))
        traj = run_etd2(U, cfg)
        path = tmp_path / "d.csv"
        write_diagnostics_csv(traj.diagnostics, path)
        rows = list(csv.reader(open(path)))
        assert tuple(rows[0][: len(DIAGNOSTIC_COLUMNS)]) == DIAGNOSTIC_COLUMNS
        assert rows[0][len(DIAGNOSTIC_COLUMNS):] == ["besov_s0.5_p2_r1", "besov_s-1_pinf_r2"]
        assert len(rows) == 7
        assert [float(r[1]) for r in rows[1:]] == [d.energy for d in traj.diagnostics]
