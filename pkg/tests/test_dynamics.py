import math

import numpy as np
import pytest

from strobosqueeze.analytic import SpinSqueezingInputs, spin_variance
from strobosqueeze.dynamics import (
    GaussianSpinState,
    GridError,
    TimeGrid,
    derive_seeds,
    ensemble_finals,
    ensemble_variance,
    load_ensemble,
    make_grid,
    propagate_moments,
    save_ensemble,
    simulate_trajectory,
    validate_grid,
)
from strobosqueeze.params import couplings_from_rates
from strobosqueeze.strobe import StroboConfig

from conftest import scaled_setup


class TestGrid:
    def test_make_grid_aligns_window(self):
        strob = StroboConfig.centered(0.08, 200.0)
        grid = make_grid(strob, 1.0)
        assert grid.dt == pytest.approx(strob.period / 250.0, rel=1e-15)
        window_samples = strob.window / grid.dt
        assert window_samples == pytest.approx(20.0, abs=1e-9)
        validate_grid(grid, strob)

    def test_make_grid_snaps_to_whole_periods(self):
        strob = StroboConfig.centered(0.5, 2.0 * math.pi)  # period 1 s
        grid = make_grid(strob, 2.49)
        assert grid.total_time == pytest.approx(2.0, rel=1e-12)
        grid = make_grid(strob, 2.51)
        assert grid.total_time == pytest.approx(3.0, rel=1e-12)

    def test_coarse_grid_rejected(self):
        strob = StroboConfig.centered(0.5, 200.0)
        coarse = TimeGrid(dt=strob.period / 50.0, total_time=strob.period * 4.0, n_steps=200)
        with pytest.raises(GridError, match="Larmor"):
            validate_grid(coarse, strob)

    def test_narrow_window_rejected(self):
        strob = StroboConfig.centered(0.08, 200.0)
        fine_but_narrow = TimeGrid(
            dt=strob.period / 125.0, total_time=strob.period * 4.0, n_steps=500
        )
        with pytest.raises(GridError, match="window"):
            validate_grid(fine_but_narrow, strob)

    def test_misaligned_edges_rejected(self):
        strob = StroboConfig(duty=0.08, omega_m=200.0, phase=0.123)
        grid = make_grid(StroboConfig(duty=0.08, omega_m=200.0), 1.0)
        with pytest.raises(GridError, match="edges"):
            validate_grid(grid, strob)

    def test_timegrid_consistency_check(self):
        with pytest.raises(GridError):
            TimeGrid(dt=0.1, total_time=1.0, n_steps=7)


class TestGaussianSpinState:
    def test_coherent_state(self):
        css = GaussianSpinState.coherent()
        assert np.array_equal(css.mean, np.zeros(2))
        assert np.array_equal(css.cov, 0.5 * np.eye(2))
        GaussianSpinState.coherent(noise_scale=1.06)  # excess-noise variant

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            GaussianSpinState(mean=np.zeros(2), cov=np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_rejects_uncertainty_violation(self):
        with pytest.raises(ValueError, match="uncertainty"):
            GaussianSpinState(mean=np.zeros(2), cov=0.3 * np.eye(2))


class TestTrajectories:
    def test_bit_exact_reproducibility(self):
        coup, strob, grid = scaled_setup(0.5, 0.5, 0.3)
        a = simulate_trajectory(coup, strob, grid, seed=99)
        b = simulate_trajectory(coup, strob, grid, seed=99)
        assert np.array_equal(a.atom, b.atom)
        assert np.array_equal(a.light_out, b.light_out)
        assert np.array_equal(a.final_atom, b.final_atom)
        c = simulate_trajectory(coup, strob, grid, seed=100)
        assert not np.array_equal(a.atom, c.atom)

    def test_record_shapes(self):
        coup, strob, grid = scaled_setup(0.5, 0.5, 0.3)
        rec = simulate_trajectory(coup, strob, grid, seed=1)
        assert rec.atom.shape == (grid.n_steps, 2)
        assert rec.light_out.shape == (grid.n_steps, 2)
        assert rec.times.shape == (grid.n_steps,)

    def test_decoupled_atoms_stay_put(self):
        # kappa = 0, gamma_ex = 0: the atomic state is frozen at its
        # initial draw and the output light is the input white noise
        strob = StroboConfig.centered(0.5, 200.0)
        grid = make_grid(strob, 0.5)
        coup = couplings_from_rates(kappa=0.0, zeta2=1.0, duty=0.5)
        rec = simulate_trajectory(coup, strob, grid, seed=5)
        assert np.all(rec.atom == rec.atom[0])
        assert np.array_equal(rec.final_atom, rec.atom[0])
        p_out = rec.light_out[:, 1]
        expected_var = 1.0 / (2.0 * grid.dt)
        assert np.var(p_out) == pytest.approx(expected_var, rel=0.05)

    def test_mean_decay_rate_and_direction(self):
        coup, strob, grid = scaled_setup(0.08, 0.1, 2.0)
        initial = GaussianSpinState(mean=(0.3, 0.7), cov=0.5 * np.eye(2))
        rec = simulate_trajectory(coup, strob, grid, seed=0, initial=initial, suppress_noise=True)
        # both quadratures damp at the same rate: e^{-gamma T} over whole
        # periods, up to the Euler O(dt) bias in the decay factor
        decay = rec.final_atom[1] / 0.7
        assert decay == pytest.approx(math.exp(-grid.total_time), rel=3e-3)
        assert rec.final_atom[0] / 0.3 == pytest.approx(decay, rel=1e-12)
        drift = abs(math.atan2(rec.final_atom[1], rec.final_atom[0]) - math.atan2(0.7, 0.3))
        assert drift < 1e-10

    def test_seed_derivation_is_stable(self):
        seeds = derive_seeds(12345, 4)
        assert np.array_equal(seeds, derive_seeds(12345, 8)[:4])
        assert len(set(int(s) for s in seeds)) == 4


class TestEnsembles:
    def test_matches_single_trajectories_bitwise(self):
        coup, strob, grid = scaled_setup(0.5, 0.5, 0.3)
        seeds = derive_seeds(777, 5)
        singles = np.stack(
            [simulate_trajectory(coup, strob, grid, seed=int(s)).final_atom for s in seeds]
        )
        for chunk_size in (2, 5, 64):
            finals = ensemble_finals(coup, strob, grid, 5, 777, chunk_size=chunk_size)
            assert np.array_equal(finals, singles)

    def test_worker_count_invariance(self):
        coup, strob, grid = scaled_setup(0.5, 0.5, 0.3)
        one = ensemble_finals(coup, strob, grid, 40, 31, workers=1, chunk_size=8)
        eight = ensemble_finals(coup, strob, grid, 40, 31, workers=8, chunk_size=8)
        assert np.array_equal(one, eight)

    def test_qnd_point_keeps_projection_noise(self):
        coup, strob, grid = scaled_setup(0.5, 1.0, 0.5)
        var, se = ensemble_variance(coup, strob, grid, 2000, base_seed=2024)
        assert abs(var - 0.5) < 3.0 * se
        assert se < 0.05

    def test_antisqueezed_quadrature_is_larger(self):
        coup, strob, grid = scaled_setup(0.08, 0.1, 1.0)
        var0, se0 = ensemble_variance(coup, strob, grid, 400, base_seed=1, quad_angle=0.0)
        varpi, sepi = ensemble_variance(coup, strob, grid, 400, base_seed=1, quad_angle=math.pi)
        assert varpi > var0 + 3.0 * math.hypot(se0, sepi)

    def test_variance_matches_closed_form(self):
        coup, strob, grid = scaled_setup(0.08, 0.1, 1.0)
        var, se = ensemble_variance(coup, strob, grid, 2000, base_seed=9)
        ref = spin_variance(
            SpinSqueezingInputs(
                gamma_total=1.0, epsilon=1.0, duty=0.08, zeta2=0.1, time=grid.total_time
            )
        )
        assert abs(var - ref) < 3.0 * se

    def test_small_ensemble_rejected(self):
        coup, strob, grid = scaled_setup(0.5, 0.5, 0.3)
        with pytest.raises(ValueError, match="n_traj"):
            ensemble_variance(coup, strob, grid, 50, base_seed=1)

    def test_backaction_correlation_changes_sign_with_coupling(self):
        # the output light demodulated over the first two stroboscopic
        # periods remembers the input noise that later steers the atoms:
        # its covariance with the final squeezed quadrature is resolved at
        # 3 sigma in a 10^4 ensemble and flips sign with kappa
        from strobosqueeze.dynamics import _integrate_chunk, _StepTables

        covs = []
        for sign in (+1.0, -1.0):
            duty, zeta2 = 0.08, 0.1
            kappa = sign * math.sqrt(2.0 * (1.0 / duty) / zeta2)
            coup = couplings_from_rates(kappa, zeta2, duty)
            strob = StroboConfig.centered(duty, 200.0)
            grid = make_grid(strob, 0.3)
            tables = _StepTables(coup, strob, grid)
            n_early = 2 * int(round(strob.period / grid.dt))
            demod = np.sin(strob.larmor * grid.times[:n_early])
            seeds = derive_seeds(5150, 10000)
            early = np.empty(len(seeds))
            final_p = np.empty(len(seeds))
            init = GaussianSpinState.coherent()
            for start in range(0, len(seeds), 1000):
                chunk = seeds[start : start + 1000]
                finals, _, _, y = _integrate_chunk(
                    tables, chunk, init, keep_strobe_output=True
                )
                early[start : start + len(chunk)] = y[:, :n_early] @ demod
                final_p[start : start + len(chunk)] = finals[:, 1]
            n = len(seeds)
            cov = float(np.cov(early, final_p, ddof=1)[0, 1])
            se = math.sqrt(
                (np.var(early, ddof=1) * np.var(final_p, ddof=1) + cov * cov) / (n - 1)
            )
            assert abs(cov) > 3.0 * se
            covs.append(cov)
        assert covs[0] * covs[1] < 0.0


class TestMoments:
    def test_decoupled_covariance_constant(self):
        strob = StroboConfig.centered(0.5, 200.0)
        grid = make_grid(strob, 0.5)
        coup = couplings_from_rates(kappa=0.0, zeta2=1.0, duty=0.5)
        series = propagate_moments(coup, strob, grid)
        assert np.allclose(series.covs, series.covs[0], rtol=0.0, atol=1e-15)

    def test_matches_closed_form_when_sidebands_are_fast(self):
        coup, strob, grid = scaled_setup(0.08, 0.1, 1.0)
        series = propagate_moments(coup, strob, grid)
        got = series.tail_average_variance(2.0 * strob.period)
        ref_times = series.times[series.times >= grid.total_time - 2.0 * strob.period]
        ref = float(
            np.mean(
                [
                    spin_variance(
                        SpinSqueezingInputs(
                            gamma_total=1.0, epsilon=1.0, duty=0.08, zeta2=0.1, time=float(t)
                        )
                    )
                    for t in ref_times
                ]
            )
        )
        assert abs(got - ref) / ref < 1e-2

    def test_physicality_at_every_step(self):
        coup, strob, grid = scaled_setup(0.08, 0.1, 1.0)
        series = propagate_moments(coup, strob, grid)
        sym = np.abs(series.covs[:, 0, 1] - series.covs[:, 1, 0])
        assert float(sym.max()) == 0.0
        dets = np.linalg.det(series.covs)
        assert float(dets.min()) >= 0.25 - 1e-9
        eigs = np.linalg.eigvalsh(series.covs)
        assert float(eigs.min()) > 0.0

    def test_step_halving_converged(self):
        coup, strob, grid = scaled_setup(0.08, 0.1, 1.0, samples_per_window=20)
        _, _, fine_grid = scaled_setup(0.08, 0.1, 1.0, samples_per_window=40)
        coarse = propagate_moments(coup, strob, grid).variance()[-1]
        fine = propagate_moments(coup, strob, fine_grid).variance()[-1]
        assert abs(fine - coarse) / coarse < 1e-4

    def test_variance_rotation(self):
        coup, strob, grid = scaled_setup(0.08, 0.1, 0.5)
        series = propagate_moments(coup, strob, grid)
        v0 = series.variance(0.0)[-1]
        vpi = series.variance(math.pi)[-1]
        assert v0 == pytest.approx(series.covs[-1, 1, 1], rel=1e-12)
        assert vpi == pytest.approx(series.covs[-1, 0, 0], rel=1e-12)


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        coup, strob, grid = scaled_setup(0.5, 0.5, 0.3)
        records = [
            simulate_trajectory(coup, strob, grid, seed=int(s)) for s in derive_seeds(8, 3)
        ]
        path = tmp_path / "ensemble.ckpt"
        save_ensemble(path, records, strob, grid)
        loaded, strob2, grid2 = load_ensemble(path)
        assert strob2.duty == strob.duty
        assert strob2.omega_m == pytest.approx(strob.omega_m, rel=0.0)
        assert strob2.phase == pytest.approx(strob.phase, rel=0.0)
        assert grid2.n_steps == grid.n_steps
        assert grid2.dt == grid.dt
        for orig, back in zip(records, loaded):
            assert back.seed == orig.seed
            assert np.array_equal(back.atom, orig.atom)
            assert np.array_equal(back.light_out, orig.light_out)
            assert np.array_equal(back.final_atom, orig.final_atom)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 64)
        with pytest.raises(ValueError, match="magic"):
            load_ensemble(path)
