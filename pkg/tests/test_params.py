import math

import numpy as np
import pytest

from strobosqueeze.configio import ConfigError
from strobosqueeze.params import (
    PhysicalParams,
    PoleError,
    RegimeError,
    ZeroDetuningError,
    a_coefficients,
    couplings_from_rates,
    derive_couplings,
    load_params,
    photon_flux_from_power,
    with_detuning,
)

D13 = 423.60e6
D23 = 266.65e6

# frozen 40-digit evaluations of the coefficient formulas
RED_A = (3.0556351851009066, 1.2738748392438303, -0.021717334306362939)
RED_ZETA2 = 0.10228948859334238
BLUE_A = (2.7159553323476971, 1.4790248541896604, 0.011915125145481916)
FLUX_118MW_780NM = 4633400888766309.6
KAPPA_REF = -24.767408752367153
GAMMA_S_REF = 31.37344105471707


class TestACoefficients:
    def test_far_detuned_limit(self):
        a0, a1, a2 = a_coefficients(1e16, D13, D23)
        assert a0 == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-7)
        assert a1 == pytest.approx(math.sqrt(2.0), rel=1e-7)
        assert a2 == pytest.approx(0.0, abs=1e-7)

    def test_red_operating_point(self):
        a = a_coefficients(1.66e9, D13, D23)
        for got, want in zip(a, RED_A):
            assert got == pytest.approx(want, rel=1e-14)
        assert -6.0 * a[2] / a[1] == pytest.approx(RED_ZETA2, rel=1e-13)

    def test_blue_branch_sign(self):
        a = a_coefficients(-2.50e9, D13, D23)
        for got, want in zip(a, BLUE_A):
            assert got == pytest.approx(want, rel=1e-14)
        # blue detuning: a2/a1 > 0, i.e. zeta^2 < 0 and no squeezing channel
        assert a[2] / a[1] > 0.0

    def test_scale_invariance_of_ratios(self):
        # only ratios of the three frequencies enter
        a_hz = a_coefficients(1.66e9, D13, D23)
        a_rad = a_coefficients(
            2e9 * math.pi * 1.66, 2e6 * math.pi * 423.60, 2e6 * math.pi * 266.65
        )
        for x, y in zip(a_hz, a_rad):
            assert x == pytest.approx(y, rel=1e-12)

    def test_zero_detuning(self):
        with pytest.raises(ZeroDetuningError):
            a_coefficients(0.0, D13, D23)

    def test_pole_exclusion(self):
        with pytest.raises(PoleError):
            a_coefficients(D13, D13, D23)
        with pytest.raises(PoleError):
            a_coefficients(D23 * (1.0 + 1e-10), D13, D23)
        a_coefficients(D23 * (1.0 + 1e-6), D13, D23)  # outside the guard band

    def test_smooth_away_from_poles(self):
        # central differences against the hand-derived derivative
        # d/dD [1/(1 - p/D)] = -p / (D - p)^2
        delta = 1.66e9
        h = delta * 1e-5
        fd = [
            (x - y) / (2.0 * h)
            for x, y in zip(
                a_coefficients(delta + h, D13, D23), a_coefficients(delta - h, D13, D23)
            )
        ]
        dg13 = -D13 / (delta - D13) ** 2
        dg23 = -D23 / (delta - D23) ** 2
        s2 = math.sqrt(2.0)
        exact = (
            s2 / 20.0 * (dg13 + 15.0 * dg23),
            s2 / 100.0 * (-15.0 * dg13 - 25.0 * dg23),
            s2 / 40.0 * (dg13 - 5.0 * dg23),
        )
        for got, want in zip(fd, exact):
            assert got == pytest.approx(want, rel=1e-6)


class TestDeriveCouplings:
    def test_paper_style_operating_point(self, rb87_params):
        coup = derive_couplings(rb87_params, duty=0.08)
        assert coup.kappa == pytest.approx(KAPPA_REF, rel=1e-12)
        assert coup.gamma_s == pytest.approx(GAMMA_S_REF, rel=1e-12)
        assert coup.zeta2 == pytest.approx(RED_ZETA2, rel=1e-13)
        assert coup.gamma_s > 0.0 and math.isfinite(coup.kappa)

    def test_coupling_identities(self, rb87_params):
        coup = derive_couplings(rb87_params, duty=0.08)
        assert coup.mu_plus - coup.mu_minus == pytest.approx(coup.kappa, rel=1e-14)
        assert (coup.mu_plus + coup.mu_minus) / (coup.mu_plus - coup.mu_minus) == pytest.approx(
            coup.zeta2, rel=1e-12
        )
        assert coup.zeta2 == pytest.approx(-6.0 * coup.a2 / coup.a1, rel=1e-14)
        assert coup.gamma_s == pytest.approx(coup.zeta2 * coup.kappa**2 / 2.0, rel=1e-14)
        assert coup.gamma_total == pytest.approx(
            coup.gamma_s * 0.08 + rb87_params.gamma_ex, rel=1e-14
        )
        assert 0.0 <= coup.epsilon <= 1.0

    def test_unbalanced_channel_inequality(self, rb87_params):
        # mu_+^2 - mu_-^2 = kappa^2 zeta^2 and |mu_+| > |mu_-| whenever zeta^2 > 0
        for delta_ghz in (0.7, 1.0, 1.66, 3.0, 8.0):
            coup = derive_couplings(
                with_detuning(rb87_params, 2.0 * math.pi * delta_ghz * 1e9), duty=0.1
            )
            assert coup.mu_plus**2 - coup.mu_minus**2 == pytest.approx(
                coup.kappa**2 * coup.zeta2, rel=1e-12
            )
            assert abs(coup.mu_plus) > abs(coup.mu_minus)

    def test_blue_detuning_rejected(self, rb87_params):
        with pytest.raises(RegimeError):
            derive_couplings(with_detuning(rb87_params, -2.0 * math.pi * 2.50e9), duty=0.1)

    def test_balanced_point_splits_evenly(self):
        coup = couplings_from_rates(kappa=3.0, zeta2=1.0, duty=0.5)
        assert coup.mu_minus == pytest.approx(0.0, abs=0.0)
        assert coup.mu_plus == pytest.approx(coup.kappa, rel=0.0)

    def test_no_extra_decay_means_unit_epsilon(self):
        for duty in (0.05, 0.4, 1.0):
            coup = couplings_from_rates(kappa=2.0, zeta2=0.3, duty=duty, gamma_ex=0.0)
            assert coup.epsilon == pytest.approx(1.0, rel=0.0)

    def test_epsilon_monotone_in_duty(self):
        duties = np.linspace(0.02, 1.0, 50)
        eps = [
            couplings_from_rates(kappa=2.0, zeta2=0.3, duty=float(d), gamma_ex=1.0).epsilon
            for d in duties
        ]
        assert all(b >= a for a, b in zip(eps, eps[1:]))

    def test_synthetic_regime_guard(self):
        with pytest.raises(RegimeError):
            couplings_from_rates(kappa=1.0, zeta2=-0.2, duty=0.5)


class TestPhotonFlux:
    def test_reference_value(self):
        assert photon_flux_from_power(1.18e-3, 780e-9) == pytest.approx(
            FLUX_118MW_780NM, rel=1e-9
        )

    def test_linearity(self):
        one = photon_flux_from_power(1.0, 780e-9)
        assert photon_flux_from_power(2.5, 780e-9) == pytest.approx(2.5 * one, rel=1e-15)


class TestPhysicalParams:
    def test_rejects_nonpositive(self, rb87_params):
        with pytest.raises(ValueError):
            PhysicalParams(**{**rb87_params.__dict__, "atom_number": 0.0})
        with pytest.raises(ValueError):
            PhysicalParams(**{**rb87_params.__dict__, "gamma_ex": -1.0})
        with pytest.raises(ZeroDetuningError):
            PhysicalParams(**{**rb87_params.__dict__, "detuning": 0.0})


class TestLoadParams:
    def _write(self, tmp_path, text):
        path = tmp_path / "test.params"
        path.write_text(text)
        return path

    BASE = """
        gamma_natural_hz = 6.07e6
        wavelength_m = 780e-9
        detuning_hz = 1.66e9
        delta13_hz = 423.60e6
        delta23_hz = 266.65e6
        beam_area_m2 = 49e-6
        cell_length_m = 20e-3
        power_w = 1.18e-3
        atom_number = 1e11
        larmor_hz = 499.60e3
        t1_s = 18e-3
    """

    def test_roundtrip_with_power(self, tmp_path, rb87_params):
        loaded = load_params(self._write(tmp_path, self.BASE))
        assert loaded.gamma_natural == pytest.approx(2.0 * math.pi * 6.07e6, rel=1e-15)
        assert loaded.photon_flux == pytest.approx(rb87_params.photon_flux, rel=1e-12)
        assert loaded.gamma_ex == 0.0  # optional key defaults
        assert loaded.larmor == pytest.approx(rb87_params.larmor, rel=1e-15)

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown"):
            load_params(self._write(tmp_path, self.BASE + "\nbogus_key = 1\n"))

    def test_flux_and_power_conflict(self, tmp_path):
        with pytest.raises(ConfigError, match="exactly one"):
            load_params(self._write(tmp_path, self.BASE + "\nphoton_flux_per_s = 1e15\n"))

    def test_missing_key_rejected(self, tmp_path):
        text = "\n".join(
            line for line in self.BASE.splitlines() if "wavelength" not in line
        )
        with pytest.raises(ConfigError):
            load_params(self._write(tmp_path, text))

    def test_shipped_example_config_loads(self):
        import pathlib

        path = pathlib.Path(__file__).resolve().parents[1] / "configs" / "rb87_x1.params"
        params = load_params(path)
        coup = derive_couplings(params, duty=0.08)
        assert coup.zeta2 == pytest.approx(RED_ZETA2, rel=1e-12)
