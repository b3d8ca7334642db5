"""Shared helpers: scaled-unit operating points for the dynamics checks.

The closed forms depend only on (gamma*T, duty, zeta^2, epsilon) and the
ratio Omega/gamma, so the numerical checks run in units where
gamma_total = 1.
"""

import math

import pytest

from strobosqueeze import dynamics, params, strobe


def scaled_setup(
    duty,
    zeta2,
    gamma_t,
    omega_over_gamma=100.0,
    epsilon=1.0,
    samples_per_window=20,
):
    """(couplings, strobo, grid) with gamma_total = 1 and T ~ gamma_t.

    The window train is center-aligned (the convention under which the
    closed forms hold) and the duration snaps to whole stroboscopic
    periods, so time averages of phi^2 equal the duty cycle exactly.
    """
    gamma_s = epsilon / duty
    gamma_ex = 1.0 - epsilon
    kappa = math.sqrt(2.0 * gamma_s / zeta2)
    coup = params.couplings_from_rates(kappa, zeta2, duty, gamma_ex)
    strob = strobe.StroboConfig.centered(duty, 2.0 * omega_over_gamma)
    grid = dynamics.make_grid(strob, gamma_t, samples_per_window=samples_per_window)
    return coup, strob, grid


@pytest.fixture
def rb87_params():
    from strobosqueeze.params import PhysicalParams, photon_flux_from_power

    return PhysicalParams(
        gamma_natural=2.0 * math.pi * 6.07e6,
        wavelength=780e-9,
        detuning=2.0 * math.pi * 1.66e9,
        delta13=2.0 * math.pi * 423.60e6,
        delta23=2.0 * math.pi * 266.65e6,
        beam_area=49e-6,
        cell_length=20e-3,
        photon_flux=photon_flux_from_power(1.18e-3, 780e-9),
        atom_number=1e11,
        larmor=2.0 * math.pi * 499.60e3,
        gamma_ex=0.0,
        t1=18e-3,
    )
