"""Concurrent spin and light squeezing under stroboscopic atom-light coupling.

A numpy/scipy toolkit with three layers that check each other:

* :mod:`strobosqueeze.analytic` - closed-form spin variance, sideband
  squeezing ratios, and light-squeezing spectra;
* :mod:`strobosqueeze.dynamics` - stochastic trajectories and exact
  moment propagation of the underlying input-output equations;
* :mod:`strobosqueeze.spectral` - periodogram estimation and the
  shot-noise normalization chain used on measured spectra.

:mod:`strobosqueeze.params` holds the physical constants and derived
coupling rates, :mod:`strobosqueeze.strobe` the pulse-train geometry,
:mod:`strobosqueeze.fitlab` the damped least-squares fitter, and
:mod:`strobosqueeze.cli` the ``strobosqueeze`` command.
"""

from .analytic import (
    LightSpectrumInputs,
    SpinSqueezingInputs,
    TruncationWarning,
    UnknownModelError,
    fit_models,
    light_spectrum,
    sideband_squeezing,
    spin_squeezing_db,
    spin_variance,
)
from .configio import ConfigError
from .dynamics import (
    GaussianSpinState,
    GridError,
    MomentSeries,
    TimeGrid,
    TrajectoryRecord,
    derive_seeds,
    ensemble_variance,
    load_ensemble,
    make_grid,
    propagate_moments,
    save_ensemble,
    simulate_trajectory,
)
from .fitlab import FitProblem, FitResult, SingularJacobianError, fit
from .params import (
    DerivedCouplings,
    PhysicalParams,
    PoleError,
    RegimeError,
    ZeroDetuningError,
    a_coefficients,
    couplings_from_rates,
    derive_couplings,
    load_params,
    photon_flux_from_power,
)
from .spectral import (
    FitError,
    GridMismatchError,
    SpectrumResult,
    estimate_spectrum,
    frequency_grid,
    shot_noise_reference,
    simulate_spectrum,
    squeezing_ratio,
)
from .strobe import StroboConfig, alpha_beta, fourier_coeff, profile, sinc

__version__ = "0.1.0"
