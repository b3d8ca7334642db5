"""Closed-form spin and light squeezing expressions.

These are the analytic results for the stroboscopically driven atom-light
system in the rotating frame, valid for ``omega_m >> gamma``:

* the transverse spin variance after probing for a time ``T``, including
  the measurement direction dependence and the Wineland correction
  ``exp(2 T / T1)``;
* the output-light noise spectrum, a comb of Lorentzian dips of width
  ``gamma`` centered at the odd Larmor sidebands ``(2n+1) Omega``;
* the per-sideband squeezing ratio at the dip centers;
* the model families used to fit measured curves (exponential-in-time,
  sinc-in-duty, cosine-in-angle, sideband weights, transient-in-time, and
  a Lorentzian for the shot-noise calibration).

All ratios are normalized so that a coherent spin state has quadrature
variance 1/2 and vacuum light has spectral density 1/2 (shot noise).
Squeezing in dB is quoted as ``-10 log10(xi^2)``, positive when squeezed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .strobe import alpha_beta, sinc

__all__ = [
    "SpinSqueezingInputs",
    "LightSpectrumInputs",
    "TruncationWarning",
    "UnknownModelError",
    "spin_variance",
    "spin_squeezing_db",
    "light_spectrum",
    "sideband_squeezing",
    "direction_weight",
    "transient_factors",
    "fit_models",
    "FIT_MODEL_IDS",
]

SHOT_NOISE = 0.5  # vacuum spectral density in the normalized convention

# below Omega/gamma = 10 the sideband Lorentzians overlap and the
# closed forms degrade; warn but do not refuse
_LARMOR_RATIO_WARN = 10.0


class TruncationWarning(UserWarning):
    """The harmonic cutoff n_max contributes non-negligibly to the sum."""


class UnknownModelError(ValueError):
    """Unrecognized fit-model identifier."""


def _check_common(gamma_total, epsilon, duty, zeta2, time):
    if gamma_total <= 0.0:
        raise ValueError(f"gamma_total must be positive, got {gamma_total}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if not 0.0 < duty <= 1.0:
        raise ValueError(f"duty must be in (0, 1], got {duty}")
    if zeta2 <= 0.0:
        raise ValueError(f"zeta2 must be positive, got {zeta2}")
    if time < 0.0:
        raise ValueError(f"time must be >= 0, got {time}")


@dataclass(frozen=True)
class SpinSqueezingInputs:
    """Inputs for the spin-variance formula.

    ``quad_angle`` is the measurement-direction angle: the measured
    quadrature is ``p cos(angle/2) + x sin(angle/2)``, so angle 0 is the
    squeezed direction and angle pi the anti-squeezed one.  ``t1`` enables
    the Wineland correction in :func:`spin_squeezing_db`; ``None`` leaves
    it off.
    """

    gamma_total: float
    epsilon: float
    duty: float
    zeta2: float
    time: float
    t1: float | None = None
    quad_angle: float = 0.0

    def __post_init__(self):
        _check_common(self.gamma_total, self.epsilon, self.duty, self.zeta2, self.time)
        if self.t1 is not None and self.t1 <= 0.0:
            raise ValueError(f"t1 must be positive, got {self.t1}")


@dataclass(frozen=True)
class LightSpectrumInputs:
    """Inputs for the light-squeezing spectrum.

    ``n_max = 0`` selects the default cutoff ``ceil(10/duty)``; the
    sideband weights fall off like ``1/(pi n d)^2`` so the truncated tail
    is bounded.  ``t1`` applies the phenomenological ``exp(2 T / T1)``
    correction to the squeezing ratio.
    """

    gamma_total: float
    epsilon: float
    zeta2: float
    duty: float
    time: float
    larmor: float
    n_max: int = 0
    t1: float | None = None

    def __post_init__(self):
        _check_common(self.gamma_total, self.epsilon, self.duty, self.zeta2, self.time)
        if self.larmor <= 0.0:
            raise ValueError(f"larmor must be positive, got {self.larmor}")
        if self.n_max == 0:
            object.__setattr__(self, "n_max", int(math.ceil(10.0 / self.duty)))
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.t1 is not None and self.t1 <= 0.0:
            raise ValueError(f"t1 must be positive, got {self.t1}")
        if self.larmor / self.gamma_total <= _LARMOR_RATIO_WARN:
            warnings.warn(
                f"larmor/gamma_total = {self.larmor / self.gamma_total:.3g} <= "
                f"{_LARMOR_RATIO_WARN:g}; the sideband formulas assume "
                "omega_m >> gamma",
                UserWarning,
                stacklevel=3,
            )


def direction_weight(duty, zeta2, quad_angle=0.0):
    """Steady-state noise weight of the quadrature at ``quad_angle``.

    ``D(theta) = [1 - cos(theta) sinc(pi d)] / (2 zeta^2)
    + [1 + cos(theta) sinc(pi d)] zeta^2 / 2``; at ``zeta^2 = 1`` it is 1
    for every angle and duty (the balanced interaction moves no noise).
    """
    s = math.cos(quad_angle) * sinc(math.pi * duty)
    return 0.5 * (1.0 - s) / zeta2 + 0.5 * (1.0 + s) * zeta2


def spin_variance(inputs: SpinSqueezingInputs):
    """Variance of the measured spin quadrature at time ``T``.

    ``Var = [exp(-2 g T) + eps (1 - exp(-2 g T)) D(theta) + F] / 2`` with
    ``F = (1 - eps)(1 - exp(-2 g T))`` the decoherence floor.  Starts at
    the coherent-state value 1/2 and relaxes toward ``D(theta)/2`` (for
    ``eps = 1``) at rate ``2 gamma``.
    """
    decay = math.exp(-2.0 * inputs.gamma_total * inputs.time)
    d_theta = direction_weight(inputs.duty, inputs.zeta2, inputs.quad_angle)
    floor = (1.0 - inputs.epsilon) * (1.0 - decay)
    return 0.5 * (decay + inputs.epsilon * (1.0 - decay) * d_theta + floor)


def spin_squeezing_db(inputs: SpinSqueezingInputs):
    """Spin squeezing in dB, ``-10 log10(xi^2)`` with ``xi^2 = 2 Var``.

    When ``t1`` is set the Wineland factor ``exp(2 T / T1)`` multiplies
    ``xi^2`` first, accounting for the shrinking mean spin.
    """
    xi2 = 2.0 * spin_variance(inputs)
    if inputs.t1 is not None:
        xi2 *= math.exp(2.0 * inputs.time / inputs.t1)
    return -10.0 * math.log10(xi2)


def transient_factors(gamma_t):
    """Finite-time weights ``f1 = (1-e^-x)^2 / x`` and ``f2 = 2 - 2(1-e^-x)/x``.

    Both vanish at ``x = 0`` and approach 0 and 2 as ``x -> inf``.  Small
    ``|x|`` is evaluated by series to avoid 0/0; negative arguments are
    allowed so fit trial steps cannot crash the evaluation.
    """
    x = gamma_t
    if abs(x) < 1e-8:
        return x * (1.0 - x), x * (1.0 - x / 3.0)
    em = -math.expm1(-x)  # 1 - exp(-x)
    return em * em / x, 2.0 - 2.0 * em / x


def _sideband_depth(n, inputs: LightSpectrumInputs):
    """Lorentzian depth ``D_L(n)`` of the sideband centered at ``(2n+1) Omega``.

    Correlation (squeezing) term minus back-action and thermal-floor
    (anti-squeezing) terms; ``n`` may be an array.
    """
    f1, f2 = transient_factors(inputs.gamma_total * inputs.time)
    alpha, beta = alpha_beta(n, inputs.duty)
    eps = inputs.epsilon
    z2 = inputs.zeta2
    corr = eps * f2 * alpha
    qba = eps * z2 * f1 * alpha + eps**2 * (f2 - f1) * (
        0.5 * (1.0 + z2 * z2) * alpha + (1.0 - z2 * z2) * beta
    )
    floor = eps * (1.0 - eps) * z2 * (f2 - f1) * alpha
    return corr - qba - floor


def light_spectrum(omega, inputs: LightSpectrumInputs):
    """Output-light spectrum and squeezing ratio at angular frequency ``omega``.

    Returns ``(s_lss, xi_l2)``.  The spectrum is a comb of Lorentzians of
    half-width ``gamma`` at the odd sidebands ``(2n+1) Omega`` summed over
    ``|n| <= n_max``; ``xi_l2 = s_lss / (1/2)``, times ``exp(2 T / T1)``
    when ``t1`` is given.  ``omega`` may be a scalar or an array; the
    evaluation is elementwise, so a frequency grid can be partitioned
    across workers with bitwise-identical results.

    Warns
    -----
    TruncationWarning
        If the ``|n| = n_max`` terms contribute more than 1e-6 of the
        result at any requested frequency.
    """
    omega = np.asarray(omega, dtype=float)
    gam = inputs.gamma_total
    om0 = inputs.larmor
    ns = np.arange(-inputs.n_max, inputs.n_max + 1)
    depths = _sideband_depth(ns, inputs)
    centers = (2.0 * ns + 1.0) * om0
    # (..., n) Lorentzian weights; summation over the sideband axis
    detune = omega[..., None] - centers
    lorentz = gam * gam / (gam * gam + detune * detune)
    terms = lorentz * depths
    total = terms.sum(axis=-1)
    edge = np.abs(terms[..., 0]) + np.abs(terms[..., -1])
    s_lss = 0.5 * (1.0 - total)
    rel = edge / np.maximum(np.abs(s_lss) / 0.5, 1e-300)
    if np.any(rel > 1e-6):
        warnings.warn(
            f"|n| = {inputs.n_max} sideband terms contribute up to "
            f"{float(np.max(rel)):.2e} of the spectrum; raise n_max",
            TruncationWarning,
            stacklevel=2,
        )
    xi_l2 = s_lss / SHOT_NOISE
    if inputs.t1 is not None:
        xi_l2 = xi_l2 * math.exp(2.0 * inputs.time / inputs.t1)
    if omega.ndim == 0:
        return float(s_lss), float(xi_l2)
    return s_lss, xi_l2


def sideband_squeezing(n, inputs: LightSpectrumInputs):
    """Squeezing ratio ``xi_L^2`` at the center of sideband ``n >= 0``.

    Evaluates the single resonant Lorentzian at ``omega = (2n+1) Omega``
    (weight one), neglecting the tails of the other sidebands, which are
    suppressed by ``(gamma/Omega)^2``.
    """
    if np.any(np.asarray(n) < 0):
        raise ValueError("sideband index must be >= 0")
    out = 1.0 - _sideband_depth(np.asarray(n), inputs)
    if inputs.t1 is not None:
        out = out * math.exp(2.0 * inputs.time / inputs.t1)
    return float(out) if np.ndim(out) == 0 else out


FIT_MODEL_IDS = (
    "time_exp",
    "duty_sinc",
    "angle_cos",
    "sideband_ab",
    "time_f1f2",
    "lorentzian",
)


def fit_models(model_id, parameters, abscissa, sideband=0):
    """Evaluate one of the named fitting-model families.

    ========== ============================ =========================
    model_id   parameters                   model
    ========== ============================ =========================
    time_exp   (b1, b2, gamma)              b1 + b2 exp(-2 gamma T)
    duty_sinc  (c1, c2)                     c1 + c2 sinc(pi d)
    angle_cos  (d1, d2)                     d1 + d2 cos(alpha)
    sideband_ab(e1, e2)                     1 - e1 alpha(n,d) - e2 beta(n,d)
    time_f1f2  (g1, g2, gamma)              1 - g1 f1(T) - g2 f2(T)
    lorentzian (A, gamma_w, omega0, C)      A gw^2/(gw^2+(w-w0)^2) + C
    ========== ============================ =========================

    ``abscissa`` is T, d, alpha, d, T, omega respectively; ``sideband``
    fixes ``n`` for the sideband_ab family.  Raises
    :class:`UnknownModelError` for anything else.
    """
    x = np.asarray(abscissa, dtype=float)
    p = [float(v) for v in parameters]

    def need(count):
        if len(p) != count:
            raise ValueError(f"model {model_id} takes {count} parameters, got {len(p)}")

    if model_id == "time_exp":
        need(3)
        out = p[0] + p[1] * np.exp(-2.0 * p[2] * x)
    elif model_id == "duty_sinc":
        need(2)
        out = p[0] + p[1] * sinc(math.pi * x)
    elif model_id == "angle_cos":
        need(2)
        out = p[0] + p[1] * np.cos(x)
    elif model_id == "sideband_ab":
        need(2)
        alpha = np.empty_like(x)
        beta = np.empty_like(x)
        for i, d in np.ndenumerate(x):
            alpha[i], beta[i] = alpha_beta(sideband, d)
        out = 1.0 - p[0] * alpha - p[1] * beta
    elif model_id == "time_f1f2":
        need(3)
        f1 = np.empty_like(x)
        f2 = np.empty_like(x)
        for i, t in np.ndenumerate(x):
            f1[i], f2[i] = transient_factors(p[2] * t)
        out = 1.0 - p[0] * f1 - p[1] * f2
    elif model_id == "lorentzian":
        need(4)
        amp, gw, om0, const = p
        out = amp * gw * gw / (gw * gw + (x - om0) ** 2) + const
    else:
        raise UnknownModelError(f"unknown model id {model_id!r}; known: {FIT_MODEL_IDS}")
    return float(out) if np.ndim(out) == 0 else out
