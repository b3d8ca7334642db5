"""Rectangular stroboscopic coupling profile and its Fourier-domain quantities.

The probe is chopped into a periodic train of rectangular windows at the
stroboscopic frequency ``omega_m`` (twice the Larmor frequency) with duty
cycle ``d``.  The train is represented two ways:

* in the time domain by :func:`profile`, a 0/1 square wave, and
* in the frequency domain by the coefficients ``A_n = d sinc(pi n d)``
  of the complex Fourier series of the window train *centered* at phase 0.

The closed-form squeezing expressions in :mod:`strobosqueeze.analytic` are
derived from the centered expansion (real coefficients), so quantitative
comparisons against time-domain integrations must place the window centers
at the extrema of ``cos(Omega t)``; :meth:`StroboConfig.centered` builds
that alignment.  The default ``phase = 0`` starts the window at ``t = 0``
each period, which is how the pulse train is usually written down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StroboConfig",
    "sinc",
    "profile",
    "profile_fourier",
    "fourier_coeff",
    "alpha_beta",
]

# below this |x| the direct ratio sin(x)/x loses relative accuracy to 0/0
# cancellation; the truncated Taylor series is exact to double precision
_SINC_SERIES_CUTOFF = 1e-4


def sinc(x):
    """Unnormalized sinc, ``sin(x)/x`` with ``sinc(0) = 1``.

    Uses the series ``1 - x^2/6 + x^4/120`` for ``|x| < 1e-4``.  Accepts
    scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SERIES_CUTOFF
    x2 = x * x
    series = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    safe = np.where(small, 1.0, x)
    out = np.where(small, series, np.sin(safe) / safe)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StroboConfig:
    """Stroboscopic drive settings.

    Parameters
    ----------
    duty : float
        Fraction ``d`` of each period the probe is on, ``0 < d <= 1``.
    omega_m : float
        Stroboscopic angular frequency in rad/s, equal to twice the Larmor
        frequency.
    phase : float
        Angle (rad) within the period at which each window *starts*.
        ``phase = 0`` starts the window at ``t = 0``.
    n_max : int
        Harmonic cutoff for analytic partial sums.  ``0`` selects the
        default ``ceil(10 / duty)``.
    """

    duty: float
    omega_m: float
    phase: float = 0.0
    n_max: int = 0

    def __post_init__(self):
        if not 0.0 < self.duty <= 1.0:
            raise ValueError(f"duty must be in (0, 1], got {self.duty}")
        if self.omega_m <= 0.0:
            raise ValueError(f"omega_m must be positive, got {self.omega_m}")
        if self.n_max == 0:
            object.__setattr__(self, "n_max", int(math.ceil(10.0 / self.duty)))
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")

    @classmethod
    def centered(cls, duty, omega_m, n_max=0):
        """Config whose windows are centered at ``t = 0`` mod one period.

        This is the alignment assumed by the real-coefficient Fourier
        expansion (and therefore by every closed-form squeezing result):
        window centers coincide with the extrema of ``cos(Omega t)``.
        """
        return cls(duty=duty, omega_m=omega_m, phase=-math.pi * duty, n_max=n_max)

    @property
    def period(self):
        """Stroboscopic period ``2 pi / omega_m`` in seconds."""
        return 2.0 * math.pi / self.omega_m

    @property
    def larmor(self):
        """Larmor angular frequency ``omega_m / 2``."""
        return 0.5 * self.omega_m

    @property
    def window(self):
        """Pulse window length ``duty * period`` in seconds."""
        return self.duty * self.period

    @property
    def center_phase(self):
        """Angle of the window center within the period."""
        return self.phase + math.pi * self.duty


def profile(t, cfg: StroboConfig):
    """Square-wave coupling profile, 1 inside the pulse window else 0.

    The window occupies ``[phase, phase + 2 pi duty)`` of each period in
    phase angle; it is half-open so exactly one sample per period sits on
    each edge.  Periodic with period ``2 pi / omega_m``; ``duty = 1``
    returns 1 everywhere.
    """
    t = np.asarray(t, dtype=float)
    u = ((cfg.omega_m * t - cfg.phase) / (2.0 * math.pi)) % 1.0
    out = np.where(u < cfg.duty, 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def fourier_coeff(n, d):
    """Fourier coefficient ``A_n = d sinc(pi n d)`` of the centered train.

    ``A_0 = d`` and ``A_n = A_{-n}``; at ``d = 1`` every ``n != 0``
    coefficient vanishes (continuous drive has no sidebands).
    """
    if not 0.0 < d <= 1.0:
        raise ValueError(f"duty must be in (0, 1], got {d}")
    n = np.asarray(n, dtype=float)
    out = d * sinc(math.pi * n * d)
    return float(out) if np.ndim(out) == 0 else out


def alpha_beta(n, d):
    """Sideband weights entering the light-squeezing spectrum.

    ``alpha(n) = sinc^2(pi n d) + sinc^2(pi (n+1) d)`` and
    ``beta(n) = sinc(pi d) sinc(pi n d) sinc(pi (n+1) d)``.
    """
    if not 0.0 < d <= 1.0:
        raise ValueError(f"duty must be in (0, 1], got {d}")
    n = np.asarray(n, dtype=float)
    sn = sinc(math.pi * n * d)
    sn1 = sinc(math.pi * (n + 1) * d)
    alpha = sn * sn + sn1 * sn1
    beta = sinc(math.pi * d) * sn * sn1
    if np.ndim(alpha) == 0:
        return float(alpha), float(beta)
    return alpha, beta


def profile_fourier(t, cfg: StroboConfig, n_max=None):
    """Partial Fourier reconstruction of :func:`profile` through ``n_max``.

    Evaluates ``A_0 + 2 sum_{n=1}^{N} A_n cos(n (omega_m t - c))`` where
    ``c`` is the window-center phase, so the reconstruction tracks the
    configured window position whatever the start phase.
    """
    if n_max is None:
        n_max = cfg.n_max
    t = np.asarray(t, dtype=float)
    theta = cfg.omega_m * t - cfg.center_phase
    n = np.arange(1, n_max + 1)
    coeffs = fourier_coeff(n, cfg.duty)
    out = cfg.duty + 2.0 * np.einsum("n,n...->...", coeffs, np.cos(np.multiply.outer(n, theta)))
    return float(out) if out.ndim == 0 else out
