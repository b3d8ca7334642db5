"""Physical constants of the atom-light system and derived coupling rates.

Everything is kept in SI units: angular frequencies and rates in rad/s and
1/s, lengths in m, areas in m^2, photon flux in photons/s.  Configuration
files quote frequencies in Hz as written on a datasheet; the loader applies
the ``2 pi``.  No natural-unit convention is used anywhere.

The detuning-dependent interaction coefficients ``a0, a1, a2`` describe the
scalar, vector and tensor parts of the far-off-resonance D2 coupling for
the F=2 ground manifold.  From them follow the asymmetry parameter
``zeta^2 = -6 a2 / a1`` (the ratio of two-mode-squeezing to beam-splitter
imbalance), the coupling strength ``kappa``, the channel weights
``mu_pm = kappa (zeta^2 +- 1) / 2``, and the light-induced decay
``gamma_s = zeta^2 kappa^2 / 2``.  The squeezing mechanism requires
``zeta^2 > 0``, i.e. red detuning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy.constants import c as _C_LIGHT
from scipy.constants import hbar as _HBAR

from .configio import ConfigError, read_kv_file

__all__ = [
    "PhysicalParams",
    "DerivedCouplings",
    "PoleError",
    "ZeroDetuningError",
    "RegimeError",
    "a_coefficients",
    "derive_couplings",
    "couplings_from_rates",
    "photon_flux_from_power",
    "load_params",
    "PARAM_FILE_KEYS",
]

_SQRT2 = math.sqrt(2.0)


class ZeroDetuningError(ValueError):
    """Probe detuning is zero; the coefficient formulas divide by it."""


class PoleError(ValueError):
    """Probe detuning sits on an excited-state splitting pole."""


class RegimeError(ValueError):
    """zeta^2 <= 0: balanced or blue-detuned coupling, no squeezing channel."""


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensioned constants of the atom-light system.

    Attributes
    ----------
    gamma_natural : float
        Excited-state decay rate (rad/s).
    wavelength : float
        Probe wavelength (m).
    detuning : float
        Signed probe detuning from the F=2 -> F'=3 line (rad/s);
        positive means red detuned.
    delta13, delta23 : float
        Excited-state hyperfine splittings F'=1..3 and F'=2..3 (rad/s).
    beam_area : float
        Probe cross section (m^2).
    cell_length : float
        Vapor-cell length along the propagation axis (m).
    photon_flux : float
        Mean probe photon flux (photons/s).
    atom_number : float
        Number of atoms participating in the collective mode.
    larmor : float
        Larmor angular frequency (rad/s).
    gamma_ex : float
        Extra transverse spin decay rate (1/s), >= 0.
    t1 : float
        Longitudinal relaxation time of the macroscopic spin (s).
    """

    gamma_natural: float
    wavelength: float
    detuning: float
    delta13: float
    delta23: float
    beam_area: float
    cell_length: float
    photon_flux: float
    atom_number: float
    larmor: float
    gamma_ex: float
    t1: float

    def __post_init__(self):
        positives = {
            "gamma_natural": self.gamma_natural,
            "wavelength": self.wavelength,
            "beam_area": self.beam_area,
            "cell_length": self.cell_length,
            "photon_flux": self.photon_flux,
            "atom_number": self.atom_number,
            "larmor": self.larmor,
            "t1": self.t1,
        }
        for name, value in positives.items():
            if not value > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if self.gamma_ex < 0.0:
            raise ValueError(f"gamma_ex must be >= 0, got {self.gamma_ex}")
        if self.detuning == 0.0:
            raise ZeroDetuningError("detuning must be nonzero")


@dataclass(frozen=True)
class DerivedCouplings:
    """Dimensionless/rate quantities computed from :class:`PhysicalParams`.

    ``kappa`` carries the sign produced by the formula (negative for
    ``a1 > 0`` with red detuning); every observable implemented downstream
    depends only on ``kappa**2``.  ``duty`` and ``gamma_ex`` are carried
    along so the stochastic integrator is self-contained.
    """

    a0: float
    a1: float
    a2: float
    zeta2: float
    kappa: float
    mu_plus: float
    mu_minus: float
    gamma_s: float
    gamma_total: float
    epsilon: float
    gamma_ex: float
    duty: float


def a_coefficients(detuning, delta13, delta23, pole_rtol=1e-9):
    """Interaction coefficients ``(a0, a1, a2)`` at the given detuning.

    All three arguments are angular frequencies in the same units (only
    ratios enter).  ``pole_rtol`` is the relative distance to ``delta13``
    or ``delta23`` below which the evaluation is refused.

    Raises
    ------
    ZeroDetuningError
        If ``detuning == 0``.
    PoleError
        If ``detuning`` is within ``pole_rtol`` (relative) of a splitting.
    """
    if detuning == 0.0:
        raise ZeroDetuningError("detuning must be nonzero")
    for name, pole in (("delta13", delta13), ("delta23", delta23)):
        if abs(detuning - pole) <= pole_rtol * abs(pole):
            raise PoleError(f"detuning {detuning} is on the {name} pole at {pole}")
    g13 = 1.0 / (1.0 - delta13 / detuning)
    g23 = 1.0 / (1.0 - delta23 / detuning)
    a0 = _SQRT2 / 20.0 * (g13 + 15.0 * g23 + 24.0)
    a1 = _SQRT2 / 100.0 * (-15.0 * g13 - 25.0 * g23 + 140.0)
    a2 = _SQRT2 / 40.0 * (g13 - 5.0 * g23 + 4.0)
    return a0, a1, a2


def derive_couplings(params: PhysicalParams, duty):
    """All derived coupling quantities for the given duty cycle.

    Raises
    ------
    RegimeError
        If ``zeta^2 <= 0`` (the unbalanced interaction the squeezing
        mechanism needs does not exist at this detuning).
    """
    if not 0.0 < duty <= 1.0:
        raise ValueError(f"duty must be in (0, 1], got {duty}")
    a0, a1, a2 = a_coefficients(params.detuning, params.delta13, params.delta23)
    if a1 == 0.0:
        raise RegimeError("a1 vanished; zeta^2 is undefined at this detuning")
    zeta2 = -6.0 * a2 / a1
    if zeta2 <= 0.0:
        raise RegimeError(
            f"zeta^2 = {zeta2:.6g} <= 0 at detuning {params.detuning:.6g} rad/s; "
            "the squeezing interaction requires zeta^2 > 0 (red detuning)"
        )
    kappa = (
        -params.gamma_natural
        * params.wavelength**2
        * a1
        * math.sqrt(params.photon_flux * params.atom_number)
        / (16.0 * math.pi * params.beam_area * params.detuning)
    )
    return _assemble(a0, a1, a2, zeta2, kappa, params.gamma_ex, duty)


def couplings_from_rates(kappa, zeta2, duty, gamma_ex=0.0):
    """Synthetic couplings from the rates alone, bypassing the detuning layer.

    Used to place the dynamics at an exact operating point (for instance
    ``zeta2 = 1`` or scaled units with ``gamma_total = 1``).  The stored
    ``a1, a2`` are placeholders chosen consistent with ``zeta2``.
    """
    if zeta2 <= 0.0:
        raise RegimeError(f"zeta^2 must be positive, got {zeta2}")
    if not 0.0 < duty <= 1.0:
        raise ValueError(f"duty must be in (0, 1], got {duty}")
    if gamma_ex < 0.0:
        raise ValueError(f"gamma_ex must be >= 0, got {gamma_ex}")
    return _assemble(0.0, 1.0, -zeta2 / 6.0, zeta2, kappa, gamma_ex, duty)


def _assemble(a0, a1, a2, zeta2, kappa, gamma_ex, duty):
    mu_plus = kappa * (zeta2 + 1.0) / 2.0
    mu_minus = kappa * (zeta2 - 1.0) / 2.0
    gamma_s = zeta2 * kappa**2 / 2.0
    gamma_total = gamma_s * duty + gamma_ex
    epsilon = gamma_s * duty / gamma_total if gamma_total > 0.0 else 0.0
    return DerivedCouplings(
        a0=a0,
        a1=a1,
        a2=a2,
        zeta2=zeta2,
        kappa=kappa,
        mu_plus=mu_plus,
        mu_minus=mu_minus,
        gamma_s=gamma_s,
        gamma_total=gamma_total,
        epsilon=epsilon,
        gamma_ex=gamma_ex,
        duty=duty,
    )


def photon_flux_from_power(power, wavelength):
    """Photon flux (photons/s) of a beam of given mean power and wavelength.

    ``Phi = P / (hbar omega_photon) = P lambda / (2 pi hbar c)``.
    """
    if power < 0.0:
        raise ValueError(f"power must be >= 0, got {power}")
    if wavelength <= 0.0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    return power * wavelength / (2.0 * math.pi * _HBAR * _C_LIGHT)


# parameter-file schema: key -> (attribute, scale applied after float())
# frequencies are written in Hz and converted to rad/s here
PARAM_FILE_KEYS = {
    "gamma_natural_hz": ("gamma_natural", 2.0 * math.pi),
    "wavelength_m": ("wavelength", 1.0),
    "detuning_hz": ("detuning", 2.0 * math.pi),
    "delta13_hz": ("delta13", 2.0 * math.pi),
    "delta23_hz": ("delta23", 2.0 * math.pi),
    "beam_area_m2": ("beam_area", 1.0),
    "cell_length_m": ("cell_length", 1.0),
    "photon_flux_per_s": ("photon_flux", 1.0),
    "power_w": (None, 1.0),  # converted to photon_flux via the wavelength
    "atom_number": ("atom_number", 1.0),
    "larmor_hz": ("larmor", 2.0 * math.pi),
    "gamma_ex_per_s": ("gamma_ex", 1.0),
    "t1_s": ("t1", 1.0),
}

_OPTIONAL_KEYS = {"gamma_ex_per_s"}  # defaults to 0


def load_params(path) -> PhysicalParams:
    """Load :class:`PhysicalParams` from a ``key = value`` file.

    Recognized keys are listed in :data:`PARAM_FILE_KEYS` (units in the
    key names; frequencies in Hz).  Exactly one of ``photon_flux_per_s``
    and ``power_w`` must be present.  Unknown keys are an error.
    """
    raw = read_kv_file(path)
    unknown = sorted(set(raw) - set(PARAM_FILE_KEYS))
    if unknown:
        raise ConfigError(f"{path}: unknown parameter keys: {', '.join(unknown)}")

    values = {}
    for key, text in raw.items():
        attr, scale = PARAM_FILE_KEYS[key]
        try:
            values[key if attr is None else attr] = float(text) * scale
        except ValueError as exc:
            raise ConfigError(f"{path}: key {key}: {exc}") from None

    has_flux = "photon_flux" in values
    has_power = "power_w" in values
    if has_flux == has_power:
        raise ConfigError(
            f"{path}: give exactly one of photon_flux_per_s and power_w"
        )
    if has_power:
        if "wavelength" not in values:
            raise ConfigError(f"{path}: power_w requires wavelength_m")
        values["photon_flux"] = photon_flux_from_power(
            values.pop("power_w"), values["wavelength"]
        )
    values.setdefault("gamma_ex", 0.0)

    required = {attr for attr, _ in PARAM_FILE_KEYS.values() if attr is not None}
    missing = sorted(required - set(values))
    if missing:
        raise ConfigError(f"{path}: missing parameter keys for: {', '.join(missing)}")
    try:
        return PhysicalParams(**values)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def with_detuning(params: PhysicalParams, detuning) -> PhysicalParams:
    """Copy of ``params`` at a different detuning (rad/s)."""
    return replace(params, detuning=detuning)
