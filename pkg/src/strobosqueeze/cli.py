"""Command-line interface: parameter sweeps, validation, figure data.

Subcommands
-----------
coeffs
    Detuning sweep of the interaction coefficients and the asymmetry
    parameter: ``delta_hz, a0, a1, a2, ratio_a2_a1, zeta2``.
spin
    Spin-squeezing sweep over time, duty, or angle, with the analytic,
    moment-propagation, or Monte-Carlo engine:
    ``axis_value, xi_a2, xi_aw2_db[, stderr]``.
spectrum
    Either the per-sideband squeezing ratios versus duty or sideband
    index, or a frequency-resolved spectrum (analytic or the full
    Monte-Carlo pipeline with shot-noise normalization).
validate
    Run the invariant suite and exit nonzero on any failure.
fit
    Damped least-squares fit of a named model family to a CSV file.

Configuration is a line-oriented ``key = value`` file given with
``--config``; any key can be overridden on the command line with
``--set key=value`` (flags win over the file).  The environment variable
``STROBO_SEED`` overrides the seed from either source.  Exit codes:
0 success, 1 validation failure, 2 configuration error.

Sweeps note: duty-cycle sweeps hold the total decay rate and epsilon
fixed while the window geometry varies (probe power rescaled with duty),
which is the normalization under which the squeezing-versus-duty curves
reduce to the sinc and sideband-weight model families.  The angle axis is
quoted in units of pi radians.  Monte-Carlo sweep point ``i`` uses the
base seed ``SeedSequence((seed, i)).generate_state(1)`` so results do not
depend on point order or worker count.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import analytic, dynamics, spectral, strobe
from .configio import ConfigError, parse_kv_pairs, read_kv_file
from .params import (
    PhysicalParams,
    PoleError,
    a_coefficients,
    couplings_from_rates,
    derive_couplings,
    load_params,
    with_detuning,
)

__all__ = ["main", "RunConfig"]

_ENGINES = ("analytic", "moments", "montecarlo")
_AXES = ("time", "duty", "angle", "detuning", "sideband_index")
_SPECTRUM_MODES = ("sidebands", "frequency")


def _as_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


@dataclass
class RunConfig:
    """Everything a subcommand needs, from config file plus overrides."""

    params_file: str = ""
    duty: float = 0.08
    strobe_freq_hz: float = 0.0  # 0 -> twice the Larmor frequency from params
    phase_mode: str = "centered"  # centered | start
    n_max: int = 0
    time_s: float = 1e-3
    sweep: str = "time"
    sweep_start: float = 0.0
    sweep_stop: float = 0.0
    sweep_points: int = 2
    engine: str = "analytic"
    output: str = "-"
    seed: int = 12345
    n_traj: int = 400
    workers: int = 1
    samples_per_window: int = 20
    wineland: bool = True
    spectrum_mode: str = "sidebands"
    freq_halfwidth_gammas: float = 20.0
    bins_per_gamma: float = 10.0
    exclusion_halfwidth_gammas: float = 3.0
    initial_noise_scale: float = 1.0

    def validate(self):
        if self.engine not in _ENGINES:
            raise ConfigError(f"engine must be one of {_ENGINES}, got {self.engine!r}")
        if self.sweep not in _AXES:
            raise ConfigError(f"sweep must be one of {_AXES}, got {self.sweep!r}")
        if self.spectrum_mode not in _SPECTRUM_MODES:
            raise ConfigError(
                f"spectrum_mode must be one of {_SPECTRUM_MODES}, got {self.spectrum_mode!r}"
            )
        if self.phase_mode not in ("centered", "start"):
            raise ConfigError(f"phase_mode must be centered or start, got {self.phase_mode!r}")
        if not 0.0 < self.duty <= 1.0:
            raise ConfigError(f"duty must be in (0, 1], got {self.duty}")
        if self.workers < 1 or self.n_traj < 1:
            raise ConfigError("workers and n_traj must be >= 1")

    def validate_sweep(self):
        if self.sweep_points < 2:
            raise ConfigError(f"sweep_points must be >= 2, got {self.sweep_points}")
        if self.sweep_stop == self.sweep_start:
            raise ConfigError("sweep range is degenerate (start == stop)")


_CONVERTERS = {
    str: str,
    float: float,
    int: lambda text: int(str(text), 0),
    bool: _as_bool,
}


def load_run_config(config_path=None, overrides=()):
    """Config file plus ``key=value`` overrides -> :class:`RunConfig`."""
    raw = {}
    if config_path:
        raw.update(read_kv_file(config_path))
    raw.update(parse_kv_pairs(overrides, source="--set"))
    defaults = RunConfig()
    types = {f.name: type(getattr(defaults, f.name)) for f in fields(RunConfig)}
    unknown = sorted(set(raw) - set(types))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    for key, text in raw.items():
        try:
            kwargs[key] = _CONVERTERS[types[key]](text)
        except ValueError as exc:
            raise ConfigError(f"config key {key}: {exc}") from None
    cfg = RunConfig(**kwargs)
    env_seed = os.environ.get("STROBO_SEED")
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed, 0)
        except ValueError:
            raise ConfigError(f"STROBO_SEED must be an integer, got {env_seed!r}") from None
    cfg.validate()
    return cfg


def _sweep_values(cfg: RunConfig):
    cfg.validate_sweep()
    return np.linspace(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points)


def _point_seed(seed, index):
    return int(np.random.SeedSequence((int(seed), int(index))).generate_state(1, np.uint64)[0])


def _strobo_for(cfg: RunConfig, params: PhysicalParams | None, duty=None):
    duty = cfg.duty if duty is None else duty
    if cfg.strobe_freq_hz > 0.0:
        omega_m = 2.0 * math.pi * cfg.strobe_freq_hz
    elif params is not None:
        omega_m = 2.0 * params.larmor
    else:
        raise ConfigError("strobe_freq_hz is required when no params_file is given")
    if cfg.phase_mode == "centered":
        return strobe.StroboConfig.centered(duty, omega_m, n_max=cfg.n_max)
    return strobe.StroboConfig(duty=duty, omega_m=omega_m, n_max=cfg.n_max)


def _require_params(cfg: RunConfig) -> PhysicalParams:
    if not cfg.params_file:
        raise ConfigError("this command needs params_file in the config")
    return load_params(cfg.params_file)


def _write_rows(path, header, rows):
    """CSV with a one-line header and 17-significant-digit floats."""

    def fmt(value):
        if isinstance(value, str):
            return value
        return format(float(value), ".17g")

    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# coeffs
# ---------------------------------------------------------------------------


def cmd_coeffs(cfg: RunConfig):
    params = _require_params(cfg)
    if cfg.sweep == "detuning":
        deltas_hz = _sweep_values(cfg)
    else:
        deltas_hz = np.array([params.detuning / (2.0 * math.pi)])
    rows = []
    for delta_hz in deltas_hz:
        try:
            a0, a1, a2 = a_coefficients(
                2.0 * math.pi * delta_hz, params.delta13, params.delta23
            )
        except (PoleError, ValueError) as exc:
            print(f"skipping detuning {delta_hz:g} Hz: {exc}", file=sys.stderr)
            continue
        ratio = a2 / a1 if a1 != 0.0 else float("nan")
        rows.append((delta_hz, a0, a1, a2, ratio, -6.0 * ratio))
    _write_rows(cfg.output, ["delta_hz", "a0", "a1", "a2", "ratio_a2_a1", "zeta2"], rows)
    return 0


# ---------------------------------------------------------------------------
# spin
# ---------------------------------------------------------------------------


def _spin_point_analytic(gamma, eps, zeta2, duty, time, angle, t1):
    inputs = analytic.SpinSqueezingInputs(
        gamma_total=gamma,
        epsilon=eps,
        duty=duty,
        zeta2=zeta2,
        time=time,
        t1=t1,
        quad_angle=angle,
    )
    xi2 = 2.0 * analytic.spin_variance(inputs)
    return xi2, analytic.spin_squeezing_db(inputs)


def _axis_setup(cfg, params, value):
    """Per-point (duty, time, angle, couplings) for the spin/sideband sweeps."""
    ref = derive_couplings(params, cfg.duty)
    if cfg.sweep == "time":
        return cfg.duty, float(value), 0.0, ref
    if cfg.sweep == "angle":
        return cfg.duty, cfg.time_s, float(value) * math.pi, ref
    if cfg.sweep == "duty":
        d = float(value)
        # hold gamma_total and epsilon at their reference values: the probe
        # power is rescaled with the duty cycle (gamma_s ~ 1/d)
        gamma_s = ref.epsilon * ref.gamma_total / d
        kappa = math.sqrt(2.0 * gamma_s / ref.zeta2)
        return d, cfg.time_s, 0.0, couplings_from_rates(kappa, ref.zeta2, d, ref.gamma_ex)
    raise ConfigError(f"spin sweep axis must be time, duty, or angle, got {cfg.sweep!r}")


def cmd_spin(cfg: RunConfig):
    params = _require_params(cfg)
    values = _sweep_values(cfg)
    t1 = params.t1 if cfg.wineland else None
    mc = cfg.engine == "montecarlo"
    rows = []

    if cfg.engine == "analytic":
        for value in values:
            duty, time, angle, coup = _axis_setup(cfg, params, value)
            xi2, db = _spin_point_analytic(
                coup.gamma_total, coup.epsilon, coup.zeta2, duty, time, angle, t1
            )
            rows.append((value, xi2, db))
    elif cfg.engine == "moments":
        for value in values:
            duty, time, angle, coup = _axis_setup(cfg, params, value)
            strob = _strobo_for(cfg, params, duty)
            grid = dynamics.make_grid(strob, time, cfg.samples_per_window)
            series = dynamics.propagate_moments(coup, strob, grid)
            var = series.tail_average_variance(2.0 * strob.period, angle)
            xi2 = 2.0 * var
            db = -10.0 * math.log10(
                xi2 * (math.exp(2.0 * grid.total_time / t1) if t1 else 1.0)
            )
            rows.append((value, xi2, db))
    else:
        if cfg.sweep == "angle":
            # one ensemble, rotate the measured quadrature per point
            strob = _strobo_for(cfg, params)
            grid = dynamics.make_grid(strob, cfg.time_s, cfg.samples_per_window)
            coup = derive_couplings(params, cfg.duty)
            finals = dynamics.ensemble_finals(
                coup,
                strob,
                grid,
                cfg.n_traj,
                _point_seed(cfg.seed, 0),
                initial=dynamics.GaussianSpinState.coherent(cfg.initial_noise_scale),
                workers=cfg.workers,
            )
            for value in values:
                angle = float(value) * math.pi
                q = finals[:, 1] * math.cos(angle / 2.0) + finals[:, 0] * math.sin(angle / 2.0)
                var, se = dynamics._variance_with_jackknife(q)
                xi2 = 2.0 * var
                db = -10.0 * math.log10(
                    xi2 * (math.exp(2.0 * grid.total_time / t1) if t1 else 1.0)
                )
                rows.append((value, xi2, db, 2.0 * se))
        else:
            for index, value in enumerate(values):
                duty, time, angle, coup = _axis_setup(cfg, params, value)
                strob = _strobo_for(cfg, params, duty)
                grid = dynamics.make_grid(strob, time, cfg.samples_per_window)
                var, se = dynamics.ensemble_variance(
                    coup,
                    strob,
                    grid,
                    cfg.n_traj,
                    _point_seed(cfg.seed, index),
                    quad_angle=angle,
                    initial=dynamics.GaussianSpinState.coherent(cfg.initial_noise_scale),
                    workers=cfg.workers,
                )
                xi2 = 2.0 * var
                db = -10.0 * math.log10(
                    xi2 * (math.exp(2.0 * grid.total_time / t1) if t1 else 1.0)
                )
                rows.append((value, xi2, db, 2.0 * se))

    header = ["axis_value", "xi_a2", "xi_aw2_db"] + (["stderr"] if mc else [])
    _write_rows(cfg.output, header, rows)
    return 0


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


def _light_inputs(coup, duty, time, larmor, n_max, t1=None):
    return analytic.LightSpectrumInputs(
        gamma_total=coup.gamma_total,
        epsilon=coup.epsilon,
        zeta2=coup.zeta2,
        duty=duty,
        time=time,
        larmor=larmor,
        n_max=n_max,
        t1=t1,
    )


def cmd_spectrum(cfg: RunConfig):
    params = _require_params(cfg)

    if cfg.spectrum_mode == "sidebands":
        if cfg.engine != "analytic":
            raise ConfigError("sideband sweeps are closed-form; use engine = analytic")
        if cfg.sweep == "duty":
            values = _sweep_values(cfg)
            rows = []
            for value in values:
                duty, time, _, coup = _axis_setup(cfg, params, value)
                inputs = _light_inputs(coup, duty, time, params.larmor, cfg.n_max)
                xis = [analytic.sideband_squeezing(n, inputs) for n in (0, 1, 2)]
                rows.append((value, *xis))
            _write_rows(cfg.output, ["duty", "xi_l2_n0", "xi_l2_n1", "xi_l2_n2"], rows)
        elif cfg.sweep == "sideband_index":
            coup = derive_couplings(params, cfg.duty)
            inputs = _light_inputs(coup, cfg.duty, cfg.time_s, params.larmor, cfg.n_max)
            ns = np.unique(np.round(_sweep_values(cfg)).astype(int))
            rows = [(int(n), analytic.sideband_squeezing(int(n), inputs)) for n in ns]
            _write_rows(cfg.output, ["sideband_index", "xi_l2"], rows)
        else:
            raise ConfigError("sideband mode sweeps duty or sideband_index")
        return 0

    # frequency-resolved spectrum around the first sideband
    coup = derive_couplings(params, cfg.duty)
    strob = _strobo_for(cfg, params)
    gamma = coup.gamma_total
    freqs = spectral.frequency_grid(
        strob.larmor, gamma, cfg.freq_halfwidth_gammas, cfg.bins_per_gamma
    )
    if cfg.engine == "analytic":
        inputs = _light_inputs(coup, cfg.duty, cfg.time_s, strob.larmor, cfg.n_max)
        s_lss, xi = analytic.light_spectrum(freqs, inputs)
        rows = list(zip(freqs, s_lss, np.full_like(freqs, 0.5), xi, np.zeros_like(freqs)))
        _write_rows(cfg.output, ["omega_rad_s", "s_est", "s_shot", "xi_l2", "stderr"], rows)
        return 0
    if cfg.engine != "montecarlo":
        raise ConfigError("frequency mode supports engine = analytic or montecarlo")
    grid = dynamics.make_grid(strob, cfg.time_s, cfg.samples_per_window)
    signal = spectral.simulate_spectrum(
        coup,
        strob,
        grid,
        freqs,
        cfg.n_traj,
        _point_seed(cfg.seed, 0),
        initial=dynamics.GaussianSpinState.coherent(cfg.initial_noise_scale),
        workers=cfg.workers,
    )
    reference, _ = spectral.shot_noise_reference(
        strob,
        grid,
        freqs,
        cfg.n_traj,
        cfg.exclusion_halfwidth_gammas * gamma,
        _point_seed(cfg.seed, 1),
        workers=cfg.workers,
    )
    ratio = spectral.squeezing_ratio(
        signal, reference, headline_window=(strob.larmor - gamma, strob.larmor + gamma)
    )
    rows = list(zip(ratio.freqs, ratio.s_est, ratio.s_shot, ratio.xi_l2, ratio.stderr))
    _write_rows(cfg.output, ["omega_rad_s", "s_est", "s_shot", "xi_l2", "stderr"], rows)
    if ratio.headline_xi is not None:
        print(
            f"headline squeezing: xi_L^2 = {ratio.headline_xi:.6f} "
            f"+- {ratio.headline_stderr:.6f} "
            f"({-10.0 * math.log10(ratio.headline_xi):.3f} dB)",
            file=sys.stderr,
        )
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _scaled_setup(duty, zeta2, gamma_t, omega_over_gamma=100.0, samples_per_window=20):
    """Unit system with gamma_total = 1 used by the self-checks."""
    gamma_s = 1.0 / duty
    kappa = math.sqrt(2.0 * gamma_s / zeta2)
    coup = couplings_from_rates(kappa, zeta2, duty)
    strob = strobe.StroboConfig.centered(duty, 2.0 * omega_over_gamma)
    grid = dynamics.make_grid(strob, gamma_t, samples_per_window)
    return coup, strob, grid


def cmd_validate(cfg: RunConfig):
    checks = []

    def record(name, measured, tol, ok=None):
        ok = (measured <= tol) if ok is None else ok
        checks.append((name, measured, tol, ok))

    # balanced interaction moves no noise, for any time, duty, or angle
    worst = 0.0
    for gamma_t in (0.0, 0.7, 3.0):
        for duty in (0.08, 0.5, 1.0):
            for angle in (0.0, math.pi / 3.0, math.pi):
                inputs = analytic.SpinSqueezingInputs(
                    gamma_total=1.0, epsilon=1.0, duty=duty, zeta2=1.0,
                    time=gamma_t, quad_angle=angle,
                )
                worst = max(worst, abs(2.0 * analytic.spin_variance(inputs) - 1.0))
    record("qnd_neutrality_analytic", worst, 1e-12)

    coup, strob, grid = _scaled_setup(0.5, 1.0, 0.5)
    var, se = dynamics.ensemble_variance(
        coup, strob, grid, cfg.n_traj, _point_seed(cfg.seed, 10), workers=cfg.workers
    )
    record("qnd_neutrality_montecarlo", abs(var - 0.5), 3.0 * se)

    n_terms = 2048
    worst = 0.0
    for duty in (0.05, 0.08, 0.1, 0.25, 0.5, 1.0):
        ns = np.arange(-n_terms, n_terms + 1)
        worst = max(worst, abs(float(np.sum(strobe.fourier_coeff(ns, duty) ** 2)) - duty))
    record("parseval_partial_sum_n2048", worst, 1e-4)

    coup, strob, grid = _scaled_setup(0.08, 0.1, 1.0)
    series = dynamics.propagate_moments(coup, strob, grid)
    var_m = series.tail_average_variance(2.0 * strob.period)
    ref = analytic.spin_variance(
        analytic.SpinSqueezingInputs(
            gamma_total=1.0, epsilon=1.0, duty=0.08, zeta2=0.1, time=grid.total_time
        )
    )
    record("oracle_triangle_moments_vs_analytic", abs(var_m - ref) / ref, 1e-2)

    var_mc, se = dynamics.ensemble_variance(
        coup, strob, grid, cfg.n_traj, _point_seed(cfg.seed, 11), workers=cfg.workers
    )
    record("oracle_triangle_montecarlo_vs_moments", abs(var_mc - series.variance()[-1]), 3.0 * se)

    rec = dynamics.simulate_trajectory(
        coup, strob, dynamics.make_grid(strob, 2.0), seed=1,
        initial=dynamics.GaussianSpinState(mean=(0.3, 0.7), cov=0.5 * np.eye(2)),
        suppress_noise=True,
    )
    drift = abs(
        math.atan2(rec.final_atom[1], rec.final_atom[0]) - math.atan2(0.7, 0.3)
    )
    record("mean_decay_direction_rad", drift, 1e-10)

    vac = couplings_from_rates(0.0, 1.0, strob.duty)
    freqs = spectral.frequency_grid(strob.larmor, 1.0, 5.0, 10.0)
    est = spectral.simulate_spectrum(
        vac, strob, grid, freqs, cfg.n_traj, _point_seed(cfg.seed, 12), workers=cfg.workers
    )
    z = np.abs(est.s_est - 0.5) / est.stderr
    record("estimator_unbiasedness_max_z", float(z.max()), 3.0)

    failed = [c for c in checks if not c[3]]
    width = max(len(c[0]) for c in checks)
    for name, measured, tol, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name:<{width}} measured={measured:.3e} tol={tol:.3e}")
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def cmd_fit(cfg: RunConfig, args):
    from . import fitlab

    data = np.genfromtxt(args.data, delimiter=",", names=True)
    names = data.dtype.names
    if names is None or "x" not in names or "y" not in names:
        raise ConfigError(f"{args.data}: need a CSV header with columns x,y[,weight]")
    weights = data["weight"] if "weight" in names else None
    p0 = tuple(float(v) for v in args.p0.split(","))
    problem = fitlab.FitProblem(
        model_id=args.model,
        abscissa=np.atleast_1d(data["x"]),
        ordinate=np.atleast_1d(data["y"]),
        initial_guess=p0,
        weights=None if weights is None else np.atleast_1d(weights),
        sideband=args.sideband,
    )
    result = fitlab.fit(problem)
    rows = [(f"p{i}", v) for i, v in enumerate(result.parameters)]
    rows += [
        ("rss", result.rss),
        ("converged", float(result.converged)),
        ("iterations", float(result.iterations)),
    ]
    _write_rows(cfg.output, ["name", "value"], rows)
    print(
        f"{args.model}: parameters {tuple(round(v, 10) for v in result.parameters)} "
        f"rss={result.rss:.6g} converged={result.converged} "
        f"iterations={result.iterations}",
        file=sys.stderr,
    )
    return 0 if result.converged else 1


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="strobosqueeze",
        description="Stroboscopic atom-light squeezing: sweeps, spectra, validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("coeffs", "detuning sweep of the interaction coefficients"),
        ("spin", "spin-squeezing sweep (time, duty, or angle axis)"),
        ("spectrum", "sideband ratios or a frequency-resolved spectrum"),
        ("validate", "run the invariant suite"),
        ("fit", "least-squares fit of a model family to CSV data"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable; wins over the file)",
        )
        p.add_argument("--output", help="output path ('-' for stdout)")
        if name == "fit":
            p.add_argument("--model", required=True, choices=analytic.FIT_MODEL_IDS)
            p.add_argument("--data", required=True, help="CSV with header x,y[,weight]")
            p.add_argument("--p0", required=True, help="comma-separated initial guess")
            p.add_argument("--sideband", type=int, default=0)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args.config, args.set)
        if args.output:
            cfg.output = args.output
        if args.command == "coeffs":
            return cmd_coeffs(cfg)
        if args.command == "spin":
            return cmd_spin(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "fit":
            return cmd_fit(cfg, args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
