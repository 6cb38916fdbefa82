"""atomdem entry point - trace, steady and validate subcommands."""

import argparse
import asyncio
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Optional, Sequence

import numpy as np

from atomdem.config import (
    BASES,
    FORMATS,
    LOG_LEVELS,
    SWEEP_CHOICES,
    VARIANT_CHOICES,
    ConfigError,
    RunConfig,
    resolve_preset,
    setup_logging,
)
from atomdem.entropy import (
    ConsistencyError,
    EntropyTrace,
    entropy_trace,
    steady_state,
    time_grid,
    with_value,
)
from atomdem.model import (
    AtomdemError,
    ClassicalField,
    InitialAtomState,
    ParameterError,
    PhysParams,
    Scheme,
    TruncationError,
)
from atomdem.oracle import (
    DEFAULT_T_END as VALIDATE_T_END,
    QUICK_BANDWIDTH,
    QUICK_MODES,
    VARIANTS,
    BandwidthError,
    StepSizeError,
    bath_tolerance,
    reference_case,
    validate_variant,
)
from atomdem.output import OutputError, emit, format_float, render_report, render_sweep, render_trace

logger = logging.getLogger("atomdem.main")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PHYSICS = 2
EXIT_IO = 3

TRACE_T_END = 50.0


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the config-error code instead of argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _complex_text(z: complex) -> str:
    return f"{format_float(z.real)}{'+' if z.imag + 0.0 >= 0 else '-'}{format_float(abs(z.imag))}j"


def run_header(config: RunConfig, params: PhysParams, init: InitialAtomState, preset: Optional[str]) -> dict:
    """Header comment block: every input that determines the output, no timestamps."""
    header: dict[str, Any] = {}
    if preset:
        header["preset"] = preset
    header["scheme"] = params.scheme.value
    header["field"] = params.kind.value
    header["gamma"] = params.gamma
    header["detuning"] = params.detuning
    if isinstance(params.field, ClassicalField):
        header["omega"] = _complex_text(params.coupling())
    else:
        coherent = params.field.coherent
        header["g"] = _complex_text(complex(params.field.g))
        header["mean_photons"] = coherent.mean_photons
        header["theta"] = coherent.phase
        header["n_max"] = coherent.cutoff
    if params.scheme is Scheme.UPPER:
        header["c0"] = _complex_text(init.c0)
        header["a0"] = _complex_text(init.a0)
    return header


async def _gather(calls: Sequence, workers: int) -> list:
    """Run blocking calls on a thread pool; results come back in submission order."""
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [loop.run_in_executor(executor, fn, *args) for fn, *args in calls]
        return list(await asyncio.gather(*futures))


async def trace_async(
    params: PhysParams,
    init: InitialAtomState,
    times: np.ndarray,
    basis: str,
    workers: int = 1,
) -> EntropyTrace:
    """entropy_trace split into contiguous time chunks evaluated in parallel."""
    chunks = [c for c in np.array_split(times, max(1, min(workers, len(times)))) if len(c)]
    parts = await _gather([(entropy_trace, params, init, chunk, basis) for chunk in chunks], workers)
    return EntropyTrace(
        times=np.concatenate([p.times for p in parts]),
        entropy=np.concatenate([p.entropy for p in parts]),
        populations=np.concatenate([p.populations for p in parts]),
        basis_labels=parts[0].basis_labels,
    )


def _steady_value(params: PhysParams, init: Optional[InitialAtomState], name: str, value: float) -> float:
    return steady_state(with_value(params, name, value), init)[1]


async def sweep_async(
    params: PhysParams,
    name: str,
    values: Sequence[float],
    workers: int = 1,
    init: Optional[InitialAtomState] = None,
) -> list[float]:
    """S_inf at each sweep value, in input order regardless of completion order."""
    return await _gather([(_steady_value, params, init, name, v) for v in values], workers)


def cmd_trace(config: RunConfig, preset: Optional[str] = None) -> int:
    params, init = config.to_params()
    t_end = config.t_end if config.t_end is not None else TRACE_T_END
    times = time_grid(t_end, config.n_points)
    trace = asyncio.run(trace_async(params, init, times, config.basis, config.workers))
    peak_t, peak_s = trace.peak()
    logger.info(
        "Trace %s/%s: %d points, peak S=%.6g at t=%.4g, final S=%.6g",
        params.scheme.value,
        params.kind.value,
        len(times),
        peak_s,
        peak_t,
        trace.final(),
    )
    header = {"command": "trace", **run_header(config, params, init, preset)}
    emit(render_trace(trace, header, config.format), config.out)
    return EXIT_OK


def cmd_steady(config: RunConfig, preset: Optional[str] = None) -> int:
    params, init = config.to_params()
    if params.scheme is Scheme.UPPER:
        logger.warning(
            "Upper-level scheme ends in the pure ground state for any nonzero coupling; "
            "only an undriven |c> population leaves S_infinity above 0"
        )
    values = config.sweep_values()
    entropies = asyncio.run(sweep_async(params, config.sweep_param, values, config.workers, init))
    best = int(np.argmax(entropies))
    logger.info(
        "Steady sweep over %s: %d points, max S_infinity=%.6g at %s=%.6g",
        config.sweep_param,
        len(values),
        entropies[best],
        config.sweep_param,
        values[best],
    )
    header = {"command": "steady", **run_header(config, params, init, preset)}
    header.pop(config.sweep_param, None)
    emit(render_sweep(config.sweep_param, values, entropies, header, config.format), config.out)
    return EXIT_OK


def cmd_validate(config: RunConfig, preset: Optional[str] = None) -> int:
    bandwidth, n_modes, tolerance = config.bandwidth, config.n_modes, config.tolerance
    t_end = config.t_end if config.t_end is not None else VALIDATE_T_END
    if config.quick:
        bandwidth, n_modes = QUICK_BANDWIDTH, QUICK_MODES
        t_end = VALIDATE_T_END
    if tolerance is None:
        # reference cases are in units of gamma
        tolerance = bath_tolerance(bandwidth)
    variants = VARIANTS if config.variant == "all" else (config.variant,)
    logger.info(
        "Validating %s against a %d-mode bath (W=%g, t_end=%g, tolerance=%.1e)",
        ", ".join(variants),
        n_modes,
        bandwidth,
        t_end,
        tolerance,
    )

    calls = []
    for variant in variants:
        params, init = reference_case(variant)
        calls.append((validate_variant, params, init, bandwidth, n_modes, t_end, config.dt, tolerance))
    results = [r for batch in asyncio.run(_gather(calls, config.workers)) for r in batch]

    settings = {
        "bandwidth": bandwidth,
        "n_modes": n_modes,
        "t_end": t_end,
        "dt": config.dt,
        "tolerance": tolerance,
        "quick": config.quick,
    }
    emit(render_report(results, settings), config.out)
    failed = [r for r in results if not r.passed]
    if failed:
        worst = max(failed, key=lambda r: r.margin)
        logger.error(
            "%d check(s) failed; worst: %s/%s error %.3e > %.1e",
            len(failed),
            worst.variant,
            worst.check,
            worst.max_error,
            worst.threshold,
        )
        return EXIT_PHYSICS
    logger.info("All %d checks passed", len(results))
    return EXIT_OK


COMMANDS = {"trace": cmd_trace, "steady": cmd_steady, "validate": cmd_validate}


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", help="Figure preset, e.g. fig2a or fig4a:dashed")
    parser.add_argument("--config", help="Path to a key=value config file")
    parser.add_argument("--out", help="Output file (default: stdout)")
    parser.add_argument("--format", choices=FORMATS, help="Output format (default: csv)")
    parser.add_argument("--log-level", dest="log_level", type=str.upper, choices=LOG_LEVELS)
    parser.add_argument("--log-file", dest="log_file", help="Also write logs to this file")
    parser.add_argument("--workers", type=int, help="Parallel workers (default: 4)")


def _physics(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scheme", choices=("upper", "lower"))
    parser.add_argument("--field", dest="field_kind", choices=("classical", "quantized"))
    parser.add_argument("--omega", dest="omega_re", type=float, help="Rabi frequency (real part)")
    parser.add_argument("--omega-im", dest="omega_im", type=float)
    parser.add_argument("--g", dest="g_re", type=float, help="Single-photon coupling (real part)")
    parser.add_argument("--g-im", dest="g_im", type=float)
    parser.add_argument("--mean-photons", dest="mean_photons", type=float)
    parser.add_argument("--theta", type=float, help="Coherent-state phase")
    parser.add_argument("--n-max", dest="n_max", type=int, help="Photon-number cutoff (default: automatic)")
    parser.add_argument("--detuning", "--delta", dest="detuning", type=float)
    parser.add_argument("--c0", dest="c0_re", type=float)
    parser.add_argument("--c0-im", dest="c0_im", type=float)
    parser.add_argument("--a0", dest="a0_re", type=float)
    parser.add_argument("--a0-im", dest="a0_im", type=float)
    parser.add_argument("--gamma", type=float, help="Decay rate (unit scale)")


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    parser = _ArgumentParser(
        prog="atomdem",
        description="Atom-photon entanglement of a driven three-level atom (all frequencies in units of gamma)",
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    trace = commands.add_parser("trace", help="Entropy and populations over time")
    _common(trace)
    _physics(trace)
    trace.add_argument("--t-end", dest="t_end", type=float, help="Final gamma*t (default: 50)")
    trace.add_argument("--points", dest="n_points", type=int, help="Grid points (default: 600)")
    trace.add_argument("--basis", choices=BASES, help="Lower-scheme basis (default: natural)")

    steady = commands.add_parser("steady", help="Steady-state entropy over a parameter sweep")
    _common(steady)
    _physics(steady)
    steady.add_argument("--sweep-param", dest="sweep_param", choices=SWEEP_CHOICES)
    steady.add_argument("--sweep-min", dest="sweep_min", type=float)
    steady.add_argument("--sweep-max", dest="sweep_max", type=float)
    steady.add_argument("--sweep-steps", dest="sweep_steps", type=int)

    validate = commands.add_parser("validate", help="Compare closed forms with the discretized-bath oracle")
    _common(validate)
    validate.add_argument("--variant", choices=VARIANT_CHOICES)
    validate.add_argument("--bandwidth", type=float, help="Bath half-width W (default: 40)")
    validate.add_argument("--n-modes", dest="n_modes", type=int, help="Bath modes N (default: 4000)")
    validate.add_argument("--dt", type=float, help="RK4 step (default: min(0.01, 0.1/W))")
    validate.add_argument("--t-end", dest="t_end", type=float, help="Final gamma*t (default: 5)")
    validate.add_argument("--tolerance", type=float, help="Amplitude and density threshold (default: 4 / (pi W))")
    validate.add_argument(
        "--quick",
        action="store_const",
        const=True,
        default=None,
        help="Small bath (N=1000, W=50, t_end=5)",
    )
    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> tuple[RunConfig, Optional[str]]:
    """defaults -> preset -> config file -> explicit flags."""
    config = RunConfig()
    preset_label = None
    if args.preset:
        preset, curve, overrides = resolve_preset(args.preset)
        if preset.command != args.command:
            logger.warning("Preset %s is meant for '%s', running '%s'", preset.name, preset.command, args.command)
        config = config.with_overrides(overrides)
        preset_label = f"{preset.name}:{curve}"
    if args.config:
        config = RunConfig.from_file(args.config, base=config)
    flags = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "preset", "config") and value is not None
    }
    return config.with_overrides(flags), preset_label


def main(argv: Optional[list[str]] = None) -> int:
    args = parse_args(argv)
    try:
        config, preset = build_config(args)
        setup_logging(config.log_level, config.log_file)
    except ConfigError as exc:
        # Fallback logging if config parsing fails
        setup_logging()
        for err in exc.errors:
            logger.error("Config error: %s", err)
        return EXIT_CONFIG

    errors = config.validate()
    if errors:
        for err in errors:
            logger.error("Config error: %s", err)
        return EXIT_CONFIG

    try:
        return COMMANDS[args.command](config, preset)
    except (ConfigError, ParameterError, TruncationError) as exc:
        logger.error("Config error: %s", exc)
        return EXIT_CONFIG
    except (BandwidthError, StepSizeError, ConsistencyError) as exc:
        logger.error("Validation failed: %s", exc)
        return EXIT_PHYSICS
    except OutputError as exc:
        logger.error("Output error: %s", exc)
        return EXIT_IO
    except AtomdemError as exc:
        logger.error("Computation failed: %s", exc)
        return EXIT_PHYSICS
    except Exception as exc:
        logger.error("Fatal error: %s", exc, exc_info=True)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
