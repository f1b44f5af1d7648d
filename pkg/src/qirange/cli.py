"""Command-line front end: ``qir {snr,perr,zzb,timebudget,mc,sweep}``.

Exit codes: 0 success, 2 usage error, 3 domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Sequence

import numpy as np

from . import __version__
from .detection import ALL_PROTOCOLS, ChannelParams, Protocol, detection_probabilities, snr
from .errors import QIRError
from .hypothesis import PriorPair, error_probability, error_ratio
from .integration_time import matched_modes, time_budget
from .io import atomic_write, manifest_text, read_config, render
from .montecarlo import (
    DelayEstimationConfig,
    Hypothesis,
    TrialConfig,
    delay_estimation_experiment,
    derive_seed,
    estimate_error_probability,
    simulate_coincidence,
)
from .range_delay import DelayWindow, range_to_delay, zzb, zzb_ratio

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_IO = 4

SEED_ENV = "QIR_DEFAULT_SEED"
MAX_SWEEP_POINTS = 10_000_000
SWEEP_AXES = ("nb", "modes", "eta", "tau_min", "tau_max", "t1", "bandwidth", "p0")
PROTOCOL_OPS = ("pfa", "pd", "pmiss", "snr", "perr", "zzb", "mc")
SCALAR_OPS = ("error_ratio", "zzb_ratio", "t2", "reduction_factor")
# flags that only steer the run and are left out of manifests
_NOT_IN_MANIFEST = {"command", "config", "out", "spec", "workers"}


class UsageError(Exception):
    pass


# --- argument parsing ----------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--nb", type=float, default=0.01, help="mean background photons per mode")
    p.add_argument("--modes", type=float, default=100.0, help="time-bandwidth product M")
    p.add_argument("--eta", type=float, default=0.1, help="target reflectivity / transmissivity")
    p.add_argument("--protocol", default="all", help="ci1, ci2, qi1, qi2 or all")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--out", default=None, help="output file; a .manifest file is written next to it")
    p.add_argument("--format", default="csv", help="csv or json")
    p.add_argument("--config", default=None, help="key = value file; flags override it")
    p.add_argument("--workers", type=int, default=1)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="qir", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("snr", parents=[common], help="single-shot probabilities and SNR")
    s.add_argument("--zero-noise-limit", action="store_true", help="return the n_b -> 0 limit instead of failing")

    s = sub.add_parser("perr", parents=[common], help="Bayesian error probability")
    s.add_argument("--p0", type=float, default=0.5, help="prior probability of no target")
    s.add_argument("--shots", type=int, default=1)

    s = sub.add_parser("zzb", parents=[common], help="Ziv-Zakai bound on the delay error")
    _window_args(s)
    s.add_argument("--perr", type=float, default=None, help="constant error probability override")
    s.add_argument("--shots", type=int, default=1)
    s.add_argument("--quadrature", action="store_true", help="integrate numerically instead of closed form")

    s = sub.add_parser("timebudget", parents=[common], help="integration time of QI2 matching QI1")
    s.add_argument("--t1", type=float, default=None, help="QI1 integration time [s]")
    s.add_argument("--bandwidth", type=float, default=None, help="mode rate [Hz]")

    s = sub.add_parser("mc", parents=[common], help="Monte Carlo oracle campaigns")
    s.add_argument("--kind", default="coincidence", help="coincidence, perr or delay")
    s.add_argument("--hypothesis", default="h1", help="h0 or h1 (coincidence)")
    s.add_argument("--shots", type=int, default=1, help="shots per trial / pulses (delay)")
    s.add_argument("--k", type=int, default=None, help="k-of-m rule; default requires every shot")
    s.add_argument("--p0", type=float, default=0.5, help="prior of no target (perr)")
    s.add_argument("--bins", type=int, default=16, help="delay bins (delay)")
    s.add_argument("--true-bin", type=int, default=None, help="fixed true bin; default uniform (delay)")
    _window_args(s)

    s = sub.add_parser("sweep", parents=[common], help="evaluate operations over a parameter grid")
    s.add_argument("spec", nargs="?", default=None, help="sweep spec file (config format)")
    s.add_argument("--axis", action="append", default=None, help="name:start:stop:count[:lin|log], repeatable")
    s.add_argument("--ops", default=None, help="comma-separated operations")
    s.add_argument("--p0", type=float, default=0.5)
    s.add_argument("--shots", type=int, default=1)
    s.add_argument("--hypothesis", default="h1")
    s.add_argument("--t1", type=float, default=None)
    s.add_argument("--bandwidth", type=float, default=None)
    _window_args(s)
    return parser


def _window_args(s: argparse.ArgumentParser) -> None:
    s.add_argument("--tau-min", type=float, default=None, help="[s]")
    s.add_argument("--tau-max", type=float, default=None, help="[s]")
    s.add_argument("--range-min", type=float, default=None, help="[m], alternative to --tau-min")
    s.add_argument("--range-max", type=float, default=None, help="[m], alternative to --tau-max")


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        if isinstance(action, argparse._SubParsersAction):  # noqa: SLF001
            return action.choices[command]
    raise KeyError(command)


def _apply_config(sub: argparse.ArgumentParser, config: dict[str, str]) -> dict[str, str]:
    """Install config values as parser defaults; returns the ``axis.*`` entries."""
    actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
    axes = {}
    defaults: dict[str, Any] = {}
    for key, value in config.items():
        if key.startswith("axis."):
            axes[key[5:]] = value
            continue
        if key == "axis":
            raise UsageError("use 'axis.<name> = start, stop, count, spacing' in config files")
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        if action.nargs == 0:
            defaults[key] = _parse_bool(key, value)
        else:
            defaults[key] = value
    sub.set_defaults(**defaults)
    return axes


def _parse_bool(key: str, value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"config key {key!r}: expected a boolean, got {value!r}")


def parse_args(argv: Sequence[str]) -> tuple[argparse.Namespace, dict[str, str]]:
    parser = build_parser()
    args = parser.parse_args(argv)
    config_path = args.config or getattr(args, "spec", None)
    axes: dict[str, str] = {}
    if config_path:
        try:
            config = read_config(config_path)
        except ValueError as exc:
            raise UsageError(f"{config_path}: {exc}") from None
        config.pop("command", None)
        axes = _apply_config(_subparser(parser, args.command), config)
        args = parser.parse_args(argv)
    if args.seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            args.seed = int(env) if env else 0
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    if args.format not in ("csv", "json"):
        raise UsageError(f"--format must be csv or json, got {args.format!r}")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    return args, axes


def _protocols(value: str) -> list[Protocol]:
    if value.lower() == "all":
        return list(ALL_PROTOCOLS)
    try:
        return [Protocol(v.strip().lower()) for v in value.split(",")]
    except ValueError:
        raise UsageError(f"--protocol must be one of ci1, ci2, qi1, qi2, all; got {value!r}") from None


def _params(args: argparse.Namespace) -> ChannelParams:
    return ChannelParams(n_b=args.nb, m_modes=args.modes, eta=args.eta)


def _window(args: argparse.Namespace) -> DelayWindow:
    tau_min = args.tau_min
    tau_max = args.tau_max
    if tau_min is None and args.range_min is not None:
        tau_min = range_to_delay(args.range_min)
    if tau_max is None and args.range_max is not None:
        tau_max = range_to_delay(args.range_max)
    if tau_min is None or tau_max is None:
        raise UsageError("a delay window is required: --tau-min/--tau-max or --range-min/--range-max")
    return DelayWindow(tau_min, tau_max)


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _flags(params: ChannelParams, protocol: Protocol) -> str:
    return ";".join(detection_probabilities(protocol, params).flags)


# --- commands -------------------------------------------------------------------


def cmd_snr(args: argparse.Namespace) -> list[dict]:
    params = _params(args)
    rows = []
    for protocol in _protocols(args.protocol):
        probs = detection_probabilities(protocol, params)
        rows.append(
            {
                "protocol": protocol.value,
                "nb": params.n_b,
                "modes": params.m_modes,
                "eta": params.eta,
                "p_fa": probs.p_false_alarm,
                "p_d": probs.p_detect,
                "snr": snr(protocol, params, zero_noise_limit=args.zero_noise_limit),
                "low_noise_valid": params.low_noise_valid,
                "warnings": ";".join(probs.flags),
            }
        )
    return rows


def cmd_perr(args: argparse.Namespace) -> list[dict]:
    params = _params(args)
    priors = PriorPair.from_p0(args.p0)
    rows = []
    for protocol in _protocols(args.protocol):
        report = error_probability(protocol, params, priors, shots=args.shots)
        rows.append(
            {
                "protocol": protocol.value,
                "nb": params.n_b,
                "modes": params.m_modes,
                "eta": params.eta,
                "p0": priors.p0,
                "p1": priors.p1,
                "shots": report.shots,
                "p_err": report.p_err,
                "upper_bound": report.upper_bound,
                "warnings": _flags(params, protocol),
            }
        )
    return rows


def cmd_zzb(args: argparse.Namespace) -> list[dict]:
    params = _params(args)
    window = _window(args)
    rows = []
    for protocol in _protocols(args.protocol):
        res = zzb(protocol, params, window, args.perr, shots=args.shots, quadrature=args.quadrature)
        rows.append(
            {
                "protocol": protocol.value,
                "nb": params.n_b,
                "modes": params.m_modes,
                "eta": params.eta,
                "tau_min": window.tau_min,
                "tau_max": window.tau_max,
                "delta_tau": window.delta_tau,
                "p_err": res.p_err,
                "mse": res.mean_square_error,
                "rms": res.rms_error,
                "quad_abs_err": res.quadrature_abs_error_estimate,
                "narrow_prior_ok": window.narrow_prior_ok,
                "warnings": _flags(params, protocol),
            }
        )
    return rows


def cmd_timebudget(args: argparse.Namespace) -> list[dict]:
    _require(args, "t1", "bandwidth")
    budget = time_budget(args.t1, args.bandwidth, args.nb)
    try:
        m2: float = matched_modes(budget.modes_1p, args.nb)
    except QIRError:
        m2 = math.nan
    for note in budget.notes:
        warnings.warn(note, NoteWarning, stacklevel=1)
    return [
        {
            "t1": budget.t1,
            "bandwidth": budget.bandwidth,
            "nb": budget.n_b,
            "t2": budget.t2,
            "factor": budget.reduction_factor,
            "modes_1p": budget.modes_1p,
            "modes_2p": m2,
        }
    ]


def cmd_mc(args: argparse.Namespace) -> list[dict]:
    params = _params(args)
    kind = args.kind.lower()
    rows = []
    for protocol in _protocols(args.protocol):
        base = {"protocol": protocol.value, "nb": params.n_b, "modes": params.m_modes, "eta": params.eta}
        if kind == "coincidence":
            trials = args.trials or 1_000_000
            cfg = TrialConfig(protocol, params, args.hypothesis, trials, args.seed, args.shots, args.k)
            out = simulate_coincidence(cfg, workers=args.workers)
            probs = detection_probabilities(protocol, params)
            single = probs.p_false_alarm if cfg.hypothesis is Hypothesis.H0 else probs.p_detect
            expected = single**cfg.shots if args.k is None else math.nan
            row = {**base, "kind": kind, "hypothesis": cfg.hypothesis.value, "shots": cfg.shots}
        elif kind == "perr":
            trials = args.trials or 1_000_000
            priors = PriorPair.from_p0(args.p0)
            out = estimate_error_probability(protocol, params, priors, trials, args.seed, workers=args.workers)
            expected = error_probability(protocol, params, priors).p_err
            row = {**base, "kind": kind, "hypothesis": "prior", "shots": 1}
        elif kind == "delay":
            trials = args.trials or 10_000
            window = _window(args)
            cfg = DelayEstimationConfig(
                window, args.bins, args.shots, protocol, params, trials, args.seed, args.true_bin
            )
            est = delay_estimation_experiment(cfg, workers=args.workers)
            bound = zzb(protocol, params, window, shots=args.shots)
            rows.append(
                {
                    **base,
                    "kind": kind,
                    "bins": args.bins,
                    "pulses": args.shots,
                    "trials": est.trials,
                    "error_trials": est.error_trials,
                    "rmse": est.rmse,
                    "rmse_se": est.rmse_se,
                    "zzb_rms": bound.rms_error,
                    "above_bound": est.rmse >= bound.rms_error - 2.0 * est.rmse_se,
                }
            )
            continue
        else:
            raise UsageError(f"--kind must be coincidence, perr or delay; got {args.kind!r}")
        row.update(
            {
                "trials": out.trials,
                "positives": out.positives,
                "frequency": out.frequency,
                "ci95_half_width": out.ci95_half_width,
                "ci_method": out.ci_method,
                "expected": expected,
                "z_score": out.z_score(expected) if not math.isnan(expected) else math.nan,
                "warnings": _flags(params, protocol),
            }
        )
        rows.append(row)
    return rows


# --- sweep ------------------------------------------------------------------------


def parse_axis(name: str, spec: str) -> tuple[str, np.ndarray]:
    """``start, stop, count[, lin|log]`` (commas or colons) to grid values."""
    parts = [p.strip() for p in spec.replace(":", ",").split(",") if p.strip()]
    if len(parts) not in (3, 4):
        raise UsageError(f"axis {name!r}: expected start, stop, count[, lin|log]; got {spec!r}")
    name = name.strip().lower().replace("-", "_")
    if name not in SWEEP_AXES:
        raise UsageError(f"axis {name!r} is not sweepable; choose from {', '.join(SWEEP_AXES)}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise UsageError(f"axis {name!r}: malformed numbers in {spec!r}") from None
    spacing = parts[3].lower() if len(parts) == 4 else "lin"
    if count < 1:
        raise UsageError(f"axis {name!r}: count must be >= 1")
    if spacing == "lin":
        values = np.linspace(start, stop, count)
    elif spacing == "log":
        if start <= 0 or stop <= 0:
            raise UsageError(f"axis {name!r}: log spacing needs positive endpoints")
        values = np.geomspace(start, stop, count)
    else:
        raise UsageError(f"axis {name!r}: spacing must be lin or log, got {spacing!r}")
    return name, values


def _sweep_axes(args: argparse.Namespace, config_axes: dict[str, str]) -> list[tuple[str, np.ndarray]]:
    specs = dict(config_axes)
    for item in args.axis or []:
        if ":" not in item:
            raise UsageError(f"--axis expects name:start:stop:count[:spacing], got {item!r}")
        name, rest = item.split(":", 1)
        specs[name.strip().lower().replace("-", "_")] = rest
    if not specs:
        raise UsageError("sweep needs at least one axis")
    axes = [parse_axis(name, spec) for name, spec in specs.items()]
    total = math.prod(len(v) for _, v in axes)
    if total > MAX_SWEEP_POINTS:
        raise UsageError(f"sweep has {total} points, more than the limit of {MAX_SWEEP_POINTS}")
    return axes


def _sweep_ops(args: argparse.Namespace) -> list[str]:
    ops = [o.strip().lower() for o in (args.ops or "").split(",") if o.strip()]
    if not ops:
        raise UsageError("sweep needs --ops")
    unknown = [o for o in ops if o not in PROTOCOL_OPS + SCALAR_OPS]
    if unknown:
        raise UsageError(f"unknown sweep op(s) {unknown}; choose from {', '.join(PROTOCOL_OPS + SCALAR_OPS)}")
    return ops


def _sweep_point(task: tuple) -> list[dict]:
    index, point, base, ops, protocols = task
    v = {**base, **point}
    params = ChannelParams(v["nb"], v["modes"], v["eta"])
    prefix = {"point": index, **point}
    rows = []

    def window() -> DelayWindow:
        if v["tau_min"] is None or v["tau_max"] is None:
            raise UsageError("zzb sweeps need --tau-min and --tau-max")
        return DelayWindow(v["tau_min"], v["tau_max"])

    for op in ops:
        if op in SCALAR_OPS:
            if op == "error_ratio":
                value = error_ratio(params)
            elif op == "zzb_ratio":
                value = zzb_ratio(params, window())
            else:
                if v["t1"] is None or v["bandwidth"] is None:
                    raise UsageError(f"{op} sweeps need --t1 and --bandwidth")
                budget = time_budget(v["t1"], v["bandwidth"], v["nb"])
                value = budget.t2 if op == "t2" else budget.reduction_factor
            rows.append({**prefix, "series": op, "value": value})
            continue
        for protocol in protocols:
            if op == "pfa":
                value = detection_probabilities(protocol, params).p_false_alarm
            elif op == "pd":
                value = detection_probabilities(protocol, params).p_detect
            elif op == "pmiss":
                value = detection_probabilities(protocol, params).p_miss
            elif op == "snr":
                value = snr(protocol, params)
            elif op == "perr":
                value = error_probability(protocol, params, PriorPair.from_p0(v["p0"]), shots=v["shots"]).p_err
            elif op == "zzb":
                value = zzb(protocol, params, window(), shots=v["shots"]).mean_square_error
            else:
                seed = derive_seed(v["seed"], index)
                cfg = TrialConfig(protocol, params, v["hypothesis"], v["trials"], seed, v["shots"])
                value = simulate_coincidence(cfg).frequency
            rows.append({**prefix, "series": f"{op}:{protocol.value}", "value": value})
    return rows


def cmd_sweep(args: argparse.Namespace, config_axes: dict[str, str]) -> tuple[list[dict], list[str]]:
    axes = _sweep_axes(args, config_axes)
    ops = _sweep_ops(args)
    protocols = _protocols(args.protocol)
    base = {
        "nb": args.nb,
        "modes": args.modes,
        "eta": args.eta,
        "tau_min": args.tau_min if args.tau_min is not None else _maybe_delay(args.range_min),
        "tau_max": args.tau_max if args.tau_max is not None else _maybe_delay(args.range_max),
        "t1": args.t1,
        "bandwidth": args.bandwidth,
        "p0": args.p0,
        "shots": args.shots,
        "hypothesis": args.hypothesis,
        "seed": args.seed,
        "trials": args.trials or 100_000,
    }
    names = [n for n, _ in axes]
    tasks = [
        (i, {n: float(x) for n, x in zip(names, combo)}, base, ops, protocols)
        for i, combo in enumerate(itertools.product(*(vals for _, vals in axes)))
    ]
    if args.workers == 1 or len(tasks) == 1:
        chunks = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            chunks = list(pool.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * args.workers))))
    return [row for chunk in chunks for row in chunk], ["point", *names, "series", "value"]


def _maybe_delay(r: float | None) -> float | None:
    return None if r is None else range_to_delay(r)


class NoteWarning(UserWarning):
    """Informational note carried into the manifest."""


# --- entry point -------------------------------------------------------------------


def _manifest_params(args: argparse.Namespace, axes: dict[str, str]) -> dict[str, Any]:
    out = {k: v for k, v in vars(args).items() if k not in _NOT_IN_MANIFEST and k != "axis"}
    if args.command == "sweep":
        for item in args.axis or []:
            name, rest = item.split(":", 1)
            axes = {**axes, name.strip().lower().replace("-", "_"): rest.replace(":", ", ")}
        for name, spec in axes.items():
            out[f"axis.{name}"] = spec
    return out


def run(argv: Sequence[str]) -> int:
    try:
        args, config_axes = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"qir: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qir: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO

    columns = None
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.command == "sweep":
                rows, columns = cmd_sweep(args, config_axes)
            else:
                rows = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qir: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QIRError as exc:
        print(f"qir: domain error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN

    notes = _unique(str(w.message) for w in caught if issubclass(w.category, NoteWarning))
    warns = _unique(str(w.message) for w in caught if not issubclass(w.category, NoteWarning))
    for msg in warns:
        print(f"qir: warning: {msg}", file=sys.stderr)
    for msg in notes:
        print(f"qir: note: {msg}", file=sys.stderr)

    text = render(rows, args.format, columns)
    try:
        if args.out:
            atomic_write(args.out, text)
            manifest = manifest_text(args.command, __version__, _manifest_params(args, config_axes), warns, notes)
            atomic_write(f"{args.out}.manifest", manifest)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"qir: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


def _unique(items) -> list[str]:
    return list(dict.fromkeys(items))


COMMANDS = {
    "snr": cmd_snr,
    "perr": cmd_perr,
    "zzb": cmd_zzb,
    "timebudget": cmd_timebudget,
    "mc": cmd_mc,
}


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
