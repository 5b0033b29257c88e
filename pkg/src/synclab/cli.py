"""Command-line front end.

Subcommands: ``simulate`` (one Monte Carlo cell), ``sweep`` (axis
cross-product to CSV plus a rendered figure), ``dump-template`` (energy
correlator taps), and ``trace`` (per-sample metric dump for one trial).

Options may come from a plain-text config file (``-c``), one ``key =
value`` per line with ``#`` comments; command-line flags override config
values, which override the built-in defaults shown in ``--help``.
Numeric sweep axes accept ``start:stop:step`` (inclusive) or comma lists.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .channel import scenario_config, scenario_names
from .datapath import WordLengthConfig
from .estimator import SyncConfig
from .harness import SweepRow, run_trials, sweep
from .preamble import DEFAULT_TEMPLATE_SEED, PhyParams, default_template, generate_preamble
from . import report


class ConfigError(Exception):
    """Bad or unknown configuration key; message names the key."""


def parse_float_axis(text: str) -> list[float]:
    """start:stop:step (inclusive), comma list, or single value."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(
                f"range must be start:stop:step, got {text!r}"
            )
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise argparse.ArgumentTypeError(f"non-numeric range {text!r}") from None
        if step <= 0:
            raise argparse.ArgumentTypeError("range step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        return [start + i * step for i in range(count)]
    try:
        return [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric value {text!r}") from None


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-integer value {text!r}") from None


def parse_str_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip() != ""]


def parse_one_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric value {text!r}") from None


_CONVERTERS = {
    "simulate": {
        "scenario": str,
        "snr": parse_one_float,
        "cfo": parse_one_float,
        "mode": str,
        "fa": int,
        "fx": int,
        "trials": int,
        "seed": int,
        "output": str,
    },
    "sweep": {
        "scenario": parse_str_list,
        "snr": parse_float_axis,
        "cfo": parse_float_axis,
        "mode": parse_str_list,
        "fa": parse_int_list,
        "fx": parse_int_list,
        "trials": int,
        "seed": int,
        "output": str,
    },
    "trace": {
        "scenario": str,
        "snr": parse_one_float,
        "cfo": parse_one_float,
        "mode": str,
        "fa": int,
        "fx": int,
        "seed": int,
        "output": str,
    },
    "dump-template": {
        "seed": int,
        "nov": int,
        "output": str,
    },
}


def load_config(path: str, command: str) -> dict:
    """Parse a key = value config file; unknown keys are errors."""
    known = _CONVERTERS[command]
    values: dict = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in known:
            raise ConfigError(f"config: unknown key '{key}'")
        try:
            values[key] = known[key](value)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise ConfigError(f"config: bad value for key '{key}': {exc}") from None
    return values


def _add_common(p: argparse.ArgumentParser, multi: bool) -> None:
    axis = parse_float_axis if multi else parse_one_float
    slist = parse_str_list if multi else str
    ilist = parse_int_list if multi else int
    names = "|".join(scenario_names())
    p.add_argument("--scenario", type=slist, default=None,
                   help=f"channel preset ({names}); comma list in sweeps (default awgn)")
    p.add_argument("--snr", type=axis, default=None,
                   help="SNR in dB; sweeps accept start:stop:step or comma list (default 10)")
    p.add_argument("--cfo", type=axis, default=None,
                   help="carrier offset in subcarrier spacings (default 0)")
    p.add_argument("--mode", type=slist, default=None,
                   help="metric source: float|fixed (default float)")
    p.add_argument("--fa", type=ilist, default=None,
                   help="fraction bits for products/metrics in fixed mode (default 5)")
    p.add_argument("--fx", type=ilist, default=None,
                   help="fraction bits for |c2|/XCR in fixed mode (default 4)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("-c", "--config", default=None, help="key = value config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sync-lab",
        description="L-DACS1 preamble synchronization laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one Monte Carlo cell")
    _add_common(p_sim, multi=False)
    p_sim.add_argument("--trials", type=int, default=None, help="trial count (default 1000)")
    p_sim.add_argument("-o", "--output", default=None,
                       help="optional CSV path for the single result row")

    p_sweep = sub.add_parser("sweep", help="cross-product sweep to CSV + figure")
    _add_common(p_sweep, multi=True)
    p_sweep.add_argument("--trials", type=int, default=None, help="trials per cell (default 1000)")
    p_sweep.add_argument("-o", "--output", default=None, help="CSV path (default sweep.csv)")
    p_sweep.add_argument("--no-figure", action="store_true", help="skip the PNG render")

    p_tpl = sub.add_parser("dump-template", help="write the energy-correlator taps")
    p_tpl.add_argument("--seed", type=int, default=None,
                       help=f"template seed (default {DEFAULT_TEMPLATE_SEED})")
    p_tpl.add_argument("--nov", type=int, default=None, help="oversampling factor (default 4)")
    p_tpl.add_argument("-c", "--config", default=None, help="key = value config file")
    p_tpl.add_argument("-o", "--output", default=None, help="CSV path (default template.csv)")
    p_tpl.add_argument("--no-figure", action="store_true", help="skip the PNG render")

    p_tr = sub.add_parser("trace", help="per-sample metric dump for one trial")
    _add_common(p_tr, multi=False)
    p_tr.add_argument("-o", "--output", default=None, help="CSV path (default trace.csv)")
    p_tr.add_argument("--no-figure", action="store_true", help="skip the PNG render")

    return parser


_DEFAULTS = {
    "scenario": "awgn",
    "snr": 10.0,
    "cfo": 0.0,
    "mode": "float",
    "fa": 5,
    "fx": 4,
    "trials": 1000,
    "seed": 0,
}


def _resolve(args: argparse.Namespace, key: str, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if args.config_values and key in args.config_values:
        return args.config_values[key]
    return default


def _word_cfg(fa: int, fx: int) -> WordLengthConfig:
    try:
        return WordLengthConfig(fa=fa, fx=fx)
    except ValueError as exc:
        raise ConfigError(f"config: {exc}") from None


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = _resolve(args, "scenario", _DEFAULTS["scenario"])
    snr = _resolve(args, "snr", _DEFAULTS["snr"])
    cfo = _resolve(args, "cfo", _DEFAULTS["cfo"])
    mode = _resolve(args, "mode", _DEFAULTS["mode"])
    trials = _resolve(args, "trials", _DEFAULTS["trials"])
    seed = _resolve(args, "seed", _DEFAULTS["seed"])
    word = _word_cfg(_resolve(args, "fa", _DEFAULTS["fa"]),
                     _resolve(args, "fx", _DEFAULTS["fx"]))
    params = PhyParams()
    cfg = scenario_config(scenario, snr_db=snr, cfo=cfo)
    sync_cfg = SyncConfig.for_params(params, mode)
    import time as _time

    start = _time.perf_counter()
    stats = run_trials(cfg, trials, seed, params,
                       word_cfg=word if mode == "fixed" else None,
                       sync_cfg=sync_cfg)
    row = SweepRow(
        scenario=scenario, snr_db=snr, cfo=cfo, mode=mode,
        fa=word.fa if mode == "fixed" else None,
        fx=word.fx if mode == "fixed" else None,
        stats=stats, runtime_s=_time.perf_counter() - start,
    )
    print(row.summary())
    output = _resolve(args, "output", None)
    if output:
        report.write_sweep_csv([row], output)
        print(f"wrote {output}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    scenarios = _resolve(args, "scenario", [_DEFAULTS["scenario"]])
    snrs = _resolve(args, "snr", [_DEFAULTS["snr"]])
    cfos = _resolve(args, "cfo", [_DEFAULTS["cfo"]])
    modes = _resolve(args, "mode", [_DEFAULTS["mode"]])
    fas = _resolve(args, "fa", [_DEFAULTS["fa"]])
    fxs = _resolve(args, "fx", [_DEFAULTS["fx"]])
    trials = _resolve(args, "trials", _DEFAULTS["trials"])
    seed = _resolve(args, "seed", _DEFAULTS["seed"])
    output = _resolve(args, "output", "sweep.csv")

    for mode in modes:
        if mode not in ("float", "fixed"):
            raise ConfigError(f"config: bad value for key 'mode': {mode!r}")
    word_cfgs = [_word_cfg(fa, fx) for fa in fas for fx in fxs]

    rows = sweep(
        scenarios, snrs, cfos, modes, word_cfgs,
        n_trials=trials, master_seed=seed,
        progress=lambda row: print(row.summary()),
    )
    report.write_sweep_csv(rows, output)
    print(f"wrote {output}")
    if not args.no_figure:
        print(f"wrote {report.plot_sweep(rows, output)}")
    return 0


def _cmd_dump_template(args: argparse.Namespace) -> int:
    seed = _resolve(args, "seed", DEFAULT_TEMPLATE_SEED)
    nov = _resolve(args, "nov", 4)
    output = _resolve(args, "output", "template.csv")
    params = PhyParams.for_oversampling(nov)
    template = generate_preamble(params, seed)
    report.write_template_csv(template, output)
    print(f"wrote {output} ({template.depth} taps, {template.nonzero_count} nonzero)")
    if not args.no_figure:
        print(f"wrote {report.plot_template(template, output)}")
    return 0


def _cmd_trace(args: argparse.Namespace) -> int:
    from .channel import build_trial_stream

    scenario = _resolve(args, "scenario", _DEFAULTS["scenario"])
    snr = _resolve(args, "snr", _DEFAULTS["snr"])
    cfo = _resolve(args, "cfo", _DEFAULTS["cfo"])
    mode = _resolve(args, "mode", _DEFAULTS["mode"])
    seed = _resolve(args, "seed", _DEFAULTS["seed"])
    word = _word_cfg(_resolve(args, "fa", _DEFAULTS["fa"]),
                     _resolve(args, "fx", _DEFAULTS["fx"]))
    output = _resolve(args, "output", "trace.csv")

    params = PhyParams()
    template = default_template(params)
    cfg = scenario_config(scenario, snr_db=snr, cfo=cfo)
    stream, true_sto = build_trial_stream(template, cfg, params, seed)
    trace = report.build_trace(stream, template, params, mode,
                               word if mode == "fixed" else None)
    report.write_trace_csv(trace, output)
    print(f"wrote {output} (true preamble start: sample {true_sto})")
    if not args.no_figure:
        print(f"wrote {report.plot_trace(trace, output)}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "dump-template": _cmd_dump_template,
    "trace": _cmd_trace,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.config_values = (
            load_config(args.config, args.command) if args.config else {}
        )
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure, not a usage problem
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
