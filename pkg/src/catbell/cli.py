"""Command-line interface.

Subcommands: rates, sweep, oracle, plan, montecarlo.  Configuration comes from
an INI file with sections [source], [channel], [detector], [sweep], [run];
``--set section.key=value`` and named flags override file values (named flags
win).  Machine output (--output csv|json) carries 12 significant digits and is
byte-identical for identical inputs; the default table view rounds to 4.

Exit codes: 0 success, 1 configuration or usage error, 2 infeasible request or
oracle disagreement.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, replace

from . import experiment, fock
from .experiment import ChannelParams, DetectorSpec
from .protocols import PROTOCOLS, ProtocolParams, protocol_report, _usd2_prob, _usd4_prob

TABLE, CSV, JSON = "table", "csv", "json"
OUTPUTS = (TABLE, CSV, JSON)
SWEEP_AXES = ("delta_sigma_rad", "phi_rad", "alpha", "distance_km_total")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2


class ConfigError(Exception):
    """Bad configuration or usage; maps to exit code 1."""


class InfeasibleError(Exception):
    """Physically infeasible request or failed oracle check; maps to exit code 2."""


_SCHEMA = {
    "source": {
        "alpha": float,
        "phi_rad": float,
        "sigma1_rad": float,
        "sigma2_rad": float,
        "rate_hz": float,
    },
    "channel": {
        "loss_db_per_km": float,
        "distance_km_total": float,
    },
    "detector": {
        "dark_rate_hz": float,
        "coincidence_window_s": float,
    },
    "sweep": {
        "variable": str,
        "start": float,
        "stop": float,
        "steps": int,
    },
    "run": {
        "protocol": str,
        "seed": int,
        "duration_s": float,
        "output": str,
        "rate_floor_counts_per_s": float,
        "oracle_tolerance": float,
    },
}

_DEFAULTS = {
    ("source", "alpha"): 100.0,
    ("source", "phi_rad"): 0.0028,
    ("source", "sigma1_rad"): 0.0,
    ("source", "sigma2_rad"): 0.0,
    ("source", "rate_hz"): 1e9,
    ("channel", "loss_db_per_km"): 0.15,
    ("channel", "distance_km_total"): 400.0,
    ("detector", "dark_rate_hz"): 0.0008,
    ("detector", "coincidence_window_s"): 1e-9,
    ("sweep", "variable"): "",
    ("sweep", "start"): 0.0,
    ("sweep", "stop"): 0.0,
    ("sweep", "steps"): 0,
    ("run", "protocol"): "usd2",
    ("run", "seed"): 12345,
    ("run", "duration_s"): 10000.0,
    ("run", "output"): TABLE,
    ("run", "rate_floor_counts_per_s"): 1.0,
    ("run", "oracle_tolerance"): 1e-8,
}

# argparse dest -> (section, key)
_FLAG_MAP = {
    "alpha": ("source", "alpha"),
    "phi_rad": ("source", "phi_rad"),
    "sigma1_rad": ("source", "sigma1_rad"),
    "sigma2_rad": ("source", "sigma2_rad"),
    "source_rate_hz": ("source", "rate_hz"),
    "loss_db_per_km": ("channel", "loss_db_per_km"),
    "distance_km_total": ("channel", "distance_km_total"),
    "dark_rate_hz": ("detector", "dark_rate_hz"),
    "coincidence_window_s": ("detector", "coincidence_window_s"),
    "protocol": ("run", "protocol"),
    "seed": ("run", "seed"),
    "duration_s": ("run", "duration_s"),
    "output": ("run", "output"),
    "rate_floor": ("run", "rate_floor_counts_per_s"),
    "tolerance": ("run", "oracle_tolerance"),
    "axis": ("sweep", "variable"),
    "start": ("sweep", "start"),
    "stop": ("sweep", "stop"),
    "steps": ("sweep", "steps"),
}


@dataclass(frozen=True)
class RunConfig:
    alpha: float
    phi_rad: float
    sigma1_rad: float
    sigma2_rad: float
    source_rate_hz: float
    loss_db_per_km: float
    distance_km_total: float
    dark_rate_hz: float
    coincidence_window_s: float
    sweep_variable: str
    sweep_start: float
    sweep_stop: float
    sweep_steps: int
    protocol: str
    seed: int
    duration_s: float
    output: str
    rate_floor: float
    oracle_tolerance: float

    def params(self) -> ProtocolParams:
        try:
            return ProtocolParams(self.alpha, self.phi_rad, self.sigma1_rad, self.sigma2_rad)
        except ValueError as exc:
            raise ConfigError(f"source: {exc}") from None

    def channel(self) -> ChannelParams:
        try:
            return ChannelParams.from_total(self.loss_db_per_km, self.distance_km_total)
        except ValueError as exc:
            raise ConfigError(f"channel: {exc}") from None

    def detector(self) -> DetectorSpec:
        try:
            return DetectorSpec(self.dark_rate_hz, self.coincidence_window_s)
        except ValueError as exc:
            raise ConfigError(f"detector: {exc}") from None


def _coerce(section: str, key: str, raw, kind):
    if isinstance(raw, kind):
        return raw
    try:
        return kind(raw)
    except (TypeError, ValueError):
        want = {float: "a number", int: "an integer", str: "a string"}[kind]
        raise ConfigError(f"{section}.{key}: expected {want}, got {raw!r}") from None


def load_config(path: str | None, overrides: list[tuple[str, str, str]]) -> RunConfig:
    """Merge defaults, an optional INI file, and override assignments into a RunConfig."""
    values = dict(_DEFAULTS)
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as handle:
                parser.read_file(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {path!r}: {exc}") from None
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown config field {section}.{key}")
                values[(section, key)] = _coerce(section, key, raw, _SCHEMA[section][key])
    for section, key, raw in overrides:
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown config field {section}.{key}")
        values[(section, key)] = _coerce(section, key, raw, _SCHEMA[section][key])

    cfg = RunConfig(
        alpha=values[("source", "alpha")],
        phi_rad=values[("source", "phi_rad")],
        sigma1_rad=values[("source", "sigma1_rad")],
        sigma2_rad=values[("source", "sigma2_rad")],
        source_rate_hz=values[("source", "rate_hz")],
        loss_db_per_km=values[("channel", "loss_db_per_km")],
        distance_km_total=values[("channel", "distance_km_total")],
        dark_rate_hz=values[("detector", "dark_rate_hz")],
        coincidence_window_s=values[("detector", "coincidence_window_s")],
        sweep_variable=values[("sweep", "variable")],
        sweep_start=values[("sweep", "start")],
        sweep_stop=values[("sweep", "stop")],
        sweep_steps=values[("sweep", "steps")],
        protocol=values[("run", "protocol")],
        seed=values[("run", "seed")],
        duration_s=values[("run", "duration_s")],
        output=values[("run", "output")],
        rate_floor=values[("run", "rate_floor_counts_per_s")],
        oracle_tolerance=values[("run", "oracle_tolerance")],
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError(f"run.protocol: expected one of {PROTOCOLS}, got {cfg.protocol!r}")
    if cfg.output not in OUTPUTS:
        raise ConfigError(f"run.output: expected one of {OUTPUTS}, got {cfg.output!r}")
    if cfg.alpha <= 0:
        raise ConfigError(f"source.alpha: must be > 0, got {cfg.alpha}")
    if cfg.source_rate_hz <= 0:
        raise ConfigError(f"source.rate_hz: must be > 0, got {cfg.source_rate_hz}")
    if cfg.loss_db_per_km < 0:
        raise ConfigError(f"channel.loss_db_per_km: must be >= 0, got {cfg.loss_db_per_km}")
    if cfg.distance_km_total < 0:
        raise ConfigError(f"channel.distance_km_total: must be >= 0, got {cfg.distance_km_total}")
    if cfg.dark_rate_hz < 0:
        raise ConfigError(f"detector.dark_rate_hz: must be >= 0, got {cfg.dark_rate_hz}")
    if cfg.coincidence_window_s <= 0:
        raise ConfigError(f"detector.coincidence_window_s: must be > 0, "
                          f"got {cfg.coincidence_window_s}")
    if cfg.duration_s < 0:
        raise ConfigError(f"run.duration_s: must be >= 0, got {cfg.duration_s}")
    if cfg.rate_floor <= 0:
        raise ConfigError(f"run.rate_floor_counts_per_s: must be > 0, got {cfg.rate_floor}")
    if cfg.oracle_tolerance <= 0:
        raise ConfigError(f"run.oracle_tolerance: must be > 0, got {cfg.oracle_tolerance}")


def _fmt_machine(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _fmt_human(value):
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return float(f"{value:.12g}")
    return value


def _emit(rows: list[dict], output: str, stream) -> None:
    """Write records: key/value table, RFC 4180 CSV, or JSON array/object."""
    if output == CSV:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(rows[0].keys())
        for row in rows:
            writer.writerow(_fmt_machine(v) for v in row.values())
    elif output == JSON:
        payload = [{k: _json_value(v) for k, v in row.items()} for row in rows]
        json.dump(payload[0] if len(payload) == 1 else payload, stream,
                  indent=2, sort_keys=True)
        stream.write("\n")
    else:
        for row in rows:
            width = max(len(k) for k in row)
            for key, value in row.items():
                stream.write(f"{key:<{width}}  {_fmt_human(value)}\n")
            if row is not rows[-1]:
                stream.write("\n")


def _rates_record(cfg: RunConfig, params: ProtocolParams, channel: ChannelParams) -> dict:
    report = protocol_report(params, channel, cfg.protocol)
    rates = experiment.counting_rates(report.p_max, report.p_min, cfg.source_rate_hz)
    alpha_prime, n_lost = experiment.attenuate(params.alpha, channel)
    record = {
        "protocol": cfg.protocol,
        "alpha": params.alpha,
        "phi_rad": params.phi,
        "sigma1_rad": params.sigma1,
        "sigma2_rad": params.sigma2,
        "loss_db_per_km": cfg.loss_db_per_km,
        "distance_km_total": channel.distance_km_total,
        "alpha_prime_sq": alpha_prime**2,
        "n_lost": n_lost,
        "p_success": report.p_success,
        "p_max": report.p_max,
        "p_min": report.p_min,
        "visibility": report.visibility,
        "chsh_s": report.chsh_s,
        "r_success_per_s": report.p_success * cfg.source_rate_hz,
        "r_max_per_s": rates.r_max,
        "r_min_per_s": rates.r_min,
    }
    return record


def cmd_rates(cfg: RunConfig, stream) -> int:
    params, channel = cfg.params(), cfg.channel()
    record = _rates_record(cfg, params, channel)
    if params.phi == 0.0:
        record["note"] = ("phi = 0: no conditional phase is imprinted, "
                          "so every detection rate vanishes")
    _emit([record], cfg.output, stream)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, stream) -> int:
    axis = cfg.sweep_variable
    if not axis:
        raise ConfigError("sweep.variable: exactly one sweep axis is required")
    if "," in axis:
        raise ConfigError(f"sweep.variable: exactly one sweep axis is required, got {axis!r}")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep.variable: expected one of {SWEEP_AXES}, got {axis!r}")
    if cfg.sweep_steps < 1:
        raise ConfigError(f"sweep.steps: must be >= 1, got {cfg.sweep_steps}")
    base_params, base_channel = cfg.params(), cfg.channel()
    rows = []
    for i in range(cfg.sweep_steps):
        if cfg.sweep_steps == 1:
            value = cfg.sweep_start
        else:
            value = cfg.sweep_start + (cfg.sweep_stop - cfg.sweep_start) * i / (cfg.sweep_steps - 1)
        params, channel = base_params, base_channel
        try:
            if axis == "delta_sigma_rad":
                params = replace(base_params, sigma1=value, sigma2=0.0)
            elif axis == "phi_rad":
                params = replace(base_params, phi=value)
            elif axis == "alpha":
                params = replace(base_params, alpha=value)
            else:
                channel = ChannelParams.from_total(cfg.loss_db_per_km, value)
        except ValueError as exc:
            raise ConfigError(f"sweep value {value}: {exc}") from None
        report = protocol_report(params, channel, cfg.protocol)
        rates = experiment.counting_rates(report.p_max, report.p_min, cfg.source_rate_hz)
        rows.append({
            axis: value,
            "p_success": report.p_success,
            "p_max": report.p_max,
            "p_min": report.p_min,
            "visibility": report.visibility,
            "chsh_s": report.chsh_s,
            "r_max_per_s": rates.r_max,
            "r_min_per_s": rates.r_min,
        })
    _emit(rows, cfg.output, stream)
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, stream) -> int:
    params, channel = cfg.params(), cfg.channel()
    alpha_prime, _ = experiment.attenuate(params.alpha, channel)
    if alpha_prime > fock.MAX_ORACLE_AMPLITUDE:
        raise InfeasibleError(
            f"surviving amplitude {alpha_prime:.3f} exceeds the oracle budget; "
            f"recommended max {fock.MAX_ORACLE_AMPLITUDE} "
            "(reduce alpha or increase the distance)"
        )
    pipelines = {"usd2": _usd2_prob, "usd4": _usd4_prob}
    rows = []
    worst = 0.0
    for which in PROTOCOLS:
        for dsig in (math.pi, math.pi / 2, 0.0):
            point = replace(params, sigma1=dsig, sigma2=0.0)
            p_pipeline = pipelines[which](point, channel)
            p_oracle = fock.oracle_protocol_prob(point, channel, which)
            err = abs(p_pipeline - p_oracle)
            worst = max(worst, err)
            rows.append({
                "protocol": which,
                "delta_sigma_rad": dsig,
                "p_pipeline": p_pipeline,
                "p_oracle": p_oracle,
                "abs_error": err,
                "ok": err <= cfg.oracle_tolerance,
            })
    _emit(rows, cfg.output, stream)
    if worst > cfg.oracle_tolerance:
        raise InfeasibleError(
            f"oracle disagreement {worst:.3e} exceeds tolerance {cfg.oracle_tolerance:.3e}"
        )
    return EXIT_OK


def cmd_plan(cfg: RunConfig, stream) -> int:
    params = cfg.params()
    result = experiment.max_range(params, cfg.loss_db_per_km, cfg.rate_floor,
                                  cfg.source_rate_hz, cfg.protocol)
    if not result.feasible:
        _emit([{
            "protocol": cfg.protocol,
            "rate_floor_counts_per_s": cfg.rate_floor,
            "feasible": False,
            "max_range_km_total": None,
            "limited_by": result.limited_by,
        }], cfg.output, stream)
        print(f"infeasible: no distance satisfies rate >= {cfg.rate_floor} counts/s "
              "with visibility above 1/sqrt(2)", file=sys.stderr)
        return EXIT_INFEASIBLE
    channel = ChannelParams.from_total(cfg.loss_db_per_km, result.distance_km_total)
    _, n_lost = experiment.attenuate(params.alpha, channel)
    from .protocols import SQRT8, visibility
    vis = visibility(n_lost, params.phi, exact=True)
    optimum = experiment.optimize_phi(params.alpha, channel, cfg.protocol)
    record = {
        "protocol": cfg.protocol,
        "rate_floor_counts_per_s": cfg.rate_floor,
        "feasible": True,
        "max_range_km_total": result.distance_km_total,
        "limited_by": result.limited_by,
        "visibility_at_range": vis,
        "chsh_s_at_range": SQRT8 * vis,
        "chsh_margin": SQRT8 * vis - 2.0,
        "phi_star_at_range": optimum.phi_star,
        "phi_star_p_max": optimum.p_max,
    }
    _emit([record], cfg.output, stream)
    return EXIT_OK


def cmd_montecarlo(cfg: RunConfig, stream, bins_out: str | None = None) -> int:
    params, channel, det = cfg.params(), cfg.channel(), cfg.detector()
    try:
        result = experiment.monte_carlo_run(params, channel, det, cfg.duration_s, cfg.seed,
                                            cfg.protocol, cfg.source_rate_hz)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    n_fold = 2 if cfg.protocol == "usd2" else 4
    no_counts = result.counts_max + result.counts_min == 0
    if no_counts:
        print("warning: no counts collected; visibility estimate undefined",
              file=sys.stderr)
    s_est = None if no_counts else 2.0 * math.sqrt(2.0) * result.estimated_visibility
    s_err = None if no_counts else 2.0 * math.sqrt(2.0) * result.stderr_visibility
    record = {
        "protocol": cfg.protocol,
        "duration_s": cfg.duration_s,
        "seed": result.seed,
        "source_rate_hz": cfg.source_rate_hz,
        "counts_max": result.counts_max,
        "counts_min": result.counts_min,
        "estimated_visibility": None if no_counts else result.estimated_visibility,
        "stderr_visibility": None if no_counts else result.stderr_visibility,
        "s_estimate": s_est,
        "s_stderr": s_err,
        "s_above_2_at_3sigma": bool(not no_counts and s_err > 0
                                    and (s_est - 2.0) / s_err > 3.0),
        "accidental_rate_per_s": experiment.accidental_rate(det, n_fold, cfg.source_rate_hz),
    }
    if bins_out is not None:
        blocks = experiment.monte_carlo_blocks(params, channel, det, cfg.duration_s,
                                               cfg.seed, cfg.protocol, cfg.source_rate_hz)
        with open(bins_out, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["block_index", "t_start_s", "counts_max", "counts_min"])
            for index, t_start, c_max, c_min in blocks:
                writer.writerow([index, _fmt_machine(float(t_start)), c_max, c_min])
    _emit([record], cfg.output, stream)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", metavar="PATH", help="INI configuration file")
    sp.add_argument("--set", dest="assignments", action="append", default=[],
                    metavar="SECTION.KEY=VALUE", help="override one config field")
    sp.add_argument("--output", choices=OUTPUTS, help="output format")
    sp.add_argument("--alpha", type=str)
    sp.add_argument("--phi-rad", type=str)
    sp.add_argument("--sigma1-rad", type=str)
    sp.add_argument("--sigma2-rad", type=str)
    sp.add_argument("--source-rate-hz", type=str)
    sp.add_argument("--loss-db-per-km", type=str)
    sp.add_argument("--distance-km-total", type=str)
    sp.add_argument("--dark-rate-hz", type=str)
    sp.add_argument("--coincidence-window-s", type=str)
    sp.add_argument("--protocol", choices=PROTOCOLS)
    sp.add_argument("--seed", type=str)
    sp.add_argument("--duration-s", type=str)
    sp.add_argument("--rate-floor", type=str, help="rate floor in counts/s (plan)")
    sp.add_argument("--tolerance", type=str, help="oracle agreement tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="catbell",
                     description="Phase-entangled coherent-state link calculator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("rates", "detection probabilities and counting rates"),
        ("sweep", "sweep one axis and tabulate rates"),
        ("oracle", "compare the branch algebra against the Fock oracle"),
        ("plan", "maximum range for a rate floor and Bell violation"),
        ("montecarlo", "simulate coincidence counting"),
    ):
        sp = sub.add_parser(name, help=helptext)
        _add_common(sp)
        if name == "sweep":
            sp.add_argument("--axis", choices=SWEEP_AXES)
            sp.add_argument("--start", type=str)
            sp.add_argument("--stop", type=str)
            sp.add_argument("--steps", type=str)
        if name == "montecarlo":
            sp.add_argument("--bins-out", metavar="PATH",
                            help="write per-block counts as CSV")
    return parser


def _collect_overrides(args: argparse.Namespace) -> list[tuple[str, str, str]]:
    overrides = []
    for assignment in args.assignments:
        if "=" not in assignment or "." not in assignment.split("=", 1)[0]:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {assignment!r}")
        target, raw = assignment.split("=", 1)
        section, key = target.split(".", 1)
        overrides.append((section.strip(), key.strip(), raw.strip()))
    for dest, (section, key) in _FLAG_MAP.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides.append((section, key, str(value)))
    return overrides


def main(argv: list[str] | None = None, stream=None) -> int:
    stream = stream or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, _collect_overrides(args))
        if args.command == "rates":
            return cmd_rates(cfg, stream)
        if args.command == "sweep":
            return cmd_sweep(cfg, stream)
        if args.command == "oracle":
            return cmd_oracle(cfg, stream)
        if args.command == "plan":
            return cmd_plan(cfg, stream)
        if args.command == "montecarlo":
            return cmd_montecarlo(cfg, stream, bins_out=getattr(args, "bins_out", None))
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


def entry() -> None:
    sys.exit(main())
