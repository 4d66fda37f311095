"""Command-line front end.

Subcommands: ``map``, ``invert``, ``table``, ``sweep``, ``simulate``.
Data goes to stdout, diagnostics to stderr.

Exit codes:
    0  success
    2  malformed input (scenario file, flags, grid, simulation config)
    3  degenerate link (failure probability 0 or 1)
    4  requested event correlation not attainable
    5  too few failures observed in a simulation
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import __version__
from .errors import (
    AttainableRangeError,
    ConfigError,
    DegenerateScenarioError,
    DomainError,
    InsufficientEventsError,
)
from .mapping import (
    TABLE_ONE_EPSILON,
    TABLE_ONE_RHO_H,
    DualLinkScenario,
    LinkBudget,
    LinkReliability,
    event_correlation,
    dual_failure_probability,
    invert_correlation,
    link_reliability,
    link_reliability_from_epsilon,
    normalized_margin,
)
from .montecarlo import (
    McMethod,
    SimConfig,
    estimate_event_correlation,
    estimate_joint_failure,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_UNATTAINABLE = 4
EXIT_INSUFFICIENT = 5

CSV_HEADER = ("rho_h", "eps1", "eps2", "joint_failure", "rho")

_BUDGET_KEYS = ("p_t_dbm", "p_l_db", "p_th_dbm", "sigma_db")
_SIM_KEYS = ("n_samples", "seed", "method", "batch_count")
_SIM_DEFAULTS = {"n_samples": 1_000_000, "seed": 0, "method": "plain", "batch_count": 64}


class ScenarioError(DomainError):
    """Malformed scenario file or conflicting command-line inputs."""


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    links: list  # two link specs (dicts), None where unspecified
    rho_h: float | None = None
    sim: dict | None = None

    def to_json(self) -> dict:
        out: dict = {"links": [dict(link) for link in self.links]}
        if self.rho_h is not None:
            out["rho_h"] = self.rho_h
        if self.sim is not None:
            out["sim"] = dict(self.sim)
        return out


def _number(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{field}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ScenarioError(f"{field}: must be finite")
    return value


def _integer(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{field}: expected an integer, got {value!r}")
    return value


def parse_link(obj, field: str) -> dict:
    """Validate one link entry; exactly one of the three forms is allowed."""
    if not isinstance(obj, dict):
        raise ScenarioError(f"{field}: expected an object")
    keys = set(obj)
    unknown = keys - {"beta", "epsilon", *_BUDGET_KEYS}
    if unknown:
        raise ScenarioError(f"{field}: unknown field(s) {sorted(unknown)}")
    forms = []
    if "beta" in keys:
        forms.append("beta")
    if "epsilon" in keys:
        forms.append("epsilon")
    if keys & set(_BUDGET_KEYS):
        forms.append("budget")
    if len(forms) != 1:
        raise ScenarioError(
            f"{field}: give exactly one of beta, epsilon or a link budget "
            f"({', '.join(_BUDGET_KEYS)}); found {forms or 'none'}"
        )
    if forms[0] == "budget":
        missing = [k for k in _BUDGET_KEYS if k not in keys]
        if missing:
            raise ScenarioError(f"{field}: link budget is missing {missing}")
        return {k: _number(obj[k], f"{field}.{k}") for k in _BUDGET_KEYS}
    key = forms[0]
    value = _number(obj[key], f"{field}.{key}")
    if key == "epsilon" and not 0.0 <= value <= 1.0:
        raise ScenarioError(f"{field}.epsilon: must lie in [0, 1], got {value!r}")
    return {key: value}


def parse_sim(obj, field: str = "sim") -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{field}: expected an object")
    unknown = set(obj) - set(_SIM_KEYS)
    if unknown:
        raise ScenarioError(f"{field}: unknown field(s) {sorted(unknown)}")
    out = {}
    for key in ("n_samples", "seed", "batch_count"):
        if key in obj:
            out[key] = _integer(obj[key], f"{field}.{key}")
    if "method" in obj:
        if obj["method"] not in ("plain", "importance"):
            raise ScenarioError(f"{field}.method: expected 'plain' or 'importance', got {obj['method']!r}")
        out["method"] = obj["method"]
    return out


def parse_scenario(obj) -> Scenario:
    """Validate a decoded scenario document (unknown fields are rejected)."""
    if not isinstance(obj, dict):
        raise ScenarioError("scenario: expected a JSON object")
    unknown = set(obj) - {"links", "rho_h", "sim"}
    if unknown:
        raise ScenarioError(f"scenario: unknown field(s) {sorted(unknown)}")
    links = obj.get("links")
    if not isinstance(links, list) or len(links) != 2:
        raise ScenarioError("links: expected an array of exactly 2 link entries")
    parsed = [parse_link(link, f"links[{i}]") for i, link in enumerate(links)]
    rho_h = None
    if "rho_h" in obj:
        rho_h = _number(obj["rho_h"], "rho_h")
        if not -1.0 <= rho_h <= 1.0:
            raise ScenarioError(f"rho_h: must lie in [-1, 1], got {rho_h!r}")
    sim = parse_sim(obj["sim"]) if "sim" in obj else None
    return Scenario(parsed, rho_h, sim)


def load_scenario(path: str) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"--scenario: cannot read {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"--scenario: invalid JSON ({exc})") from exc
    return parse_scenario(obj)


def resolve_link(spec: dict) -> LinkReliability:
    if "beta" in spec:
        return link_reliability(spec["beta"])
    if "epsilon" in spec:
        eps = spec["epsilon"]
        if eps in (0.0, 1.0):
            raise DegenerateScenarioError(
                f"failure probability {eps!r} makes the link indicator constant"
            )
        return link_reliability_from_epsilon(eps)
    budget = LinkBudget(
        p_t=spec["p_t_dbm"], p_l=spec["p_l_db"], p_th=spec["p_th_dbm"], sigma_db=spec["sigma_db"]
    )
    return link_reliability(normalized_margin(budget))


def _scenario_from_args(args, need_rho_h: bool = True) -> Scenario:
    scenario = load_scenario(args.scenario) if args.scenario else Scenario([None, None])
    for i, (eps, beta) in enumerate(((args.eps1, args.beta1), (args.eps2, args.beta2))):
        flag = i + 1
        if eps is not None and beta is not None:
            raise ScenarioError(f"--eps{flag} and --beta{flag} are mutually exclusive")
        if eps is not None:
            scenario.links[i] = parse_link({"epsilon": eps}, f"--eps{flag}")
        elif beta is not None:
            scenario.links[i] = parse_link({"beta": beta}, f"--beta{flag}")
    for i, link in enumerate(scenario.links):
        if link is None:
            raise ScenarioError(
                f"links[{i}]: not specified (use --scenario, --eps{i + 1} or --beta{i + 1})"
            )
    rho_h = getattr(args, "rho_h", None)
    if rho_h is not None:
        if not math.isfinite(rho_h) or not -1.0 <= rho_h <= 1.0:
            raise ScenarioError(f"--rho-h: must lie in [-1, 1], got {rho_h!r}")
        scenario.rho_h = rho_h
    if need_rho_h and scenario.rho_h is None:
        raise ScenarioError("rho_h: not specified (use --rho-h or the scenario file)")
    return scenario


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def _fmt(value, precision: int) -> str:
    if value is None:
        return "nan"
    if isinstance(value, (int, float)):
        return f"{float(value):.{precision}g}"
    return str(value)


def _emit_record(record: dict, args, out) -> None:
    if args.format == "json":
        json.dump(record, out, indent=2)
        out.write("\n")
        return
    flat = {k: v for k, v in record.items() if k != "scenario"}
    if args.format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(flat.keys())
        writer.writerow(_fmt(v, args.precision) for v in flat.values())
        return
    width = max(len(k) for k in flat)
    for key, value in flat.items():
        out.write(f"{key:<{width}}  {_fmt(value, args.precision)}\n")


def _base_record(scenario: Scenario, link1: LinkReliability, link2: LinkReliability,
                 rho_h: float) -> dict:
    dual = DualLinkScenario(link1, link2, rho_h)
    corr = event_correlation(dual)
    joint = dual_failure_probability(dual)
    return {
        "scenario": scenario.to_json(),
        "beta1": link1.beta,
        "beta2": link2.beta,
        "eps1": link1.epsilon,
        "eps2": link2.epsilon,
        "rho_h": rho_h,
        "joint_failure": joint,
        "rho": corr.rho,
    }


def _sweep_rows(link1: LinkReliability, link2: LinkReliability, grid) -> list[tuple]:
    rows = []
    for rho_h in grid:
        corr = event_correlation(DualLinkScenario(link1, link2, rho_h))
        rows.append((rho_h, link1.epsilon, link2.epsilon, corr.joint_failure, corr.rho))
    return rows


def _emit_rows(rows, args, out) -> None:
    if args.format == "json":
        json.dump([dict(zip(CSV_HEADER, row)) for row in rows], out, indent=2)
        out.write("\n")
    elif args.format == "table":
        cells = [list(CSV_HEADER)] + [[_fmt(v, args.precision) for v in row] for row in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(CSV_HEADER))]
        for r in cells:
            out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() + "\n")
    else:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(_fmt(v, args.precision) for v in row)


def parse_grid(text: str) -> list[float]:
    """Parse ``start:stop:step`` (inclusive of stop) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [Decimal(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ScenarioError(f"--grid: expected start:stop:step, got {text!r}")
            start, stop, step = parts
            if step == 0 or (stop - start) * step < 0:
                raise ScenarioError(f"--grid: step {step} does not move from {start} to {stop}")
            count = int((stop - start) / step) + 1
            values = [float(start + i * step) for i in range(count)]
        else:
            values = [float(Decimal(p)) for p in text.split(",") if p.strip()]
    except (InvalidOperation, ValueError) as exc:
        raise ScenarioError(f"--grid: cannot parse {text!r}") from exc
    if not values:
        raise ScenarioError("--grid: grid is empty")
    for v in values:
        if not (math.isfinite(v) and -1.0 <= v <= 1.0):
            raise ScenarioError(f"--grid: value {v!r} outside [-1, 1]")
    return values


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_map(args, out) -> int:
    scenario = _scenario_from_args(args)
    link1, link2 = (resolve_link(spec) for spec in scenario.links)
    _emit_record(_base_record(scenario, link1, link2, scenario.rho_h), args, out)
    return EXIT_OK


def cmd_invert(args, out) -> int:
    scenario = _scenario_from_args(args, need_rho_h=False)
    link1, link2 = (resolve_link(spec) for spec in scenario.links)
    rho_h = invert_correlation(args.rho, link1.epsilon, link2.epsilon)
    scenario.rho_h = rho_h
    record = _base_record(scenario, link1, link2, rho_h)
    record["rho_target"] = args.rho
    _emit_record(record, args, out)
    return EXIT_OK


def cmd_table(args, out) -> int:
    link = link_reliability_from_epsilon(TABLE_ONE_EPSILON)
    rows = _sweep_rows(link, link, TABLE_ONE_RHO_H)
    if args.format == "table":
        labels = ("rho_h", "rho")
        cols = [[_fmt(r[0], args.precision), _fmt(r[4], args.precision)] for r in rows]
        widths = [max(len(c[0]), len(c[1])) for c in cols]
        for i, label in enumerate(labels):
            cells = "  ".join(c[i].rjust(w) for c, w in zip(cols, widths))
            out.write(f"{label:<5}  {cells}\n")
    else:
        _emit_rows(rows, args, out)
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    grid = parse_grid(args.grid)
    scenario = _scenario_from_args(args, need_rho_h=False)
    link1, link2 = (resolve_link(spec) for spec in scenario.links)
    _emit_rows(_sweep_rows(link1, link2, grid), args, out)
    return EXIT_OK


def _z_score(estimate: float, exact: float, std_error: float):
    if estimate == exact:
        return 0.0
    if std_error == 0.0:
        return None
    return (estimate - exact) / std_error


def cmd_simulate(args, out) -> int:
    scenario = _scenario_from_args(args)
    sim = dict(_SIM_DEFAULTS)
    sim.update(scenario.sim or {})
    overrides = {
        "n_samples": args.samples, "seed": args.seed,
        "method": args.method, "batch_count": args.batches,
    }
    sim.update({k: v for k, v in overrides.items() if v is not None})
    scenario.sim = sim
    config = SimConfig(
        n_samples=sim["n_samples"], seed=sim["seed"],
        method=McMethod(sim["method"]), batch_count=sim["batch_count"], workers=args.workers,
    )
    link1, link2 = (resolve_link(spec) for spec in scenario.links)
    record = _base_record(scenario, link1, link2, scenario.rho_h)
    joint = estimate_joint_failure(link1.beta, link2.beta, scenario.rho_h, config)
    record["mc_estimate"] = joint.estimate
    record["mc_std_error"] = joint.std_error
    record["mc_z"] = _z_score(joint.estimate, record["joint_failure"], joint.std_error)
    if config.method is McMethod.PLAIN:
        corr = estimate_event_correlation(link1.beta, link2.beta, scenario.rho_h, config)
        record["mc_rho"] = corr.estimate
        record["mc_rho_std_error"] = corr.std_error
        record["mc_rho_z"] = _z_score(corr.estimate, record["rho"], corr.std_error)
    _emit_record(record, args, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _precision(text: str) -> int:
    value = int(text)
    if not 1 <= value <= 17:
        raise argparse.ArgumentTypeError("precision must be between 1 and 17")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shadowcorr",
        description="Map shadowing cross-correlation to failure-event correlation "
                    "for two links from one device.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument("--format", choices=("table", "csv", "json"), default=None)
    output.add_argument("--precision", type=_precision, default=6,
                        help="significant digits in table/csv output (default 6)")

    links = argparse.ArgumentParser(add_help=False)
    links.add_argument("--scenario", metavar="PATH", help="JSON scenario file")
    links.add_argument("--eps1", type=float, help="failure probability of link 1")
    links.add_argument("--eps2", type=float, help="failure probability of link 2")
    links.add_argument("--beta1", type=float, help="normalized margin of link 1")
    links.add_argument("--beta2", type=float, help="normalized margin of link 2")

    rho_h = argparse.ArgumentParser(add_help=False)
    rho_h.add_argument("--rho-h", dest="rho_h", type=float, help="shadowing cross-correlation")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", parents=[links, rho_h, output],
                       help="event correlation and joint failure for a scenario")
    p.set_defaults(func=cmd_map, default_format="table")

    p = sub.add_parser("invert", parents=[links, output],
                       help="shadowing correlation that yields a target event correlation")
    p.add_argument("--rho", type=float, required=True, help="target event correlation")
    p.set_defaults(func=cmd_invert, default_format="table")

    p = sub.add_parser("table", parents=[output],
                       help="rho_h -> rho table for two links at eps = 1e-4")
    p.set_defaults(func=cmd_table, default_format="table")

    p = sub.add_parser("sweep", parents=[links, output],
                       help="CSV of the mapping over a grid of rho_h values")
    p.add_argument("--grid", required=True, help="start:stop:step or comma-separated list")
    p.set_defaults(func=cmd_sweep, default_format="csv")

    p = sub.add_parser("simulate", parents=[links, rho_h, output],
                       help="Monte Carlo check of the analytic values")
    p.add_argument("--samples", type=int, help="number of sample pairs")
    p.add_argument("--seed", type=int, help="64-bit RNG seed")
    p.add_argument("--method", choices=("plain", "importance"))
    p.add_argument("--batches", type=int, help="batches for batch-means standard error")
    p.add_argument("--workers", type=int, default=1,
                   help="sampling threads (results do not depend on it)")
    p.set_defaults(func=cmd_simulate, default_format="table")
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        args.format = args.default_format

    # buffer so that a failing command writes nothing to stdout
    buffer = io.StringIO()
    try:
        code = args.func(args, buffer)
    except AttainableRangeError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_UNATTAINABLE
    except InsufficientEventsError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INSUFFICIENT
    except DegenerateScenarioError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DEGENERATE
    except (DomainError, ConfigError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    out.write(buffer.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
