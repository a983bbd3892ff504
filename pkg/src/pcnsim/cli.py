"""Command-line entry point: ``pcnsim [--config FILE] [flags]``.

Settings come from built-in defaults, then an optional ``key = value``
config file (``#`` starts a comment, keys are the long flag names without
the leading dashes), then command-line flags.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional

from .fees import FeeKind
from .ledger import LedgerError
from .money import to_ticks
from .sim import EmitError, SimConfig, emit, run
from .workload import generate_workload, read_workload, write_workload


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _rate(text: str) -> Fraction:
    rate = Fraction(text.strip())
    if rate < 0:
        raise ValueError("fee rate must be non-negative")
    return rate


# option name -> (SimConfig field, parser)
OPTIONS: Dict[str, tuple] = {
    "nodes": ("n_nodes", int),
    "transactions": ("n_transactions", int),
    "ba-m": ("ba_m", int),
    "mu": ("lognormal_mu", float),
    "sigma": ("lognormal_sigma", float),
    "seed": ("seed", int),
    "initial-balance": ("initial_balance", to_ticks),
    "funding": ("funding", to_ticks),
    "chain-fee": ("chain_fee", to_ticks),
    "fee-policy": ("fee_policy", FeeKind),
    "fee-rate": ("fee_rate", _rate),
    "flat-fee": ("flat_fee", to_ticks),
    "paper-literal-check": ("paper_literal_check", _bool),
}
# run-level options that are not part of SimConfig
RUN_OPTIONS: Dict[str, Callable[[str], object]] = {
    "out": Path,
    "workload-in": Path,
    "workload-out": Path,
    "dump-state": Path,
}


def read_config_file(path: Path) -> Dict[str, str]:
    """Parse ``key = value`` lines; unknown keys are an error."""
    values: Dict[str, str] = {}
    text = path.read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in OPTIONS and key not in RUN_OPTIONS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pcnsim",
        description="Simulate payments over a Barabasi-Albert payment channel network.",
    )
    p.add_argument("--config", type=Path, help="key = value config file (flags override it)")
    p.add_argument("--nodes", help="number of nodes (default 1000)")
    p.add_argument("--transactions", help="number of payments (default 100000)")
    p.add_argument("--ba-m", help="Barabasi-Albert attachment count (default 2)")
    p.add_argument("--funding", help="channel funding per side, units (default 1000)")
    p.add_argument("--initial-balance", help="on-chain balance per node, units (default 1000000)")
    p.add_argument("--chain-fee", help="fee per on-chain interaction, units (default 0.41)")
    p.add_argument("--fee-rate", help="proportional fee rate, e.g. 0.005 or 1/200")
    p.add_argument("--fee-policy", choices=[k.value for k in FeeKind], help="default imbalance")
    p.add_argument("--flat-fee", help="fee per forwarder for the flat policy, units")
    p.add_argument(
        "--paper-literal-check",
        action="store_const",
        const="true",
        help="also require room for the edge's own fee when admitting an edge",
    )
    p.add_argument("--mu", help="log-space mean of payment amounts (default 2.95)")
    p.add_argument("--sigma", help="log-space std dev of payment amounts (default 1.2)")
    p.add_argument("--seed", help="RNG seed (default 1)")
    p.add_argument("--out", help="output directory (default ./out)")
    p.add_argument("--workload-in", metavar="DIR", help="replay a workload exported earlier")
    p.add_argument("--workload-out", metavar="DIR", help="export the generated workload")
    p.add_argument("--dump-state", metavar="FILE", help="write the final network state dump")
    p.add_argument("-q", "--quiet", action="store_true", help="only print errors")
    return p


def resolve(args: argparse.Namespace) -> tuple:
    """Merge config file and flags into a SimConfig plus run options."""
    raw: Dict[str, str] = {}
    if args.config is not None:
        try:
            raw.update(read_config_file(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror or exc}") from exc
    for key in list(OPTIONS) + list(RUN_OPTIONS):
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            raw[key] = value

    fields = {}
    run_opts: Dict[str, object] = {"out": Path("out")}
    for key, text in raw.items():
        try:
            if key in OPTIONS:
                name, conv = OPTIONS[key]
                fields[name] = conv(text)
            else:
                run_opts[key] = RUN_OPTIONS[key](text)
        except (ValueError, TypeError, ArithmeticError) as exc:
            raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from exc
    return fields, run_opts


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        fields, opts = resolve(args)
        workload = None
        if "workload-in" in opts:
            workload = read_workload(opts["workload-in"])
            fields["n_nodes"] = workload.n_nodes
            fields["n_transactions"] = len(workload.transactions)
        cfg = SimConfig(**fields)
    except (ConfigError, ValueError) as exc:
        print(f"pcnsim: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pcnsim: {exc}", file=sys.stderr)
        return 1

    try:
        if workload is None:
            workload = generate_workload(cfg.workload_config())
        if "workload-out" in opts:
            write_workload(workload, opts["workload-out"])
        report = run(cfg, workload)
    except (LedgerError, ValueError) as exc:
        # e.g. InsufficientBalance while opening bootstrap channels
        print(f"pcnsim: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pcnsim: {exc}", file=sys.stderr)
        return 1

    try:
        written = emit(report, opts["out"])
        if "dump-state" in opts:
            dump_path = opts["dump-state"]
            dump_path.write_text(report.state.dump(), encoding="utf-8")
            written.append(dump_path)
    except (EmitError, OSError) as exc:
        print(f"pcnsim: {exc}", file=sys.stderr)
        return 1

    if not args.quiet:
        s = report.summary()
        counts = s["outcome_counts"]
        print(
            f"{s['n_transactions']} payments: "
            + ", ".join(f"{k}={v}" for k, v in counts.items())
        )
        print(
            f"transaction-phase spend {s['transaction_phase_spend']} "
            f"(naive on-chain {s['naive_onchain_cost']}), "
            f"bootstrap chain fees {s['bootstrap_chain_fees']}"
        )
        for path in written:
            print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
