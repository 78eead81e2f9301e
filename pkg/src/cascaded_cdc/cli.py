"""Command-line front end: ``cascaded-cdc {design,simulate,verify,sweep}``.

Parameters come from a flat TOML config (``s``, ``x = [4, 6]``, ``eta1``,
``eta2``, ``t_bits``, ``seed``, ...) and/or flags; flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import analysis, oracle
from .design import DesignError, DesignParams, build_design
from .mapper import MapError, run_map
from .shuffle import ShuffleError, Strategy, rational_json, run_shuffle

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("cascaded_cdc")

CONFIG_KEYS = {"s", "x", "eta1", "eta2", "t_bits", "seed", "coeff_seed", "strategy", "sender_policy"}
SWEEP_HEADER = [
    "K", "s", "x", "X", "N", "Q", "eta1", "eta2",
    "formula_load", "formula_load_decimal", "simulated_load", "match", "round_bits",
]


class UsageError(Exception):
    pass


def fmt_decimal(q: Fraction) -> str:
    return f"{float(q):.12g}"


def parse_int_list(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        vals = text
    else:
        vals = [v for v in str(text).strip().strip("[]()").replace(",", " ").split() if v]
    try:
        return tuple(int(v) for v in vals)
    except (TypeError, ValueError):
        raise UsageError(f"x must be a list of integers, got {text!r}") from None


def _x_arg(text) -> tuple[int, ...]:
    try:
        return parse_int_list(text)
    except UsageError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def load_config(path) -> dict:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise UsageError(f"{path}: {e}") from None
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"{path}: unknown keys {sorted(unknown)}")
    return data


def merged_config(args) -> dict:
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def params_from(cfg: dict) -> DesignParams:
    if "x" not in cfg:
        raise UsageError("group sizes x are required (--x 4,6 or x = [4, 6] in the config)")
    try:
        return DesignParams.create(cfg.get("s"), parse_int_list(cfg["x"]), int(cfg.get("eta1", 1)),
                                   int(cfg.get("eta2", 1)))
    except DesignError as e:
        raise UsageError(str(e)) from None


# -- operations ---------------------------------------------------------------


def cmd_design(cfg: dict) -> dict:
    return build_design(params_from(cfg)).to_dict()


def design_table(dump: dict) -> str:
    out = io.StringIO()
    out.write(f"{'node':>5} {'group':>5} {'files':>6} {'functions':>9}\n")
    for n in dump["nodes"]:
        out.write(f"{n['node']:>5} {n['group']:>5} {len(n['files']):>6} {len(n['functions']):>9}\n")
    return out.getvalue()


def simulate(params: DesignParams, strategy="default", t_bits=None, seed=0, coeff_seed=0,
             sender_policy="lowest", jobs=1):
    """Map, shuffle and audit one design. Returns (report, ledger)."""
    strategy = Strategy(strategy)
    design = build_design(params)
    mapout = run_map(design, t_bits, seed, strategy)
    delivered, ledger = run_shuffle(design, mapout, strategy, coeff_seed, sender_policy, jobs)
    audit = oracle.audit_delivery(design, mapout, delivered)
    formula = analysis.load_formula(params)
    load = ledger.normalized_load
    r_measured = Fraction(mapout.total_computed, params.Q * params.N)
    match = (load == formula.L_c) if strategy is Strategy.DEFAULT else None
    report = {
        "params": params.as_dict(),
        "K": params.K, "X": params.X, "N": params.N, "Q": params.Q,
        "strategy": strategy.value,
        "t_bits": mapout.t_bits,
        "seed": seed,
        "coeff_seed": coeff_seed,
        "computation_load": rational_json(r_measured),
        "computation_load_formula": formula.r_c,
        "shuffle": ledger.summary(),
        "normalized_load": rational_json(load),
        "formula_load": rational_json(formula.L_c),
        "match": match,
        "redundant_deliveries": delivered.redundant,
        "audit": audit.to_dict(),
    }
    report["ok"] = audit.ok and match is not False and r_measured == params.s and delivered.redundant == 0
    return report, ledger


def cmd_simulate(cfg: dict, strategy=None, seed=None, jobs=1):
    params = params_from(cfg)
    return simulate(
        params,
        strategy=strategy or cfg.get("strategy", "default"),
        t_bits=cfg.get("t_bits"),
        seed=int(seed if seed is not None else cfg.get("seed", 0)),
        coeff_seed=int(cfg.get("coeff_seed", 0)),
        sender_policy=cfg.get("sender_policy", "lowest"),
        jobs=jobs,
    )


def verify(params: DesignParams, strategy="default", t_bits=None, seed=0, coeff_seed=0, jobs=1,
           limit=oracle.DEFAULT_GUARD) -> dict:
    """Cross-check a simulation against the closed form and the brute-force oracle."""
    design = build_design(params)
    report, ledger = simulate(params, strategy, t_bits, seed, coeff_seed, jobs=jobs)
    counts = oracle.requester_counts(design, limit)
    mismatched = 0
    for i in range(1, params.Q + 1):
        for j in range(1, params.N + 1):
            if len(design.requesters(i, j)) != counts[i - 1, j - 1]:
                mismatched += 1
    hist = {g: int((counts == g).sum()) for g in range(params.s + 1)}
    brute_units = oracle.count_round_units(design, strategy, limit)
    brute = sum(brute_units, Fraction(0)) / (params.Q * params.N)
    checks = {
        "delivery_audit": report["audit"]["ok"],
        "requesters_match_design": mismatched == 0,
        "bruteforce_rounds_match_ledger": brute_units == ledger.per_round_units,
        "bruteforce_load_matches_ledger": brute == ledger.normalized_load,
        "computation_load_is_s": report["computation_load"]["numerator"] == str(params.s)
        and report["computation_load"]["denominator"] == "1",
        "no_redundant_deliveries": report["redundant_deliveries"] == 0,
    }
    if Strategy(strategy) is Strategy.DEFAULT:
        checks["bruteforce_load_matches_formula"] = brute == analysis.communication_load_formula(params)
        checks["ledger_matches_formula"] = bool(report["match"])
    return {
        "params": params.as_dict(),
        "strategy": Strategy(strategy).value,
        "requester_histogram": {str(g): c for g, c in hist.items()},
        "bruteforce_load": rational_json(brute),
        "ledger_load": report["normalized_load"],
        "checks": checks,
        "ok": all(checks.values()),
        "audit": report["audit"],
    }


def sweep_configs(spec: dict) -> list[tuple]:
    """Expand a sweep spec into raw (x, eta1, eta2) tuples (not yet validated)."""
    eta1, eta2 = spec.get("eta1", 1), spec.get("eta2", 1)
    out = [(tuple(x), eta1, eta2) for x in spec.get("configs", [])]
    for fam in spec.get("family", []):
        s, lo, hi = int(fam["s"]), int(fam["min"]), int(fam["max"])
        kind = fam.get("kind", "uniform")
        if kind == "uniform":
            xs = [(c,) * s for c in range(lo, hi + 1)]
        elif kind == "grid":
            xs = list(itertools.combinations_with_replacement(range(lo, hi + 1), s))
        else:
            raise UsageError(f"unknown family kind {kind!r}")
        out.extend((x, fam.get("eta1", eta1), fam.get("eta2", eta2)) for x in xs)
    return out


def sweep_row(x, eta1, eta2, do_simulate=False, strategy="default", seed=0, jobs=1) -> dict | None:
    try:
        params = DesignParams(tuple(int(v) for v in x), int(eta1), int(eta2))
    except (DesignError, TypeError, ValueError) as e:
        log.warning("skipping config x=%s eta1=%s eta2=%s: %s", x, eta1, eta2, e)
        return None
    formula = analysis.load_formula(params)
    row = {
        "K": params.K, "s": params.s, "x": " ".join(map(str, params.x)), "X": params.X,
        "N": params.N, "Q": params.Q, "eta1": params.eta1, "eta2": params.eta2,
        "formula_load": str(formula.L_c), "formula_load_decimal": fmt_decimal(formula.L_c),
        "simulated_load": "", "match": "",
        "round_bits": ";".join(str(b) for b in formula.default_round_bits),
    }
    if do_simulate:
        report, ledger = simulate(params, strategy, seed=seed, jobs=jobs)
        load = ledger.normalized_load
        row["simulated_load"] = str(load)
        row["round_bits"] = ";".join(str(b) for b in ledger.per_round_units)
        if Strategy(strategy) is Strategy.DEFAULT:
            row["match"] = str(load == formula.L_c and report["audit"]["ok"]).lower()
        else:
            row["match"] = "n/a"
    return row


def cmd_sweep(spec: dict, do_simulate=False, strategy="default", seed=0, jobs=1) -> str:
    configs = sweep_configs(spec)
    work = lambda c: sweep_row(*c, do_simulate=do_simulate, strategy=strategy, seed=seed)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(work, configs))
    else:
        rows = [work(c) for c in configs]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_HEADER, lineterminator="\n")
    w.writeheader()
    for row in rows:
        if row is not None:
            w.writerow(row)
    return buf.getvalue()


# -- argument handling --------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat TOML file with s, x, eta1, eta2, t_bits, seed")
    p.add_argument("--s", type=int)
    p.add_argument("--x", type=_x_arg, help="group sizes, e.g. 4,6")
    p.add_argument("--eta1", type=int)
    p.add_argument("--eta2", type=int)
    p.add_argument("--out", type=Path, help="write output here instead of stdout")


def _run_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-bits", dest="t_bits", type=int, help="intermediate value size in bits (default: auto)")
    p.add_argument("--seed", type=int, help="payload seed")
    p.add_argument("--coeff-seed", dest="coeff_seed", type=int, help="Method B coefficient seed")
    p.add_argument("--strategy", choices=[s.value for s in Strategy])
    p.add_argument("--sender-policy", dest="sender_policy", choices=["lowest", "rotate"])
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascaded-cdc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="dump the file/function placement")
    _common(p)
    p.add_argument("--format", choices=["json", "table"], default="json")

    p = sub.add_parser("simulate", help="run map -> shuffle -> audit")
    _common(p)
    _run_opts(p)
    p.add_argument("--format", choices=["json", "csv"], default="json", help="csv writes the transmission ledger")

    p = sub.add_parser("verify", help="cross-check simulation, closed form and brute-force oracle")
    _common(p)
    _run_opts(p)
    p.add_argument("--oracle-limit", type=int, default=oracle.DEFAULT_GUARD, help="max QN for the oracle")

    p = sub.add_parser("sweep", help="formula (and optionally simulated) loads over many configs, as CSV")
    p.add_argument("--config", type=Path, help="TOML sweep spec: configs = [[4, 6], ...] and [[family]] tables")
    p.add_argument("--x", type=_x_arg, action="append", default=[], help="add one config (repeatable)")
    p.add_argument("--uniform", action="append", default=[], metavar="S:LO:HI",
                   help="add x=(c,..,c) of length S for c in LO..HI (repeatable)")
    p.add_argument("--eta1", type=int)
    p.add_argument("--eta2", type=int)
    p.add_argument("--simulate", action="store_true", help="also run the full simulation per row")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default="default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=["csv"], default="csv")
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _sweep_spec(args) -> dict:
    spec = {}
    if args.config:
        with open(args.config, "rb") as fh:
            spec = tomllib.load(fh)
    spec.setdefault("configs", [])
    spec["configs"] = list(spec["configs"]) + [list(x) for x in args.x]
    fams = list(spec.get("family", []))
    for u in args.uniform:
        try:
            s, lo, hi = (int(v) for v in u.split(":"))
        except ValueError:
            raise UsageError(f"--uniform expects S:LO:HI, got {u!r}") from None
        fams.append({"s": s, "min": lo, "max": hi, "kind": "uniform"})
    spec["family"] = fams
    if args.eta1 is not None:
        spec["eta1"] = args.eta1
    if args.eta2 is not None:
        spec["eta2"] = args.eta2
    return spec


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "design":
            dump = cmd_design(merged_config(args))
            text = design_table(dump) if args.format == "table" else json.dumps(dump, indent=2) + "\n"
            _emit(text, args.out)
            return 0
        if args.command == "simulate":
            cfg = merged_config(args)
            report, ledger = cmd_simulate(cfg, jobs=args.jobs)
            text = ledger.to_csv() if args.format == "csv" else json.dumps(report, indent=2) + "\n"
            _emit(text, args.out)
            return 0 if report["ok"] else 1
        if args.command == "verify":
            cfg = merged_config(args)
            rep = verify(params_from(cfg), cfg.get("strategy", "default"), cfg.get("t_bits"),
                         int(cfg.get("seed", 0)), int(cfg.get("coeff_seed", 0)), args.jobs, args.oracle_limit)
            _emit(json.dumps(rep, indent=2) + "\n", args.out)
            return 0 if rep["ok"] else 1
        if args.command == "sweep":
            _emit(cmd_sweep(_sweep_spec(args), args.simulate, args.strategy, args.seed, args.jobs), args.out)
            return 0
    except UsageError as e:
        parser.error(str(e))
    except (MapError, ShuffleError, oracle.OracleTooLarge, OSError) as e:
        print(f"cascaded-cdc: error: {e}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
