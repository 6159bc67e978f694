"""Command-line harness: curves, oracle checks, simulations, slope fits and power audits.

Exit status is 0 on success, 1 when a check fails and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace

from . import dmt, montecarlo, oracle
from .protocols import ProtocolConfig, ProtocolKind

RESULT_COLUMNS = [
    "protocol", "m", "n", "K", "r", "epsilon", "delta", "snr_db", "trials", "outages",
    "rate", "ci_lo", "ci_hi", "tx_energy_mean", "rx_energy_mean", "seed",
]
DB_NOTE = "# snr_linear = 10^(snr_db/10)"
INT_COLUMNS = {"m", "n", "K", "trials", "outages", "seed"}

# flag defaults for simulate/sweep; a --config file overrides these, explicit flags override both
SIM_DEFAULTS = dict(
    protocol="NoCSIT", m=1, n=1, k=2, r=0.5, epsilon=0.05, delta=0.01, snr_db=30.0,
    snr_grid_db=None, trials=10000, seed=None, workers=1, out=None, format="csv",
    noiseless=False, dump_transcripts=0, feedback_repeats=1,
)


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _parse_grid(text):
    if text is None or isinstance(text, list):
        return text
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    grid = [float(p) for p in parts]
    if any(not math.isfinite(g) for g in grid):
        raise UsageError("SNR grid values must be finite")
    return grid


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names with - or _."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_").lower()
            if key not in SIM_DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _coerce(key, value):
    if value is None:
        return None
    default = SIM_DEFAULTS[key]
    if key == "snr_grid_db":
        return _parse_grid(value)
    if key == "noiseless":
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes", "on")
    if key == "seed":
        return int(value)
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def _merge(args) -> dict:
    merged = dict(SIM_DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for key in SIM_DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return {k: _coerce(k, v) for k, v in merged.items()}


def _protocol_config(opts, snr_db):
    try:
        kind = _lookup(ProtocolKind, opts["protocol"])
        return ProtocolConfig(kind, m=opts["m"], n=opts["n"], K=opts["k"], r=opts["r"],
                              epsilon=opts["epsilon"], delta=opts["delta"],
                              snr=montecarlo.db_to_linear(snr_db), noiseless_debug=opts["noiseless"],
                              feedback_repeats=opts["feedback_repeats"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _lookup(enum_cls, name):
    for member in enum_cls:
        if member.value.lower() == str(name).lower():
            return member
    raise UsageError(f"unknown protocol {name!r}; choose from {', '.join(m.value for m in enum_cls)}")


# results files -------------------------------------------------------------

def _row(res: montecarlo.SimResult) -> dict:
    d = res.as_dict()
    d["snr_db"] = res.db()
    return {c: d[c] for c in RESULT_COLUMNS}


def results_to_csv(results) -> str:
    buf = io.StringIO()
    buf.write(DB_NOTE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for res in results:
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in _row(res).values()])
    return buf.getvalue()


def results_to_json(results) -> str:
    return json.dumps([_row(r) for r in results], indent=2) + "\n"


def _from_row(row: dict) -> montecarlo.SimResult:
    vals = {}
    for c in RESULT_COLUMNS:
        v = row[c]
        if c == "protocol":
            vals[c] = str(v)
        elif c in INT_COLUMNS:
            vals[c] = int(v)
        else:
            vals[c] = float(v)
    db = vals.pop("snr_db")
    return montecarlo.SimResult(snr=montecarlo.db_to_linear(db), snr_db=db, **vals)


def parse_results(text: str):
    stripped = text.lstrip()
    if stripped.startswith("["):
        return [_from_row(r) for r in json.loads(stripped)]
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or set(RESULT_COLUMNS) - set(reader.fieldnames):
        raise UsageError("results file is missing required columns")
    return [_from_row(r) for r in reader]


def read_results(path: str):
    with open(path) as fh:
        return parse_results(fh.read())


def _emit(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# subcommands ---------------------------------------------------------------

def cmd_curve(args) -> int:
    kind = _lookup(dmt.CurveKind, args.protocol)
    try:
        curve = dmt.dmt_curve(kind, args.m, args.n, args.k, args.r_step)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    buf = io.StringIO()
    dmt.write_curve_csv(curve, buf)
    _emit(buf.getvalue(), args.out)
    return 0


_ORACLE_ALIASES = {"epsilon": "eps"}


def _parse_case(tokens):
    if not tokens:
        raise UsageError("oracle needs a case id or 'all'")
    case, params = tokens[0], {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise UsageError(f"expected key=value, got {tok!r}")
        *keys, value = tok.split("=")
        for key in keys:
            key = _ORACLE_ALIASES.get(key.strip(), key.strip())
            params[key] = int(value) if key in ("m", "n", "K", "u", "k") else float(value)
    return case, params


def cmd_oracle(args) -> int:
    case, params = _parse_case(args.case)
    ids = list(oracle.CATALOG) if case == "all" else [case]
    known = set(oracle.CATALOG)
    for cid in ids:
        if cid not in known:
            raise UsageError(f"unknown case {cid!r}; known cases: {', '.join(sorted(known))}")
    failures = 0
    print(f"{'case':<24} {'computed':>12} {'target':>12} {'|diff|':>10}  verdict")
    for cid in ids:
        try:
            value, target, ok = oracle.check_case(cid, params if case != "all" else {}, args.grid_step)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        diff = 0.0 if value == target else abs(value - target)
        failures += not ok
        print(f"{cid:<24} {value:>12.6g} {target:>12.6g} {diff:>10.3g}  {'pass' if ok else 'FAIL'}")
    return 1 if failures else 0


def _grid(opts):
    grid = opts["snr_grid_db"]
    return [opts["snr_db"]] if not grid else grid


def _run_sim(args, sweep_mode: bool) -> int:
    opts = _merge(args)
    if opts["seed"] is None:
        raise UsageError("--seed is required")
    if opts["workers"] < 1:
        raise UsageError("--workers must be >= 1")
    if opts["trials"] < 1:
        raise UsageError("--trials must be >= 1")
    if opts["format"] not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    grid = _grid(opts) if sweep_mode else [opts["snr_db"]]
    results, dumps = [], []
    for db in sorted(grid):
        cfg = _protocol_config(opts, db)
        res = montecarlo.estimate_outage(cfg, opts["trials"], opts["seed"], opts["workers"])
        results.append(replace(res, snr_db=float(db)))
        for i, tr in enumerate(montecarlo.sample_transcripts(cfg, opts["dump_transcripts"], opts["seed"])):
            rec = json.loads(tr.to_json_line(i))
            rec["snr_db"] = float(db)
            dumps.append(json.dumps(rec, sort_keys=True))
    text = results_to_csv(results) if opts["format"] == "csv" else results_to_json(results)
    _emit(text, opts["out"])
    if dumps:
        target = (opts["out"] + ".transcripts.jsonl") if opts["out"] not in (None, "-") else None
        if target is None:
            sys.stderr.write("\n".join(dumps) + "\n")
        else:
            _emit("\n".join(dumps) + "\n", target)
    return 0


def cmd_simulate(args) -> int:
    return _run_sim(args, sweep_mode=False)


def cmd_sweep(args) -> int:
    return _run_sim(args, sweep_mode=True)


def cmd_fit(args) -> int:
    results = read_results(args.results)
    try:
        fit = montecarlo.fit_diversity_slope(results)
    except montecarlo.InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return 1
    print(f"d_hat = {fit.diversity:.6g} +/- {fit.slope_stderr:.3g} ({fit.points_used} points)")
    if args.out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["log10_snr", "log10_rate", "fit"])
        for x, y in fit.points:
            w.writerow([_fmt(x), _fmt(y), _fmt(fit.intercept + fit.slope * x)])
        _emit(buf.getvalue(), args.out)
    if args.expect is not None:
        return 0 if abs(fit.diversity - args.expect) <= args.tol else 1
    return 0


def cmd_audit(args) -> int:
    results = read_results(args.results)
    try:
        audit = montecarlo.power_audit(results, args.node, args.margin)
    except montecarlo.InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return 1
    print(f"{args.node}: energy slope {audit.slope:.4f} (limit {1 + audit.margin:.2f}) "
          f"{'pass' if audit.passed else 'FAIL'}")
    return 0 if audit.passed else 1


# parser --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _sim_flags(p):
    p.add_argument("--config", help="key = value file; explicit flags override it")
    p.add_argument("--protocol", help=f"one of: {', '.join(k.value for k in ProtocolKind)}")
    p.add_argument("--m", type=int, help="transmit antennas")
    p.add_argument("--n", type=int, help="receive antennas")
    p.add_argument("--k", type=int, help="levels or rounds")
    p.add_argument("--r", type=float, help="multiplexing gain")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--snr-db", dest="snr_db", type=float)
    p.add_argument("--snr-grid-db", dest="snr_grid_db", help="comma-separated dB values")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="required; no implicit entropy")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--noiseless", action="store_true", default=None, help="zero-noise debug mode")
    p.add_argument("--dump-transcripts", dest="dump_transcripts", type=int, metavar="N",
                   help="write the first N transcripts per SNR point as JSON lines")
    p.add_argument("--feedback-repeats", dest="feedback_repeats", type=int,
                   help="pilot blocks averaged by each energy detector")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twoway-dmt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curve", help="closed-form tradeoff curve as r,d CSV")
    p.add_argument("--protocol", required=True, help=f"one of: {', '.join(k.value for k in dmt.CurveKind)}")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--r-step", dest="r_step", type=float, default=0.1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("oracle", help="check exponent-oracle catalog cases against closed forms")
    p.add_argument("case", nargs="+", help="case id or 'all', then optional key=value parameters")
    p.add_argument("--grid-step", dest="grid_step", type=float, default=0.01)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", help="outage Monte-Carlo at one SNR")
    _sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="outage Monte-Carlo over an SNR grid")
    _sim_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="diversity slope from a results file")
    p.add_argument("results")
    p.add_argument("--out", help="plot-data CSV (log10_snr,log10_rate,fit)")
    p.add_argument("--expect", type=float, help="exit 1 unless |d_hat - expect| <= tol")
    p.add_argument("--tol", type=float, default=0.25)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("audit", help="long-term power audit from a results file")
    p.add_argument("results")
    p.add_argument("--node", choices=["transmitter", "receiver"], required=True)
    p.add_argument("--margin", type=float, default=0.1)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"twoway-dmt {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"twoway-dmt {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
