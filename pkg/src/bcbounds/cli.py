"""``bcbounds`` command line.

Data (CSV or JSON) goes to ``--out`` or, without it, to stdout. The human
summary, which includes the wall-clock duration, goes to stderr, so data
bytes depend only on the flags and the seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bounds
from .channelfile import ChannelFileError, load_channel
from .search import SearchConfig
from .suite import run_bssc_suite, run_construction_harness

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2
HARNESS_TOL = 1e-9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def num(x) -> str:
    return format(float(x), ".9g")


def flat(table) -> list:
    return [float(num(v)) for v in np.asarray(table, dtype=float).ravel()]


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _cards(text: str) -> list:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma list of integers") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("cardinalities must be >= 1")
    return out


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class Report:
    """Command result: a config echo, tabular rows and structured results."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.header: list = []
        self.rows: list = []
        self.results: dict = {}
        self.lines: list = []
        self.started = time.perf_counter()

    def say(self, text: str) -> None:
        self.lines.append(text)

    def document(self, fmt: str) -> str:
        if fmt == "json":
            doc = {"command": self.command, "version": __version__, "config": self.config,
                   "columns": self.header, "rows": self.rows, "results": self.results}
            return json.dumps(doc, indent=2) + "\n"
        return _csv_text(self.header, self.rows)

    def emit(self, args) -> None:
        text = self.document(args.format)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        else:
            sys.stdout.write(text)
        err = sys.stderr
        print(f"bcbounds {__version__} {self.command}", file=err)
        print("config: " + json.dumps(self.config, sort_keys=True), file=err)
        for line in self.lines:
            print(line, file=err)
        print(f"duration_s: {time.perf_counter() - self.started:.3f}", file=err)


def _config(args, **extra) -> dict:
    keys = ("channel", "seed", "restarts", "grid", "grid3d", "lambdas", "format")
    cfg = {k: getattr(args, k) for k in keys if hasattr(args, k)}
    cfg.update(extra)
    return cfg


def _search_config(args) -> SearchConfig:
    return SearchConfig(restarts=args.restarts, seed=args.seed, grid=args.grid, grid3d=args.grid3d)


def _lambdas(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.5])


def cmd_info(args) -> int:
    rep = Report("info", _config(args))
    ch = load_channel(args.channel)
    c1 = bounds.single_user_capacity(ch, "Y1", args.grid)
    c2 = bounds.single_user_capacity(ch, "Y2", args.grid)
    td = max(c1.value, c2.value)
    rep.header = ["quantity", "value_bits", "argmax_input"]
    rep.rows = [
        ["C1", num(c1.value), " ".join(num(v) for v in c1.input_pmf)],
        ["C2", num(c2.value), " ".join(num(v) for v in c2.input_pmf)],
        ["time_division_sum_rate", num(td), ""],
    ]
    rep.results = {
        "name": ch.name, "input_size": ch.input_size,
        "y1_size": ch.to_y1.output_size, "y2_size": ch.to_y2.output_size,
        "C1": float(num(c1.value)), "C1_input": flat(c1.input_pmf),
        "C2": float(num(c2.value)), "C2_input": flat(c2.input_pmf),
        "time_division_sum_rate": float(num(td)),
    }
    rep.say(f"alphabets: |X|={ch.input_size} |Y1|={ch.to_y1.output_size} |Y2|={ch.to_y2.output_size}")
    rep.say(f"C1 = {num(c1.value)} at p(x) = {flat(c1.input_pmf)}")
    rep.say(f"C2 = {num(c2.value)} at p(x) = {flat(c2.input_pmf)}")
    rep.say(f"time-division sum rate = {num(td)}")
    rep.emit(args)
    return EXIT_OK


REGION_HEADER = ["row", "lambda", "value_bits", "r1_bits", "r2_bits", "card_w", "note"]


def _point_row(p) -> list:
    return ["point", num(p.lam), num(p.value), num(p.rates.r1), num(p.rates.r2),
            p.terms.get("card_w", ""), p.label]


def _point_json(p) -> dict:
    return {"lambda": float(num(p.lam)), "value": float(num(p.value)),
            "r1": float(num(p.rates.r1)), "r2": float(num(p.rates.r2)),
            "terms": {k: (float(num(v)) if isinstance(v, float) else v) for k, v in p.terms.items()},
            "witness_labels": list(p.witness.labels), "witness_shape": list(p.witness.table.shape),
            "witness": flat(p.witness.table)}


def cmd_outer(args) -> int:
    rep = Report("outer", _config(args))
    ch = load_channel(args.channel)
    region = bounds.outer_region(ch, _lambdas(args.lambdas), _search_config(args))
    rep.config.update(method=region.method, **region.params)
    rep.header = REGION_HEADER
    rep.rows = [_point_row(p) for p in region.points]
    rep.rows.append(["sum_rate", "", num(region.sum_rate), "", "", "", region.method])
    rep.results = {"sum_rate": float(num(region.sum_rate)), "method": region.method,
                   "points": [_point_json(p) for p in region.points]}
    rep.say(f"outer-bound sum rate = {num(region.sum_rate)} ({region.method})")
    rep.emit(args)
    return EXIT_OK


def cmd_inner(args) -> int:
    rep = Report("inner", _config(args, w_card=args.w_card))
    ch = load_channel(args.channel)
    cfg = _search_config(args)
    lams = _lambdas(args.lambdas)
    per_card = {cw: bounds.marton_region(ch, lams, cfg, card_w=cw) for cw in args.w_card}
    best = []
    for i in range(len(lams)):
        cands = [per_card[cw][i] for cw in args.w_card]
        # ties go to the first listed |W|
        best.append(max(cands, key=lambda p: p.value))
    sum_rate = max(p.rates.sum for p in best)
    rep.header = REGION_HEADER
    rep.rows = [_point_row(p) for p in best]
    rep.results = {"points": [_point_json(p) for p in best]}

    if ch.input_size == 2:
        ts = bounds.marton_sum_rate_tsplit(ch, args.grid3d)
        rep.rows.append(["tsplit", "", num(ts.value), "", "", "",
                         f"sum-rate benchmark tau={num(ts.tau)} a={num(ts.a)} b={num(ts.b)}"])
        rep.results["tsplit"] = {"value": float(num(ts.value)), "tau": float(num(ts.tau)),
                                 "a": float(num(ts.a)), "b": float(num(ts.b)), "grid": ts.grid}
        rep.say(f"T-split sum rate (benchmark) = {num(ts.value)}")
        sum_rate = max(sum_rate, ts.value)
    if 1 in per_card:
        w1 = max(p.rates.sum for p in per_card[1])
        rep.rows.append(["w1", "", num(w1), "", "", 1, "conjectured ceiling"])
        rep.results["w1_sum_rate"] = float(num(w1))
        rep.say(f"|W|=1 sum rate (conjectured ceiling) = {num(w1)}")
    rep.rows.append(["sum_rate", "", num(sum_rate), "", "", "", "best found"])
    rep.results["sum_rate"] = float(num(sum_rate))
    rep.say(f"inner-bound sum rate (best found) = {num(sum_rate)}")
    rep.emit(args)
    return EXIT_OK


def cmd_bssc_suite(args) -> int:
    rep = Report("bssc-suite", _config(args, gap_restarts=args.gap_restarts))
    checks, curves, witnesses = run_bssc_suite(args.grid, args.grid3d, args.restarts, args.seed,
                                               args.gap_restarts)
    rep.header = ["check", "value_bits", "target_bits", "tolerance", "status", "kind", "note"]
    for c in checks:
        rep.rows.append([c.name, num(c.value), "" if c.target is None else num(c.target),
                         "" if c.tolerance is None else num(c.tolerance),
                         "pass" if c.passed else "FAIL", "proved" if c.proved else "reported", c.note])
        rep.say(f"{'pass' if c.passed else 'FAIL'} {c.name} = {num(c.value)}")
    gap = next(c for c in checks if c.name == "conjecture_gap")
    if gap.value > 1e-6:
        rep.say("conjecture gap is positive: witness emitted in JSON results")
    rep.results = {
        "checks": [{"name": c.name, "value": float(num(c.value)), "passed": c.passed,
                    "proved": c.proved, "note": c.note} for c in checks],
        "witnesses": {k: {"labels": list(w.labels), "shape": list(w.table.shape), "table": flat(w.table)}
                      for k, w in witnesses.items()},
    }
    curve_rows = [[num(e), num(f), num(g), num(v), int(k), num(l)]
                  for e, f, g, v, k, l in zip(curves["eta"], curves["f"], curves["g"],
                                              curves["envelope"], curves["contact"], curves["line"])]
    curve_text = _csv_text(["eta", "f_bits", "g_bits", "envelope_bits", "contact", "line_2eta_minus_1"],
                           curve_rows)
    if args.curves:
        Path(args.curves).write_text(curve_text, encoding="utf-8", newline="\n")
    rep.emit(args)
    failed = [c.name for c in checks if c.proved and not c.passed]
    if failed:
        print("verification failure: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_verify_constructions(args) -> int:
    rep = Report("verify-constructions", {"trials": args.trials, "seed": args.seed,
                                          "max_card": args.max_card, "format": args.format})
    h = run_construction_harness(args.trials, args.seed, args.max_card)
    rep.header = ["check", "max_residual", "status"]
    entries = list(h.max_residual.items()) + [
        ("independence of lifted pair", h.independence),
        ("determinism of lifted input", h.determinism),
        ("support reduction preserves p(x) and functionals", h.reduction_residual),
    ]
    for name, r in entries:
        rep.rows.append([name, num(r), "pass" if r <= HARNESS_TOL else "FAIL"])
    atoms_ok = h.reduction_max_atoms <= 4
    rep.rows.append(["support reduction max atoms", str(h.reduction_max_atoms), "pass" if atoms_ok else "FAIL"])
    rep.results = {"max_residual": float(num(h.worst)), "reduction_max_atoms": h.reduction_max_atoms,
                   "checks": {n: float(num(r)) for n, r in entries}}
    rep.say(f"max identity residual = {num(h.worst)} over {h.trials} trials")
    rep.emit(args)
    if h.worst > HARNESS_TOL or not atoms_ok:
        print("verification failure: residual above tolerance", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bcbounds", description="Broadcast channel inner and outer bounds.")
    p.add_argument("--version", action="version", version=f"bcbounds {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, channel=True, search=True):
        if channel:
            sp.add_argument("--channel", default="bssc:0.5", help="channel file path or bssc:P")
        sp.add_argument("--seed", type=int, default=0)
        if search:
            sp.add_argument("--restarts", type=_positive, default=64)
            sp.add_argument("--grid", type=_positive, default=4097, help="1-D grid points")
            sp.add_argument("--grid3d", type=_positive, default=201, help="points per 3-D grid axis")
        sp.add_argument("--out", help="write data here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("info", help="alphabet sizes and single-user capacities")
    common(sp)
    sp.set_defaults(func=cmd_info)

    sp = sub.add_parser("outer", help="outer-bound weighted sum rates")
    common(sp)
    sp.add_argument("--lambdas", type=_positive, default=21)
    sp.set_defaults(func=cmd_outer)

    sp = sub.add_parser("inner", help="Marton inner-bound weighted sum rates")
    common(sp)
    sp.add_argument("--lambdas", type=_positive, default=21)
    sp.add_argument("--w-card", type=_cards, default=[1, 2, 3, 4], help="comma list of |W| values")
    sp.set_defaults(func=cmd_inner)

    sp = sub.add_parser("bssc-suite", help="checks for the skew-symmetric channel")
    common(sp, channel=False)
    sp.add_argument("--gap-restarts", type=_positive, default=100_000)
    sp.add_argument("--curves", help="write the f/g/envelope curve CSV here")
    sp.set_defaults(func=cmd_bssc_suite)

    sp = sub.add_parser("verify-constructions", help="random-instance identity harness")
    common(sp, channel=False, search=False)
    sp.add_argument("--trials", type=_positive, default=1000)
    sp.add_argument("--max-card", type=_positive, default=4)
    sp.set_defaults(func=cmd_verify_constructions)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0:
        print("bcbounds: error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ChannelFileError as exc:
        print(f"bcbounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
