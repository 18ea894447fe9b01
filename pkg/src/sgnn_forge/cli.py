"""Command-line entry points for corpus generation and analysis tools.

Exit codes: 0 success, 1 validation or data failure, 2 usage error
(argparse), 3 I/O error.  Worker count for generation comes from
--threads, falling back to the SGNN_FORGE_THREADS environment variable,
then to 1.
"""

import argparse
import csv
import datetime
import json
import os
import sys

import numpy as np

from .attribution import load_db, retrieve_topk
from .cascade import graph_from_edge_lines, rumor_center
from .config import DOMAINS, load_config, resolve_config
from .corpus import corpus_stats, export_csv, generate_corpus, validate_corpus
from .errors import ForgeError, FormatError, ParameterError
from .metrics import (evaluate_forecasts, fit_exp_growth_rate,
                      r0_from_growth)

THREADS_ENV_VAR = "SGNN_FORGE_THREADS"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ParameterError(
                f"{THREADS_ENV_VAR}={env!r} is not an integer") from None
    return 1


def _emit(payload):
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_generate(args) -> int:
    overrides = load_config(args.config) if args.config else None
    manifest = generate_corpus(args.domain, args.count, args.seed, args.out,
                               config=overrides, workers=_threads(args))
    _emit({"out": args.out, "domain": manifest["domain"],
           "count": manifest["count"], "shards": len(manifest["shards"]),
           "config_digest": manifest["config_digest"]})
    return EXIT_OK


def _cmd_validate(args) -> int:
    _emit(validate_corpus(args.corpus))
    return EXIT_OK


def _cmd_stats(args) -> int:
    _emit(corpus_stats(args.corpus))
    return EXIT_OK


def _cmd_export_csv(args) -> int:
    name = export_csv(args.corpus, args.out, weekly=args.weekly)
    _emit({"out": args.out, "file": name})
    return EXIT_OK


def _cmd_attribute(args) -> int:
    db = load_db(args.db)
    with open(args.query, "rb") as fh:
        query = np.frombuffer(fh.read(), dtype="<f4")
    hits = retrieve_topk(db, query, k=args.k)
    _emit({"k": args.k,
           "hits": [{"id": int(entry_id), "score": float(score),
                     "params": db.params[int(entry_id)]}
                    for entry_id, score in hits]})
    return EXIT_OK


def _read_csv_rows(path, required):
    """DictReader rows with the required columns checked up front."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [name for name in required if name not in header]
        if missing:
            raise FormatError(f"{path}: missing columns {missing}; "
                              f"found {header}")
        return list(reader)


def _parse_time(path, raw):
    """Day index from an integer or an ISO YYYY-MM-DD date."""
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return datetime.date.fromisoformat(raw).toordinal()
    except ValueError:
        raise FormatError(f"{path}: date {raw!r} is neither an integer day "
                          f"index nor an ISO YYYY-MM-DD date") from None


def _parse_number(path, column, raw):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise FormatError(
            f"{path}: column {column!r} has non-numeric value {raw!r}") from None


def _read_eval_rows(truth_path, forecast_path):
    truth_rows = [(row["location"], _parse_time(truth_path, row["date"]),
                   _parse_number(truth_path, "value", row["value"]))
                  for row in _read_csv_rows(truth_path,
                                            ("location", "date", "value"))]
    forecast_rows = []
    for row in _read_csv_rows(forecast_path,
                              ("location", "date", "horizon", "value")):
        level = row.get("q_level")
        forecast_rows.append(
            (row["location"], _parse_time(forecast_path, row["date"]),
             int(_parse_number(forecast_path, "horizon", row["horizon"])),
             (_parse_number(forecast_path, "q_level", level)
              if level not in (None, "") else None),
             _parse_number(forecast_path, "value", row["value"])))
    return truth_rows, forecast_rows


def _cmd_eval_skill(args) -> int:
    truth_rows, forecast_rows = _read_eval_rows(args.truth, args.forecasts)
    _emit(evaluate_forecasts(truth_rows, forecast_rows))
    return EXIT_OK


def _cmd_estimate_r0(args) -> int:
    column = args.column
    rows = _read_csv_rows(args.input, (column,))
    if not rows:
        raise ParameterError(f"{args.input} has no data rows")
    series = np.array([_parse_number(args.input, column, row[column])
                       for row in rows])
    window = series[:args.window] if args.window else series
    rate = fit_exp_growth_rate(window)
    estimate = r0_from_growth(rate, args.latent_mean, args.infectious_mean)
    _emit({"method": "expgrowth", "growth_rate": rate,
           "r0_estimate": estimate, "n_days": int(len(window))})
    return EXIT_OK


def _cmd_rumor_center(args) -> int:
    with open(args.graph) as fh:
        graph = graph_from_edge_lines(fh)
    infected = []
    for row in _read_csv_rows(args.cascade, ("node",)):
        if "masked" in row and int(_parse_number(args.cascade, "masked",
                                                 row["masked"])):
            continue
        infected.append(int(_parse_number(args.cascade, "node", row["node"])))
    ranking = rumor_center(graph, infected)
    top = [{"node": int(n), "log_score": float(s)}
           for n, s in zip(ranking.nodes[:args.top], ranking.scores[:args.top])]
    _emit({"n_visible": len(infected), "restricted": ranking.restricted,
           "component_count": ranking.component_count, "ranking": top})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgnn-forge",
        description="Mechanistic synthetic-data engine: generate, validate, "
                    "and analyze simulation corpora.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a corpus directory")
    p.add_argument("domain", choices=DOMAINS)
    p.add_argument("--config", help="TOML file overriding domain defaults")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("validate", help="fully check a corpus directory")
    p.add_argument("corpus")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("stats", help="summarize a corpus directory")
    p.add_argument("corpus")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("export-csv", help="flatten a corpus to CSV")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--weekly", action="store_true",
                   help="aggregate outbreak series to 7-day sums")
    p.set_defaults(func=_cmd_export_csv)

    p = sub.add_parser("attribute",
                       help="nearest neighbors of a query embedding")
    p.add_argument("--db", required=True)
    p.add_argument("--query", required=True,
                   help="raw little-endian float32 vector file")
    p.add_argument("--k", type=int, default=50)
    p.set_defaults(func=_cmd_attribute)

    p = sub.add_parser("eval-skill",
                       help="score forecasts against truth series")
    p.add_argument("--truth", required=True,
                   help="CSV with location, date, value; dates are integer "
                        "day indices or ISO YYYY-MM-DD")
    p.add_argument("--forecasts", required=True,
                   help="CSV with location, date, horizon, value "
                        "and optional q_level")
    p.set_defaults(func=_cmd_eval_skill)

    p = sub.add_parser("estimate-r0",
                       help="reproduction number from early growth")
    p.add_argument("--method", choices=["expgrowth"], default="expgrowth")
    p.add_argument("--input", required=True, help="CSV of daily case counts")
    p.add_argument("--column", default="cases")
    p.add_argument("--window", type=int, default=None,
                   help="use only the first N days")
    p.add_argument("--latent-mean", type=float, default=None)
    p.add_argument("--infectious-mean", type=float, required=True)
    p.set_defaults(func=_cmd_estimate_r0)

    p = sub.add_parser("rumor-center",
                       help="rank cascade sources by rumor centrality")
    p.add_argument("--graph", required=True, help="edge-list text file")
    p.add_argument("--cascade", required=True,
                   help="CSV with a node column (masked column respected)")
    p.add_argument("--top", type=int, default=20)
    p.set_defaults(func=_cmd_rumor_center)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ForgeError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
