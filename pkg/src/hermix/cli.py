"""Command-line front end: reproducible, file-based experiment runs.

Every file-writing command drops a ``<output>.manifest.json`` next to its
output recording the command, arguments, seed, tool version and content
digests of all inputs and outputs.  Manifests carry no timestamps, so a
repeated invocation with the same inputs produces byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import __version__
from .errors import (HermixError, InsufficientSamples, InvalidBalance,
                     NoValidPartition, OverlappingIntervals, SingularMatrix)
from .estimator import choose_ell, estimate, estimate_to_dict, finalize
from .intervals import IntervalSearchConfig, find_intervals, interval_pair_to_dict
from .lowerbound import RateRow, build_hard_instance, distinguish_demo, rate_table
from .mixture import (distance, model_digest, model_from_dict, model_to_dict,
                      read_samples_csv, sample, write_samples_csv)
from .numerics import BigReal
from .serialize import (atomic_write_text, canonical_json, format_float,
                        sha256_of_file, sha256_of_text)

EXIT_OK = 0
EXIT_IO = 1
EXIT_SCHEMA = 2
EXIT_NO_PARTITION = 3
EXIT_SINGULAR = 4


def _say(args, message):
    if not args.quiet:
        print(message)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc


def _write_manifest(args, command, arg_map, inputs, outputs):
    manifest = {
        "command": command,
        "args": {k: arg_map[k] for k in sorted(arg_map)},
        "seed": int(args.seed),
        "tool_version": __version__,
        "input_digests": {p: sha256_of_file(p) for p in sorted(inputs)},
        "output_digests": {p: sha256_of_file(p) for p in sorted(outputs)},
    }
    path = outputs[0] + ".manifest.json"
    atomic_write_text(path, canonical_json(manifest, indent=2) + "\n")
    return path


def _read_model(path):
    return model_from_dict(_load_json(path))


def _big_pair(value):
    """float plus full-precision decimal forms of a BigReal."""
    if isinstance(value, BigReal):
        return float(value), value.to_decimal_string()
    return float(value), repr(float(value))


# ---------------------------------------------------------------------------
# subcommands


def cmd_sample(args):
    model = _read_model(args.model)
    ss = sample(model, args.n, args.seed)
    write_samples_csv(ss, args.out)
    _write_manifest(args, "sample",
                    {"model": args.model, "n": args.n, "out": args.out},
                    [args.model], [args.out])
    _say(args, f"wrote {args.n} samples to {args.out}")
    return EXIT_OK


def _parse_intervals(text):
    parts = text.split(";")
    if len(parts) != 2:
        raise ValueError(f"intervals must be 'lo1,hi1;lo2,hi2', got {text!r}")
    out = []
    for p in parts:
        nums = p.split(",")
        if len(nums) != 2:
            raise ValueError(f"bad interval {p!r}")
        out.append((float(nums[0]), float(nums[1])))
    return out[0], out[1]


def _interval_config(args):
    if args.w_min is None or args.s_min is None:
        raise ValueError("interval search requires --w-min and --s-min")
    return IntervalSearchConfig(
        w_min=args.w_min, s_min=args.s_min, r_hint=args.r_hint,
        heavy_fraction=args.heavy_fraction,
        window_inflation=args.window_inflation)


def cmd_estimate(args):
    ss = read_samples_csv(args.samples)
    if (args.ell is None) == (args.epsilon is None):
        raise ValueError("exactly one of --ell / --epsilon is required")
    ell = args.ell if args.ell is not None else choose_ell(args.epsilon)

    search = None
    if args.intervals == "auto":
        pair = find_intervals(ss, _interval_config(args))
        intervals = (pair.i1, pair.i2)
        search = interval_pair_to_dict(pair)
    else:
        intervals = _parse_intervals(args.intervals)

    est = estimate(ss, intervals, ell, mode=args.mode,
                   precision_bits=args.precision_bits,
                   bandwidth=args.bandwidth)
    payload = estimate_to_dict(est)
    payload["intervals"] = [list(intervals[0]), list(intervals[1])]
    if search is not None:
        payload["interval_search"] = search
    atomic_write_text(args.out, canonical_json(payload, indent=2) + "\n")
    _write_manifest(args, "estimate",
                    {"samples": args.samples, "intervals": args.intervals,
                     "ell": ell, "mode": args.mode, "out": args.out},
                    [args.samples], [args.out])
    _say(args, f"estimated ell={ell} components into {args.out}")
    return EXIT_OK


def cmd_find_intervals(args):
    ss = read_samples_csv(args.samples)
    pair = find_intervals(ss, _interval_config(args))
    atomic_write_text(args.out,
                      canonical_json(interval_pair_to_dict(pair), indent=2) + "\n")
    _write_manifest(args, "find-intervals",
                    {"samples": args.samples, "w_min": args.w_min,
                     "s_min": args.s_min, "out": args.out},
                    [args.samples], [args.out])
    _say(args, f"intervals {pair.i1} and {pair.i2} (scale index {pair.j_star})")
    return EXIT_OK


def cmd_hard_instance(args):
    inst = build_hard_instance(args.delta, precision_bits=args.precision_bits)
    pr = inst.projection
    beta_f, beta_d = _big_pair(pr.beta)
    cp_f, cp_d = _big_pair(pr.c_plus)
    cm_f, cm_d = _big_pair(pr.c_minus)
    payload = {
        "delta": inst.delta,
        "m": pr.m,
        "beta": beta_f, "beta_dec": beta_d,
        "c_plus": cp_f, "c_plus_dec": cp_d,
        "c_minus": cm_f, "c_minus_dec": cm_d,
        "balance_weight": float(inst.balance_weight),
        "f": model_to_dict(inst.f),
        "f_prime": model_to_dict(inst.f_prime),
    }
    atomic_write_text(args.out, canonical_json(payload, indent=2) + "\n")
    _write_manifest(args, "hard-instance",
                    {"delta": args.delta, "out": args.out}, [], [args.out])
    _say(args, f"hard pair at delta={args.delta} -> {args.out}")
    return EXIT_OK


def cmd_rates(args):
    deltas = [float(tok) for tok in args.deltas.split(",") if tok.strip()]
    if not deltas:
        raise ValueError("no deltas given")
    rows = rate_table(deltas, precision_bits=args.precision_bits)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RateRow.CSV_COLUMNS)
    for row in rows:
        writer.writerow([
            format_float(row.delta), row.m, format_float(row.beta),
            format_float(row.c_plus), format_float(row.c_minus),
            format_float(row.balance_error), format_float(row.l2_total),
            format_float(row.l2_comp), format_float(row.l1_total),
            format_float(row.l1_comp),
        ])
    atomic_write_text(args.out, buf.getvalue())
    _write_manifest(args, "rates",
                    {"deltas": args.deltas, "out": args.out}, [], [args.out])
    _say(args, f"{len(rows)} rate rows -> {args.out}")
    return EXIT_OK


def cmd_distinguish(args):
    rate = distinguish_demo(args.delta, args.n, args.trials, args.seed)
    print(format_float(rate))
    if args.out is not None:
        payload = {"delta": args.delta, "n": args.n, "trials": args.trials,
                   "seed": int(args.seed), "success_rate": rate}
        atomic_write_text(args.out, canonical_json(payload, indent=2) + "\n")
        _write_manifest(args, "distinguish",
                        {"delta": args.delta, "n": args.n,
                         "trials": args.trials, "out": args.out},
                        [], [args.out])
    return EXIT_OK


def _hat_functions(payload):
    """Rebuild the normalized density callables from an estimate JSON."""
    lam = [float(v) for v in payload["lambda_hat"]]
    centers = tuple(payload["centers"])
    est = finalize(lam, centers, int(payload["ell"]))
    return est.f_hat, centers


def cmd_eval(args):
    truth = _read_model(args.truth)
    payload = _load_json(args.estimate)
    hats, centers = _hat_functions(payload)
    comps = (truth.comp1, truth.comp2)
    lo = min(centers) - 10.0
    hi = max(centers) + 10.0

    def pair_l1(order):
        return tuple(
            distance(hats[k], comps[i], norm="L1", support=(lo, hi))
            for k, i in enumerate(order))

    direct = pair_l1((0, 1))
    swapped = pair_l1((1, 0))
    best = direct if max(direct) <= max(swapped) else swapped
    for label, pair in (("direct", direct), ("swapped", swapped)):
        _say(args, f"{label}: l1_comp1={format_float(pair[0])} "
                   f"l1_comp2={format_float(pair[1])}")
    print(format_float(best[0]), format_float(best[1]))
    if args.out is not None:
        out = {"l1": [best[0], best[1]],
               "l1_direct": list(direct), "l1_swapped": list(swapped)}
        atomic_write_text(args.out, canonical_json(out, indent=2) + "\n")
        _write_manifest(args, "eval",
                        {"truth": args.truth, "estimate": args.estimate,
                         "out": args.out},
                        [args.truth, args.estimate], [args.out])
    return EXIT_OK


def cmd_report(args):
    from . import report

    written = report.render(args.input, args.out)
    _write_manifest(args, "report",
                    {"input": args.input, "out": args.out},
                    [args.input], written)
    _say(args, f"figure -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _seed_type(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in a u64")
    return value


def _bits_type(text):
    value = int(text)
    if not 0 < value < 2**32:
        raise argparse.ArgumentTypeError("precision bits must fit in a u32")
    return value


def _add_interval_flags(p, required=False):
    p.add_argument("--w-min", type=float, default=None, required=required,
                   help="lower bound on the component weights")
    p.add_argument("--s-min", type=float, default=None, required=required,
                   help="smallest interval half-length to scan")
    p.add_argument("--r-hint", type=float, default=None,
                   help="scale of the center separation (default: sample spread)")
    p.add_argument("--heavy-fraction", type=float, default=0.5,
                   help="window-count threshold as a fraction of w_min")
    p.add_argument("--window-inflation", type=float, default=1.0,
                   help="multiplier on the counting half-width t")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hermix",
        description="Two-component interval-Gaussian mixtures: estimation, "
                    "interval search, and hard-instance construction.")
    parser.add_argument("--seed", type=_seed_type, default=0,
                        help="random seed for all stochastic commands")
    parser.add_argument("--precision-bits", type=_bits_type, default=None,
                        help="working precision override for exact linear algebra")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress status messages")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw samples from a mixture model JSON")
    p.add_argument("model")
    p.add_argument("n", type=int)
    p.add_argument("out")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("estimate", help="estimate both components from samples")
    p.add_argument("samples")
    p.add_argument("out")
    p.add_argument("--intervals", required=True,
                   help="'lo1,hi1;lo2,hi2' or 'auto'")
    p.add_argument("--ell", type=int, default=None, help="basis truncation order")
    p.add_argument("--epsilon", type=float, default=None,
                   help="target accuracy; sets ell = choose_ell(epsilon)")
    p.add_argument("--mode", choices=("empirical", "kde"), default="empirical")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="KDE bandwidth (default: Silverman rule)")
    _add_interval_flags(p)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("find-intervals",
                       help="locate the two component intervals from samples")
    p.add_argument("samples")
    p.add_argument("out")
    _add_interval_flags(p, required=True)
    p.set_defaults(fn=cmd_find_intervals)

    p = sub.add_parser("hard-instance",
                       help="build the near-indistinguishable mixture pair")
    p.add_argument("delta", type=float)
    p.add_argument("out")
    p.set_defaults(fn=cmd_hard_instance)

    p = sub.add_parser("rates", help="decay-rate table over a list of deltas")
    p.add_argument("deltas", help="comma-separated, e.g. '0.5,0.25,0.2'")
    p.add_argument("out")
    p.set_defaults(fn=cmd_rates)

    p = sub.add_parser("distinguish",
                       help="likelihood-ratio success rate on the hard pair")
    p.add_argument("delta", type=float)
    p.add_argument("n", type=int)
    p.add_argument("trials", type=int)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_distinguish)

    p = sub.add_parser("eval",
                       help="per-component L1 error of an estimate vs truth")
    p.add_argument("truth")
    p.add_argument("estimate")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("report", help="render figures from a rates CSV "
                                      "or an estimate JSON")
    p.add_argument("input")
    p.add_argument("out")
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SingularMatrix as exc:
        print(f"error: {exc}; try a higher --precision-bits or a smaller "
              f"--ell", file=sys.stderr)
        return EXIT_SINGULAR
    except NoValidPartition as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_PARTITION
    except (ValueError, KeyError, TypeError, OverlappingIntervals,
            InsufficientSamples, InvalidBalance) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except HermixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
