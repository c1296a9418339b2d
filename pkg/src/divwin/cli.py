"""Command-line orchestration: windowed runs, xi-grid scans, class censuses,
reference checks, and reproducible report files.

Report files are deterministic: JSON keys are sorted, floats are rounded to
12 significant digits before serialization, and CSV rows have a fixed
order, so two runs with the same manifest produce byte-identical output.

Exit codes: 0 success, 2 domain/configuration error, 3 internal
consistency failure, 4 checkpoint/manifest mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import oracle as oracle_mod
from . import params as params_mod
from . import sieve as sieve_mod
from .classify import classify_all
from .errors import ConsistencyError, DomainError, DivwinError, ManifestMismatchError
from .params import Window

ENV_OUT_DIR = "DIVWIN_OUT_DIR"


def _round12(obj):
    """Normalize floats to 12 significant digits for stable serialization."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def dumps_report(obj: dict) -> str:
    return json.dumps(_round12(obj), sort_keys=True, indent=2) + "\n"


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def comparison_report(
    win: Window, dp: params_mod.DerivedParams, hist: sieve_mod.TauHistogram
) -> dict:
    """Join an exact histogram with the predictor envelopes for one window."""
    moment = sieve_mod.first_moment(win.x, win.y, win.z)
    hall = params_mod.hall_prediction(moment, dp)
    env_ratio = params_mod.envelope_ratio(dp)
    degenerate = dp.beta <= 0.0
    envelope = None
    if dp.in_range:
        envelope = params_mod.envelope_h(win, dp)
    stirling_lhs = stirling_rhs = None
    if dp.cap_k >= 0 and math.isfinite(dp.q_lambda):
        stirling_lhs, stirling_rhs = params_mod.stirling_balance(dp, dp.cap_k)

    h = hist.h
    h2_frac = hist.h2_star / h if h > 0 else None
    ratios = {
        "h_over_envelope": h / envelope if envelope else None,
        "h2_frac_over_envelope_ratio": (
            h2_frac / env_ratio if h2_frac is not None and env_ratio > 0 else None
        ),
        "h_over_hall": h / hall if hall > 0 else None,
    }
    # compare in log space: the threshold itself overflows for huge z
    hall_x_ok = math.log(win.x) > dp.log_z * dp.log2_z
    return {
        "window": win.to_dict(),
        "params": dp.to_dict(),
        "empirical": {
            "h": h,
            "h1": hist.counts[1],
            "h2_star": hist.h2_star,
            "h_r": list(hist.counts),
            "overflow": hist.overflow,
            "max_tau": hist.max_tau,
            "moment": moment,
        },
        "envelopes": {
            "envelope_h": envelope,
            "envelope_ratio": env_ratio,
            "stirling_lhs": stirling_lhs,
            "stirling_rhs": stirling_rhs,
            "hall_prediction": hall,
        },
        "ratios": ratios,
        "flags": {
            "in_range": dp.in_range,
            "degenerate_envelope": degenerate,
            "hall_x_ok": hall_x_ok,
            # the moment prediction needs both the count bound and the
            # window width inside their stated ranges
            "hall_range_ok": hall_x_ok and dp.in_range,
            "paper_xy_range": win.paper_xy_range,
            "paper_z_range": win.paper_z_range,
        },
    }


def _out_dir(args) -> str:
    return args.out_dir or os.environ.get(ENV_OUT_DIR) or "."


def _sieve_config(args) -> sieve_mod.SieveConfig:
    return sieve_mod.SieveConfig(
        r_max=args.rmax,
        segment_size=args.segment_size,
        parallelism=args.parallelism,
        checkpoint_path=getattr(args, "checkpoint", None),
        eps=args.eps,
    )


def cmd_params(args) -> int:
    win = Window(args.x if args.x is not None else 1, args.y, args.z)
    dp = params_mod.derive(win, args.eps)
    payload = {"params": dp.to_dict(), "window": {"y": win.y, "z": win.z}}
    if args.x is not None:
        payload["window"]["x"] = win.x
        payload["flags"] = {
            "paper_xy_range": win.paper_xy_range,
            "paper_z_range": win.paper_z_range,
        }
    sys.stdout.write(dumps_report(payload))
    return 0


def cmd_sieve(args) -> int:
    win = Window(args.x, args.y, args.z)
    cfg = _sieve_config(args)
    hist = sieve_mod.run(win, cfg)
    out = _out_dir(args)
    _write_text(
        os.path.join(out, "manifest.json"),
        dumps_report(sieve_mod.run_manifest(win, cfg)),
    )
    _write_text(os.path.join(out, "histogram.csv"), "\n".join(hist.csv_lines()) + "\n")
    for line in (
        f"H,{hist.h}",
        f"H1,{hist.counts[1]}",
        f"H2*,{hist.h2_star}",
        f"moment,{hist.moment}",
        f"max_tau,{hist.max_tau}",
    ):
        print(line)
    return 0


def cmd_classify(args) -> int:
    win = Window(args.x, args.y, args.z)
    dp = params_mod.derive(win, args.eps)
    counts = classify_all(
        win, dp, segment_size=args.segment_size, parallelism=args.parallelism
    )
    text = "\n".join(counts.csv_lines()) + "\n"
    _write_text(os.path.join(_out_dir(args), "classes.csv"), text)
    sys.stdout.write(text)
    return 0


def cmd_scan(args) -> int:
    if args.y <= math.e:
        raise DomainError(f"scan needs y > e, got {args.y}")
    bound = (params_mod.LOG4 - 1.0) * math.sqrt(params_mod.iterated_log(args.y))
    for xi in args.xi:
        if not args.allow_out_of_range and not -1e-9 <= xi <= bound + 1e-9:
            raise DomainError(
                f"xi={xi} outside [0, {bound:.6g}]; pass --allow-out-of-range to force"
            )
    out = _out_dir(args)
    summary = ["xi,h2_frac,envelope_ratio,quotient"]
    for i, xi in enumerate(args.xi):
        z = params_mod.xi_to_z(args.y, xi)
        win = Window(args.x, args.y, z)
        dp = params_mod.derive(win, args.eps)
        cfg = _sieve_config(args)
        hist = sieve_mod.run(win, cfg)
        report = comparison_report(win, dp, hist)
        point_dir = os.path.join(out, f"xi_{i:02d}")
        _write_text(os.path.join(point_dir, "report.json"), dumps_report(report))
        _write_text(
            os.path.join(point_dir, "manifest.json"),
            dumps_report(sieve_mod.run_manifest(win, cfg)),
        )
        _write_text(
            os.path.join(point_dir, "histogram.csv"), "\n".join(hist.csv_lines()) + "\n"
        )
        h2_frac = hist.h2_star / hist.h if hist.h else float("nan")
        env_ratio = params_mod.envelope_ratio(dp)
        quotient = h2_frac / env_ratio if env_ratio > 0 else float("nan")
        summary.append(
            ",".join(
                f"{v:.12g}" if isinstance(v, float) else str(v)
                for v in (xi, h2_frac, env_ratio, quotient)
            )
        )
    text = "\n".join(summary) + "\n"
    _write_text(os.path.join(out, "scan_summary.csv"), text)
    sys.stdout.write(text)
    return 0


def cmd_oracle(args) -> int:
    hist = oracle_mod.histogram_naive(args.x, args.y, args.z, r_max=args.rmax)
    for line in (
        f"H,{hist.h}",
        f"H1,{hist.counts[1]}",
        f"H2*,{hist.h2_star}",
        f"moment,{hist.moment}",
    ):
        print(line)
    return 0


def cmd_probe(args) -> int:
    vals = args.args
    if args.lemma == "lemma1":
        u, v, k, alpha, limit = vals
        res = oracle_mod.probe_lemma1(u, v, int(k), alpha, int(limit))
    elif args.lemma == "lemma2":
        u, k, alpha, limit = vals
        res = oracle_mod.probe_lemma2(u, int(k), alpha, int(limit))
    elif args.lemma == "lemma3":
        x, big_y, w, z, a, b = vals
        count = oracle_mod.probe_lemma3(int(x), big_y, w, z, int(a), int(b))
        sys.stdout.write(dumps_report({"lemma": "lemma3", "count": count}))
        return 0
    else:
        raise DomainError(f"unknown lemma {args.lemma!r}")
    sys.stdout.write(
        dumps_report(
            {
                "lemma": args.lemma,
                "value": res.value,
                "limit": res.limit,
                "rhs_reference": res.rhs_reference,
                "c_hat": res.c_hat,
            }
        )
    )
    return 0


def _add_run_flags(p: argparse.ArgumentParser, checkpoint: bool = False) -> None:
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--rmax", type=int, default=64)
    p.add_argument("--segment-size", type=int, default=1 << 20)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--out-dir", type=str, default=None)
    if checkpoint:
        p.add_argument("--checkpoint", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divwin",
        description="Exact divisor-in-short-interval statistics and envelope tracking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="print derived window parameters")
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--x", type=int, default=None)
    p.add_argument("--eps", type=float, default=0.01)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("sieve", help="exact histogram of window divisor counts")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--z", type=float, required=True)
    _add_run_flags(p, checkpoint=True)
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("classify", help="census of the six integer classes")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--z", type=float, required=True)
    _add_run_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("scan", help="sweep a xi grid, one comparison report per point")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--xi", type=float, nargs="+", required=True)
    p.add_argument("--allow-out-of-range", action="store_true")
    _add_run_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("oracle", help="brute-force reference histogram")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--rmax", type=int, default=64)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("probe", help="truncated numeric probe of a bounded-sum lemma")
    p.add_argument("lemma", choices=["lemma1", "lemma2", "lemma3"])
    p.add_argument("args", type=float, nargs="+")
    p.set_defaults(func=cmd_probe)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ManifestMismatchError as exc:
        print(f"manifest mismatch: {exc}", file=sys.stderr)
        return 4
    except ConsistencyError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivwinError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
