"""Command line: ``boolperc {sample,estimate,sweep,verify,bounds}``.

Exit codes: 0 ok, 2 config error, 3 verification failure, 4 truncation-bias abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import experiments as ex
from .errors import BoolpercError, ConfigurationError, DomainError
from .sampler import stream

log = logging.getLogger("boolperc")

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_TRUNCATION = 0, 2, 3, 4


def _svg_tail_plot(rows, path: Path, title: str):
    """Tail curves on log-log axes; cosmetic only."""
    W, H, pad = 640, 420, 50
    series = {"p_upper": "#c0392b", "p_lower": "#2471a3", "cluster_tail_envelope": "#7d7d7d",
              "ultrametric_exact": "#229954"}
    rs = [row["r"] for row in rows]
    vals = [row[k] for row in rows for k in series if row.get(k) not in (None, 0) and row.get(k) > 0]
    if not vals:
        vals = [1e-6, 1.0]
    lo_y, hi_y = math.log10(min(vals)), math.log10(max(max(vals), 1e-300))
    if hi_y - lo_y < 1e-9:
        lo_y -= 1.0
    lo_x, hi_x = math.log10(rs[0]), math.log10(rs[-1])
    if hi_x - lo_x < 1e-9:
        hi_x += 1.0

    def pt(r, v):
        x = pad + (math.log10(r) - lo_x) / (hi_x - lo_x) * (W - 2 * pad)
        y = H - pad - (math.log10(v) - lo_y) / (hi_y - lo_y) * (H - 2 * pad)
        return f"{x:.1f},{y:.1f}"

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{pad}" y="24" font-size="14">{title}</text>',
             f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
             f'<text x="{W // 2}" y="{H - 12}" font-size="12">r (log)</text>']
    for i, (key, color) in enumerate(series.items()):
        pts = [pt(row["r"], row[key]) for row in rows if row.get(key) is not None and row[key] > 0]
        if len(pts) > 1:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{" ".join(pts)}"/>')
        parts.append(f'<text x="{W - pad - 150}" y="{pad + 16 * i}" font-size="12" fill="{color}">{key}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _write_table(result: dict, out: Path, stem: str, fmt: str) -> Path:
    if fmt == "json":
        path = out / f"{stem}.json"
        doc = {k: v for k, v in result.items() if k != "columns"}
        path.write_text(json.dumps(doc, sort_keys=True, default=float) + "\n")
    else:
        path = out / f"{stem}.csv"
        path.write_text(ex.table_csv(result["columns"], result["rows"]))
    return path


def cmd_sample(args, cfg) -> int:
    sample = ex._draw(cfg, cfg.lam, cfg.law, int(args.index))
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "sample.pbm").write_bytes(sample.to_bytes())
    if args.format == "json":
        (args.out / "sample.json").write_text(sample.to_json() + "\n")
    else:
        with open(args.out / "sample.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("center", "radius"))
            for p, r in sample.germs:
                w.writerow((json.dumps(cfg.space.point_to_json(p)), repr(r)))
    print(f"{len(sample)} germs; influence bound {sample.influence_bound:.3g}")
    return EXIT_OK


def cmd_estimate(args, cfg) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    ckpt = None if args.no_checkpoint else args.out / "checkpoint"
    try:
        result = ex.run_estimate(cfg, args.threads, ckpt)
    except ex.TruncationAbort as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    path = _write_table(result, args.out, "estimate", args.format)
    _svg_tail_plot(result["rows"], args.out / "estimate.svg", "P(M > r) bracket and envelopes")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args, cfg) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    result = ex.run_sweep(cfg, args.threads)
    print(f"wrote {_write_table(result, args.out, 'sweep', args.format)}")
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    from .verify import summary_csv, summary_text

    results = ex.run_verify(cfg)
    text = summary_text(results)
    (args.out / "verify.txt").write_text(text)
    (args.out / "verify.csv").write_text(summary_csv(results))
    failures = [{"check": r.check, "detail": r.detail} for r in results if not r.passed]
    (args.out / "verify_failures.json").write_text(json.dumps(failures, sort_keys=True) + "\n")
    sys.stdout.write(text)
    return EXIT_OK if not failures else EXIT_VERIFY


def cmd_bounds(args, cfg) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    sheet = ex.run_bounds(cfg)
    if args.format == "json":
        path = args.out / "bounds.json"
        path.write_text(sheet.to_json() + "\n")
    else:
        path = args.out / "bounds.csv"
        path.write_text(sheet.to_csv())
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"sample": cmd_sample, "estimate": cmd_estimate, "sweep": cmd_sweep, "verify": cmd_verify,
            "bounds": cmd_bounds}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="64-bit seed; overrides the config")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="boolperc", description="Boolean model percolation experiments")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("sample", parents=[common], help="draw one realization")
    s.add_argument("--index", type=int, default=0, help="replication stream index")
    e = sub.add_parser("estimate", parents=[common], help="tail table for P(M > r)")
    e.add_argument("--no-checkpoint", action="store_true")
    sub.add_parser("sweep", parents=[common], help="intensity x law phase table")
    sub.add_parser("verify", parents=[common], help="geometry and identity checks")
    sub.add_parser("bounds", parents=[common], help="closed-form bound sheet")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("config error: seed must fit in 64 bits", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = ex.load_config(args.config, args.seed, need_lambda=args.command not in ("verify",))
        stream(cfg.seed)  # reject seeds numpy cannot take
        return COMMANDS[args.command](args, cfg)
    except (ConfigurationError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BoolpercError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
