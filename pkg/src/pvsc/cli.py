"""Command-line experiment driver.

    pvsc run --config exp.json [--out-dir DIR] [--jobs N]
    pvsc bd --anchor a.csv --test b.csv [--metric psnr]
    pvsc gen --spec synth.json --out video.raw
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ConfigError, ExperimentConfig, InputSpec, SweepPoint, load_config
from .metrics import RateQualityCurve, bd_cbr
from .pipeline import Session, run_sequence
from .video import SyntheticSpec, generate, read_raw, write_raw

FRAME_COLUMNS = ("seq_id", "frame", "snr_db", "cbr", "psnr", "mse", "l1", "sum_k", "side_bits",
                 "rate_loss", "point", "gop", "preset", "nmse_db")
SUMMARY_COLUMNS = ("point", "seq_id", "snr_db", "gop", "preset", "nmse_db", "frames", "mean_cbr",
                   "mean_psnr", "mean_mse", "mean_l1", "mean_sum_k", "status")
GROUP_KEYS = ("seq_id", "snr_db", "gop", "nmse_db")
METRICS = {"psnr": 1.0, "mse": -1.0, "l1": -1.0}


def fmt(v) -> str:
    if v is None:
        return "perfect"
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.9g}"
    return str(v)


def load_frames(inp: InputSpec, base_dir: str) -> List[np.ndarray]:
    if inp.synthetic is not None:
        return generate(inp.synthetic)
    path = inp.raw_path if os.path.isabs(inp.raw_path) else os.path.join(base_dir, inp.raw_path)
    h, w, c = inp.dims
    return read_raw(path, h, w, c, inp.max_frames)


def run_point(cfg: ExperimentConfig, point: SweepPoint, out_dir: str) -> Dict:
    """Evaluate one sweep point; failures are returned, not raised."""
    try:
        frames = load_frames(cfg.input_for(point.seq_id), cfg.base_dir)
        session = Session(cfg.session_for(point))
        cap = os.path.join(out_dir, "capture", f"point_{point.index:04d}") if cfg.capture else None
        res = run_sequence(frames, session, seq_id=point.seq_id, capture_dir=cap)
    except Exception as exc:
        return {"point": point, "rows": [], "error": f"{type(exc).__name__}: {exc}"}
    rows = []
    for r in res.reports:
        rows.append({
            "seq_id": point.seq_id, "frame": r.frame_index, "snr_db": point.snr_db, "cbr": r.cbr,
            "psnr": r.psnr, "mse": r.mse, "l1": r.l1, "sum_k": r.sum_k, "side_bits": r.side_bits,
            "rate_loss": r.rate_loss, "point": point.index, "gop": point.gop,
            "preset": point.preset, "nmse_db": point.nmse_db,
        })
    return {"point": point, "rows": rows, "error": None}


def _mean(values):
    finite = [v for v in values if math.isfinite(v)]
    return float(np.mean(finite)) if finite else math.inf


def summary_row(result: Dict) -> Dict:
    p: SweepPoint = result["point"]
    row = {"point": p.index, "seq_id": p.seq_id, "snr_db": p.snr_db, "gop": p.gop,
           "preset": p.preset, "nmse_db": p.nmse_db}
    rows = result["rows"]
    if result["error"]:
        row.update({k: "" for k in SUMMARY_COLUMNS if k not in row})
        row["frames"] = 0
        row["status"] = "error"
        return row
    row.update({
        "frames": len(rows),
        "mean_cbr": float(np.mean([r["cbr"] for r in rows])),
        "mean_psnr": _mean([r["psnr"] for r in rows]),
        "mean_mse": float(np.mean([r["mse"] for r in rows])),
        "mean_l1": float(np.mean([r["l1"] for r in rows])),
        "mean_sum_k": float(np.mean([r["sum_k"] for r in rows])),
        "status": "ok",
    })
    return row


def write_csv(path: str, columns: Sequence[str], rows: List[Dict]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) if r[c] != "" else "" for c in columns])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def print_table(rows: List[Dict], out=None):
    out = out or sys.stdout
    head = ("point", "seq_id", "snr_db", "gop", "preset", "nmse_db", "mean_cbr", "mean_psnr", "status")
    cells = [[fmt(r[c]) if r[c] != "" else "-" for c in head] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h) for i, h in enumerate(head)]
    print("  ".join(h.rjust(wd) for h, wd in zip(head, widths)), file=out)
    for c in cells:
        print("  ".join(v.rjust(wd) for v, wd in zip(c, widths)), file=out)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.out_dir:
        out_dir = args.out_dir
    else:
        out_dir = cfg.out_dir if os.path.isabs(cfg.out_dir) else os.path.join(cfg.base_dir, cfg.out_dir)
    os.makedirs(out_dir, exist_ok=True)
    points = cfg.points()
    if args.jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(run_point, cfg, p, out_dir) for p in points]
            results = [f.result() for f in futures]
    else:
        results = [run_point(cfg, p, out_dir) for p in points]
    results.sort(key=lambda r: r["point"].index)

    frame_rows = [row for r in results for row in r["rows"]]
    summary = [summary_row(r) for r in results]
    write_csv(os.path.join(out_dir, cfg.frames_csv), FRAME_COLUMNS, frame_rows)
    write_csv(os.path.join(out_dir, cfg.summary_csv), SUMMARY_COLUMNS, summary)
    print_table(summary)
    failed = [r for r in results if r["error"]]
    for r in failed:
        p = r["point"]
        print(f"error: point {p.index} ({p.seq_id}, snr_db={fmt(p.snr_db)}, gop={p.gop}, "
              f"preset={p.preset}): {r['error']}", file=sys.stderr)
    return 1 if failed else 0


class CsvError(ValueError):
    pass


def read_curves(path: str, metric: str) -> Dict[Tuple, RateQualityCurve]:
    """Group the rate points of a summary (or per-point) CSV into curves."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise CsvError(f"{path}: cannot read: {exc.strerror}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvError(f"{path} line 1: empty file") from None
    if f"mean_{metric}" in header and "mean_cbr" in header:
        rate_col, q_col = "mean_cbr", f"mean_{metric}"
    elif metric in header and "cbr" in header:
        rate_col, q_col = "cbr", metric
    else:
        raise CsvError(f"{path} line 1: header needs cbr/{metric} or mean_cbr/mean_{metric} columns")
    keys = [k for k in GROUP_KEYS if k in header]
    pos = {name: i for i, name in enumerate(header)}
    groups: Dict[Tuple, List[Tuple[float, float]]] = {}
    sign = METRICS[metric]
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CsvError(f"{path} line {lineno}: expected {len(header)} fields, got {len(row)}")
        if "status" in pos and row[pos["status"]] not in ("", "ok"):
            continue
        try:
            rate = float(row[pos[rate_col]])
            qual = float(row[pos[q_col]])
        except ValueError:
            raise CsvError(f"{path} line {lineno}: non-numeric {rate_col}/{q_col} value") from None
        groups.setdefault(tuple(row[pos[k]] for k in keys), []).append((rate, sign * qual))
    curves = {}
    for key, pts in groups.items():
        try:
            curves[key] = RateQualityCurve.from_points(pts, metric)
        except ValueError as exc:
            raise CsvError(f"{path}: group {key}: {exc}") from exc
    if not curves:
        raise CsvError(f"{path}: no rate points")
    return curves


def cmd_bd(args) -> int:
    try:
        anchor = read_curves(args.anchor, args.metric)
        test = read_curves(args.test, args.metric)
    except CsvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if len(anchor) == 1 and len(test) == 1:
        pairs = [("", next(iter(anchor.values())), next(iter(test.values())))]
    else:
        common = sorted(set(anchor) & set(test))
        if not common:
            print("error: anchor and test share no (seq_id, snr_db, gop, nmse_db) group", file=sys.stderr)
            return 2
        pairs = [("[" + ", ".join(k) + "] ", anchor[k], test[k]) for k in common]
    status = 0
    for label, a, t in pairs:
        try:
            print(f"{label}BD-CBR ({args.metric}): {bd_cbr(a, t):.4f} %")
        except ValueError as exc:
            print(f"error: {label}{exc}", file=sys.stderr)
            status = 1
    return status


def cmd_gen(args) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = SyntheticSpec.from_dict(json.load(fh))
    except (OSError, ValueError, TypeError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    frames = generate(spec)
    write_raw(args.out, frames)
    print(f"wrote {len(frames)} frames of {spec.height}x{spec.width}x{spec.channels} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pvsc", description="Video semantic communication link simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configured sweep and write CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bd", help="BD-CBR of a test CSV against an anchor CSV")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--metric", default="psnr", choices=sorted(METRICS))
    p.set_defaults(func=cmd_bd)

    p = sub.add_parser("gen", help="write a synthetic sequence as planar 8-bit raw video")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
