"""Command-line entry point: ``cellmap <subcommand> [--seed S] [--config C] [--out DIR]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from cellmap import evaluation as ev
from cellmap import formats as fmt
from cellmap.core import Bounds
from cellmap.densify import densify_radio_map
from cellmap.errors import CellmapError
from cellmap.localize import KNN, PROBABILISTIC
from cellmap.pipeline import (
    RunConfig,
    comparison_dict,
    config_to_dict,
    density_dict,
    engine_comparison,
    load_config,
    localize_scans,
    pipeline_report,
    render_text,
    run_pipeline,
    simulate_datasets,
)

log = logging.getLogger("cellmap")


def _resolve_config(args) -> RunConfig:
    cfg = load_config(fmt.read_bytes(args.config)) if args.config else RunConfig()
    seed = cfg.seed if args.seed is None else args.seed
    if not 0 <= seed < 2**64:
        raise CellmapError("--seed must be an unsigned 64-bit integer")
    return cfg.with_seed(seed)


def _parse_bounds(text: str) -> Bounds:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise CellmapError(f"--bounds expects xmin,ymin,xmax,ymax, got {text!r}") from None
    if len(vals) != 4:
        raise CellmapError(f"--bounds expects 4 numbers, got {len(vals)}")
    return Bounds(*vals)


def _json_report(body) -> bytes:
    return fmt.emit_report(body)


def cmd_simulate(args, cfg: RunConfig) -> dict[str, bytes]:
    _, survey, test = simulate_datasets(cfg)
    return {
        "seeds.json": fmt.emit_fingerprints(survey),
        "test.json": fmt.emit_fingerprints(test),
        "config.json": _json_report({"config": config_to_dict(cfg)}),
    }


def cmd_densify(args, cfg: RunConfig) -> dict[str, bytes]:
    seeds = fmt.parse_fingerprints(fmt.read_bytes(args.fingerprints), args.fingerprints)
    bounds = _parse_bounds(args.bounds) if args.bounds else None
    res = densify_radio_map(seeds, cfg.densify, cfg.split, bounds=bounds)
    rep = res.report
    body = {
        "validation": {
            "best_k": res.best_k,
            "rmse_overall_asu": rep.rmse_overall,
            "rmse_per_tower_asu": list(rep.rmse_per_tower),
            "holdout_count": rep.holdout_count,
            "rmse_by_k": {str(r.k): r.rmse_overall for r in res.reports_per_k},
        },
        "anchors": {"seed": len(seeds), "synthetic": len(res.radio_map) - len(seeds)},
        "density_per_m2": ev.anchor_density(res.radio_map),
    }
    return {"radio_map.json": fmt.emit_radio_map(res.radio_map), "validation.json": _json_report(body)}


def cmd_localize(args, cfg: RunConfig) -> dict[str, bytes]:
    radio_map = fmt.parse_radio_map(fmt.read_bytes(args.map), args.map)
    queries = fmt.parse_fingerprints(fmt.read_bytes(args.queries), args.queries)
    engines = (KNN, PROBABILISTIC) if args.engine == "all" else (args.engine,)
    density = ev.anchor_density(radio_map) if radio_map.bounds.area > 0 else None
    out = {}
    for engine in engines:
        est = localize_scans(radio_map, queries, engine, cfg.localize)
        out[f"{args.prefix}{engine}.json"] = fmt.emit_estimates(engine, est, density)
    return out


class _Est:
    def __init__(self, position):
        self.position = position


def cmd_evaluate(args, cfg: RunConfig) -> dict[str, bytes]:
    truth = fmt.parse_fingerprints(fmt.read_bytes(args.truth), args.truth)
    base = fmt.parse_estimates(fmt.read_bytes(args.baseline), args.baseline)
    enh = fmt.parse_estimates(fmt.read_bytes(args.enhanced), args.enhanced) if args.enhanced else None
    if enh is not None and enh["engine"] != base["engine"]:
        log.warning("comparing different engines: %s vs %s", base["engine"], enh["engine"])

    comp = engine_comparison(
        truth,
        [_Est(p) for p in base["positions"]],
        None if enh is None else [_Est(p) for p in enh["positions"]],
    )
    before = _density_from(args.baseline_map, base)
    after = _density_from(args.enhanced_map, enh) if enh is not None else None
    density = ev.density_report(before, after) if before and after is not None else None

    body = {"density": density_dict(density), "engines": {base["engine"]: comparison_dict(comp)}}
    if "improvement_percent" in comp:
        body["improvement_percent"] = comp["improvement_percent"]
        body["mean_improvement_percent"] = comp["mean_improvement_percent"]
    files = {
        "report.json": _json_report(body),
        "report.txt": render_text(body).encode("utf-8"),
        "cdf_baseline.csv": fmt.emit_cdf_csv(comp["baseline"].cdf),
    }
    if enh is not None:
        files["cdf_enhanced.csv"] = fmt.emit_cdf_csv(comp["enhanced"].cdf)
    return files


def _density_from(map_path, estimates) -> float | None:
    if map_path:
        return ev.anchor_density(fmt.parse_radio_map(fmt.read_bytes(map_path), map_path))
    if estimates is not None:
        return estimates["map_density"]
    return None


def cmd_pipeline(args, cfg: RunConfig) -> dict[str, bytes]:
    res = run_pipeline(cfg)
    report = pipeline_report(res)
    report["config"] = config_to_dict(cfg)
    files = {
        "seeds.json": fmt.emit_fingerprints(res.survey),
        "test.json": fmt.emit_fingerprints(res.test),
        "map_seed.json": fmt.emit_radio_map(res.baseline_map),
        "map_densified.json": fmt.emit_radio_map(res.densified.radio_map),
        "report.json": _json_report(report),
        "report.txt": render_text(report).encode("utf-8"),
    }
    dens = {"baseline": ev.anchor_density(res.baseline_map), "densified": ev.anchor_density(res.densified.radio_map)}
    for (which, engine), est in res.estimates.items():
        files[f"estimates_{which}_{engine}.json"] = fmt.emit_estimates(engine, est, dens[which])
    for engine, comp in res.comparisons.items():
        files[f"cdf_{engine}_baseline.csv"] = fmt.emit_cdf_csv(comp["baseline"].cdf)
        files[f"cdf_{engine}_densified.csv"] = fmt.emit_cdf_csv(comp["enhanced"].cdf)
    return files


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="root seed for all randomness")
    common.add_argument("--config", default=None, help="JSON run configuration")
    common.add_argument("--out", default=".", help="output directory (default: cwd)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cellmap", description="Cellular radio-map densification toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="sample seed and test fingerprints")

    d = sub.add_parser("densify", parents=[common], help="synthesize a dense radio map")
    d.add_argument("--fingerprints", required=True)
    d.add_argument("--bounds", help="survey area xmin,ymin,xmax,ymax (default: seed bounding box)")

    lo = sub.add_parser("localize", parents=[common], help="estimate positions of query scans")
    lo.add_argument("--map", required=True)
    lo.add_argument("--queries", required=True)
    lo.add_argument("--engine", choices=(KNN, PROBABILISTIC, "all"), default="all")
    lo.add_argument("--prefix", default="estimates_", help="output file name prefix")

    e = sub.add_parser("evaluate", parents=[common], help="error statistics and improvement")
    e.add_argument("--truth", required=True, help="fingerprint file holding the true positions")
    e.add_argument("--baseline", required=True, help="estimates file from the sparse map")
    e.add_argument("--enhanced", help="estimates file from the densified map")
    e.add_argument("--baseline-map")
    e.add_argument("--enhanced-map")

    sub.add_parser("pipeline", parents=[common], help="simulate, densify, localize and evaluate")
    return p


COMMANDS = {
    "simulate": cmd_simulate,
    "densify": cmd_densify,
    "localize": cmd_localize,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _resolve_config(args)
        files = COMMANDS[args.command](args, cfg)
        written = fmt.write_outputs(Path(args.out), files)
    except CellmapError as e:
        print(f"cellmap {args.command}: error: {e}", file=sys.stderr)
        return 1
    for path in written:
        log.info("wrote %s", path)
    if args.command in ("evaluate", "pipeline"):
        sys.stdout.write(files["report.txt"].decode("utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
