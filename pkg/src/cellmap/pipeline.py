"""Run configuration and the end-to-end simulate -> densify -> localize -> evaluate loop."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping, Sequence

import numpy as np

from cellmap import evaluation as ev
from cellmap.core import Bounds, Fingerprint, RadioMap
from cellmap.densify import DensifyConfig, DensifyResult, densify_radio_map, seed_radio_map
from cellmap.errors import CellmapError, FormatError
from cellmap.localize import KNN, PROBABILISTIC, LocalizationEstimate, LocalizeConfig, locate_all
from cellmap.preprocess import SplitConfig, restrict_scan
from cellmap.simulate import (
    Environment,
    EnvironmentSpec,
    make_environment,
    sample_seed_set,
    sample_test_set,
)

log = logging.getLogger(__name__)

ENGINES = (KNN, PROBABILISTIC)


@dataclass(frozen=True)
class RunConfig:
    environment: EnvironmentSpec = field(default_factory=EnvironmentSpec)
    densify: DensifyConfig = field(default_factory=DensifyConfig)
    localize: LocalizeConfig = field(default_factory=LocalizeConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    seed_density: float = 0.39
    test_count: int = 200
    seed: int = 0

    def with_seed(self, seed: int) -> RunConfig:
        """Re-derive every sub-seed from one root seed."""
        s = derive_seeds(seed)
        return replace(
            self,
            seed=int(seed),
            environment=replace(self.environment, rng_seed=s["environment"]),
            split=replace(self.split, rng_seed=s["split"]),
        )


def derive_seeds(seed: int) -> dict[str, int]:
    names = ("environment", "survey", "test", "split")
    children = np.random.SeedSequence(int(seed)).spawn(len(names))
    return {n: int(c.generate_state(1, np.uint64)[0]) for n, c in zip(names, children)}


def _build(cls, raw: Mapping[str, Any], where: str, convert=None):
    if not isinstance(raw, Mapping):
        raise FormatError(f"config: {where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise FormatError(f"config: unknown keys in {where}: {sorted(unknown)}")
    kwargs = dict(raw)
    if convert:
        kwargs = convert(kwargs)
    try:
        obj = cls(**kwargs)
    except (TypeError, CellmapError) as e:
        raise FormatError(f"config: {where}: {e}") from None
    return obj


def _env_kwargs(kw: dict) -> dict:
    if "bounds" in kw:
        b = kw["bounds"]
        if not (isinstance(b, list) and len(b) == 4):
            raise FormatError("config: environment.bounds must be [xmin, ymin, xmax, ymax]")
        try:
            kw["bounds"] = Bounds(*map(float, b))
        except (TypeError, ValueError) as e:
            raise FormatError(f"config: environment.bounds: {e}") from None
    return kw


def _densify_kwargs(kw: dict) -> dict:
    if "k_search_range" in kw:
        kw["k_search_range"] = tuple(kw["k_search_range"])
    return kw


def config_from_dict(raw: Mapping[str, Any]) -> RunConfig:
    top = {"environment", "densify", "localize", "split", "seed_density", "test_count", "seed"}
    unknown = set(raw) - top
    if unknown:
        raise FormatError(f"config: unknown top-level keys {sorted(unknown)}")
    cfg = RunConfig(
        environment=_build(EnvironmentSpec, raw.get("environment", {}), "environment", _env_kwargs),
        densify=_build(DensifyConfig, raw.get("densify", {}), "densify", _densify_kwargs),
        localize=_build(LocalizeConfig, raw.get("localize", {}), "localize"),
        split=_build(SplitConfig, raw.get("split", {}), "split"),
        seed_density=float(raw.get("seed_density", 0.39)),
        test_count=int(raw.get("test_count", 200)),
        seed=int(raw.get("seed", 0)),
    )
    try:
        cfg.environment.validate()
    except CellmapError as e:
        raise FormatError(f"config: environment: {e}") from None
    if not cfg.seed_density > 0 or cfg.test_count < 1:
        raise FormatError("config: seed_density must be > 0 and test_count >= 1")
    return cfg


def load_config(data: bytes | str) -> RunConfig:
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise FormatError(f"config: line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise FormatError("config: top level must be an object")
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    env = asdict(cfg.environment)
    b = cfg.environment.bounds
    env["bounds"] = [b.xmin, b.ymin, b.xmax, b.ymax]
    dens = asdict(cfg.densify)
    dens["k_search_range"] = list(cfg.densify.k_search_range)
    return {
        "seed": cfg.seed,
        "seed_density": cfg.seed_density,
        "test_count": cfg.test_count,
        "environment": env,
        "densify": dens,
        "localize": asdict(cfg.localize),
        "split": asdict(cfg.split),
    }


# -- stages ----------------------------------------------------------------


def simulate_datasets(cfg: RunConfig) -> tuple[Environment, list[Fingerprint], list[Fingerprint]]:
    cfg = cfg.with_seed(cfg.seed)
    seeds = derive_seeds(cfg.seed)
    env = make_environment(cfg.environment)
    survey = sample_seed_set(env, cfg.seed_density, np.random.default_rng(seeds["survey"]))
    test = sample_test_set(env, cfg.test_count, np.random.default_rng(seeds["test"]))
    return env, survey, test


def localize_scans(
    radio_map: RadioMap, queries: Sequence[Fingerprint], engine: str, cfg: LocalizeConfig
) -> list[LocalizationEstimate]:
    """Locate every query, ignoring towers the map has never heard."""
    scans = [restrict_scan(q.readings, radio_map.universe) for q in queries]
    return locate_all(radio_map, scans, engine, cfg)


def engine_comparison(
    truth: Sequence[Fingerprint],
    baseline: Sequence[LocalizationEstimate],
    enhanced: Sequence[LocalizationEstimate] | None,
) -> dict[str, Any]:
    true_pos = [t.position for t in truth]
    if len(baseline) != len(true_pos) or (enhanced is not None and len(enhanced) != len(true_pos)):
        raise CellmapError("estimate count does not match the number of truth fingerprints")
    base = ev.error_stats([(e.position, p) for e, p in zip(baseline, true_pos)])
    out: dict[str, Any] = {"baseline": base}
    if enhanced is not None:
        enh = ev.error_stats([(e.position, p) for e, p in zip(enhanced, true_pos)])
        out["enhanced"] = enh
        out["improvement_percent"] = ev.improvement(base, enh)
        out["mean_improvement_percent"] = ev.mean_improvement(base, enh)
    return out


@dataclass
class PipelineResult:
    config: RunConfig
    environment: Environment
    survey: list[Fingerprint]
    test: list[Fingerprint]
    baseline_map: RadioMap
    densified: DensifyResult
    estimates: dict[tuple[str, str], list[LocalizationEstimate]]
    comparisons: dict[str, dict[str, Any]]
    density: ev.DensityReport


def run_pipeline(cfg: RunConfig, engines: Sequence[str] = ENGINES) -> PipelineResult:
    """Everything downstream of ``cfg.seed``; pure in (cfg, seed)."""
    cfg = cfg.with_seed(cfg.seed)
    env, survey, test = simulate_datasets(cfg)
    area = cfg.environment.bounds
    log.info("simulated %d seed and %d test scans", len(survey), len(test))

    baseline_map = seed_radio_map(survey, area)
    densified = densify_radio_map(survey, cfg.densify, cfg.split, bounds=area)
    log.info(
        "densified with k=%d (holdout RMSE %.3f ASU): %d anchors",
        densified.best_k,
        densified.report.rmse_overall,
        len(densified.radio_map),
    )

    estimates = {}
    comparisons = {}
    for engine in engines:
        base = localize_scans(baseline_map, test, engine, cfg.localize)
        enh = localize_scans(densified.radio_map, test, engine, cfg.localize)
        estimates[("baseline", engine)] = base
        estimates[("densified", engine)] = enh
        comparisons[engine] = engine_comparison(test, base, enh)

    density = ev.density_report(ev.anchor_density(baseline_map), ev.anchor_density(densified.radio_map))
    return PipelineResult(cfg, env, survey, test, baseline_map, densified, estimates, comparisons, density)


# -- report rendering ------------------------------------------------------


def stats_dict(s: ev.ErrorStats) -> dict[str, Any]:
    return {"count": s.count, "mean_m": s.mean, "median_m": s.median, "p75_m": s.p75, "p90_m": s.p90, "max_m": s.max}


def comparison_dict(comp: Mapping[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {"baseline": stats_dict(comp["baseline"])}
    if "enhanced" in comp:
        out["enhanced"] = stats_dict(comp["enhanced"])
        out["improvement_percent"] = comp["improvement_percent"]
        out["mean_improvement_percent"] = comp["mean_improvement_percent"]
        out["in_expected_band"] = 30.0 <= comp["improvement_percent"] <= 50.0
    return out


def density_dict(d: ev.DensityReport | None) -> dict[str, Any] | None:
    if d is None:
        return None
    return {"before_per_m2": d.before, "after_per_m2": d.after, "increase_percent": d.increase_percent}


def pipeline_report(res: PipelineResult) -> dict[str, Any]:
    rep = res.densified.report
    return {
        "seed": res.config.seed,
        "density": density_dict(res.density),
        "validation": {
            "best_k": res.densified.best_k,
            "rmse_overall_asu": rep.rmse_overall,
            "rmse_per_tower_asu": list(rep.rmse_per_tower),
            "holdout_count": rep.holdout_count,
            "rmse_by_k": {str(r.k): r.rmse_overall for r in res.densified.reports_per_k},
        },
        "anchors": {
            "seed": int(res.densified.radio_map.seed_mask.sum()),
            "synthetic": int((~res.densified.radio_map.seed_mask).sum()),
        },
        "engines": {e: comparison_dict(c) for e, c in res.comparisons.items()},
    }


def render_text(report: Mapping[str, Any]) -> str:
    lines = []
    d = report.get("density")
    if d:
        lines.append(
            f"anchor density: {d['before_per_m2']:.4f} -> {d['after_per_m2']:.4f} per m^2 "
            f"(coverage +{d['increase_percent']:.1f}%)"
        )
    v = report.get("validation")
    if v:
        lines.append(
            f"interpolator: best k={v['best_k']}, holdout RMSE {v['rmse_overall_asu']:.3f} ASU "
            f"over {v['holdout_count']} points"
        )
    for engine, comp in report.get("engines", {}).items():
        b = comp["baseline"]
        lines.append(f"[{engine}] baseline median {b['median_m']:.3f} m, mean {b['mean_m']:.3f} m, p90 {b['p90_m']:.3f} m")
        if "enhanced" in comp:
            e = comp["enhanced"]
            lines.append(f"[{engine}] enhanced median {e['median_m']:.3f} m, mean {e['mean_m']:.3f} m, p90 {e['p90_m']:.3f} m")
            band = "inside" if comp["in_expected_band"] else "outside"
            lines.append(
                f"[{engine}] improvement {comp['improvement_percent']:.1f}% (median), "
                f"{comp['mean_improvement_percent']:.1f}% (mean); {band} the 30-50% band"
            )
    return "\n".join(lines) + "\n"
