"""Multi-stage generation: base sample, then guided stages at increasing resolution."""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import dumps, metrics
from .config import CascadeConfig
from .fields import VelocityField, make_field
from .grid import FilterMask, lowpass_swap
from .guidance import GuidanceConfig, guided_sample
from .imageio import read_pnm, write_ppm
from .reference import ReferenceFlow, build_reference
from .sampler import Trajectory, sample
from .schedule import NoiseSpec, sample_noise

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "stage", "mode", "config", "seed", "height", "width",
    "lowband_mse", "highband_energy_ratio", "psnr_vs_reference", "detail_distance",
    "terminal_hash", "matches_vanilla",
)


def constant_anchor_align(x0_high, anchor, mask: FilterMask, alpha_t: float) -> np.ndarray:
    """Baseline fusion with one fixed anchor (the upsampled low resolution terminal) at every step."""
    return lowpass_swap(x0_high, anchor, mask, alpha_t)


def grid_hash(g) -> str:
    """Short SHA-256 of a grid's float64 bytes."""
    return hashlib.sha256(np.ascontiguousarray(g, dtype="<f8").tobytes()).hexdigest()[:16]


def build_stage_field(config: CascadeConfig, k: int) -> VelocityField:
    dims = config.stage_dims(k)
    params = config.stage_field(k)
    kind = params.pop("kind")
    if params.pop("vary_with_seed", False):
        offset = config.stage_seed(k)
        params["scene_seed"] = params.get("scene_seed", 0) + offset
        params["texture_seed"] = params.get("texture_seed", 0) + offset
    if isinstance(params.get("target"), str):
        params["target"] = read_pnm(params["target"])
        if params["target"].shape[0] != dims[0]:
            params["target"] = np.repeat(params["target"][:1], dims[0], axis=0)
    params["base_height"] = config.height
    params["interpolation"] = config.interpolation
    return make_field(kind, dims, **params)


@dataclass(eq=False)
class StageResult:
    index: int
    dims: tuple
    trajectory: Trajectory
    reference: Optional[ReferenceFlow] = None
    metrics: dict = field(default_factory=dict)

    @property
    def terminal(self) -> np.ndarray:
        return self.trajectory.x_final


def run_base_stage(config: CascadeConfig, record: bool = True) -> StageResult:
    field_ = build_stage_field(config, 0)
    noise = sample_noise(NoiseSpec(config.stage_seed(0), 0), field_.dims)
    traj = sample(field_, config.time_schedule(), noise, 1.0, record)
    return StageResult(0, field_.dims, traj)


def run_guided_stage(
    config: CascadeConfig,
    k: int,
    prev: Trajectory,
    guidance: Optional[GuidanceConfig] = None,
    mode: Optional[str] = None,
) -> StageResult:
    """Run stage ``k >= 1`` guided by the previous stage's trajectory."""
    mode = mode or config.mode
    guidance = guidance or config.stages[k - 1].guidance
    field_ = build_stage_field(config, k)
    schedule = config.time_schedule()
    ref = build_reference(prev, field_.dims, config.interpolation)
    spec = NoiseSpec(config.stage_seed(k), k)
    if mode == "none":
        traj = sample(field_, schedule, sample_noise(spec, field_.dims))
    else:
        anchor_mode = "constant" if mode == "constant_anchor" else "reference"
        traj = guided_sample(field_, schedule, ref, guidance, spec, anchor_mode=anchor_mode)
    result = StageResult(k, field_.dims, traj, ref)
    result.metrics = stage_metrics(result, guidance)
    return result


def stage_metrics(result: StageResult, guidance: GuidanceConfig) -> dict:
    rep = metrics.report(result.terminal, result.reference.anchor, guidance.cutoff, guidance.order)
    values = dict(rep.values)
    values["detail_distance"] = metrics.detail_distance(result.trajectory, result.reference)
    return values


def run_cascade(
    config: CascadeConfig,
    *,
    start_stage: int = 0,
    prev_trajectory: Optional[Trajectory] = None,
) -> list[StageResult]:
    """Run every stage in order; resuming at ``start_stage`` needs the previous stage's trajectory."""
    config.validate()
    results: list[StageResult] = []
    if start_stage == 0:
        results.append(run_base_stage(config))
        prev = results[0].trajectory
    else:
        if prev_trajectory is None:
            raise ValueError("resuming a cascade needs the previous stage's trajectory")
        prev = prev_trajectory
    for k in range(max(start_stage, 1), len(config.stages) + 1):
        log.info("stage %d: %s at %s", k, config.mode, config.stage_dims(k))
        res = run_guided_stage(config, k, prev)
        results.append(res)
        prev = res.trajectory
    return results


def metric_row(result: StageResult, mode: str, seed: int, label: str = "", matches_vanilla: str = "") -> dict:
    _, h, w = result.dims
    return {
        "stage": result.index,
        "mode": mode,
        "config": label or mode,
        "seed": seed,
        "height": h,
        "width": w,
        **result.metrics,
        "terminal_hash": grid_hash(result.terminal),
        "matches_vanilla": matches_vanilla,
    }


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def write_metrics_csv(path, rows) -> None:
    rows = sorted(rows, key=lambda r: (r["stage"], str(r["config"]), r["seed"]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([_fmt(r.get(c, "")) for c in CSV_COLUMNS])


def write_outputs(config: CascadeConfig, results, out_dir, dump_trajectories: bool = True,
                  precision: str = "f64") -> list[Path]:
    """Write images, dumps and the metrics CSV; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for res in results:
        path = out / f"stage{res.index}.ppm"
        write_ppm(path, res.terminal)
        written.append(path)
        if dump_trajectories:
            path = out / f"stage{res.index}.hft"
            dumps.save_trajectory(path, res.trajectory, precision)
            written.append(path)
            if res.reference is not None:
                path = out / f"stage{res.index}.hfr"
                dumps.save_reference(path, res.reference, precision)
                written.append(path)
    rows = [metric_row(r, config.mode, config.seed) for r in results if r.index > 0]
    path = out / "metrics.csv"
    write_metrics_csv(path, rows)
    written.append(path)
    return written


# --------------------------------------------------------------------------
# ablation grid

ABLATIONS = (
    ("-g_a,-g_d,-g_i", dict(g_i=False, g_d=False, g_a=False)),
    ("-g_a,-g_d", dict(g_i=True, g_d=False, g_a=False)),
    ("-g_a", dict(g_i=True, g_d=True, g_a=False)),
    ("hiflow", dict(g_i=True, g_d=True, g_a=True)),
)


def ablation_guidance(base: GuidanceConfig, flags: dict) -> GuidanceConfig:
    """Guidance for one ablation row; with every flag off the stage starts from pure noise."""
    tau = base.tau if any(flags.values()) else 1.0
    return GuidanceConfig(tau, base.cutoff, base.order, base.alpha, base.beta, **flags)


def run_ablation(config: CascadeConfig, seed: int) -> list[dict]:
    """All ablation rows for one seed.

    Each guided stage runs under every flag combination, guided by the same
    full-HiFlow trajectory of the stage before it, so rows differ only in the
    stage being ablated.
    """
    cfg = config.with_seed(seed)
    rows = []
    prev = run_base_stage(cfg).trajectory
    schedule = cfg.time_schedule()
    for k in range(1, len(cfg.stages) + 1):
        base_guidance = cfg.stages[k - 1].guidance
        keep = None
        for label, flags in ABLATIONS:
            res = run_guided_stage(cfg, k, prev, ablation_guidance(base_guidance, flags), "hiflow")
            match = ""
            if not any(flags.values()):
                field_ = build_stage_field(cfg, k)
                noise = sample_noise(NoiseSpec(cfg.stage_seed(k), k), field_.dims)
                vanilla = sample(field_, schedule, noise, record=False).x_final
                match = "1" if grid_hash(vanilla) == grid_hash(res.terminal) else "0"
            rows.append(metric_row(res, "hiflow", seed, label, match))
            if label == "hiflow":
                keep = res
        prev = keep.trajectory
    return rows
