"""Command-line driver: scene generation, mining, evaluation and the toy DGP runs.

Subcommands::

    bevmine generate --config run.yaml --out scenes.jsonl
    bevmine mine     --scenes scenes.jsonl --out report.json
    bevmine eval     --scenes scenes.jsonl --report report.json --out metrics.csv
    bevmine dgp      --config run.yaml --out trace.csv
    bevmine pipeline --config run.yaml --out-dir results/

Every subcommand is deterministic given its inputs. Errors exit with status
1 and a JSON object ``{"error": {"type": ..., "message": ...}}`` on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import BevMineError, InvalidConfig, IoError, MismatchedInputs, UnsupportedVersion
from .geom import Box3D, CameraRig, default_rig
from .gradproj import TRACE_COLUMNS, HarnessConfig, run_toy_experiment
from .metrics import (
    CONFLICT_PAIRS,
    ErrorStats,
    bev_displacements,
    conflict_proportions,
    detection_localization_errors,
    gt_fit_homography,
    gt_localization_errors,
    selection_counts,
)
from .mining import Detection, MiningConfig, decoupled_generate
from .synth import NoiseModel, SceneSample, SceneSpec, ScoreModel, corrupt, depth_errors, generate_scene, rig_from_dict, rig_to_dict

logger = logging.getLogger("bevmine")

FORMAT_VERSION = 1
PROJECTION_MODES = {"on": (True,), "off": (False,), "both": (False, True)}


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class DgpConfig:
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    projection: str = "both"

    def __post_init__(self):
        if self.projection not in PROJECTION_MODES:
            raise InvalidConfig(f"projection must be one of {sorted(PROJECTION_MODES)}, got {self.projection!r}")
        if not self.seeds:
            raise InvalidConfig("dgp needs at least one seed")


@dataclass(frozen=True)
class RunConfig:
    mining: MiningConfig = field(default_factory=MiningConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    scene: SceneSpec = field(default_factory=SceneSpec)
    dgp: DgpConfig = field(default_factory=DgpConfig)
    n_scenes: int = 4
    seed: int = 0
    good_threshold: float | None = None
    output_dir: str = "bevmine_out"

    @property
    def selection_threshold(self) -> float:
        return self.mining.theta_h / 2.0 if self.good_threshold is None else self.good_threshold


_RANGE_KEYS = {"x_range", "y_range", "length_range", "width_range", "height_range", "image_size"}


def _build(cls, section, name: str):
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise InvalidConfig(f"section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(section) - known)
    if unknown:
        raise InvalidConfig(f"unknown key(s) in {name!r}: {', '.join(unknown)}")
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"{name}: {exc}") from exc


def _rig_from_section(section) -> CameraRig:
    if section is None:
        return default_rig()
    if not isinstance(section, dict):
        raise InvalidConfig("section 'rig' must be a mapping")
    params = dict(section)
    try:
        if "R" in params or "T" in params:
            return rig_from_dict(params)
        if "position_xy" in params:
            params["position_xy"] = tuple(params["position_xy"])
        base = default_rig()
        intr = {k: params.pop(k, getattr(base, k)) for k in ("fx", "fy", "cx", "cy")}
        return CameraRig.mounted(**intr, **params)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"rig: {exc}") from exc


def config_from_dict(raw: dict | None) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed config document."""
    raw = dict(raw or {})
    allowed = {"mining", "noise", "scene", "rig", "dgp", "n_scenes", "seed", "good_threshold", "output_dir"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise InvalidConfig(f"unknown top-level key(s): {', '.join(unknown)}")

    scene_raw = dict(raw.get("scene") or {})
    for key in _RANGE_KEYS & set(scene_raw):
        scene_raw[key] = tuple(scene_raw[key])
    scene_raw["rig"] = _rig_from_section(raw.get("rig"))
    scene = _build(SceneSpec, scene_raw, "scene")

    noise_raw = dict(raw.get("noise") or {})
    if "score_model" in noise_raw:
        noise_raw["score_model"] = _build(ScoreModel, noise_raw["score_model"], "noise.score_model")
    noise = _build(NoiseModel, noise_raw, "noise")

    dgp_raw = dict(raw.get("dgp") or {})
    dgp_keys = {"seeds", "projection"}
    harness = _build(HarnessConfig, {k: v for k, v in dgp_raw.items() if k not in dgp_keys}, "dgp")
    seeds = tuple(int(s) for s in dgp_raw.get("seeds", DgpConfig.seeds))
    dgp = DgpConfig(harness=harness, seeds=seeds, projection=str(dgp_raw.get("projection", "both")))

    try:
        cfg = RunConfig(
            mining=_build(MiningConfig, raw.get("mining"), "mining"),
            noise=noise,
            scene=scene,
            dgp=dgp,
            n_scenes=int(raw.get("n_scenes", RunConfig.n_scenes)),
            seed=int(raw.get("seed", RunConfig.seed)),
            good_threshold=None if raw.get("good_threshold") is None else float(raw["good_threshold"]),
            output_dir=str(raw.get("output_dir", RunConfig.output_dir)),
        )
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(str(exc)) from exc
    if cfg.n_scenes < 0:
        raise InvalidConfig("n_scenes must be non-negative")
    return cfg


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise InvalidConfig(f"config {path} is not valid YAML: {exc}") from exc
    if raw is not None and not isinstance(raw, dict):
        raise InvalidConfig("config document must be a mapping")
    return config_from_dict(raw)


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    mining = {}
    for flag, key in (("theta_c", "theta_c"), ("theta_u", "theta_u"), ("theta_h", "theta_h"), ("t_max", "t_max")):
        value = getattr(args, flag, None)
        if value is not None:
            mining[key] = value
    try:
        if mining:
            cfg = replace(cfg, mining=replace(cfg.mining, **mining))
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from exc
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "n_scenes", None) is not None:
        if args.n_scenes < 0:
            raise InvalidConfig("n_scenes must be non-negative")
        cfg = replace(cfg, n_scenes=args.n_scenes)
    return cfg


# -- serialization -------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    if x == 0.0 and math.copysign(1.0, x) < 0:
        # "-0" would read back as the integer 0 and lose the sign bit
        return "-0.0"
    return "%.17g" % x


def dumps(obj) -> str:
    """Compact JSON with every real written to 17 significant digits.

    Non-finite reals become ``null``.
    """
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _box_record(box: Box3D) -> dict:
    return {"box": {"center": list(box.center), "lwh": [box.length, box.width, box.height], "yaw": box.yaw}}


def _det_record(det: Detection, gt_index: int | None) -> dict:
    return {
        "det": {
            "class_id": det.class_id,
            "score": det.score,
            "bbox": list(det.bbox2d),
            "kp": det.keypoints_bottom.tolist(),
            "depth": det.depth,
            "lwh": list(det.size),
            "yaw": det.yaw,
            "sigma": det.sigma,
            "gt_index": gt_index,
        }
    }


def scene_lines(sample: SceneSample) -> list[str]:
    header = {
        "format_version": FORMAT_VERSION,
        "rig": rig_to_dict(sample.rig),
        "seed": sample.spec.seed,
        "spec": sample.spec.to_dict(),
    }
    lines = [dumps(header)]
    n = max(len(sample.boxes), len(sample.detections))
    for i in range(n):
        if i < len(sample.boxes):
            lines.append(dumps(_box_record(sample.boxes[i])))
        if i < len(sample.detections):
            gt = sample.gt_match[i] if i < len(sample.gt_match) else None
            lines.append(dumps(_det_record(sample.detections[i], gt)))
    return lines


def write_scenes(path, samples) -> None:
    text = "".join(line + "\n" for s in samples for line in scene_lines(s))
    _write_text(path, text)


def _write_text(path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror}") from exc


def _read_lines(path) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror}") from exc


def _header_to_parts(header: dict, lineno: int):
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"line {lineno}: format_version {version!r} is not supported (expected {FORMAT_VERSION})")
    try:
        rig = rig_from_dict(header["rig"])
        spec_raw = dict(header["spec"])
        for key in _RANGE_KEYS & set(spec_raw):
            spec_raw[key] = tuple(spec_raw[key])
        spec_raw["image_size"] = tuple(int(v) for v in spec_raw.get("image_size", SceneSpec.image_size))
        spec = SceneSpec(**spec_raw, rig=rig)
    except (KeyError, TypeError, ValueError) as exc:
        raise IoError(f"line {lineno}: malformed scene header ({exc})") from exc
    return rig, spec


def parse_scenes(lines) -> list[SceneSample]:
    """Parse a scene file (one or more header-led blocks) back into samples."""
    samples = []
    current = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IoError(f"line {lineno}: not valid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise IoError(f"line {lineno}: expected a JSON object")
        if "format_version" in obj:
            if current is not None:
                samples.append(_finish(current))
            rig, spec = _header_to_parts(obj, lineno)
            current = {"rig": rig, "spec": spec, "boxes": [], "dets": [], "gt": []}
            continue
        if current is None:
            raise IoError(f"line {lineno}: record before any scene header")
        try:
            if "box" in obj:
                b = obj["box"]
                current["boxes"].append(Box3D(tuple(float(c) for c in b["center"]), *map(float, b["lwh"]), float(b["yaw"])))
            elif "det" in obj:
                d = obj["det"]
                current["dets"].append(
                    Detection(
                        class_id=int(d["class_id"]),
                        score=float(d["score"]),
                        bbox2d=tuple(float(v) for v in d["bbox"]),
                        keypoints_bottom=np.array(d["kp"], dtype=float),
                        depth=float(d["depth"]),
                        size=tuple(float(v) for v in d["lwh"]),
                        yaw=float(d["yaw"]),
                        sigma=float(d["sigma"]),
                    )
                )
                current["gt"].append(d.get("gt_index"))
            else:
                raise IoError(f"line {lineno}: unknown record {sorted(obj)}")
        except (KeyError, TypeError, ValueError) as exc:
            raise IoError(f"line {lineno}: malformed record ({exc})") from exc
    if current is not None:
        samples.append(_finish(current))
    return samples


def _finish(parts: dict) -> SceneSample:
    gt = parts["gt"]
    gt_match = [int(g) for g in gt] if all(g is not None for g in gt) else []
    return SceneSample(
        boxes=parts["boxes"],
        detections=parts["dets"],
        rig=parts["rig"],
        spec=parts["spec"],
        gt_match=gt_match,
        provenance={"seed": parts["spec"].seed, "spec_hash": parts["spec"].digest()},
    )


def read_scenes(path) -> list[SceneSample]:
    return parse_scenes(_read_lines(path))


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"{path}: not valid JSON ({exc.msg})") from exc


# -- workers -------------------------------------------------------------------


def worker_count() -> int:
    raw = os.environ.get("BEVMINE_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise InvalidConfig(f"BEVMINE_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise InvalidConfig("BEVMINE_THREADS must be at least 1")
    return n


def _ordered_map(fn, items) -> list:
    items = list(items)
    workers = min(worker_count(), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- subcommands ---------------------------------------------------------------


def make_scenes(cfg: RunConfig) -> list[SceneSample]:
    def one(k):
        spec = replace(cfg.scene, seed=cfg.seed + k)
        return corrupt(generate_scene(spec), cfg.noise, spec.seed)

    return _ordered_map(one, range(cfg.n_scenes))


def cmd_generate(cfg: RunConfig, out_path) -> list[SceneSample]:
    samples = make_scenes(cfg)
    write_scenes(out_path, samples)
    return samples


def mine_scene(sample: SceneSample, mining: MiningConfig) -> dict:
    """Mining summary for one scene; mining errors are recorded, not raised."""
    try:
        result = decoupled_generate(sample.detections, sample.rig, mining)
    except BevMineError as exc:
        return {
            "labels_2d": [],
            "labels_3d": [],
            "iterations_used": 0,
            "per_candidate_error": [],
            "homographies": [],
            "fallback": True,
            "error": {"type": type(exc).__name__, "message": str(exc)},
        }
    return {
        "labels_2d": sorted(result.labels_2d),
        "labels_3d": sorted(result.labels_3d),
        "iterations_used": result.iterations_used,
        "per_candidate_error": [[i, result.per_candidate_error[i]] for i in sorted(result.per_candidate_error)],
        "homographies": [M.flat() for M in result.homographies],
        "fallback": result.fallback,
        "error": None,
    }


def mining_report_text(samples, mining: MiningConfig) -> str:
    entries = _ordered_map(lambda s: mine_scene(s, mining), samples)
    head = dumps({"format_version": FORMAT_VERSION, "mining": asdict(mining)})
    body = ",\n".join(dumps(e) for e in entries)
    return head[:-1] + ',"scenes":[\n' + body + ("\n" if entries else "") + "]}\n"


def cmd_mine(scene_path, cfg: RunConfig, report_path) -> None:
    samples = read_scenes(scene_path)
    _write_text(report_path, mining_report_text(samples, cfg.mining))


def _check_report(samples, report) -> list[dict]:
    if not isinstance(report, dict) or report.get("format_version") != FORMAT_VERSION:
        raise UnsupportedVersion(f"mining report format_version {report.get('format_version') if isinstance(report, dict) else None!r}")
    scenes = report.get("scenes")
    if not isinstance(scenes, list) or len(scenes) != len(samples):
        n = len(scenes) if isinstance(scenes, list) else "no"
        raise MismatchedInputs(f"report has {n} scenes, scene file has {len(samples)}")
    for k, (entry, sample) in enumerate(zip(scenes, samples)):
        n = len(sample.detections)
        for key in ("labels_2d", "labels_3d"):
            bad = [i for i in entry.get(key, []) if not (isinstance(i, int) and 0 <= i < n)]
            if bad:
                raise MismatchedInputs(f"scene {k}: {key} references detection {bad[0]} but the scene has {n}")
    return scenes


def evaluate(samples, report, good_threshold: float) -> list[tuple[str, float, int]]:
    """Pooled metric rows ``(metric, value, n)`` over all scenes."""
    scenes = _check_report(samples, report)
    hits = n_sel = n_good = n_cand = 0
    det_err, gt_err, depth_sel, depth_all = [], [], [], []
    iterations, fallbacks = [], 0
    for sample, entry in zip(samples, scenes):
        selected = set(entry["labels_3d"])
        if sample.detections and sample.gt_match:
            good = {i for i, d in enumerate(bev_displacements(sample)) if d <= good_threshold}
            abs_depth = np.abs(depth_errors(sample))
            depth_all.extend(abs_depth)
            depth_sel.extend(abs_depth[sorted(selected)])
        else:
            good = set()
        counts = selection_counts(selected, good, len(sample.detections), good_threshold)
        hits += len(selected & good)
        n_sel += counts.n_selected
        n_good += counts.n_good
        n_cand += counts.n_candidates
        if sample.boxes:
            M = gt_fit_homography(sample)
            gt_err.extend(gt_localization_errors(sample, M))
            if sample.detections:
                det_err.extend(detection_localization_errors(sample, M))
        iterations.append(entry["iterations_used"])
        fallbacks += bool(entry["fallback"])

    det_stats = ErrorStats.of(det_err)
    gt_stats = ErrorStats.of(gt_err)
    return [
        ("precision", hits / n_sel if n_sel else 1.0, n_sel),
        ("recall", hits / n_good if n_good else 1.0, n_good),
        ("good_threshold", good_threshold, n_cand),
        ("mean_loc_err", det_stats.mean, det_stats.n),
        ("median_loc_err", det_stats.median, det_stats.n),
        ("p90_loc_err", det_stats.p90, det_stats.n),
        ("gt_mean_loc_err", gt_stats.mean, gt_stats.n),
        ("mean_abs_depth_err_selected", ErrorStats.of(depth_sel).mean, len(depth_sel)),
        ("mean_abs_depth_err_all", ErrorStats.of(depth_all).mean, len(depth_all)),
        ("mean_iterations", float(np.mean(iterations)) if iterations else 0.0, len(iterations)),
        ("fallback_scenes", float(fallbacks), len(iterations)),
    ]


def _csv(header, rows) -> str:
    def cell(v):
        if isinstance(v, bool):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return "%.17g" % v
        return str(v)

    return "".join(",".join(cell(v) for v in row) + "\n" for row in [header, *rows])


def cmd_eval(scene_path, report_path, out_csv, cfg: RunConfig) -> list[tuple[str, float, int]]:
    samples = read_scenes(scene_path)
    rows = evaluate(samples, _read_json(report_path), cfg.selection_threshold)
    _write_text(out_csv, _csv(("metric", "value", "n"), rows))
    return rows


SUMMARY_COLUMNS = (
    "seed",
    "projection",
    "final_loss_sd",
    "final_loss_o",
    "final_loss_ud",
    "final_reliable_loss",
    "min_applied_cos",
    *(f"conflict_{a}_{b}" for a, b in CONFLICT_PAIRS),
)


def run_dgp(dgp: DgpConfig):
    jobs = [(seed, proj) for seed in dgp.seeds for proj in PROJECTION_MODES[dgp.projection]]
    return _ordered_map(lambda job: run_toy_experiment(replace(dgp.harness, projection=job[1]), job[0]), jobs)


def cmd_dgp(cfg: RunConfig, out_csv, summary_csv=None) -> list[tuple]:
    reports = run_dgp(cfg.dgp)
    trace_rows, summary_rows = [], []
    for rep in reports:
        for row in rep.trace:
            trace_rows.append((rep.seed, int(rep.projection), int(row[0]), *row[1:]))
        frac = conflict_proportions(rep)
        summary_rows.append(
            (
                rep.seed,
                int(rep.projection),
                rep.final_loss_sd,
                rep.final_loss_o,
                rep.final_loss_ud,
                rep.final_reliable_loss,
                rep.min_applied_cos,
                *(frac[p] for p in CONFLICT_PAIRS),
            )
        )
    _write_text(out_csv, _csv(("seed", "projection", *TRACE_COLUMNS), trace_rows))
    _write_text(summary_csv or _summary_path(out_csv), _csv(SUMMARY_COLUMNS, summary_rows))
    return summary_rows


def _summary_path(out_csv) -> Path:
    p = Path(out_csv)
    return p.with_name(p.stem + "_summary" + p.suffix)


def cmd_pipeline(cfg: RunConfig, out_dir) -> Path:
    out = Path(out_dir)
    cmd_generate(cfg, out / "scenes.jsonl")
    cmd_mine(out / "scenes.jsonl", cfg, out / "mining_report.json")
    cmd_eval(out / "scenes.jsonl", out / "mining_report.json", out / "metrics.csv", cfg)
    cmd_dgp(cfg, out / "dgp_trace.csv", out / "dgp_summary.csv")
    return out


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--theta-c", type=float, help="2D score threshold")
    common.add_argument("--theta-u", type=float, help="depth-uncertainty seed threshold")
    common.add_argument("--theta-h", type=float, help="homography acceptance band in meters")
    common.add_argument("--t-max", type=int, help="maximum mining iterations")
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bevmine", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write synthetic scenes")
    p.add_argument("--out", required=True)
    p.add_argument("--n-scenes", type=int)

    p = sub.add_parser("mine", parents=[common], help="mine pseudo-labels for every scene")
    p.add_argument("--scenes", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", parents=[common], help="selection and localization metrics")
    p.add_argument("--scenes", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--good-threshold", type=float, help="BEV displacement counted as good (default theta_h / 2)")

    p = sub.add_parser("dgp", parents=[common], help="toy depth-gradient projection runs")
    p.add_argument("--out", required=True, help="per-step trace CSV")
    p.add_argument("--summary", help="summary CSV (default: <out>_summary.csv)")
    p.add_argument("--projection", choices=sorted(PROJECTION_MODES))

    p = sub.add_parser("pipeline", parents=[common], help="generate, mine, eval and dgp in one go")
    p.add_argument("--out-dir")
    p.add_argument("--n-scenes", type=int)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_overrides(load_config(args.config), args)
        if args.command == "generate":
            cmd_generate(cfg, args.out)
        elif args.command == "mine":
            cmd_mine(args.scenes, cfg, args.out)
        elif args.command == "eval":
            if args.good_threshold is not None:
                cfg = replace(cfg, good_threshold=args.good_threshold)
            cmd_eval(args.scenes, args.report, args.out, cfg)
        elif args.command == "dgp":
            if args.projection is not None:
                cfg = replace(cfg, dgp=replace(cfg.dgp, projection=args.projection))
            cmd_dgp(cfg, args.out, args.summary)
        elif args.command == "pipeline":
            cmd_pipeline(cfg, args.out_dir or cfg.output_dir)
    except BevMineError as exc:
        sys.stderr.write(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}) + "\n")
        return 1
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
