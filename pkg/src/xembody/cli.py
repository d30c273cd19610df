"""Command-line front end: retarget, augment, validate, inspect.

Runs are described by a JSON manifest plus flag overrides; every piece of
randomness derives from the single recorded seed, and demos are processed
independently (optionally in a worker pool) so outputs are byte-identical
regardless of worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import shutil
import sys
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .align import AlignmentConfig, align_trajectory, eis_initialize
from .augment import (AnchoredTransform, AugmentationSchedule, augment_rep_trajectory,
                      augment_scene_cloud, clipped_growth, grid_transforms)
from .chamfer import MetricConfig, _matches
from .dataset import (DatasetIndex, IndexEntry, read_demonstration, read_index,
                      write_demonstration, write_index)
from .errors import XembodyError
from .funcrep import FunctionalTemplate, build_template, eval_template, template_trajectory
from .robot import Embodiment, load_embodiment
from .synth import Demonstration, SynthConfig, synthesize_demonstration

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunManifest:
    """Everything a retarget/augment run needs, resolvable from JSON + flags."""

    source_description: str
    target_description: str
    input_path: str
    output_path: str
    source_manifest: str | None = None
    target_manifest: str | None = None
    points_per_link: int = 64
    template_variant: str = "standard"
    template_seed: int | None = None  # derived from `seed` when unset
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)
    synthesis: SynthConfig = field(default_factory=SynthConfig)
    seed: int = 0
    workers: int = 1
    eis_samples: int = 0  # 0 disables elite initialization
    eis_fraction: float = 0.10
    report_path: str | None = None


def _subseed(seed: int, role: str) -> int:
    digest = hashlib.blake2b(f"{seed}:{role}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def load_run_manifest(args: argparse.Namespace) -> RunManifest:
    doc: dict = {}
    if args.manifest:
        doc = json.loads(Path(args.manifest).read_text())
    src = doc.get("source", {})
    tgt = doc.get("target", {})
    align_doc = dict(doc.get("alignment", {}))
    synth_doc = dict(doc.get("synthesis", {}))
    eis_doc = dict(doc.get("eis", {}))

    def pick(flag_value, *keys, default=None):
        if flag_value is not None:
            return flag_value
        node = doc
        for key in keys[:-1]:
            node = node.get(key, {})
        return node.get(keys[-1], default)

    source_description = pick(args.source, "source", "description")
    target_description = pick(args.target, "target", "description")
    input_path = pick(getattr(args, "input", None), "input")
    output_path = pick(args.out, "output")
    for label, value in (("--source", source_description), ("--target", target_description),
                         ("--out", output_path)):
        if value is None:
            raise XembodyError(f"{label} is required (flag or manifest)")

    if args.lam is not None:
        align_doc["lambda"] = args.lam
    for flag in ("w1", "w2", "max_steps", "patience"):
        value = getattr(args, flag)
        if value is not None:
            align_doc[flag] = value
    metric = MetricConfig(lam=float(align_doc.get("lambda", 0.5)),
                          epsilon=float(align_doc.get("epsilon", 1e-9)))
    alignment = AlignmentConfig(
        metric=metric,
        w1=float(align_doc.get("w1", 1.0)),
        w2=float(align_doc.get("w2", 1.0)),
        max_steps=int(align_doc.get("max_steps", 300)),
        patience=int(align_doc.get("patience", 10)),
        step_size=float(align_doc.get("step_size", 0.01)),
        optimizer=align_doc.get("optimizer", "adaptive-moments"),
        improvement_tol=float(align_doc.get("improvement_tol", 1e-8)),
        clamp_to_limits=bool(align_doc.get("clamp_to_limits", True)),
    )

    if args.tau is not None:
        synth_doc["tau"] = args.tau
    if args.points is not None:
        synth_doc["output_size"] = args.points
    seed = int(args.seed if args.seed is not None else doc.get("seed", 0))
    workspace = None
    if "workspace" in synth_doc:
        workspace = (np.asarray(synth_doc["workspace"]["min"], dtype=float),
                     np.asarray(synth_doc["workspace"]["max"], dtype=float))
    synthesis = SynthConfig(
        tau=float(synth_doc.get("tau", 0.005)),
        workspace=workspace,
        robot_points=int(synth_doc.get("robot_points", 4096)),
        output_size=int(synth_doc.get("output_size", 1024)),
        seed=seed,
    )

    eis_samples = 0
    if args.eis or eis_doc.get("enabled"):
        eis_samples = int(args.eis_samples if args.eis_samples is not None
                          else eis_doc.get("samples", 1000))
    eis_fraction = args.eis_frac if args.eis_frac is not None else float(eis_doc.get("fraction", 0.10))

    template_doc = doc.get("template", {})
    return RunManifest(
        source_description=str(source_description),
        target_description=str(target_description),
        input_path=str(input_path) if input_path is not None else "",
        output_path=str(output_path),
        source_manifest=pick(None, "source", "manifest"),
        target_manifest=pick(None, "target", "manifest"),
        points_per_link=int(template_doc.get("points_per_link", 64)),
        template_variant=template_doc.get("variant", "standard"),
        template_seed=template_doc.get("seed"),
        alignment=alignment,
        synthesis=synthesis,
        seed=seed,
        workers=int(args.workers if args.workers is not None else doc.get("workers", 1)),
        eis_samples=eis_samples,
        eis_fraction=float(eis_fraction),
        report_path=args.report,
    )


def _load_pair(manifest: RunManifest):
    source = load_embodiment(manifest.source_description, manifest.source_manifest)
    target = load_embodiment(manifest.target_description, manifest.target_manifest)
    template_seed = manifest.template_seed
    if template_seed is None:
        template_seed = _subseed(manifest.seed, "template")
    source_template = build_template(source, source.pad_links, manifest.points_per_link,
                                     template_seed, manifest.template_variant)
    target_template = build_template(target, target.pad_links, manifest.points_per_link,
                                     template_seed, manifest.template_variant)
    return source, target, source_template, target_template


@dataclass
class _DemoTask:
    """One unit of work: everything a worker needs, picklable."""

    demo_id: str
    demo_path: str
    out_path: str
    source: Embodiment
    target: Embodiment
    source_template: FunctionalTemplate
    target_template: FunctionalTemplate
    alignment: AlignmentConfig
    synthesis: SynthConfig
    seed: int
    eis_samples: int
    eis_fraction: float
    transform: AnchoredTransform | None = None  # set for augment runs
    growth_knee: float = 0.8
    object_box: tuple | None = None
    out_id: str | None = None


def _run_demo_task(task: _DemoTask) -> dict:
    started = time.perf_counter()
    out_id = task.out_id or task.demo_id
    result = {"id": out_id, "ok": False, "length": 0, "wall_clock_s": 0.0,
              "align_s": 0.0, "synth_s": 0.0, "steps": [], "loss": [], "dcd": [],
              "early_stopped": [], "error": None, "checksum": None, "embodiment": None}
    try:
        demo = read_demonstration(task.demo_path)
        configs = task.source.configuration_from_split(demo.arm_positions,
                                                       demo.ee_positions)
        rep_traj = template_trajectory(task.source, task.source_template, configs)

        if task.transform is not None:
            rep_traj = augment_rep_trajectory(rep_traj, task.transform.transform,
                                              AugmentationSchedule(task.growth_knee))
            clouds = []
            for t, cloud in enumerate(demo.clouds):
                growth = clipped_growth(t, len(demo), task.growth_knee)
                if task.object_box is not None:
                    lo = np.asarray(task.object_box[0], dtype=float)
                    hi = np.asarray(task.object_box[1], dtype=float)
                    mask = np.all((cloud.points >= lo) & (cloud.points <= hi), axis=1)
                else:
                    mask = np.zeros(len(cloud), dtype=bool)
                clouds.append(augment_scene_cloud(cloud, mask, task.transform.transform, growth))
            demo = replace_clouds(demo, clouds)

        align_started = time.perf_counter()
        if task.eis_samples > 0:
            q0 = eis_initialize(task.target, task.target_template, rep_traj[0],
                                task.eis_samples, task.eis_fraction,
                                _subseed(task.seed, f"eis:{out_id}"), task.alignment)
        else:
            q0 = None
        aligned = align_trajectory(rep_traj, task.target, task.target_template, q0,
                                   task.alignment)
        align_done = time.perf_counter()

        synth_cfg = replace(task.synthesis, seed=task.seed)
        out_demo = synthesize_demonstration(demo, task.source, task.target, aligned,
                                            synth_cfg, demo_id=out_id)
        checksum = write_demonstration(out_demo, task.out_path)
        done = time.perf_counter()
        result.update(
            ok=True, length=len(out_demo), checksum=checksum,
            embodiment=out_demo.embodiment,
            steps=[d.steps_used for d in aligned.diagnostics],
            loss=[d.final_loss for d in aligned.diagnostics],
            dcd=[d.final_dcd for d in aligned.diagnostics],
            early_stopped=[d.early_stopped for d in aligned.diagnostics],
            align_s=align_done - align_started, synth_s=done - align_done,
        )
    except (XembodyError, OSError, ValueError, KeyError) as err:
        result["error"] = f"{type(err).__name__}: {err}"
        # Never leave a half-written demo directory behind.
        shutil.rmtree(task.out_path, ignore_errors=True)
    result["wall_clock_s"] = time.perf_counter() - started
    return result


def replace_clouds(demo: Demonstration, clouds) -> Demonstration:
    return Demonstration(
        embodiment=demo.embodiment,
        clouds=tuple(clouds),
        arm_positions=demo.arm_positions,
        ee_positions=demo.ee_positions,
        arm_targets=demo.arm_targets,
        ee_targets=demo.ee_targets,
        initial_state=demo.initial_state,
        seed=demo.seed,
    )


def _execute_tasks(tasks: list[_DemoTask], workers: int) -> list[dict]:
    if workers <= 1 or len(tasks) <= 1:
        return [_run_demo_task(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_demo_task, tasks))


def _finish_run(command: str, manifest: RunManifest, results: list[dict],
                started: float) -> int:
    out_dir = Path(manifest.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = [
        IndexEntry(r["id"], r["id"], r["embodiment"], r["length"], r["checksum"])
        for r in sorted(results, key=lambda r: r["id"]) if r["ok"]
    ]
    write_index(DatasetIndex(tuple(entries)), out_dir)

    failed = [r for r in results if not r["ok"]]
    total_frames = sum(r["length"] for r in results if r["ok"])
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "seed": manifest.seed,
        "workers": manifest.workers,
        "demos": [
            {k: r[k] for k in ("id", "ok", "length", "wall_clock_s", "align_s",
                               "synth_s", "steps", "loss", "dcd", "early_stopped",
                               "error")}
            for r in sorted(results, key=lambda r: r["id"])
        ],
        "totals": {
            "demos": len(results),
            "failed": len(failed),
            "frames": total_frames,
            "wall_clock_s": time.perf_counter() - started,
            "align_s": sum(r["align_s"] for r in results),
            "synth_s": sum(r["synth_s"] for r in results),
        },
    }
    report_path = manifest.report_path or str(out_dir) + ".report.json"
    Path(report_path).write_text(json.dumps(report, sort_keys=True, indent=1))
    for r in failed:
        print(f"FAILED {r['id']}: {r['error']}", file=sys.stderr)
    print(f"{command}: {len(results) - len(failed)}/{len(results)} demos, "
          f"{total_frames} frames, {report['totals']['wall_clock_s']:.1f}s "
          f"(report: {report_path})")
    return 1 if failed else 0


def cmd_retarget(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    manifest = load_run_manifest(args)
    if not manifest.input_path:
        raise XembodyError("--input is required (flag or manifest)")
    source, target, source_template, target_template = _load_pair(manifest)
    in_dir = Path(manifest.input_path)
    index = read_index(in_dir)
    if len(index) == 0:
        warnings.warn(f"input dataset {in_dir} is empty")
        return _finish_run("retarget", manifest, [], started)

    tasks = [
        _DemoTask(
            demo_id=e.demo_id,
            demo_path=str(in_dir / e.path),
            out_path=str(Path(manifest.output_path) / e.demo_id),
            source=source, target=target,
            source_template=source_template, target_template=target_template,
            alignment=manifest.alignment, synthesis=manifest.synthesis,
            seed=manifest.seed, eis_samples=manifest.eis_samples,
            eis_fraction=manifest.eis_fraction,
        )
        for e in index.entries
    ]
    results = _execute_tasks(tasks, manifest.workers)
    return _finish_run("retarget", manifest, results, started)


def cmd_augment(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    manifest = load_run_manifest(args)
    if not manifest.input_path:
        raise XembodyError("--input is required (flag or manifest)")
    source, target, source_template, target_template = _load_pair(manifest)
    anchors_doc = json.loads(Path(args.anchors_file).read_text())
    anchors = np.asarray(anchors_doc["anchors"], dtype=float)
    object_box = None
    if anchors_doc.get("object_box") is not None:
        object_box = (tuple(anchors_doc["object_box"]["min"]),
                      tuple(anchors_doc["object_box"]["max"]))
    transforms = grid_transforms(anchors, args.grid_n, args.grid_range,
                                 _subseed(manifest.seed, "grid"))

    in_dir = Path(manifest.input_path)
    index = read_index(in_dir)
    if len(index) == 0:
        warnings.warn(f"input dataset {in_dir} is empty")
        return _finish_run("augment", manifest, [], started)

    tasks = []
    for e in index.entries:
        for t in transforms:
            out_id = f"{e.demo_id}-a{t.anchor_index:02d}g{t.grid_i:02d}x{t.grid_j:02d}"
            tasks.append(
                _DemoTask(
                    demo_id=e.demo_id,
                    demo_path=str(in_dir / e.path),
                    out_path=str(Path(manifest.output_path) / out_id),
                    source=source, target=target,
                    source_template=source_template, target_template=target_template,
                    alignment=manifest.alignment, synthesis=manifest.synthesis,
                    seed=manifest.seed, eis_samples=manifest.eis_samples,
                    eis_fraction=manifest.eis_fraction,
                    transform=t, growth_knee=args.growth_knee,
                    object_box=object_box, out_id=out_id,
                )
            )
    results = _execute_tasks(tasks, manifest.workers)
    return _finish_run("augment", manifest, results, started)


def cmd_validate(args: argparse.Namespace) -> int:
    dataset_dir = Path(args.dataset)
    findings: list[dict] = []
    embodiment = None
    if args.embodiment:
        embodiment = load_embodiment(args.embodiment)

    try:
        index = read_index(dataset_dir)
    except XembodyError as err:
        findings.append({"demo": None, "finding": str(err)})
        index = DatasetIndex(())

    checked = 0
    for entry in index.entries:
        checked += 1
        try:
            demo = read_demonstration(dataset_dir / entry.path, entry.checksum)
        except XembodyError as err:
            findings.append({"demo": entry.demo_id, "finding": str(err)})
            continue
        if len(demo) != entry.length:
            findings.append({"demo": entry.demo_id,
                             "finding": f"index length {entry.length} != {len(demo)}"})
        if demo.embodiment != entry.embodiment:
            findings.append({"demo": entry.demo_id,
                             "finding": f"index embodiment {entry.embodiment!r} != "
                                        f"{demo.embodiment!r}"})
        if args.points is not None:
            bad = [t for t, c in enumerate(demo.clouds) if len(c) != args.points]
            if bad:
                findings.append({"demo": entry.demo_id,
                                 "finding": f"frames {bad[:5]} do not have {args.points} points"})
        if embodiment is not None:
            if demo.arm_positions.shape[1] != len(embodiment.arm_indices) \
                    or demo.ee_positions.shape[1] != len(embodiment.ee_indices):
                findings.append({"demo": entry.demo_id,
                                 "finding": f"dof split does not match {embodiment.name!r}"})
            else:
                q = embodiment.configuration_from_split(demo.arm_positions,
                                                        demo.ee_positions)
                lo, hi = embodiment.lower_limits, embodiment.upper_limits
                for d in range(embodiment.dof):
                    if np.any(q[:, d] < lo[d] - 1e-9) or np.any(q[:, d] > hi[d] + 1e-9):
                        name = embodiment.actuated_joint_names[d]
                        findings.append({"demo": entry.demo_id,
                                         "finding": f"joint {name!r} outside limits"})

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": "validate",
        "dataset": str(dataset_dir),
        "demos_checked": checked,
        "findings": findings,
        "ok": not findings,
    }
    text = json.dumps(report, sort_keys=True, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0 if not findings else 1


def _rep_of(desc_path: str, demo: Demonstration, frame: int, points_per_link: int):
    e = load_embodiment(desc_path)
    template = build_template(e, e.pad_links, points_per_link,
                              _subseed(demo.seed, "template"))
    q = e.configuration_from_split(demo.arm_positions[frame], demo.ee_positions[frame])
    return eval_template(e, template, q)


def cmd_inspect(args: argparse.Namespace) -> int:
    demo = read_demonstration(args.demo)
    if not 0 <= args.frame < len(demo):
        raise XembodyError(f"frame {args.frame} out of range for length {len(demo)}")
    cloud = demo.clouds[args.frame]

    rep_a = rep_b = None
    if args.primary_embodiment:
        rep_a = _rep_of(args.primary_embodiment, demo, args.frame, args.points_per_link)
    if args.paired_embodiment and args.paired_demo:
        paired = read_demonstration(args.paired_demo)
        rep_b = _rep_of(args.paired_embodiment, paired,
                        min(args.frame, len(paired) - 1), args.points_per_link)

    lines = write_inspect_obj(Path(args.out), cloud, rep_a, rep_b,
                              whisker=args.whisker, lam=args.lam if args.lam is not None else 0.5)
    print(f"wrote {args.out}: {len(cloud)} scene points, "
          f"{0 if rep_a is None else len(rep_a)} rep points, {lines} lines")
    return 0


def write_inspect_obj(path: Path, cloud, rep_a, rep_b, whisker: float = 0.01,
                      lam: float = 0.5) -> int:
    """Dump scene points, rep points, direction whiskers, and match lines as OBJ.

    Vertices are formatted at float32 precision (%.9g) so a re-import agrees
    with the in-memory float32 values. Returns the number of line records.
    """
    records = []
    def vline(p):
        records.append("v %.9g %.9g %.9g" % tuple(np.float32(p)))

    for p in cloud.points:
        vline(p)
    line_records = []
    cursor = len(cloud)

    for rep in (rep_a, rep_b):
        if rep is None:
            continue
        base = cursor
        for p in rep.points:
            vline(p)
        cursor += len(rep)
        for i, (p, n) in enumerate(zip(rep.points, rep.directions)):
            vline(p + whisker * n)
            line_records.append(f"l {base + i + 1} {cursor + 1}")
            cursor += 1

    if rep_a is not None and rep_b is not None:
        # Match lines use the metric's own argmin rule.
        fwd, _, _, _ = _matches(rep_a, rep_b, MetricConfig(lam=lam))
        a_base = len(cloud)
        whiskers_a = len(rep_a)
        b_base = a_base + len(rep_a) + whiskers_a
        for i, j in enumerate(fwd):
            line_records.append(f"l {a_base + i + 1} {b_base + j + 1}")

    path.write_text("\n".join(records + line_records) + "\n")
    return len(line_records)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="xembody",
                                     description="Cross-embodiment demonstration retargeting")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--source", help="source robot description (urdf/xml or native json)")
        p.add_argument("--target", help="target robot description")
        p.add_argument("--manifest", help="run manifest JSON; flags override its fields")
        p.add_argument("--input", help="input dataset directory")
        p.add_argument("--out", help="output dataset directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="directional weight in the Chamfer metric")
        p.add_argument("--w1", type=float, default=None)
        p.add_argument("--w2", type=float, default=None)
        p.add_argument("--max-steps", dest="max_steps", type=int, default=None)
        p.add_argument("--patience", type=int, default=None)
        p.add_argument("--tau", type=float, default=None, help="robot masking distance (m)")
        p.add_argument("--points", type=int, default=None, help="output cloud size")
        p.add_argument("--eis", action="store_true", help="elite-based initialization")
        p.add_argument("--eis-samples", dest="eis_samples", type=int, default=None)
        p.add_argument("--eis-frac", dest="eis_frac", type=float, default=None)
        p.add_argument("--report", default=None, help="report JSON path")

    p_ret = sub.add_parser("retarget", help="retarget a source dataset to a target embodiment")
    add_run_flags(p_ret)

    p_aug = sub.add_parser("augment", help="spatially augment demos over a transform grid")
    add_run_flags(p_aug)
    p_aug.add_argument("--anchors-file", dest="anchors_file", required=True,
                       help="JSON with anchors (and optional object_box)")
    p_aug.add_argument("--grid-n", dest="grid_n", type=int, default=10)
    p_aug.add_argument("--grid-range", dest="grid_range", type=float, default=0.08)
    p_aug.add_argument("--growth-knee", dest="growth_knee", type=float, default=0.8)

    p_val = sub.add_parser("validate", help="check dataset invariants")
    p_val.add_argument("dataset")
    p_val.add_argument("--points", type=int, default=None, help="expected per-frame point count")
    p_val.add_argument("--embodiment", default=None, help="description for limit checks")
    p_val.add_argument("--out", default=None, help="write the report JSON here too")

    p_ins = sub.add_parser("inspect", help="dump one frame as an OBJ point/line file")
    p_ins.add_argument("--demo", required=True)
    p_ins.add_argument("--frame", type=int, required=True)
    p_ins.add_argument("--out", required=True)
    p_ins.add_argument("--embodiment", dest="primary_embodiment", default=None)
    p_ins.add_argument("--paired-demo", dest="paired_demo", default=None)
    p_ins.add_argument("--paired-embodiment", dest="paired_embodiment", default=None)
    p_ins.add_argument("--points-per-link", dest="points_per_link", type=int, default=64)
    p_ins.add_argument("--whisker", type=float, default=0.01)
    p_ins.add_argument("--lambda", dest="lam", type=float, default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "retarget":
            return cmd_retarget(args)
        if args.command == "augment":
            return cmd_augment(args)
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "inspect":
            return cmd_inspect(args)
    except XembodyError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
