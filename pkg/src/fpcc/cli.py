"""Command-line front door for the pipeline.

Subcommands: generate, score, embed, cluster, eval, bench, loss. Flags
default to the published hyperparameter values (beta=2, theta=0.6,
epsilon1=5, epsilon2=10, alpha=30, block size 4096). Runs with identical
flags and seeds produce byte-identical artifacts for any thread count.

Exit codes: 0 success, 2 usage error, 3 missing file, 4 parse error,
5 contract violation, 1 unexpected failure. The FPCC_OUT_DIR environment
variable prefixes relative output paths.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import io as fpcc_io
from . import kernels
from .clustering import NmsParams, SegmentationResult, segment
from .core import sample_blocks
from .embedding import OracleParams, load_embeddings, oracle_embed
from .errors import FpccError, InvalidInputError, ParseError
from .evaluation import REPORT_COLUMNS, evaluate, report_rows, report_table
from .scenegen import MODEL_KINDS, SceneGenParams, builtin_model, generate_scene
from .scoring import (
    CenterScoreParams,
    LossParams,
    center_score_loss,
    embedded_feature_loss,
    pair_matrices,
    same_instance_matrix,
    score_scene,
    total_loss,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_PARSE = 4
EXIT_CONTRACT = 5
EXIT_UNEXPECTED = 1


def _out_path(value) -> Path:
    path = Path(value)
    base = os.environ.get("FPCC_OUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _apply_threads(args) -> None:
    if getattr(args, "threads", None):
        kernels.set_threads(args.threads)


def _add_common(parser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap worker threads (clamped to the launch-time maximum)")


def _add_loss_flags(parser) -> None:
    parser.add_argument("--beta", type=float, default=2.0, help="center-score exponent")
    parser.add_argument("--epsilon1", type=float, default=5.0, help="same-instance margin")
    parser.add_argument("--epsilon2", type=float, default=10.0, help="cross-instance margin")
    parser.add_argument("--alpha", type=float, default=30.0, help="score-branch weight")
    parser.add_argument("--use-vdm", action=argparse.BooleanOptionalAction, default=True,
                        help="apply the valid-distance mask")
    parser.add_argument("--use-asm", action=argparse.BooleanOptionalAction, default=True,
                        help="apply the attention-score weights")


def cmd_generate(args) -> int:
    _apply_threads(args)
    model = builtin_model(args.model, args.scale, args.model_samples, args.seed)
    out = _out_path(args.out)
    paths = []
    for index in range(args.count):
        params = SceneGenParams(
            bin_extent=tuple(args.bin_extent),
            instance_count_range=tuple(args.instances),
            points_per_instance_range=tuple(args.points_per_instance),
            min_center_spacing=args.spacing,
            occlusion=args.occlusion,
            cell_size=args.cell_size,
            seed=args.seed + index,
        )
        scene = generate_scene(model, params)
        if args.count == 1 and out.suffix:
            path = out
        else:
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"scene_{index:03d}.fpcc-scene"
        fpcc_io.write_scene(scene, path)
        paths.append(path)
        print(f"wrote {path} ({len(scene)} points, "
              f"{len(scene.instance_centers or {})} instances)")
    return EXIT_OK


def cmd_score(args) -> int:
    _apply_threads(args)
    scene = fpcc_io.parse_scene(args.scene)
    params = CenterScoreParams(args.d_max if args.d_max else scene.d_max, args.beta)
    scores = score_scene(scene, params)
    path = _out_path(args.out)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for value in scores:
            f.write(format(float(value), ".17g") + "\n")
    print(f"wrote {path} ({len(scores)} scores, mean {scores.mean():.4f})")
    return EXIT_OK


def cmd_embed(args) -> int:
    _apply_threads(args)
    scene = fpcc_io.parse_scene(args.scene)
    params = OracleParams(
        dim=args.dim,
        anchor_separation=args.anchor_separation,
        intra_noise_sigma=args.intra_noise_sigma,
        score_noise_sigma=args.score_noise_sigma,
        seed=args.seed,
    )
    embedded = oracle_embed(scene, params, beta=args.beta)
    path = _out_path(args.out)
    fpcc_io.write_embeddings(embedded.embeddings, path, embedded.pred_scores)
    print(f"wrote {path} ({len(scene)} x {args.dim})")
    return EXIT_OK


def cmd_cluster(args) -> int:
    _apply_threads(args)
    scene = fpcc_io.parse_scene(args.scene)
    embeddings, pred_scores = load_embeddings(args.emb, len(scene))
    if pred_scores is None:
        raise InvalidInputError(f"{args.emb}: clustering needs the predicted score column")
    params = NmsParams(args.d_max if args.d_max else scene.d_max, args.theta)
    result = segment(scene, embeddings, pred_scores, params)
    path = _out_path(args.out)
    fpcc_io.write_segmentation(result, path)
    noise = int((result.assignments < 0).sum())
    print(f"wrote {path} ({result.instance_count} instances, {noise} noise points)")
    return EXIT_OK


def cmd_eval(args) -> int:
    _apply_threads(args)
    scenes, results, hist_scores = [], [], []
    for pair in args.pair:
        if len(pair) not in (2, 3):
            raise InvalidInputError("--pair takes SCENE SEG [EMB]")
        scene = fpcc_io.parse_scene(pair[0])
        result = fpcc_io.parse_segmentation(pair[1])
        if len(result.assignments) != len(scene):
            raise InvalidInputError(f"{pair[1]}: point count differs from {pair[0]}")
        if len(pair) == 3:
            _, pred_scores = load_embeddings(pair[2], len(scene))
            if pred_scores is not None:
                result = SegmentationResult(
                    result.center_indices,
                    result.assignments,
                    pred_scores[result.center_indices],
                )
                hist_scores.append(pred_scores)
        scenes.append(scene)
        results.append(result)
    report = evaluate(
        scenes,
        results,
        iou_thresholds=args.iou,
        max_m=args.max_m,
        hist_scores=np.concatenate(hist_scores) if hist_scores else None,
        hist_bins=args.hist_bins,
    )
    print(report_table(report))
    if args.out:
        path = _out_path(args.out)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(report_rows(report))
        print(f"wrote {path}")
    return EXIT_OK


def cmd_bench(args) -> int:
    _apply_threads(args)
    if args.backend == "both":
        backends = kernels.available_backends()
    elif args.backend == "auto":
        backends = [kernels.get_backend().NAME]
    else:
        backends = [args.backend]
    rows = bench_mod.run_benchmark(
        args.sizes,
        args.instances,
        reps=args.reps,
        warmup=args.warmup,
        dim=args.dim,
        seed=args.seed,
        backends=backends,
    )
    print(bench_mod.bench_table(rows))
    if args.out:
        path = _out_path(args.out)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=bench_mod.BENCH_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_loss(args) -> int:
    _apply_threads(args)
    scene = fpcc_io.parse_scene(args.scene)
    embeddings, pred_scores = load_embeddings(args.emb, len(scene))
    if pred_scores is None:
        raise InvalidInputError(f"{args.emb}: the loss needs the predicted score column")
    loss_params = LossParams(
        epsilon_1=args.epsilon1,
        epsilon_2=args.epsilon2,
        alpha=args.alpha,
        use_vdm=args.use_vdm,
        use_asm=args.use_asm,
    )
    gt_scores = score_scene(scene, CenterScoreParams(scene.d_max, args.beta))
    if scene.instance_ids is None:
        raise InvalidInputError(f"{args.scene}: the loss needs instance labels")

    blocks = sample_blocks(scene, args.block_size, args.seed)
    ef_values, cs_values = [], []
    for index, block in enumerate(blocks):
        idx = block.distinct_indices  # pads never enter the loss
        matrices = pair_matrices(
            scene.positions[idx], embeddings[idx], gt_scores[idx], scene.d_max, loss_params
        )
        same = same_instance_matrix(scene.instance_ids[idx])
        l_ef = embedded_feature_loss(
            matrices.feature_distance, matrices.weight, same, loss_params
        )
        l_cs = center_score_loss(gt_scores[idx], pred_scores[idx])
        ef_values.append(l_ef)
        cs_values.append(l_cs)
        print(
            f"block {index} ({len(idx)} points): "
            f"L_EF={l_ef:.17g} L_CS={l_cs:.17g} L={total_loss(l_ef, l_cs, loss_params):.17g}"
        )
    mean_ef = float(np.mean(ef_values))
    mean_cs = float(np.mean(cs_values))
    print(
        f"mean: L_EF={mean_ef:.17g} L_CS={mean_cs:.17g} "
        f"L={total_loss(mean_ef, mean_cs, loss_params):.17g}"
    )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpcc",
        description="Single-class point cloud instance segmentation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("generate", help="emit synthetic labeled scenes", formatter_class=fmt)
    p.add_argument("--model", choices=MODEL_KINDS, default="l_bracket", help="object shape")
    p.add_argument("--scale", type=float, default=1.0, help="model size")
    p.add_argument("--model-samples", type=int, default=900, help="surface samples on the model")
    p.add_argument("--bin-extent", type=float, nargs=3, default=[8.0, 8.0, 4.0],
                   metavar=("X", "Y", "Z"), help="bin dimensions")
    p.add_argument("--instances", type=int, nargs=2, default=[10, 20], metavar=("MIN", "MAX"),
                   help="instance count range")
    p.add_argument("--points-per-instance", type=int, nargs=2, default=[300, 600],
                   metavar=("MIN", "MAX"), help="points sampled per instance")
    p.add_argument("--spacing", type=float, default=None,
                   help="minimum center spacing (default 1.05 * d_max)")
    p.add_argument("--occlusion", action=argparse.BooleanOptionalAction, default=False,
                   help="cull points hidden from above")
    p.add_argument("--cell-size", type=float, default=None,
                   help="visibility grid cell size (default d_max / 4)")
    p.add_argument("--count", type=int, default=1, help="number of scenes")
    p.add_argument("--out", required=True, help="output file (single scene) or directory")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="compute ground-truth center scores", formatter_class=fmt)
    p.add_argument("--scene", required=True, help="input scene file")
    p.add_argument("--beta", type=float, default=2.0, help="center-score exponent")
    p.add_argument("--d-max", type=float, default=None, help="override the scene's d_max")
    p.add_argument("--out", required=True, help="output file, one score per line")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("embed", help="emit oracle embeddings for a labeled scene",
                       formatter_class=fmt)
    p.add_argument("--scene", required=True, help="input scene file")
    p.add_argument("--dim", type=int, default=128, help="embedding dimensionality")
    p.add_argument("--anchor-separation", type=float, default=12.0,
                   help="minimum anchor distance in feature space")
    p.add_argument("--intra-noise-sigma", type=float, default=0.5,
                   help="per-coordinate embedding noise")
    p.add_argument("--score-noise-sigma", type=float, default=0.0,
                   help="noise on predicted center scores")
    p.add_argument("--beta", type=float, default=2.0, help="center-score exponent")
    p.add_argument("--out", required=True, help="output embedding file")
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cluster", help="segment a scene from embeddings", formatter_class=fmt)
    p.add_argument("--scene", required=True, help="input scene file")
    p.add_argument("--emb", required=True, help="input embedding file with scores")
    p.add_argument("--theta", type=float, default=0.6, help="center-score threshold")
    p.add_argument("--d-max", type=float, default=None, help="override the scene's d_max")
    p.add_argument("--out", required=True, help="output segmentation file")
    _add_common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="score segmentations against ground truth",
                       formatter_class=fmt)
    p.add_argument("--pair", action="append", nargs="+", required=True,
                   metavar="PATH", help="SCENE SEG [EMB] file triple; repeatable")
    p.add_argument("--iou", action="append", type=float, default=None,
                   help="IoU threshold; repeatable (default 0.5)")
    p.add_argument("--max-m", type=int, default=10, help="largest m for precision@m")
    p.add_argument("--hist-bins", type=int, default=20, help="score histogram bins")
    p.add_argument("--out", default=None, help="machine-readable CSV report")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time the pipeline stages", formatter_class=fmt)
    p.add_argument("--sizes", type=int, nargs="+", default=[10000, 20000, 40000, 80000],
                   help="scene sizes in points")
    p.add_argument("--instances", type=int, nargs="+", default=[20],
                   help="instance counts")
    p.add_argument("--reps", type=int, default=5, help="measured repetitions")
    p.add_argument("--warmup", type=int, default=3, help="warm-up iterations (minimum 3)")
    p.add_argument("--dim", type=int, default=128, help="embedding dimensionality")
    p.add_argument("--backend", choices=["auto", "numba", "numpy", "both"], default="auto",
                   help="kernel backend(s) to time")
    p.add_argument("--out", default=None, help="CSV output")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("loss", help="reference losses for a scene and embedding pair",
                       formatter_class=fmt)
    p.add_argument("--scene", required=True, help="input scene file")
    p.add_argument("--emb", required=True, help="input embedding file with scores")
    p.add_argument("--block-size", type=int, default=4096, help="points per sampled block")
    _add_loss_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_loss)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 2
        return int(exc.code or 0)
    try:
        if args.command == "eval" and args.iou is None:
            args.iou = [0.5]
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FpccError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except Exception as exc:  # pragma: no cover - last-resort diagnostics
        print(f"unexpected error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
