"""Instance matching, average precision, precision-vs-m, and histograms.

Predicted instances are matched to ground truth greedily in order of
descending confidence: each prediction takes the unmatched ground-truth
instance of highest IoU in its own scene and counts as a true positive
iff that IoU clears the threshold (only true positives consume a ground
truth). AP pools predictions across scenes and integrates the
monotonized precision-recall curve over every recall step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .clustering import SegmentationResult
from .core import Scene
from .errors import InvalidInputError


def instance_iou(pred, gt) -> float:
    """Intersection-over-union of two point-index sets from one scene."""
    pred = set(map(int, pred))
    gt = set(map(int, gt))
    if not pred and not gt:
        raise InvalidInputError("IoU of two empty sets is undefined")
    union = len(pred | gt)
    return len(pred & gt) / union


def gt_instance_sets(scene: Scene) -> dict[int, frozenset]:
    """Ground-truth instances as point-index sets; unlabeled points excluded."""
    if scene.instance_ids is None:
        return {}
    sets = {}
    for instance in np.unique(scene.instance_ids):
        if instance < 0:
            continue
        sets[int(instance)] = frozenset(np.flatnonzero(scene.instance_ids == instance).tolist())
    return sets


def prediction_sets(result: SegmentationResult, evaluable_mask=None) -> list[frozenset]:
    """Predicted instances as point-index sets, noise excluded.

    ``evaluable_mask`` restricts predictions to points that carry a
    ground-truth label, so unlabeled points never enter an IoU.
    """
    sets = []
    for k in range(result.instance_count):
        members = result.instance_points(k)
        if evaluable_mask is not None:
            members = members[evaluable_mask[members]]
        sets.append(frozenset(members.tolist()))
    return sets


@dataclass(frozen=True)
class MatchRecord:
    """One prediction's matching outcome within the pooled ranking."""

    scene_index: int
    pred_index: int
    confidence: float
    gt_id: int | None
    iou: float

    @property
    def true_positive(self) -> bool:
        return self.gt_id is not None


def _best_unmatched(pred, gt_sets, taken):
    best_id, best_iou = None, -1.0
    for gt_id in sorted(gt_sets):
        if gt_id in taken:
            continue
        union = len(pred | gt_sets[gt_id])
        iou = len(pred & gt_sets[gt_id]) / union if union else 0.0
        if iou > best_iou:
            best_id, best_iou = gt_id, iou
    return best_id, max(best_iou, 0.0)


def match_instances(scene_predictions, scene_gts, iou_threshold: float) -> list[MatchRecord]:
    """Greedy confidence-ordered matching pooled across scenes.

    ``scene_predictions`` is a list of (pred_sets, confidences) per scene
    and ``scene_gts`` the matching list of {gt_id: point set}. Confidence
    ties break by scene order, then prediction index. A ground truth is
    consumed only by the prediction that clears the threshold on it.
    """
    pool = []
    for scene_index, (preds, confs) in enumerate(scene_predictions):
        if len(preds) != len(confs):
            raise InvalidInputError("one confidence per prediction is required")
        for pred_index, conf in enumerate(confs):
            pool.append((scene_index, pred_index, float(conf)))
    pool.sort(key=lambda item: (-item[2], item[0], item[1]))

    taken = [set() for _ in scene_gts]
    records = []
    for scene_index, pred_index, conf in pool:
        pred = scene_predictions[scene_index][0][pred_index]
        best_id, best_iou = _best_unmatched(pred, scene_gts[scene_index], taken[scene_index])
        if best_id is not None and best_iou >= iou_threshold:
            taken[scene_index].add(best_id)
            records.append(MatchRecord(scene_index, pred_index, conf, best_id, best_iou))
        else:
            records.append(MatchRecord(scene_index, pred_index, conf, None, best_iou))
    return records


def _ap_from_records(records, total_gt: int) -> float:
    if total_gt == 0:
        raise InvalidInputError("average precision needs at least one ground-truth instance")
    if not records:
        return 0.0
    flags = np.array([r.true_positive for r in records])
    tp = np.cumsum(flags)
    precision = tp / np.arange(1, len(flags) + 1)
    recall = tp / total_gt
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    ap = 0.0
    previous = 0.0
    for p, r in zip(envelope, recall):
        if r > previous:
            ap += (r - previous) * p
            previous = r
    return float(ap)


def average_precision(scenes, results, iou_threshold: float = 0.5) -> float:
    """Pooled AP of segmentation results against their scenes' labels."""
    scene_predictions, scene_gts, total_gt = _collect(scenes, results)
    if total_gt == 0:
        raise InvalidInputError("no ground-truth instances to evaluate")
    records = match_instances(scene_predictions, scene_gts, iou_threshold)
    return _ap_from_records(records, total_gt)


def precision_at_m(result: SegmentationResult, scene: Scene, m: int, iou_threshold: float = 0.5) -> float:
    """Precision of the m highest-confidence predictions in one scene.

    When fewer than m instances were predicted, all of them are used and
    a warning flags the shortfall.
    """
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    preds, confs = _scene_predictions(scene, result)
    gts = gt_instance_sets(scene)
    order = sorted(range(len(preds)), key=lambda i: (-confs[i], i))
    if len(order) < m:
        warnings.warn(f"only {len(order)} predictions available for precision@{m}")
    order = order[:m]
    if not order:
        return 0.0
    top = [(preds[i], confs[i]) for i in order]
    records = match_instances(
        [([p for p, _ in top], [c for _, c in top])], [gts], iou_threshold
    )
    return sum(r.true_positive for r in records) / len(order)


def score_histogram(scores, bins: int = 20) -> np.ndarray:
    """Counts of scores in uniform bins over [0, 1]."""
    if bins < 2:
        raise InvalidInputError("at least 2 bins are required")
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if not np.isfinite(scores).all():
        raise InvalidInputError("scores must be finite")
    counts, _ = np.histogram(scores, bins=bins, range=(0.0, 1.0))
    return counts


def _scene_predictions(scene: Scene, result: SegmentationResult):
    if len(result.assignments) != len(scene):
        raise InvalidInputError("segmentation does not match the scene's point count")
    mask = scene.labeled_mask
    preds = prediction_sets(result, evaluable_mask=mask)
    return preds, list(map(float, result.confidences))


def _collect(scenes, results):
    if len(scenes) != len(results):
        raise InvalidInputError("one segmentation result per scene is required")
    scene_predictions = []
    scene_gts = []
    total_gt = 0
    for scene, result in zip(scenes, results):
        preds, confs = _scene_predictions(scene, result)
        gts = gt_instance_sets(scene)
        scene_predictions.append((preds, confs))
        scene_gts.append(gts)
        total_gt += len(gts)
    return scene_predictions, scene_gts, total_gt


@dataclass
class EvalReport:
    """Matching, AP, precision@m, and optional histogram/timing payloads.

    ``per_scene_matches`` holds (scene, prediction, matched gt or -1, IoU)
    at the lowest evaluated threshold. ``timings`` stays None unless the
    report came out of the benchmark harness.
    """

    per_scene_matches: list[tuple[int, int, int, float]]
    ap: dict[float, float]
    precision_at_m: dict[int, float]
    score_histogram: np.ndarray | None = None
    timings: list[dict] | None = field(default=None)


def evaluate(
    scenes,
    results,
    iou_thresholds=(0.5,),
    max_m: int = 10,
    hist_scores=None,
    hist_bins: int = 20,
) -> EvalReport:
    """Full evaluation of segmentation results against labeled scenes.

    ``hist_scores``, when given, feeds the center-score histogram (for
    one scene or pooled, at the caller's choice).
    """
    thresholds = sorted(float(t) for t in iou_thresholds)
    if not thresholds:
        raise InvalidInputError("at least one IoU threshold is required")
    scene_predictions, scene_gts, total_gt = _collect(scenes, results)
    if total_gt == 0:
        raise InvalidInputError("no ground-truth instances to evaluate")

    ap = {}
    matches = None
    for threshold in thresholds:
        records = match_instances(scene_predictions, scene_gts, threshold)
        ap[threshold] = _ap_from_records(records, total_gt)
        if matches is None:  # keep the most permissive matching for the report
            matches = [
                (r.scene_index, r.pred_index, -1 if r.gt_id is None else r.gt_id, r.iou)
                for r in records
            ]

    precision = {
        m: float(
            np.mean([precision_at_m(result, scene, m) for scene, result in zip(scenes, results)])
        )
        for m in range(1, max_m + 1)
    }

    histogram = None
    if hist_scores is not None:
        histogram = score_histogram(hist_scores, hist_bins)
    return EvalReport(matches, ap, precision, histogram)


def report_table(report: EvalReport) -> str:
    """Human-readable summary table."""
    lines = ["metric            value"]
    for threshold in sorted(report.ap):
        lines.append(f"AP@{threshold:<4g}          {report.ap[threshold]:.4f}")
    for m in sorted(report.precision_at_m):
        lines.append(f"precision@{m:<2d}      {report.precision_at_m[m]:.4f}")
    tp = sum(1 for _, _, gt, _ in report.per_scene_matches if gt >= 0)
    lines.append(f"matched/predicted {tp}/{len(report.per_scene_matches)}")
    if report.score_histogram is not None:
        lines.append("score_histogram   " + " ".join(str(int(c)) for c in report.score_histogram))
    return "\n".join(lines)


def report_rows(report: EvalReport) -> list[dict]:
    """Flat records for the machine-readable report file."""
    rows = []
    for threshold in sorted(report.ap):
        rows.append(
            {"record": "ap", "scene": "", "pred": "", "gt": "", "m": "",
             "iou_threshold": f"{threshold:g}", "value": f"{report.ap[threshold]:.17g}"}
        )
    for m in sorted(report.precision_at_m):
        rows.append(
            {"record": "precision_at_m", "scene": "", "pred": "", "gt": "", "m": str(m),
             "iou_threshold": "0.5", "value": f"{report.precision_at_m[m]:.17g}"}
        )
    for scene, pred, gt, iou in report.per_scene_matches:
        rows.append(
            {"record": "match", "scene": str(scene), "pred": str(pred), "gt": str(gt),
             "m": "", "iou_threshold": "", "value": f"{iou:.17g}"}
        )
    if report.score_histogram is not None:
        for bin_index, count in enumerate(report.score_histogram):
            rows.append(
                {"record": "score_histogram", "scene": "", "pred": "", "gt": "",
                 "m": str(bin_index), "iou_threshold": "", "value": str(int(count))}
            )
    return rows


REPORT_COLUMNS = ["record", "scene", "pred", "gt", "m", "iou_threshold", "value"]
