"""Single-class, multi-instance point cloud segmentation toolkit.

The pipeline: generate labeled scenes, score points by proximity to
their instance center, select reference centers with a greedy point NMS,
cluster every point to its feature-nearest center under a Euclidean
noise gate, and evaluate with IoU-matched average precision.
"""

from .clustering import NmsParams, SegmentationResult, assign_points, segment, select_centers
from .core import (
    PointBlock,
    RepresentedPoint,
    RepresentedScene,
    Scene,
    ScenePoint,
    compute_d_max,
    euclidean_distance,
    normalize_scene,
    sample_blocks,
)
from .embedding import EmbeddedScene, OracleParams, load_embeddings, oracle_embed
from .errors import FpccError, InvalidInputError, OutOfRangeError, ParseError
from .evaluation import (
    EvalReport,
    average_precision,
    evaluate,
    instance_iou,
    precision_at_m,
    score_histogram,
)
from .scenegen import ObjectModel, SceneGenParams, builtin_model, export_scene, generate_scene
from .scoring import (
    CenterScoreParams,
    LossParams,
    PairMatrices,
    attention_score_matrix,
    center_score,
    center_score_loss,
    embedded_feature_loss,
    feature_distance_matrix,
    pair_matrices,
    same_instance_matrix,
    score_scene,
    smooth_l1,
    total_loss,
    valid_distance_matrix,
    weight_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "CenterScoreParams",
    "EmbeddedScene",
    "EvalReport",
    "FpccError",
    "InvalidInputError",
    "LossParams",
    "NmsParams",
    "ObjectModel",
    "OracleParams",
    "OutOfRangeError",
    "PairMatrices",
    "ParseError",
    "PointBlock",
    "RepresentedPoint",
    "RepresentedScene",
    "Scene",
    "SceneGenParams",
    "ScenePoint",
    "SegmentationResult",
    "assign_points",
    "attention_score_matrix",
    "average_precision",
    "builtin_model",
    "center_score",
    "center_score_loss",
    "compute_d_max",
    "embedded_feature_loss",
    "euclidean_distance",
    "evaluate",
    "export_scene",
    "feature_distance_matrix",
    "generate_scene",
    "instance_iou",
    "load_embeddings",
    "normalize_scene",
    "oracle_embed",
    "pair_matrices",
    "precision_at_m",
    "sample_blocks",
    "same_instance_matrix",
    "score_histogram",
    "score_scene",
    "segment",
    "select_centers",
    "smooth_l1",
    "total_loss",
    "valid_distance_matrix",
    "weight_matrix",
]
