"""Parsers and writers for the three text formats.

All formats are UTF-8 with '#'-prefixed comment lines and blank lines
ignored. Floats are serialized with 17 significant digits so values
round-trip exactly; non-finite values are refused on both sides. Paths
ending in ``.gz`` are read and written through gzip transparently (with a
zeroed timestamp, so identical content yields identical bytes).

Scene (``.fpcc-scene``)::

    d_max <float>
    center <instance_id> <x> <y> <z>     # zero or more
    <x> <y> <z> <instance_id>            # one per point, -1 = unlabeled

Embeddings (``.fpcc-emb``)::

    dim <D>
    <f_1> ... <f_D> [pred_score]         # one per point

Segmentation (``.fpcc-seg``)::

    centers <k_1> ... <k_K>              # selected point indices
    <instance_index|-1>                  # one per point
"""

from __future__ import annotations

import gzip
import io as std_io
import math
import zlib
from contextlib import contextmanager

import numpy as np

from .clustering import SegmentationResult
from .core import Scene
from .errors import InvalidInputError, ParseError

_READ_ERRORS = (OSError, EOFError, UnicodeDecodeError, zlib.error)


@contextmanager
def _open_text(path, mode):
    if str(path).endswith(".gz"):
        if mode == "r":
            with gzip.open(path, "rt", encoding="utf-8", newline="") as f:
                yield f
        else:
            with open(path, "wb") as raw:
                with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
                    with std_io.TextIOWrapper(gz, encoding="utf-8", newline="\n") as f:
                        yield f
    else:
        with open(path, mode + "t", encoding="utf-8", newline="\n" if mode == "w" else "") as f:
            yield f


def _read_lines(path):
    try:
        with _open_text(path, "r") as f:
            return f.read().splitlines()
    except FileNotFoundError:
        raise
    except _READ_ERRORS as exc:
        raise ParseError(path, 0, f"unreadable file: {exc}") from exc


def _content_lines(lines):
    """Yield (1-based line number, token list) for non-comment lines."""
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield number, stripped.split()


def _parse_float(token, path, line, what):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(path, line, f"invalid {what}: {token!r}") from None
    if not math.isfinite(value):
        raise ParseError(path, line, f"non-finite {what}: {token!r}")
    return value


def _parse_int(token, path, line, what):
    try:
        return int(token, 10)
    except ValueError:
        raise ParseError(path, line, f"invalid {what}: {token!r}") from None


def _fmt(value) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInputError("refusing to serialize a non-finite value")
    return format(value, ".17g")


def parse_scene(path) -> Scene:
    lines = _read_lines(path)
    d_max = None
    centers = {}
    positions = []
    ids = []
    for line, tokens in _content_lines(lines):
        if d_max is None:
            if tokens[0] != "d_max" or len(tokens) != 2:
                raise ParseError(path, line, "expected header 'd_max <float>'")
            d_max = _parse_float(tokens[1], path, line, "d_max")
            continue
        if tokens[0] == "center" and not positions:
            if len(tokens) != 5:
                raise ParseError(path, line, "expected 'center <id> <x> <y> <z>'")
            instance = _parse_int(tokens[1], path, line, "instance id")
            if instance < 0:
                raise ParseError(path, line, f"center instance id must be >= 0, got {instance}")
            if instance in centers:
                raise ParseError(path, line, f"duplicate center for instance {instance}")
            centers[instance] = [
                _parse_float(tokens[k], path, line, "center coordinate") for k in (2, 3, 4)
            ]
            continue
        if len(tokens) not in (3, 4):
            raise ParseError(path, line, f"expected 'x y z [instance_id]', got {len(tokens)} fields")
        positions.append([_parse_float(tokens[k], path, line, "coordinate") for k in (0, 1, 2)])
        if len(tokens) == 4:
            instance = _parse_int(tokens[3], path, line, "instance id")
            if instance < -1:
                raise ParseError(path, line, f"instance id must be >= -1, got {instance}")
            ids.append(instance)
        else:
            ids.append(-1)
    if d_max is None:
        raise ParseError(path, 0, "missing 'd_max' header")
    if not positions:
        raise ParseError(path, 0, "scene contains no points")
    try:
        return Scene(
            np.asarray(positions),
            d_max,
            np.asarray(ids, dtype=np.int64),
            centers if centers else None,
        )
    except InvalidInputError as exc:
        raise ParseError(path, 0, str(exc)) from exc


def write_scene(scene: Scene, path) -> None:
    ids = (
        scene.instance_ids
        if scene.instance_ids is not None
        else np.full(len(scene), -1, dtype=np.int64)
    )
    with _open_text(path, "w") as f:
        f.write(f"d_max {_fmt(scene.d_max)}\n")
        if scene.instance_centers:
            for instance in sorted(scene.instance_centers):
                c = scene.instance_centers[instance]
                f.write(f"center {instance} {_fmt(c[0])} {_fmt(c[1])} {_fmt(c[2])}\n")
        for p, i in zip(scene.positions, ids):
            f.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])} {int(i)}\n")


def parse_embeddings(path):
    """Returns (embeddings, pred_scores), scores being None when absent."""
    lines = _read_lines(path)
    dim = None
    width = None
    rows = []
    for line, tokens in _content_lines(lines):
        if dim is None:
            if tokens[0] != "dim" or len(tokens) != 2:
                raise ParseError(path, line, "expected header 'dim <D>'")
            dim = _parse_int(tokens[1], path, line, "dim")
            if dim < 1:
                raise ParseError(path, line, f"dim must be >= 1, got {dim}")
            continue
        if width is None:
            if len(tokens) not in (dim, dim + 1):
                raise ParseError(
                    path, line, f"expected {dim} values plus optional score, got {len(tokens)}"
                )
            width = len(tokens)
        elif len(tokens) != width:
            raise ParseError(path, line, f"expected {width} fields, got {len(tokens)}")
        rows.append([_parse_float(t, path, line, "feature value") for t in tokens])
    if dim is None:
        raise ParseError(path, 0, "missing 'dim' header")
    if not rows:
        raise ParseError(path, 0, "embedding file contains no rows")
    data = np.asarray(rows)
    if width == dim + 1:
        return np.ascontiguousarray(data[:, :dim]), np.ascontiguousarray(data[:, dim])
    return data, None


def write_embeddings(embeddings, path, pred_scores=None) -> None:
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2 or emb.shape[0] < 1:
        raise InvalidInputError("embeddings must be a non-empty (N, D) array")
    scores = None
    if pred_scores is not None:
        scores = np.asarray(pred_scores, dtype=np.float64).reshape(-1)
        if len(scores) != len(emb):
            raise InvalidInputError("one predicted score per row is required")
    with _open_text(path, "w") as f:
        f.write(f"dim {emb.shape[1]}\n")
        for row_index, row in enumerate(emb):
            fields = [_fmt(v) for v in row]
            if scores is not None:
                fields.append(_fmt(scores[row_index]))
            f.write(" ".join(fields) + "\n")


def parse_segmentation(path) -> SegmentationResult:
    lines = _read_lines(path)
    centers = None
    centers_line = 0
    assignments = []
    for line, tokens in _content_lines(lines):
        if centers is None:
            if tokens[0] != "centers":
                raise ParseError(path, line, "expected header 'centers <k_1> ... <k_K>'")
            centers = [_parse_int(t, path, line, "center index") for t in tokens[1:]]
            centers_line = line
            if any(c < 0 for c in centers):
                raise ParseError(path, line, "center indices must be >= 0")
            if len(set(centers)) != len(centers):
                raise ParseError(path, line, "duplicate center index")
            continue
        if len(tokens) != 1:
            raise ParseError(path, line, f"expected one instance index, got {len(tokens)} fields")
        value = _parse_int(tokens[0], path, line, "instance index")
        if value < -1 or value >= len(centers):
            raise ParseError(
                path, line, f"instance index {value} outside [-1, {len(centers)})"
            )
        assignments.append(value)
    if centers is None:
        raise ParseError(path, 0, "missing 'centers' header")
    if not assignments:
        raise ParseError(path, 0, "segmentation contains no points")
    if any(c >= len(assignments) for c in centers):
        raise ParseError(path, centers_line, "center index beyond the point count")
    return SegmentationResult(
        np.asarray(centers, dtype=np.int64),
        np.asarray(assignments, dtype=np.int64),
        np.ones(len(centers)),
    )


def write_segmentation(result: SegmentationResult, path) -> None:
    with _open_text(path, "w") as f:
        f.write("centers" + "".join(f" {int(c)}" for c in result.center_indices) + "\n")
        for value in result.assignments:
            f.write(f"{int(value)}\n")
