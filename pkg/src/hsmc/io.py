"""Readers and writers for clouds, labels, correspondences, scenes and results.

Binary formats are explicit little-endian:

* velodyne ``.bin``: float32 ``x, y, z, intensity`` per point
* ``.label``: uint32 per point, class id in the low 16 bits, instance id above

Correspondences are CSV with a ``src,dst`` header and 0-based indices.
Result records, ground truth and scene manifests are JSON.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .corr import CorrespondenceSet, PointCloud, inlier_set
from .errors import IndexOutOfBounds, LengthMismatch, MalformedFile, ParseError, WriteFailure
from .geom import RigidTransform, transform_errors

RESULT_SCHEMA_VERSION = 1
SCENE_SCHEMA_VERSION = 1

SCENE_FILES = {
    "source": "source.bin",
    "target": "target.bin",
    "source_labels": "source.label",
    "target_labels": "target.label",
    "correspondences": "correspondences.csv",
    "ground_truth": "ground_truth.json",
}


def read_point_cloud_bin(path) -> PointCloud:
    size = os.path.getsize(path)
    if size % 16:
        raise MalformedFile(f"{path}: size {size} is not a multiple of 16 bytes")
    raw = np.fromfile(path, dtype="<f4").reshape(-1, 4)
    pts = raw[:, :3].astype(np.float64)
    if not np.all(np.isfinite(pts)):
        raise MalformedFile(f"{path}: non-finite coordinates")
    return PointCloud(pts)


def write_point_cloud_bin(cloud: PointCloud | np.ndarray, path, intensity=None) -> None:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    rec = np.zeros((len(pts), 4), dtype="<f4")
    rec[:, :3] = pts
    if intensity is not None:
        rec[:, 3] = intensity
    _write_bytes(path, rec.tobytes())


def read_label_file(path, expected_points: int) -> np.ndarray:
    """Class ids (low 16 bits) of a SemanticKITTI label file, as int64."""
    size = os.path.getsize(path)
    if size != 4 * expected_points:
        raise LengthMismatch(f"{path}: {size} bytes, expected {4 * expected_points}")
    raw = np.fromfile(path, dtype="<u4")
    return (raw & 0xFFFF).astype(np.int64)


def write_label_file(labels, path, instance_ids=None) -> None:
    lab = np.asarray(labels, dtype=np.int64)
    if np.any((lab < 0) | (lab > 0xFFFF)):
        raise ValueError("class ids must fit in 16 bits")
    raw = lab.astype("<u4")
    if instance_ids is not None:
        raw |= np.asarray(instance_ids, dtype="<u4") << 16
    _write_bytes(path, raw.tobytes())


def _write_bytes(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise WriteFailure(f"cannot write {path}: {exc}") from exc


def read_correspondence_pairs(path) -> np.ndarray:
    """``(K, 2)`` index pairs from a ``src,dst`` CSV."""
    pairs = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["src", "dst"]:
            raise ParseError('expected header "src,dst"', 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line)
            try:
                i, j = int(row[0]), int(row[1])
            except ValueError:
                raise ParseError(f"non-integer index in {','.join(row)!r}", line) from None
            if i < 0 or j < 0:
                raise ParseError("negative index", line)
            pairs.append((i, j))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def read_correspondences_csv(path, source: PointCloud, target: PointCloud) -> CorrespondenceSet:
    pairs = read_correspondence_pairs(path)
    if len(pairs):
        if pairs[:, 0].max() >= len(source):
            raise IndexOutOfBounds(f"source index {pairs[:, 0].max()} >= cloud size {len(source)}")
        if pairs[:, 1].max() >= len(target):
            raise IndexOutOfBounds(f"target index {pairs[:, 1].max()} >= cloud size {len(target)}")
    return CorrespondenceSet(source, target, pairs)


def write_correspondences_csv(c: CorrespondenceSet | np.ndarray, path) -> None:
    pairs = c.pairs if isinstance(c, CorrespondenceSet) else np.asarray(c, dtype=np.int64)
    lines = ["src,dst"] + [f"{i},{j}" for i, j in pairs.tolist()]
    _write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _dump_json(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    _write_bytes(path, text.encode("utf-8"))


def transform_to_dict(T: RigidTransform) -> dict:
    return {"rotation": T.rotation.reshape(-1).tolist(), "translation": T.translation.tolist()}


def transform_from_dict(d: dict) -> RigidTransform:
    return RigidTransform(np.asarray(d["rotation"], dtype=np.float64).reshape(3, 3), d["translation"])


@dataclass
class ResultRecord:
    rotation: np.ndarray
    translation: np.ndarray
    angular_error_deg: float | None = None
    translation_error_m: float | None = None
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    final_inliers: list[int] = field(default_factory=list)
    tool_version: str = __version__
    schema_version: int = RESULT_SCHEMA_VERSION

    @property
    def transform(self) -> RigidTransform:
        return RigidTransform(self.rotation, self.translation)


def result_to_dict(result, ground_truth=None, config=None) -> dict:
    """JSON-ready record of a RegistrationResult; error fields only with ground truth."""
    from .pipeline import summarize

    T = result.transform
    out = {
        "schema_version": RESULT_SCHEMA_VERSION,
        "tool_version": __version__,
        **transform_to_dict(T),
        "final_inliers": [int(k) for k in result.final_inliers],
        "diagnostics": summarize(result),
        "config": config.to_dict() if hasattr(config, "to_dict") else dict(config or {}),
    }
    if ground_truth is not None:
        T_gt = ground_truth.transform if hasattr(ground_truth, "transform") else ground_truth
        ang, tr = transform_errors(T, T_gt)
        out["angular_error_deg"] = ang
        out["translation_error_m"] = tr
    return out


def write_result(result, ground_truth, path, config=None) -> None:
    _dump_json(result_to_dict(result, ground_truth, config), path)


def read_result(path) -> ResultRecord:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedFile(f"{path}: {exc}") from exc
    T = transform_from_dict(d)
    return ResultRecord(
        rotation=T.rotation,
        translation=T.translation,
        angular_error_deg=d.get("angular_error_deg"),
        translation_error_m=d.get("translation_error_m"),
        diagnostics=d.get("diagnostics", {}),
        config=d.get("config", {}),
        final_inliers=d.get("final_inliers", []),
        tool_version=d.get("tool_version", ""),
        schema_version=d.get("schema_version", 0),
    )


def ground_truth_to_dict(gt) -> dict:
    d = {
        **transform_to_dict(gt.transform),
        "inlier_indices": [int(k) for k in gt.inlier_indices],
        "moving_indices": [int(k) for k in gt.moving_indices],
    }
    if gt.moving_transform is not None:
        d["moving_transform"] = transform_to_dict(gt.moving_transform)
    return d


def write_scene(directory, c: CorrespondenceSet, ground_truth=None, spec=None) -> Path:
    """Write a scene archive directory: clouds, labels, correspondences, truth, manifest."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise WriteFailure(f"cannot create {out}: {exc}") from exc
    files = {"source": SCENE_FILES["source"], "target": SCENE_FILES["target"],
             "correspondences": SCENE_FILES["correspondences"]}
    write_point_cloud_bin(c.source, out / files["source"])
    write_point_cloud_bin(c.target, out / files["target"])
    if c.source.labels is not None:
        files["source_labels"] = SCENE_FILES["source_labels"]
        write_label_file(c.source.labels, out / files["source_labels"])
    if c.target.labels is not None:
        files["target_labels"] = SCENE_FILES["target_labels"]
        write_label_file(c.target.labels, out / files["target_labels"])
    write_correspondences_csv(c, out / files["correspondences"])
    if ground_truth is not None:
        files["ground_truth"] = SCENE_FILES["ground_truth"]
        _dump_json(ground_truth_to_dict(ground_truth), out / files["ground_truth"])
    manifest = {
        "schema_version": SCENE_SCHEMA_VERSION,
        "tool_version": __version__,
        "files": files,
        "source_points": len(c.source),
        "target_points": len(c.target),
        "correspondences": len(c),
        "spec": spec.to_dict() if hasattr(spec, "to_dict") else spec,
    }
    _dump_json(manifest, out / "manifest.json")
    return out


@dataclass(frozen=True, eq=False)
class SceneGroundTruth:
    transform: RigidTransform
    inlier_indices: np.ndarray
    moving_indices: np.ndarray
    moving_transform: RigidTransform | None = None


def read_ground_truth(path) -> SceneGroundTruth:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    mt = d.get("moving_transform")
    return SceneGroundTruth(
        transform=transform_from_dict(d),
        inlier_indices=inlier_set(d.get("inlier_indices", [])),
        moving_indices=inlier_set(d.get("moving_indices", [])),
        moving_transform=transform_from_dict(mt) if mt else None,
    )


def read_scene(directory) -> tuple[CorrespondenceSet, SceneGroundTruth | None, dict]:
    root = Path(directory)
    mpath = root / "manifest.json"
    manifest = json.loads(mpath.read_text(encoding="utf-8")) if mpath.exists() else {"files": dict(SCENE_FILES)}
    files = manifest.get("files", {})

    def opt(key):
        name = files.get(key)
        return root / name if name and (root / name).exists() else None

    source = read_point_cloud_bin(root / files.get("source", SCENE_FILES["source"]))
    target = read_point_cloud_bin(root / files.get("target", SCENE_FILES["target"]))
    if (p := opt("source_labels")) is not None:
        source = source.with_labels(read_label_file(p, len(source)))
    if (p := opt("target_labels")) is not None:
        target = target.with_labels(read_label_file(p, len(target)))
    c = read_correspondences_csv(root / files.get("correspondences", SCENE_FILES["correspondences"]), source, target)
    gt_path = opt("ground_truth")
    gt = read_ground_truth(gt_path) if gt_path is not None else None
    return c, gt, manifest
