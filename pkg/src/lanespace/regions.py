"""Mask to lane regions: cluster per class, hull, resolve overlaps, pick sides."""
from __future__ import annotations

import json
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .clustering import ClusterParams, dbscan
from .core import ClassId, RoadClass, SegmentationMask, downsample, extract_points, road_class_name
from .geometry import (
    EPS_AREA,
    convex_hull,
    convex_intersection,
    convex_subtract,
    pieces_area,
    pieces_centroid,
    polygon_area,
)

LANE_EGO = "ego"
LANE_LEFT = "left"
LANE_RIGHT = "right"
LANE_UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class DrivableRegion:
    lane: str
    pieces: list[np.ndarray]
    area: float
    centroid: np.ndarray

    @classmethod
    def from_pieces(cls, lane: str, pieces: list[np.ndarray]) -> "DrivableRegion":
        area = pieces_area(pieces)
        if area <= EPS_AREA:
            raise ValueError("a drivable region needs positive area")
        return cls(lane=lane, pieces=pieces, area=area, centroid=pieces_centroid(pieces))

    def relabeled(self, lane: str) -> "DrivableRegion":
        return DrivableRegion(lane, self.pieces, self.area, self.centroid)


@dataclass(frozen=True)
class RegionSet:
    ego: DrivableRegion | None = None
    left: DrivableRegion | None = None
    right: DrivableRegion | None = None
    unassigned: tuple[DrivableRegion, ...] = ()

    def present(self) -> list[DrivableRegion]:
        out = [r for r in (self.ego, self.left, self.right) if r is not None]
        out.extend(self.unassigned)
        return out


@dataclass(frozen=True)
class ExtractionConfig:
    downsample_factor: int = 4
    cluster: ClusterParams = field(default_factory=ClusterParams)
    parallel_classes: bool = True
    min_region_area: float = 64.0  # px^2 at full resolution

    def __post_init__(self) -> None:
        if self.downsample_factor < 1:
            raise ValueError(
                f"downsample_factor must be >= 1, got {self.downsample_factor}"
            )
        if self.min_region_area < 0:
            raise ValueError("min_region_area must be >= 0")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExtractionConfig":
        kw = dict(raw)
        try:
            if "cluster" in kw:
                kw["cluster"] = ClusterParams(**kw["cluster"])
            return cls(**kw)
        except TypeError as e:
            raise ValueError(f"bad extraction config: {e}") from None

    def to_dict(self) -> dict[str, Any]:
        return {
            "downsample_factor": self.downsample_factor,
            "cluster": {
                "eps": self.cluster.eps,
                "min_pts": self.cluster.min_pts,
                "min_cluster_size": self.cluster.min_cluster_size,
            },
            "parallel_classes": self.parallel_classes,
            "min_region_area": self.min_region_area,
        }


def resolve_overlaps(
    regions: list[tuple[ClassId, list[np.ndarray]]],
) -> list[tuple[ClassId, list[np.ndarray]]]:
    """Make the piece sets of different regions pairwise disjoint.

    When an ego region overlaps a non-ego region the ego piece always cedes the
    intersection; otherwise the region with the smaller total area cedes it, a
    tie going against the later entry. List order is the deterministic cluster
    order, so results do not depend on scheduling.
    """
    entries: list[list[Any]] = [[cls, [np.array(p) for p in pieces]] for cls, pieces in regions]

    def shrink_once() -> bool:
        for ia in range(len(entries)):
            for ib in range(ia + 1, len(entries)):
                ca, pa_list = entries[ia]
                cb, pb_list = entries[ib]
                for na, pa in enumerate(pa_list):
                    for nb, pb in enumerate(pb_list):
                        inter = convex_intersection(pa, pb)
                        if inter is None:
                            continue
                        ego_a = ca == ClassId.EGO_LANE
                        ego_b = cb == ClassId.EGO_LANE
                        if ego_a != ego_b:
                            lose_a = ego_a
                        else:
                            lose_a = pieces_area(pa_list) < pieces_area(pb_list)
                        if lose_a:
                            pa_list[na : na + 1] = convex_subtract(pa, inter)
                        else:
                            pb_list[nb : nb + 1] = convex_subtract(pb, inter)
                        return True
        return False

    while shrink_once():
        pass
    return [(cls, pieces) for cls, pieces in entries]


def assign_sides(
    others: list[DrivableRegion], ego: DrivableRegion | None
) -> tuple[DrivableRegion | None, DrivableRegion | None, tuple[DrivableRegion, ...]]:
    """Split other-lane regions on the ego centroid x; keep the biggest per side.

    A region whose centroid x equals the ego's goes right. Without an ego
    region nothing can be sided and everything is returned unassigned.
    """
    if ego is None:
        return None, None, tuple(r.relabeled(LANE_UNASSIGNED) for r in others)
    left_best: DrivableRegion | None = None
    right_best: DrivableRegion | None = None
    for region in others:
        if region.centroid[0] < ego.centroid[0]:
            if left_best is None or region.area > left_best.area:
                left_best = region
        else:
            if right_best is None or region.area > right_best.area:
                right_best = region
    left = left_best.relabeled(LANE_LEFT) if left_best is not None else None
    right = right_best.relabeled(LANE_RIGHT) if right_best is not None else None
    return left, right, ()


def _cluster_hulls(
    points: np.ndarray, params: ClusterParams, min_area: float
) -> list[np.ndarray]:
    labels = dbscan(points, params)
    hulls: list[np.ndarray] = []
    for label in range(int(labels.max()) + 1 if len(labels) else 0):
        hull = convex_hull(points[labels == label])
        if hull is None or polygon_area(hull) < min_area:
            continue
        hulls.append(hull)
    return hulls


def extract_regions(
    mask: SegmentationMask,
    cfg: ExtractionConfig | None = None,
    executor: Executor | None = None,
) -> RegionSet:
    """Full pipeline from mask to disjoint, side-attributed lane regions.

    The two class clusterings may run concurrently (on `executor` when given),
    but the output is deterministic regardless of scheduling.
    """
    cfg = cfg or ExtractionConfig()
    factor = cfg.downsample_factor
    small = downsample(mask, factor)
    ego_pts = extract_points(small, ClassId.EGO_LANE)
    other_pts = extract_points(small, ClassId.OTHER_LANES)
    # min_region_area is stated at full resolution; hulls live on the
    # downsampled grid until the final scaling step.
    min_area_small = cfg.min_region_area / float(factor * factor)

    def hulls_of(pts: np.ndarray) -> list[np.ndarray]:
        return _cluster_hulls(pts, cfg.cluster, min_area_small)

    if cfg.parallel_classes and executor is not None:
        ego_hulls, other_hulls = tuple(executor.map(hulls_of, [ego_pts, other_pts]))
    elif cfg.parallel_classes:
        with ThreadPoolExecutor(max_workers=2) as pool:
            ego_hulls, other_hulls = tuple(pool.map(hulls_of, [ego_pts, other_pts]))
    else:
        ego_hulls, other_hulls = hulls_of(ego_pts), hulls_of(other_pts)

    ordered: list[tuple[ClassId, list[np.ndarray]]] = [
        (ClassId.EGO_LANE, [h]) for h in ego_hulls
    ] + [(ClassId.OTHER_LANES, [h]) for h in other_hulls]
    resolved = resolve_overlaps(ordered)

    scaled: list[tuple[ClassId, list[np.ndarray]]] = []
    for cls, pieces in resolved:
        kept = [p * float(factor) for p in pieces if pieces_area([p]) > EPS_AREA]
        if kept:
            scaled.append((cls, kept))

    ego_region: DrivableRegion | None = None
    others: list[DrivableRegion] = []
    for cls, pieces in scaled:
        region = DrivableRegion.from_pieces(
            LANE_EGO if cls == ClassId.EGO_LANE else LANE_UNASSIGNED, pieces
        )
        if cls == ClassId.EGO_LANE:
            if ego_region is None or region.area > ego_region.area:
                ego_region = region
        else:
            others.append(region)
    left, right, unassigned = assign_sides(others, ego_region)
    return RegionSet(ego=ego_region, left=left, right=right, unassigned=unassigned)


def _round6(value: float) -> float:
    # +0.0 folds -0.0 so serialized output is byte-stable.
    return round(float(value), 6) + 0.0


def _region_entry(region: DrivableRegion) -> dict[str, Any]:
    return {
        "lane": region.lane,
        "area": _round6(region.area),
        "centroid": [_round6(region.centroid[0]), _round6(region.centroid[1])],
        "pieces": [
            [[_round6(x), _round6(y)] for x, y in piece] for piece in region.pieces
        ],
    }


def build_document(
    frame_id: int,
    road_class: RoadClass,
    regions: RegionSet,
    advice: dict[str, Any],
) -> dict[str, Any]:
    """Region output document; key order is part of the format."""
    listed = [r for r in (regions.ego, regions.left, regions.right) if r is not None]
    listed.extend(regions.unassigned)
    return {
        "frame_id": int(frame_id),
        "road_class": road_class_name(road_class),
        "regions": [_region_entry(r) for r in listed],
        "advice": advice,
    }


def document_bytes(document: dict[str, Any]) -> bytes:
    return json.dumps(document, separators=(",", ":")).encode("utf-8")
