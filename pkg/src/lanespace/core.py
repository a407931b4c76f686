"""Shared data model: pixel classes, road classes, segmentation masks."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np


class ClassId(IntEnum):
    """Per-pixel semantic class. Codes are part of the mask file and wire formats."""

    BACKGROUND = 0
    EGO_LANE = 1
    OTHER_LANES = 2


class RoadClass(IntEnum):
    """Scene-level road type. UNKNOWN means no classifier output accompanied the mask."""

    RESIDENTIAL = 0
    HIGHWAY = 1
    CITY_STREET = 2
    OTHERS = 3
    UNKNOWN = 255


_ROAD_CLASS_NAMES = {
    RoadClass.RESIDENTIAL: "residential",
    RoadClass.HIGHWAY: "highway",
    RoadClass.CITY_STREET: "city_street",
    RoadClass.OTHERS: "others",
    RoadClass.UNKNOWN: "unknown",
}
_ROAD_CLASS_BY_NAME = {v: k for k, v in _ROAD_CLASS_NAMES.items()}


def road_class_name(rc: RoadClass) -> str:
    return _ROAD_CLASS_NAMES[RoadClass(rc)]


def road_class_from_name(name: str) -> RoadClass:
    try:
        return _ROAD_CLASS_BY_NAME[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown road class name: {name!r}") from None


@dataclass(frozen=True)
class SegmentationMask:
    """Dense per-pixel class grid, row-major, origin at the top-left corner.

    x indexes columns, y indexes rows; every module shares this convention.
    """

    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        d = np.asarray(self.data, dtype=np.uint8)
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError(f"mask must be a 2-D grid, got shape {d.shape}")
        if d.max(initial=0) > max(ClassId):
            bad = int(d.max())
            raise ValueError(f"mask contains invalid class code {bad}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SegmentationMask):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.all(self.data == other.data)
        )


def extract_points(mask: SegmentationMask, class_id: ClassId) -> np.ndarray:
    """Coordinates (x, y) of every pixel equal to class_id, in row-major order.

    Returns a float64 array of shape (n, 2).
    """
    ys, xs = np.nonzero(mask.data == int(class_id))
    return np.column_stack([xs, ys]).astype(np.float64)


def downsample(mask: SegmentationMask, factor: int) -> SegmentationMask:
    """Stride sampling: output pixel (i, j) = input pixel (i*factor, j*factor)."""
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ValueError(f"downsample factor must be a positive integer, got {factor!r}")
    if factor == 1:
        return mask
    return SegmentationMask(mask.data[::factor, ::factor].copy())
