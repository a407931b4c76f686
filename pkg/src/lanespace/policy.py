"""Road-class conditioned navigation advisory."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .core import RoadClass
from .regions import LANE_EGO, LANE_LEFT, LANE_RIGHT, RegionSet

CHANGE_PERMITTED = "permitted"
CHANGE_FORBIDDEN = "forbidden"
CHANGE_UNDETERMINED = "undetermined"

# lane_change per road class, with a machine-readable justification code.
_RULES: dict[RoadClass, tuple[str, bool, str]] = {
    # (lane_change, side lanes usable, rationale)
    RoadClass.HIGHWAY: (CHANGE_PERMITTED, True, "one_way_multi_lane"),
    RoadClass.RESIDENTIAL: (CHANGE_FORBIDDEN, False, "two_way_or_single_lane"),
    RoadClass.OTHERS: (CHANGE_FORBIDDEN, False, "high_error_setting"),
    RoadClass.CITY_STREET: (CHANGE_UNDETERMINED, False, "ambiguous_lane_layout"),
    RoadClass.UNKNOWN: (CHANGE_UNDETERMINED, False, "no_road_classification"),
}


@dataclass(frozen=True)
class NavigationAdvice:
    usable_lanes: tuple[str, ...]
    lane_change: str
    rationale: str

    def as_dict(self) -> dict[str, Any]:
        return {
            "usable_lanes": list(self.usable_lanes),
            "lane_change": self.lane_change,
            "rationale": self.rationale,
        }


def advise(road_class: RoadClass, regions: RegionSet) -> NavigationAdvice:
    """Map road class and detected lanes to an advisory.

    Only detected lanes can be usable; the ego lane is usable whenever it is
    detected. Side lanes become usable only where a lane change is permitted.
    """
    lane_change, sides_usable, rationale = _RULES[RoadClass(road_class)]
    usable: list[str] = []
    if regions.ego is not None:
        usable.append(LANE_EGO)
    if sides_usable:
        if regions.left is not None:
            usable.append(LANE_LEFT)
        if regions.right is not None:
            usable.append(LANE_RIGHT)
    return NavigationAdvice(
        usable_lanes=tuple(usable), lane_change=lane_change, rationale=rationale
    )
