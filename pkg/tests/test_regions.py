import json

import numpy as np
import pytest

from lanespace.clustering import ClusterParams
from lanespace.core import ClassId, RoadClass, SegmentationMask, downsample, extract_points
from lanespace.geometry import (
    convex_hull,
    convex_intersection,
    pieces_area,
    polygon_area,
)
from lanespace.policy import advise
from lanespace.regions import (
    LANE_EGO,
    LANE_LEFT,
    LANE_RIGHT,
    LANE_UNASSIGNED,
    DrivableRegion,
    ExtractionConfig,
    RegionSet,
    assign_sides,
    build_document,
    document_bytes,
    extract_regions,
    resolve_overlaps,
)


def square(x0, y0, side):
    return np.array(
        [[x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side]],
        dtype=np.float64,
    )


def region_at(x, area_side=1.0, lane=LANE_UNASSIGNED):
    return DrivableRegion.from_pieces(lane, [square(x, 0.0, area_side)])


def paint(grid, x0, x1, y0, y1, value):
    grid[y0:y1, x0:x1] = value


# --- resolve_overlaps -------------------------------------------------------


def test_disjoint_regions_pass_through():
    regions = [
        (ClassId.EGO_LANE, [square(0, 0, 2)]),
        (ClassId.OTHER_LANES, [square(10, 0, 2)]),
    ]
    out = resolve_overlaps(regions)
    assert len(out) == 2
    for (_, before), (_, after) in zip(regions, out):
        assert len(after) == 1
        assert np.allclose(before[0], after[0])


def test_ego_always_cedes_the_intersection():
    ego = square(0, 0, 2)  # area 4
    other = square(1.5, 0, 1)  # area 1, overlap 0.5x1
    out = resolve_overlaps(
        [(ClassId.EGO_LANE, [ego]), (ClassId.OTHER_LANES, [other])]
    )
    ego_area = pieces_area(out[0][1])
    other_area = pieces_area(out[1][1])
    assert abs(ego_area - 3.5) <= 1e-9  # ego lost despite being bigger
    assert abs(other_area - 1.0) <= 1e-9
    assert np.allclose(out[1][1][0], other)


def test_smaller_region_cedes_between_same_class():
    small = square(0, 0, 2)  # area 4
    big = square(1, 0, 3)  # area 9, overlap 1x2
    out = resolve_overlaps(
        [(ClassId.OTHER_LANES, [big]), (ClassId.OTHER_LANES, [small])]
    )
    assert abs(pieces_area(out[0][1]) - 9.0) <= 1e-9
    assert abs(pieces_area(out[1][1]) - 2.0) <= 1e-9


def test_equal_area_tie_goes_against_the_later_entry():
    a = square(0, 0, 2)
    b = square(1, 0, 2)
    out = resolve_overlaps([(ClassId.OTHER_LANES, [a]), (ClassId.OTHER_LANES, [b])])
    assert abs(pieces_area(out[0][1]) - 4.0) <= 1e-9
    assert abs(pieces_area(out[1][1]) - 2.0) <= 1e-9


def test_two_ego_regions_use_the_area_rule():
    out = resolve_overlaps(
        [(ClassId.EGO_LANE, [square(0, 0, 3)]), (ClassId.EGO_LANE, [square(2, 0, 2)])]
    )
    assert abs(pieces_area(out[0][1]) - 9.0) <= 1e-9
    assert abs(pieces_area(out[1][1]) - 2.0) <= 1e-9


def test_output_regions_are_pairwise_disjoint():
    rng = np.random.default_rng(8)
    regions = []
    for i in range(5):
        x, y = rng.uniform(0, 6, 2)
        cls = ClassId.EGO_LANE if i == 0 else ClassId.OTHER_LANES
        regions.append((cls, [square(x, y, rng.uniform(1, 4))]))
    out = resolve_overlaps(regions)
    flat = [(i, p) for i, (_, pieces) in enumerate(out) for p in pieces]
    for i, (ia, pa) in enumerate(flat):
        for ib, pb in flat[i + 1 :]:
            if ia == ib:
                continue
            inter = convex_intersection(pa, pb)
            assert inter is None or polygon_area(inter) <= 1e-6


# --- assign_sides -----------------------------------------------------------


def test_sides_split_on_centroid_x():
    ego = region_at(10.0, lane=LANE_EGO)
    west = region_at(2.0)
    east = region_at(20.0)
    left, right, unassigned = assign_sides([west, east], ego)
    assert left is not None and left.lane == LANE_LEFT
    assert right is not None and right.lane == LANE_RIGHT
    assert np.allclose(left.centroid, west.centroid)
    assert np.allclose(right.centroid, east.centroid)
    assert unassigned == ()


def test_equal_centroid_x_goes_right():
    ego = region_at(10.0, lane=LANE_EGO)
    twin = region_at(10.0)
    left, right, _ = assign_sides([twin], ego)
    assert left is None
    assert right is not None


def test_biggest_region_wins_the_side():
    ego = region_at(0.0, lane=LANE_EGO)
    small = region_at(5.0, area_side=1.0)
    big = region_at(9.0, area_side=3.0)
    left, right, unassigned = assign_sides([small, big], ego)
    assert left is None
    assert right is not None and abs(right.area - 9.0) <= 1e-9
    assert unassigned == ()  # the loser is discarded, not kept


def test_without_ego_everything_is_unassigned():
    west = region_at(2.0)
    east = region_at(20.0)
    left, right, unassigned = assign_sides([west, east], None)
    assert left is None and right is None
    assert [r.lane for r in unassigned] == [LANE_UNASSIGNED, LANE_UNASSIGNED]


# --- extract_regions --------------------------------------------------------


def three_lane_mask(width=640, height=480):
    grid = np.zeros((height, width), dtype=np.uint8)
    paint(grid, 40, 180, 200, 480, int(ClassId.OTHER_LANES))
    paint(grid, 240, 400, 200, 480, int(ClassId.EGO_LANE))
    paint(grid, 460, 600, 200, 480, int(ClassId.OTHER_LANES))
    return SegmentationMask(grid)


def test_all_background_mask_yields_absent_regions():
    rs = extract_regions(SegmentationMask(np.zeros((64, 64), dtype=np.uint8)))
    assert rs.ego is None and rs.left is None and rs.right is None
    assert rs.unassigned == ()


def test_three_lane_mask_recovers_all_sides():
    rs = extract_regions(three_lane_mask())
    assert rs.ego is not None and rs.left is not None and rs.right is not None
    assert rs.left.centroid[0] < rs.ego.centroid[0] < rs.right.centroid[0]
    assert rs.ego.lane == LANE_EGO


def test_parallel_flag_does_not_change_the_result():
    mask = three_lane_mask()
    seq = extract_regions(mask, ExtractionConfig(parallel_classes=False))
    par = extract_regions(mask, ExtractionConfig(parallel_classes=True))
    for a, b in [(seq.ego, par.ego), (seq.left, par.left), (seq.right, par.right)]:
        assert (a is None) == (b is None)
        if a is not None:
            assert len(a.pieces) == len(b.pieces)
            for pa, pb in zip(a.pieces, b.pieces):
                assert np.array_equal(pa, pb)


def test_documents_are_byte_identical_across_runs():
    mask = three_lane_mask()
    docs = []
    for parallel in (True, False, True):
        rs = extract_regions(mask, ExtractionConfig(parallel_classes=parallel))
        advice = advise(RoadClass.HIGHWAY, rs)
        docs.append(
            document_bytes(build_document(3, RoadClass.HIGHWAY, rs, advice.as_dict()))
        )
    assert docs[0] == docs[1] == docs[2]


def test_vertices_scale_back_into_image_bounds():
    mask = three_lane_mask()
    cfg = ExtractionConfig()
    small = downsample(mask, cfg.downsample_factor)
    rs = extract_regions(mask, cfg)
    for region in rs.present():
        for piece in region.pieces:
            scaled = piece / cfg.downsample_factor
            assert (scaled[:, 0] >= 0).all() and (scaled[:, 0] <= small.width - 1).all()
            assert (scaled[:, 1] >= 0).all() and (scaled[:, 1] <= small.height - 1).all()


def test_min_region_area_drops_small_clusters():
    grid = np.zeros((64, 64), dtype=np.uint8)
    paint(grid, 8, 40, 8, 40, int(ClassId.EGO_LANE))
    mask = SegmentationMask(grid)
    assert extract_regions(mask).ego is not None
    starved = ExtractionConfig(min_region_area=1e6)
    assert extract_regions(mask, starved).ego is None


def test_ego_never_gains_area():
    mask = u_shaped_overlap_mask()
    cfg = ExtractionConfig()
    rs = extract_regions(mask, cfg)
    small = downsample(mask, cfg.downsample_factor)
    naive_hull = convex_hull(extract_points(small, ClassId.EGO_LANE))
    assert naive_hull is not None
    upper_bound = polygon_area(naive_hull) * cfg.downsample_factor**2
    assert rs.ego is not None
    assert rs.ego.area <= upper_bound + 1e-6


def u_shaped_overlap_mask(width=640, height=480):
    """Ego pixels form a U whose hull covers an island of other-lane pixels."""
    grid = np.zeros((height, width), dtype=np.uint8)
    paint(grid, 0, 60, 240, 480, int(ClassId.EGO_LANE))
    paint(grid, 240, 300, 240, 480, int(ClassId.EGO_LANE))
    paint(grid, 0, 300, 240, 264, int(ClassId.EGO_LANE))
    paint(grid, 120, 184, 300, 424, int(ClassId.OTHER_LANES))
    return SegmentationMask(grid)


def test_hull_overlap_is_removed_from_the_ego_region():
    mask = u_shaped_overlap_mask()
    cfg = ExtractionConfig()
    rs = extract_regions(mask, cfg)
    assert rs.ego is not None
    small = downsample(mask, cfg.downsample_factor)
    f2 = cfg.downsample_factor**2
    ego_hull = convex_hull(extract_points(small, ClassId.EGO_LANE))
    other_hull = convex_hull(extract_points(small, ClassId.OTHER_LANES))
    overlap = convex_intersection(ego_hull, other_hull)
    assert overlap is not None and polygon_area(overlap) > 0
    expected = (polygon_area(ego_hull) - polygon_area(overlap)) * f2
    assert abs(rs.ego.area - expected) <= 1e-6 * polygon_area(ego_hull) * f2
    # The other-lane region keeps its full hull.
    other = rs.right if rs.right is not None else rs.left
    assert other is not None
    assert abs(other.area - polygon_area(other_hull) * f2) <= 1e-9


# --- document ---------------------------------------------------------------


def test_document_key_order_and_rounding():
    rs = extract_regions(three_lane_mask())
    advice = advise(RoadClass.RESIDENTIAL, rs)
    doc = build_document(9, RoadClass.RESIDENTIAL, rs, advice.as_dict())
    assert list(doc.keys()) == ["frame_id", "road_class", "regions", "advice"]
    assert doc["road_class"] == "residential"
    lanes = [r["lane"] for r in doc["regions"]]
    assert lanes == [LANE_EGO, LANE_LEFT, LANE_RIGHT]
    for region in doc["regions"]:
        assert list(region.keys()) == ["lane", "area", "centroid", "pieces"]
        for piece in region["pieces"]:
            for x, y in piece:
                assert x == round(x, 6) and y == round(y, 6)
    raw = document_bytes(doc)
    assert json.loads(raw) == doc
    assert b" " not in raw.split(b'"advice"')[0]  # compact separators


def test_document_for_empty_mask():
    rs = extract_regions(SegmentationMask(np.zeros((16, 16), dtype=np.uint8)))
    advice = advise(RoadClass.UNKNOWN, rs)
    doc = build_document(0, RoadClass.UNKNOWN, rs, advice.as_dict())
    assert doc["regions"] == []
    assert doc["advice"]["usable_lanes"] == []


def test_region_set_rejects_nothing_but_regions_validate():
    with pytest.raises(ValueError):
        DrivableRegion.from_pieces(LANE_EGO, [])
    rs = RegionSet()
    assert rs.present() == []
