"""Geometry tests.

Derived expectations come from independent re-implementations: an atan2
great-circle form, a crossing test cast along a different axis, a convex
half-plane test, and a fan triangulation. None of them share code with the
functions under test.
"""

import math

import numpy as np
import pytest

from museumflows.errors import (
    InvalidCoordinateError,
    InvalidGeometryError,
    InvalidParameterError,
)
from museumflows.geometry import (
    EARTH_RADIUS_KM,
    GeoPoint,
    GridCell,
    PlanarPoint,
    PolygonM,
    distance_to_polygon_m,
    haversine_km,
    point_in_polygon,
    point_on_boundary,
    polygon_centroid_area,
    project,
    snap_to_grid,
    unproject,
)

LEEDS = GeoPoint(53.7919, -1.5323)


def greatcircle_km_atan2(a: GeoPoint, b: GeoPoint) -> float:
    """Oracle: great-circle distance via the atan2 form, not half angles."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    dlon = lon2 - lon1
    num = math.hypot(
        math.cos(lat2) * math.sin(dlon),
        math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon),
    )
    den = math.sin(lat1) * math.sin(lat2) + math.cos(lat1) * math.cos(lat2) * math.cos(dlon)
    return EARTH_RADIUS_KM * math.atan2(num, den)


def raycast_down_contains(p: PlanarPoint, ring) -> bool:
    """Oracle: ray cast along -y, crossing arithmetic written independently."""
    crossings = 0
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if (a.x > p.x) != (b.x > p.x):
            y_cross = a.y + (p.x - a.x) * (b.y - a.y) / (b.x - a.x)
            if y_cross < p.y:
                crossings += 1
    return crossings % 2 == 1


def halfplane_contains(p: PlanarPoint, ring) -> bool:
    """Oracle for convex counterclockwise rings: inside iff left of every edge."""
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < 0:
            return False
    return True


def fan_centroid_area(ring):
    """Oracle: fan triangulation from vertex 0 (ring must be star-shaped there)."""
    area = cx = cy = 0.0
    o = ring[0]
    for i in range(1, len(ring) - 1):
        a, b = ring[i], ring[i + 1]
        t = ((a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y)) / 2.0
        area += t
        cx += t * (o.x + a.x + b.x) / 3.0
        cy += t * (o.y + a.y + b.y) / 3.0
    return PlanarPoint(cx / area, cy / area), area


def random_convex_ring(rng, n_vertices=6, radius=50.0):
    """Points on a shared circle sorted by angle: convex, counterclockwise."""
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=n_vertices))
    cx, cy = rng.uniform(-100.0, 100.0, size=2)
    r = rng.uniform(radius * 0.5, radius)
    return tuple(
        PlanarPoint(cx + r * math.cos(t), cy + r * math.sin(t)) for t in angles
    )


def square(x0=0.0, y0=0.0, side=1.0):
    return PolygonM(
        exterior=(
            PlanarPoint(x0, y0),
            PlanarPoint(x0 + side, y0),
            PlanarPoint(x0 + side, y0 + side),
            PlanarPoint(x0, y0 + side),
        )
    )


def test_geopoint_bounds():
    with pytest.raises(InvalidCoordinateError):
        GeoPoint(91.0, 0.0)
    with pytest.raises(InvalidCoordinateError):
        GeoPoint(0.0, 180.5)
    with pytest.raises(InvalidCoordinateError):
        GeoPoint(float("nan"), 0.0)
    with pytest.raises(InvalidCoordinateError):
        PlanarPoint(float("inf"), 0.0)


def test_project_identity_is_origin():
    q = project(LEEDS, LEEDS)
    assert q.x == 0.0 and q.y == 0.0


def test_project_small_latitude_step():
    # 0.001 degrees of latitude is 1/360000 of the meridian circle:
    # 2*pi*6371008.8 / 360000 = 111.1949 m.
    q = project(GeoPoint(LEEDS.lat + 0.001, LEEDS.lon), LEEDS)
    assert q.x == pytest.approx(0.0, abs=1e-9)
    assert q.y == pytest.approx(111.1949, abs=1e-3)


def test_project_round_trip():
    rng = np.random.default_rng(42)
    for _ in range(200):
        p = GeoPoint(LEEDS.lat + rng.uniform(-4.9, 4.9), LEEDS.lon + rng.uniform(-4.9, 4.9))
        back = unproject(project(p, LEEDS), LEEDS)
        assert back.lat == pytest.approx(p.lat, abs=1e-6)
        assert back.lon == pytest.approx(p.lon, abs=1e-6)


def test_project_round_trip_metric_at_ref():
    near = GeoPoint(LEEDS.lat + 1e-4, LEEDS.lon - 1e-4)
    q = project(near, LEEDS)
    q2 = project(unproject(q, LEEDS), LEEDS)
    assert math.hypot(q2.x - q.x, q2.y - q.y) < 1e-6


def test_project_rejects_far_points():
    with pytest.raises(InvalidCoordinateError):
        project(GeoPoint(LEEDS.lat + 6.0, LEEDS.lon), LEEDS)


def test_haversine_zero_and_symmetry():
    assert haversine_km(LEEDS, LEEDS) == 0.0
    rng = np.random.default_rng(7)
    for _ in range(100):
        a = GeoPoint(rng.uniform(-80, 80), rng.uniform(-179, 179))
        b = GeoPoint(rng.uniform(-80, 80), rng.uniform(-179, 179))
        assert haversine_km(a, b) == pytest.approx(haversine_km(b, a), rel=1e-15)
        assert haversine_km(a, b) >= 0.0


def test_haversine_against_atan2_oracle():
    a = GeoPoint(53.7997, -1.5492)
    b = GeoPoint(53.7960, -1.7594)
    assert haversine_km(a, b) == pytest.approx(greatcircle_km_atan2(a, b), rel=1e-9)
    rng = np.random.default_rng(11)
    for _ in range(1000):
        p = GeoPoint(rng.uniform(-85, 85), rng.uniform(-180, 180))
        q = GeoPoint(rng.uniform(-85, 85), rng.uniform(-180, 180))
        assert haversine_km(p, q) == pytest.approx(greatcircle_km_atan2(p, q), rel=1e-9, abs=1e-12)


def test_haversine_triangle_inequality():
    rng = np.random.default_rng(13)
    for _ in range(300):
        pts = [GeoPoint(rng.uniform(-80, 80), rng.uniform(-179, 179)) for _ in range(3)]
        a, b, c = pts
        assert haversine_km(a, c) <= haversine_km(a, b) + haversine_km(b, c) + 1e-9


def test_planar_distance_tracks_haversine_near_ref():
    rng = np.random.default_rng(17)
    for _ in range(300):
        # ~20 km box around the reference
        a = GeoPoint(LEEDS.lat + rng.uniform(-0.18, 0.18), LEEDS.lon + rng.uniform(-0.3, 0.3))
        b = GeoPoint(LEEDS.lat + rng.uniform(-0.18, 0.18), LEEDS.lon + rng.uniform(-0.3, 0.3))
        km = haversine_km(a, b)
        if km < 0.05:
            continue
        pa, pb = project(a, LEEDS), project(b, LEEDS)
        planar = math.hypot(pb.x - pa.x, pb.y - pa.y)
        assert abs(planar - 1000.0 * km) / (1000.0 * km) < 0.005


def test_point_in_polygon_basics():
    sq = square()
    assert point_in_polygon(PlanarPoint(0.5, 0.5), sq)
    assert not point_in_polygon(PlanarPoint(10.0, 10.0), sq)


def test_point_in_polygon_boundary_is_inside():
    sq = square()
    assert point_in_polygon(PlanarPoint(0.0, 0.0), sq)  # vertex
    assert point_in_polygon(PlanarPoint(0.5, 0.0), sq)  # edge midpoint
    assert point_in_polygon(PlanarPoint(1.0, 0.25), sq)  # vertical edge


def test_point_on_boundary():
    sq = square()
    assert point_on_boundary(PlanarPoint(0.5, 0.0), sq)
    assert point_on_boundary(PlanarPoint(1.0, 1.0), sq)
    assert not point_on_boundary(PlanarPoint(0.5, 0.5), sq)
    assert not point_on_boundary(PlanarPoint(2.0, 2.0), sq)
    holed = PolygonM(exterior=square(0, 0, 10).exterior, holes=(square(4, 4, 2).exterior,))
    assert point_on_boundary(PlanarPoint(5.0, 4.0), holed)


def test_point_in_polygon_hole():
    annulus = PolygonM(
        exterior=square(0, 0, 10).exterior,
        holes=(square(4, 4, 2).exterior,),
    )
    assert not point_in_polygon(PlanarPoint(5.0, 5.0), annulus)  # inside the hole
    assert point_in_polygon(PlanarPoint(5.0, 2.0), annulus)
    assert point_in_polygon(PlanarPoint(5.0, 4.0), annulus)  # hole edge counts as inside


def test_point_in_polygon_degenerate_ring():
    with pytest.raises(InvalidGeometryError):
        PolygonM(exterior=(PlanarPoint(0, 0), PlanarPoint(1, 0)))
    with pytest.raises(InvalidGeometryError):
        PolygonM(exterior=square().exterior, holes=((PlanarPoint(0, 0),),))


def test_point_in_polygon_matches_oracles_on_random_convex():
    rng = np.random.default_rng(19)
    for _ in range(1000):
        ring = random_convex_ring(rng)
        poly = PolygonM(exterior=ring)
        p = PlanarPoint(rng.uniform(-160, 160), rng.uniform(-160, 160))
        got = point_in_polygon(p, poly)
        assert got == raycast_down_contains(p, ring)
        assert got == halfplane_contains(p, ring)


def test_distance_to_polygon_inside_is_zero():
    sq = square(0, 0, 10)
    assert distance_to_polygon_m(PlanarPoint(3.0, 7.0), sq) == 0.0
    assert distance_to_polygon_m(PlanarPoint(10.0, 5.0), sq) == 0.0  # boundary


def test_distance_to_polygon_outside():
    sq = square(0, 0, 10)
    assert distance_to_polygon_m(PlanarPoint(15.0, 5.0), sq) == pytest.approx(5.0)
    # 3-4-5 triangle to the nearest corner; both adjacent edges give the
    # same clamped distance
    assert distance_to_polygon_m(PlanarPoint(-3.0, -4.0), sq) == pytest.approx(5.0)


def test_distance_zero_iff_inside():
    rng = np.random.default_rng(23)
    for _ in range(500):
        poly = PolygonM(exterior=random_convex_ring(rng))
        p = PlanarPoint(rng.uniform(-160, 160), rng.uniform(-160, 160))
        d = distance_to_polygon_m(p, poly)
        assert (d == 0.0) == point_in_polygon(p, poly)


def test_centroid_area_unit_square():
    c, a = polygon_centroid_area(square())
    assert (c.x, c.y) == pytest.approx((0.5, 0.5))
    assert a == pytest.approx(1.0)


def test_centroid_area_translation():
    c, a = polygon_centroid_area(square(10.0, 0.0))
    assert (c.x, c.y) == pytest.approx((10.5, 0.5))
    assert a == pytest.approx(1.0)


def test_centroid_area_orientation_independent():
    cw = PolygonM(exterior=tuple(reversed(square().exterior)))
    c, a = polygon_centroid_area(cw)
    assert (c.x, c.y) == pytest.approx((0.5, 0.5))
    assert a == pytest.approx(1.0)


def test_centroid_area_l_shape_against_fan_oracle():
    ring = (
        PlanarPoint(0, 0),
        PlanarPoint(2, 0),
        PlanarPoint(2, 1),
        PlanarPoint(1, 1),
        PlanarPoint(1, 2),
        PlanarPoint(0, 2),
    )
    c, a = polygon_centroid_area(PolygonM(exterior=ring))
    oc, oa = fan_centroid_area(ring)
    assert a == pytest.approx(oa, rel=1e-12)
    assert (c.x, c.y) == pytest.approx((oc.x, oc.y), rel=1e-12)
    # decomposition into 2x1 and 1x1 rectangles gives (2.5/3, 2.5/3), area 3
    assert a == pytest.approx(3.0)
    assert (c.x, c.y) == pytest.approx((2.5 / 3.0, 2.5 / 3.0))


def test_centroid_area_random_convex_against_fan_oracle():
    rng = np.random.default_rng(29)
    for _ in range(200):
        ring = random_convex_ring(rng)
        c, a = polygon_centroid_area(PolygonM(exterior=ring))
        oc, oa = fan_centroid_area(ring)
        assert a == pytest.approx(oa, rel=1e-9)
        assert (c.x, c.y) == pytest.approx((oc.x, oc.y), rel=1e-9, abs=1e-9)


def test_centroid_area_subtracts_holes():
    annulus = PolygonM(
        exterior=square(0, 0, 10).exterior,
        holes=(square(4, 4, 2).exterior,),
    )
    c, a = polygon_centroid_area(annulus)
    assert a == pytest.approx(96.0)
    assert (c.x, c.y) == pytest.approx((5.0, 5.0))


def test_centroid_area_zero_area_rejected():
    flat = PolygonM(exterior=(PlanarPoint(0, 0), PlanarPoint(1, 1), PlanarPoint(2, 2)))
    with pytest.raises(InvalidGeometryError):
        polygon_centroid_area(flat)


def test_snap_to_grid_examples():
    assert snap_to_grid(PlanarPoint(0.0, 0.0), 100.0) == GridCell(0, 0, 100.0)
    assert snap_to_grid(PlanarPoint(99.99, 100.01), 100.0) == GridCell(0, 1, 100.0)
    assert snap_to_grid(PlanarPoint(-0.01, 0.0), 100.0) == GridCell(-1, 0, 100.0)


def test_snap_to_grid_idempotent_on_centers():
    rng = np.random.default_rng(31)
    for _ in range(200):
        p = PlanarPoint(rng.uniform(-5000, 5000), rng.uniform(-5000, 5000))
        cell = snap_to_grid(p, 100.0)
        assert snap_to_grid(cell.center(), 100.0) == cell


def test_snap_to_grid_rejects_bad_resolution():
    with pytest.raises(InvalidParameterError):
        snap_to_grid(PlanarPoint(0, 0), 0.0)
    with pytest.raises(InvalidParameterError):
        GridCell(0, 0, -5.0)
