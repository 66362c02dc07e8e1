"""Shared fixture builders for the test suite."""

import math

from museumflows.geometry import GeoPoint
from museumflows.sim import Museum, Zone

ANCHOR = GeoPoint(53.7919, -1.5323)


def deg_for_km(km: float) -> float:
    """Degrees of latitude spanning the given great-circle distance."""
    return math.degrees(km / 6371.0088)


def make_zone(zid, lat, lon, population=1000.0, arts_share=0.0, earnings_proxy=0.0, boundary=None):
    return Zone(
        id=zid,
        name=f"zone {zid}",
        centroid=GeoPoint(lat, lon),
        population=population,
        arts_share=arts_share,
        earnings_proxy=earnings_proxy,
        boundary=boundary,
    )


def make_museum(mid, lat, lon, floor_area_m2=1000.0, media_mentions=5.0):
    return Museum(
        id=mid,
        name=f"museum {mid}",
        location=GeoPoint(lat, lon),
        floor_area_m2=floor_area_m2,
        media_mentions=media_mentions,
    )
