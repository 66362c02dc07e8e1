"""Readers and writers for the on-disk formats.

Tweets travel as NDJSON (one object per line), geography as GeoJSON
FeatureCollections with [lon, lat] coordinates, matrices as CSV with
museum ids across the first row and zone ids down the first column.
Floats are written with repr so a write/read cycle is lossless. All
writers emit deterministic bytes: sorted keys, fixed field order, no
timestamps of their own.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from datetime import datetime, timezone

from .errors import DataFormatError, FlowModelError, InvalidGeometryError
from .geometry import GeoPoint, PolygonM, polygon_centroid_area, project, unproject
from .pipeline import PipelineReport, StageCount, TaggedFeature, Tweet
from .sim import FlowMatrix, Museum, Zone
from .calibration import SweepResult, spec_name


# --- tweets (NDJSON) ---

_TWEET_FIELDS = ("id", "user_id", "timestamp", "lat", "lon", "text")


def _parse_timestamp(raw, path, line_no) -> datetime:
    if not isinstance(raw, str):
        raise DataFormatError(f"{path}:{line_no}: timestamp must be an ISO-8601 string")
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError as exc:
        raise DataFormatError(f"{path}:{line_no}: bad timestamp {raw!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp


def read_tweets(path) -> list[Tweet]:
    tweets: list[Tweet] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise DataFormatError(f"{path}:{line_no}: expected a JSON object")
            missing = [k for k in _TWEET_FIELDS if k not in obj]
            if missing:
                raise DataFormatError(f"{path}:{line_no}: missing fields {', '.join(missing)}")
            try:
                tweet = Tweet(
                    id=str(obj["id"]),
                    user_id=str(obj["user_id"]),
                    timestamp=_parse_timestamp(obj["timestamp"], path, line_no),
                    location=GeoPoint(float(obj["lat"]), float(obj["lon"])),
                    text=str(obj["text"]),
                    source=None if obj.get("source") is None else str(obj["source"]),
                )
            except (TypeError, ValueError) as exc:
                raise DataFormatError(f"{path}:{line_no}: {exc}") from exc
            if tweet.id in seen:
                raise DataFormatError(f"{path}:{line_no}: duplicate tweet id {tweet.id!r}")
            seen.add(tweet.id)
            tweets.append(tweet)
    return tweets


def write_tweets(tweets, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tweets:
            obj = {
                "id": t.id,
                "user_id": t.user_id,
                "timestamp": t.timestamp.isoformat().replace("+00:00", "Z"),
                "lat": t.location.lat,
                "lon": t.location.lon,
                "text": t.text,
            }
            if t.source is not None:
                obj["source"] = t.source
            fh.write(json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n")


# --- GeoJSON plumbing ---


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc


def _feature_list(doc, path):
    if (
        not isinstance(doc, dict)
        or doc.get("type") != "FeatureCollection"
        or not isinstance(doc.get("features"), list)
    ):
        raise DataFormatError(f"{path}: expected a GeoJSON FeatureCollection")
    return doc["features"]


def _feature_parts(feat, path, idx):
    if not isinstance(feat, dict) or feat.get("type") != "Feature":
        raise DataFormatError(f"{path}: feature {idx} is not a GeoJSON Feature")
    props = feat.get("properties") or {}
    geom = feat.get("geometry")
    if not isinstance(props, dict) or not isinstance(geom, dict):
        raise DataFormatError(f"{path}: feature {idx} lacks properties or geometry")
    return props, geom


def _geo_point(geom, path, label) -> GeoPoint:
    if geom.get("type") != "Point":
        raise DataFormatError(f"{path}: {label}: expected Point geometry, got {geom.get('type')!r}")
    coords = geom.get("coordinates")
    try:
        lon, lat = float(coords[0]), float(coords[1])
    except (TypeError, ValueError, IndexError) as exc:
        raise DataFormatError(f"{path}: {label}: bad Point coordinates") from exc
    return GeoPoint(lat, lon)


def _geo_rings(geom, path, label):
    """Polygon geometry as tuples of GeoPoint, closing vertices dropped."""
    if geom.get("type") != "Polygon":
        raise DataFormatError(f"{path}: {label}: expected Polygon geometry, got {geom.get('type')!r}")
    raw_rings = geom.get("coordinates")
    if not isinstance(raw_rings, list) or not raw_rings:
        raise DataFormatError(f"{path}: {label}: Polygon needs at least one ring")
    rings = []
    for ring in raw_rings:
        try:
            pts = [GeoPoint(float(pos[1]), float(pos[0])) for pos in ring]
        except (TypeError, ValueError, IndexError, FlowModelError) as exc:
            raise DataFormatError(f"{path}: {label}: bad ring coordinates: {exc}") from exc
        if len(pts) >= 2 and pts[0] == pts[-1]:
            pts = pts[:-1]
        if len(pts) < 3:
            raise DataFormatError(f"{path}: {label}: ring has fewer than 3 distinct vertices")
        rings.append(tuple(pts))
    return tuple(rings)


def _require(props, keys, path, label):
    missing = [k for k in keys if k not in props]
    if missing:
        raise DataFormatError(f"{path}: {label}: missing properties {', '.join(missing)}")


def _planar_polygon(rings, ref) -> PolygonM:
    projected = tuple(tuple(project(p, ref) for p in ring) for ring in rings)
    return PolygonM(exterior=projected[0], holes=projected[1:])


# --- zones ---


def read_zones(path):
    """Parse zone polygons; returns (zones, ref).

    The shared planar frame is anchored at the corpus-independent corner
    (min latitude, min longitude) over every zone vertex, so any file
    describing the same zones yields the same frame.
    """
    features = _feature_list(_load_json(path), path)
    if not features:
        raise DataFormatError(f"{path}: no zone features")
    parsed = []
    for idx, feat in enumerate(features):
        props, geom = _feature_parts(feat, path, idx)
        label = f"zone feature {props.get('id', idx)!r}"
        _require(props, ("id", "name", "population"), path, label)
        rings = _geo_rings(geom, path, label)
        try:
            parsed.append(
                (
                    str(props["id"]),
                    str(props["name"]),
                    float(props["population"]),
                    float(props.get("arts_share", 0.0)),
                    float(props.get("earnings_proxy", 0.0)),
                    rings,
                )
            )
        except (TypeError, ValueError) as exc:
            raise DataFormatError(f"{path}: {label}: {exc}") from exc
    ref = GeoPoint(
        min(p.lat for *_, rings in parsed for ring in rings for p in ring),
        min(p.lon for *_, rings in parsed for ring in rings for p in ring),
    )
    zones = []
    for zid, name, population, arts, earnings, rings in parsed:
        boundary = _planar_polygon(rings, ref)
        centroid, _ = polygon_centroid_area(boundary)
        try:
            zones.append(
                Zone(
                    id=zid,
                    name=name,
                    centroid=unproject(centroid, ref),
                    population=population,
                    arts_share=arts,
                    earnings_proxy=earnings,
                    boundary=boundary,
                )
            )
        except FlowModelError as exc:
            raise DataFormatError(f"{path}: zone feature {zid!r}: {exc}") from exc
    return zones, ref


def write_zones(zones, ref, path) -> None:
    features = []
    for z in zones:
        if z.boundary is None:
            raise InvalidGeometryError(f"zone {z.id!r} has no boundary polygon to write")
        coords = []
        for ring in z.boundary.rings():
            geo = [unproject(q, ref) for q in ring]
            coords.append([[p.lon, p.lat] for p in geo] + [[geo[0].lon, geo[0].lat]])
        features.append(
            {
                "type": "Feature",
                "properties": {
                    "id": z.id,
                    "name": z.name,
                    "population": z.population,
                    "arts_share": z.arts_share,
                    "earnings_proxy": z.earnings_proxy,
                },
                "geometry": {"type": "Polygon", "coordinates": coords},
            }
        )
    _dump_json({"type": "FeatureCollection", "features": features}, path)


# --- museums and footprints ---


def read_museums(path) -> list[Museum]:
    features = _feature_list(_load_json(path), path)
    museums = []
    for idx, feat in enumerate(features):
        props, geom = _feature_parts(feat, path, idx)
        label = f"museum feature {props.get('id', idx)!r}"
        _require(props, ("id", "name", "floor_area_m2"), path, label)
        try:
            museums.append(
                Museum(
                    id=str(props["id"]),
                    name=str(props["name"]),
                    location=_geo_point(geom, path, label),
                    floor_area_m2=float(props["floor_area_m2"]),
                    media_mentions=float(props.get("media_mentions", 0.0)),
                )
            )
        except (TypeError, ValueError) as exc:
            raise DataFormatError(f"{path}: {label}: {exc}") from exc
    return museums


def write_museums(museums, path) -> None:
    features = [
        {
            "type": "Feature",
            "properties": {
                "id": m.id,
                "name": m.name,
                "floor_area_m2": m.floor_area_m2,
                "media_mentions": m.media_mentions,
            },
            "geometry": {"type": "Point", "coordinates": [m.location.lon, m.location.lat]},
        }
        for m in museums
    ]
    _dump_json({"type": "FeatureCollection", "features": features}, path)


def read_footprints(path, museums, ref):
    """Polygon features keyed by `museum_id`, projected into the shared frame."""
    by_id = {m.id: m for m in museums}
    features = _feature_list(_load_json(path), path)
    footprints = []
    for idx, feat in enumerate(features):
        props, geom = _feature_parts(feat, path, idx)
        label = f"footprint feature {idx}"
        _require(props, ("museum_id",), path, label)
        mid = str(props["museum_id"])
        if mid not in by_id:
            raise DataFormatError(f"{path}: {label}: unknown museum id {mid!r}")
        rings = _geo_rings(geom, path, label)
        footprints.append((by_id[mid], _planar_polygon(rings, ref)))
    return footprints


def write_footprints(footprints, ref, path) -> None:
    features = []
    for museum, poly in footprints:
        coords = []
        for ring in poly.rings():
            geo = [unproject(q, ref) for q in ring]
            coords.append([[p.lon, p.lat] for p in geo] + [[geo[0].lon, geo[0].lat]])
        features.append(
            {
                "type": "Feature",
                "properties": {"museum_id": museum.id},
                "geometry": {"type": "Polygon", "coordinates": coords},
            }
        )
    _dump_json({"type": "FeatureCollection", "features": features}, path)


def read_tagged_features(path) -> list[TaggedFeature]:
    """Raw map features (points or polygons) with their property tags."""
    features = _feature_list(_load_json(path), path)
    out = []
    for idx, feat in enumerate(features):
        props, geom = _feature_parts(feat, path, idx)
        label = f"feature {props.get('id', idx)!r}"
        kind = geom.get("type")
        if kind == "Point":
            out.append(TaggedFeature(tags=props, point=_geo_point(geom, path, label)))
        elif kind == "Polygon":
            out.append(TaggedFeature(tags=props, rings=_geo_rings(geom, path, label)))
        else:
            raise DataFormatError(f"{path}: {label}: unsupported geometry type {kind!r}")
    return out


# --- matrices (CSV) ---


def write_matrix_csv(matrix: FlowMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["zone_id", *matrix.destination_ids])
        for zid, row in zip(matrix.origin_ids, matrix.values):
            writer.writerow([zid, *[repr(float(v)) for v in row]])


def read_matrix_csv(path) -> FlowMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "zone_id":
        raise DataFormatError(f"{path}:1: expected a header row starting with 'zone_id'")
    destinations = tuple(rows[0][1:])
    if not destinations:
        raise DataFormatError(f"{path}:1: no museum columns")
    origins = []
    values = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(destinations) + 1:
            raise DataFormatError(
                f"{path}:{line_no}: expected {len(destinations) + 1} cells, got {len(row)}"
            )
        origins.append(row[0])
        try:
            values.append([float(cell) for cell in row[1:]])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{line_no}: non-numeric cell: {exc}") from exc
    if not origins:
        raise DataFormatError(f"{path}: no zone rows")
    try:
        return FlowMatrix(tuple(origins), destinations, values)
    except FlowModelError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


# --- sweep results ---


def write_sweep_csv(sweep: SweepResult, path) -> None:
    name = spec_name(sweep.spec)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "r", "rms", "spec"])
        for beta, r, rms in zip(sweep.betas, sweep.r_values, sweep.rms_values):
            writer.writerow([repr(beta), repr(r), repr(rms), name])


def write_sweep_json(sweep: SweepResult, path) -> None:
    def clean(x):
        return None if math.isnan(x) else x

    payload = {
        "spec": spec_name(sweep.spec),
        "best_beta": sweep.best_beta,
        "best_r": sweep.best_r,
        "best_rms": sweep.best_rms,
        "points": [
            {"beta": b, "r": clean(r), "rms": rms}
            for b, r, rms in zip(sweep.betas, sweep.r_values, sweep.rms_values)
        ],
    }
    _dump_json(payload, path)


# --- pipeline reports ---


def write_report_json(report: PipelineReport, path) -> None:
    _dump_json({"stages": [asdict(s) for s in report.stages]}, path)


def read_report_json(path) -> PipelineReport:
    doc = _load_json(path)
    stages = doc.get("stages") if isinstance(doc, dict) else None
    if not isinstance(stages, list):
        raise DataFormatError(f"{path}: expected an object with a 'stages' list")
    parsed = []
    for idx, entry in enumerate(stages):
        try:
            parsed.append(
                StageCount(
                    stage=str(entry["stage"]),
                    tweets_in=int(entry["tweets_in"]),
                    tweets_out=int(entry["tweets_out"]),
                    users_remaining=int(entry["users_remaining"]),
                )
            )
        except (TypeError, KeyError, ValueError) as exc:
            raise DataFormatError(f"{path}: stage entry {idx}: {exc}") from exc
    return PipelineReport(tuple(parsed))


def format_report(report: PipelineReport) -> str:
    """Fixed-width stage table for terminal display."""
    header = f"{'stage':<16} {'in':>8} {'out':>8} {'users':>8} {'kept':>7}"
    lines = [header, "-" * len(header)]
    for s in report.stages:
        kept = f"{100.0 * s.tweets_out / s.tweets_in:.1f}%" if s.tweets_in else "-"
        lines.append(
            f"{s.stage:<16} {s.tweets_in:>8} {s.tweets_out:>8} {s.users_remaining:>8} {kept:>7}"
        )
    return "\n".join(lines)


# --- flow map ---


def write_flow_lines(matrix: FlowMatrix, zones, museums, path) -> None:
    """One straight LineString per nonzero cell, zone centroid to museum."""
    zone_by_id = {z.id: z for z in zones}
    museum_by_id = {m.id: m for m in museums}
    features = []
    for i, zid in enumerate(matrix.origin_ids):
        if zid not in zone_by_id:
            raise DataFormatError(f"flow matrix references unknown zone id {zid!r}")
        for j, mid in enumerate(matrix.destination_ids):
            if mid not in museum_by_id:
                raise DataFormatError(f"flow matrix references unknown museum id {mid!r}")
            count = float(matrix.values[i, j])
            if count <= 0.0:
                continue
            z, m = zone_by_id[zid], museum_by_id[mid]
            features.append(
                {
                    "type": "Feature",
                    "properties": {
                        "origin": zid,
                        "destination": mid,
                        "count": int(count) if count.is_integer() else count,
                    },
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [
                            [z.centroid.lon, z.centroid.lat],
                            [m.location.lon, m.location.lat],
                        ],
                    },
                }
            )
    _dump_json({"type": "FeatureCollection", "features": features}, path)


# --- user homes ---


def write_homes_csv(homes, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "cell_ix", "cell_iy", "tweet_count_at_cell", "zone_id"])
        for h in homes:
            writer.writerow(
                [h.user_id, h.cell.ix, h.cell.iy, h.tweet_count_at_cell, h.zone_id or ""]
            )


def _dump_json(payload, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False)
        fh.write("\n")


def write_json(payload, path) -> None:
    """Serialize any JSON-safe payload with deterministic bytes."""
    _dump_json(payload, path)
