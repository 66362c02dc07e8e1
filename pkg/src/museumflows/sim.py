"""Spatial interaction models over zones and museums.

Three constraint regimes share one deterrence kernel: unconstrained
(production driven by weighted population), origin-constrained (rows pinned
to observed origin totals), and doubly constrained (both margins pinned via
alternating balancing factors).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateFactorError,
    EmptyInputError,
    InvalidAttributeError,
    InvalidParameterError,
    MarginalMismatchError,
    ShapeError,
    SingularDistanceError,
    UnreachableOriginError,
)
from .geometry import EARTH_RADIUS_KM, GeoPoint, PolygonM

CONSTRAINTS = ("unconstrained", "origin", "doubly")
DETERRENCE_KINDS = ("exponential", "power")


@dataclass(frozen=True)
class Zone:
    """Origin zone with the population and demand attributes."""

    id: str
    name: str
    centroid: GeoPoint
    population: float
    arts_share: float = 0.0
    earnings_proxy: float = 0.0
    boundary: PolygonM | None = None

    def __post_init__(self):
        if not (math.isfinite(self.population) and self.population >= 0):
            raise InvalidAttributeError(f"zone {self.id}: population {self.population} must be >= 0")
        if not (math.isfinite(self.arts_share) and 0.0 <= self.arts_share <= 1.0):
            raise InvalidAttributeError(f"zone {self.id}: arts_share {self.arts_share} outside [0, 1]")
        if not (math.isfinite(self.earnings_proxy) and self.earnings_proxy >= 0):
            raise InvalidAttributeError(
                f"zone {self.id}: earnings_proxy {self.earnings_proxy} must be >= 0"
            )


@dataclass(frozen=True)
class Museum:
    """Destination with the attributes feeding attractiveness."""

    id: str
    name: str
    location: GeoPoint
    floor_area_m2: float
    media_mentions: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.floor_area_m2) and self.floor_area_m2 > 0):
            raise InvalidAttributeError(
                f"museum {self.id}: floor_area_m2 {self.floor_area_m2} must be > 0"
            )
        if not (math.isfinite(self.media_mentions) and self.media_mentions >= 0):
            raise InvalidAttributeError(
                f"museum {self.id}: media_mentions {self.media_mentions} must be >= 0"
            )


@dataclass(frozen=True)
class Deterrence:
    """Distance-decay kernel: exp(-beta*d) or d**(-beta)."""

    kind: str = "exponential"
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in DETERRENCE_KINDS:
            raise InvalidParameterError(f"deterrence kind {self.kind!r} not in {DETERRENCE_KINDS}")
        # beta = 0 is allowed for diagnostics (flat kernel), negatives are not
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise InvalidParameterError(f"deterrence beta {self.beta} must be >= 0")


@dataclass(frozen=True)
class AttractivenessSpec:
    """How museum attributes combine into destination weights W_j.

    Each factor is (attribute-name, exponent, weight). Additive mode sums
    weight * X^exponent over mean-normalized attribute vectors X;
    multiplicative mode forms the product of X^exponent and ignores the
    weights. The combined vector is divided by its own mean at the end.
    """

    factors: tuple[tuple[str, float, float], ...] = (
        ("floor_area_m2", 0.5, 0.5),
        ("media_mentions", 0.5, 0.3),
    )
    mode: str = "additive"

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(tuple(f) for f in self.factors))
        if not self.factors:
            raise InvalidParameterError("attractiveness needs at least one factor")
        for name, exponent, weight in self.factors:
            if not (math.isfinite(exponent) and math.isfinite(weight)):
                raise InvalidParameterError(f"factor {name!r}: non-finite exponent or weight")
        if self.mode not in ("additive", "multiplicative"):
            raise InvalidParameterError(f"attractiveness mode {self.mode!r} unknown")


@dataclass(frozen=True)
class ModelSpec:
    """A full model: kernel, optional weighting terms, constraint regime."""

    deterrence: Deterrence = field(default_factory=Deterrence)
    use_attractiveness: bool = False
    use_demand: bool = False
    constraint: str = "unconstrained"
    attractiveness: AttractivenessSpec = field(default_factory=AttractivenessSpec)

    def __post_init__(self):
        if self.constraint not in CONSTRAINTS:
            raise InvalidParameterError(f"constraint {self.constraint!r} not in {CONSTRAINTS}")


@dataclass(frozen=True)
class FlowMatrix:
    """Labeled non-negative origin-destination matrix."""

    origin_ids: tuple[str, ...]
    destination_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin_ids", tuple(self.origin_ids))
        object.__setattr__(self, "destination_ids", tuple(self.destination_ids))
        arr = np.array(self.values, dtype=float)
        if arr.shape != (len(self.origin_ids), len(self.destination_ids)):
            raise ShapeError(
                f"matrix shape {arr.shape} does not match "
                f"{len(self.origin_ids)} origins x {len(self.destination_ids)} destinations"
            )
        if not np.all(np.isfinite(arr)):
            raise ShapeError("matrix contains non-finite values")
        if np.any(arr < 0):
            raise ShapeError("matrix contains negative values")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def row_sums(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.values.sum(axis=0)

    def total(self) -> float:
        return float(self.values.sum())

    def flat(self) -> np.ndarray:
        """Row-major 1-D copy, the layout used for fit statistics."""
        return self.values.ravel().copy()

    def reindex(self, origin_ids, destination_ids) -> "FlowMatrix":
        """Reorder rows/columns to the given label order.

        Label sets must match exactly: a silent fill would hide aggregation
        bugs upstream.
        """
        origin_ids = tuple(origin_ids)
        destination_ids = tuple(destination_ids)
        if set(origin_ids) != set(self.origin_ids) or len(origin_ids) != len(self.origin_ids):
            missing = sorted(set(origin_ids) ^ set(self.origin_ids))
            raise ShapeError(f"origin ids do not match; differing ids: {missing}")
        if set(destination_ids) != set(self.destination_ids) or len(destination_ids) != len(
            self.destination_ids
        ):
            missing = sorted(set(destination_ids) ^ set(self.destination_ids))
            raise ShapeError(f"destination ids do not match; differing ids: {missing}")
        ri = [self.origin_ids.index(o) for o in origin_ids]
        ci = [self.destination_ids.index(d) for d in destination_ids]
        return FlowMatrix(origin_ids, destination_ids, self.values[np.ix_(ri, ci)])


def distance_matrix(zones, museums) -> np.ndarray:
    """Great-circle distances in km, zones on rows, museums on columns."""
    if not zones or not museums:
        raise EmptyInputError("distance matrix needs at least one zone and one museum")
    lat_z = np.radians([z.centroid.lat for z in zones])[:, None]
    lon_z = np.radians([z.centroid.lon for z in zones])[:, None]
    lat_m = np.radians([m.location.lat for m in museums])[None, :]
    lon_m = np.radians([m.location.lon for m in museums])[None, :]
    h = (
        np.sin((lat_m - lat_z) / 2.0) ** 2
        + np.cos(lat_z) * np.cos(lat_m) * np.sin((lon_m - lon_z) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def deterrence_value(d: float, det: Deterrence) -> float:
    """Kernel value at a single distance in km."""
    if not (math.isfinite(d) and d >= 0):
        raise InvalidParameterError(f"distance {d} must be finite and >= 0")
    if det.kind == "power" and d == 0.0:
        raise SingularDistanceError("power deterrence undefined at zero distance")
    if det.kind == "exponential":
        return math.exp(-det.beta * d)
    return d ** (-det.beta)


def deterrence_matrix(dmat: np.ndarray, det: Deterrence) -> np.ndarray:
    if det.kind == "power" and np.any(dmat == 0.0):
        raise SingularDistanceError("power deterrence undefined at zero distance")
    if det.kind == "exponential":
        return np.exp(-det.beta * dmat)
    return dmat ** (-det.beta)


def _factor_vector(museums, name: str) -> np.ndarray:
    try:
        raw = np.array([float(getattr(m, name)) for m in museums])
    except AttributeError:
        raise InvalidParameterError(f"museums have no attribute {name!r}") from None
    if np.any(raw < 0) or not np.all(np.isfinite(raw)):
        raise InvalidAttributeError(f"factor {name!r} has negative or non-finite values")
    return raw


def attractiveness_weights(museums, spec: AttractivenessSpec | None = None) -> np.ndarray:
    """Destination weights W_j with mean 1.

    Every raw attribute vector is divided by its mean before the exponent is
    applied, and the combined vector is divided by its mean again.
    """
    if not museums:
        raise EmptyInputError("attractiveness needs at least one museum")
    if spec is None:
        spec = AttractivenessSpec()
    parts = []
    for name, exponent, weight in spec.factors:
        raw = _factor_vector(museums, name)
        mean = raw.mean()
        if mean == 0.0:
            raise DegenerateFactorError(f"factor {name!r} is all zeros; cannot mean-normalize")
        parts.append((raw / mean, exponent, weight))
    if spec.mode == "additive":
        w = np.zeros(len(museums))
        for normed, exponent, weight in parts:
            w += weight * normed**exponent
    else:
        w = np.ones(len(museums))
        for normed, exponent, _ in parts:
            w *= normed**exponent
    if not np.all(np.isfinite(w)):
        raise DegenerateFactorError("attractiveness produced non-finite weights")
    mean = w.mean()
    if mean <= 0.0:
        raise DegenerateFactorError("attractiveness weights sum to zero; cannot normalize")
    return w / mean


def demand_weights(zones) -> np.ndarray:
    """Demand weights Inc_i = 0.1 + arts_share + 0.03 * earnings_proxy, mean 1."""
    if not zones:
        raise EmptyInputError("demand weights need at least one zone")
    raw = np.array([0.1 + z.arts_share + 0.03 * z.earnings_proxy for z in zones])
    return raw / raw.mean()


def unconstrained_flows(zones, museums, spec: ModelSpec) -> FlowMatrix:
    """T_ij = Inc_i * P_i * W_j * f(d_ij)."""
    if spec.constraint != "unconstrained":
        raise InvalidParameterError(f"expected unconstrained spec, got {spec.constraint!r}")
    dmat = distance_matrix(zones, museums)
    f = deterrence_matrix(dmat, spec.deterrence)
    pop = np.array([z.population for z in zones])
    inc = demand_weights(zones) if spec.use_demand else np.ones(len(zones))
    w = attractiveness_weights(museums, spec.attractiveness) if spec.use_attractiveness else np.ones(len(museums))
    values = (inc * pop)[:, None] * w[None, :] * f
    return FlowMatrix([z.id for z in zones], [m.id for m in museums], values)


def origin_constrained_flows(O, museums, dmat, spec: ModelSpec, origin_ids=None) -> FlowMatrix:
    """Rows allocated over destinations by W_j * f(d_ij), pinned to O_i."""
    O = np.asarray(O, dtype=float)
    dmat = np.asarray(dmat, dtype=float)
    if O.ndim != 1 or dmat.shape != (O.size, len(museums)):
        raise ShapeError(
            f"origin totals ({O.size}) and distance matrix {dmat.shape} "
            f"do not line up with {len(museums)} museums"
        )
    if np.any(O < 0) or not np.all(np.isfinite(O)):
        raise InvalidAttributeError("origin totals must be finite and >= 0")
    w = attractiveness_weights(museums, spec.attractiveness) if spec.use_attractiveness else np.ones(len(museums))
    f = deterrence_matrix(dmat, spec.deterrence)
    scores = w[None, :] * f
    denom = scores.sum(axis=1)
    dead = (denom == 0.0) & (O > 0)
    if np.any(dead):
        raise UnreachableOriginError(
            f"origins {np.nonzero(dead)[0].tolist()} have zero total deterrence but positive flow"
        )
    share = np.divide(scores, denom[:, None], out=np.zeros_like(scores), where=denom[:, None] > 0)
    if origin_ids is None:
        origin_ids = [f"o{i}" for i in range(O.size)]
    return FlowMatrix(origin_ids, [m.id for m in museums], O[:, None] * share)


def doubly_constrained_flows(
    O,
    D,
    dmat,
    det: Deterrence,
    tol: float = 1e-8,
    max_iter: int = 1000,
    origin_ids=None,
    destination_ids=None,
) -> FlowMatrix:
    """T_ij = A_i O_i B_j D_j f(d_ij) with balancing factors A, B.

    Factors start at 1 and alternate B-then-A sweeps until the largest
    relative change drops below tol. The A update runs last, which makes row
    sums exact; column sums match D to within the convergence tolerance.
    """
    O = np.asarray(O, dtype=float)
    D = np.asarray(D, dtype=float)
    dmat = np.asarray(dmat, dtype=float)
    if O.ndim != 1 or D.ndim != 1 or dmat.shape != (O.size, D.size):
        raise ShapeError(f"marginals ({O.size}, {D.size}) do not match matrix {dmat.shape}")
    if np.any(O < 0) or np.any(D < 0) or not (np.all(np.isfinite(O)) and np.all(np.isfinite(D))):
        raise InvalidAttributeError("marginal totals must be finite and >= 0")
    if not (math.isfinite(tol) and tol > 0):
        raise InvalidParameterError(f"tol {tol} must be > 0")
    total = O.sum()
    if abs(total - D.sum()) > 1e-9 * max(total, D.sum(), 1.0):
        raise MarginalMismatchError(f"origin total {total} != destination total {D.sum()}")

    f = deterrence_matrix(dmat, det)
    dead_rows = ((f * D[None, :]).sum(axis=1) == 0.0) & (O > 0)
    if np.any(dead_rows):
        raise UnreachableOriginError(
            f"origins {np.nonzero(dead_rows)[0].tolist()} cannot reach any positive destination"
        )

    A = np.ones(O.size)
    B = np.ones(D.size)
    residual = math.inf
    for _ in range(max_iter):
        col = (f * (A * O)[:, None]).sum(axis=0)
        B_new = np.divide(1.0, col, out=np.zeros_like(col), where=col > 0)
        row = (f * (B_new * D)[None, :]).sum(axis=1)
        A_new = np.divide(1.0, row, out=np.zeros_like(row), where=row > 0)
        with np.errstate(invalid="ignore"):
            residual = max(
                float(np.max(np.abs(A_new - A) / np.maximum(np.abs(A_new), 1e-300))),
                float(np.max(np.abs(B_new - B) / np.maximum(np.abs(B_new), 1e-300))),
            )
        A, B = A_new, B_new
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"balancing factors did not converge in {max_iter} sweeps "
            f"(last residual {residual:.3e})",
            residual=residual,
        )

    values = (A * O)[:, None] * (B * D)[None, :] * f
    if origin_ids is None:
        origin_ids = [f"o{i}" for i in range(O.size)]
    if destination_ids is None:
        destination_ids = [f"d{j}" for j in range(D.size)]
    return FlowMatrix(origin_ids, destination_ids, values)


def model_matrix(zones, museums, spec: ModelSpec, observed: FlowMatrix | None = None) -> FlowMatrix:
    """Evaluate a ModelSpec over zones and museums.

    Constrained regimes take their marginal totals from ``observed``, which
    is reordered to the zone/museum label order first.
    """
    if spec.constraint == "unconstrained":
        return unconstrained_flows(zones, museums, spec)
    if observed is None:
        raise InvalidParameterError(f"{spec.constraint!r} constraint needs an observed matrix")
    zone_ids = [z.id for z in zones]
    museum_ids = [m.id for m in museums]
    obs = observed.reindex(zone_ids, museum_ids)
    dmat = distance_matrix(zones, museums)
    if spec.constraint == "origin":
        return origin_constrained_flows(obs.row_sums(), museums, dmat, spec, origin_ids=zone_ids)
    return doubly_constrained_flows(
        obs.row_sums(),
        obs.col_sums(),
        dmat,
        spec.deterrence,
        origin_ids=zone_ids,
        destination_ids=museum_ids,
    )
