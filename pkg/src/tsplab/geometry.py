"""Distance metrics, distance matrices, and tour-length evaluation.

Two families of metrics coexist:

* continuous forms (``euc2d``, ``att`` unrounded, ``haversine``) used for
  generated data and model training, and
* TSPLIB integer conventions (``euc2d_tsplib``, ``att`` rounded,
  ``geo_tsplib``) that reproduce published benchmark optima bit-exactly.

All distances are computed in 64-bit floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InputError, ValidityError

# Sphere radius (km) fixed by the TSPLIB GEO convention.
GEO_SPHERE_RADIUS = 6378.388

Point = Sequence[float]


class MetricKind(str, Enum):
    EUC2D_CONT = "EUC2D_CONT"
    EUC2D_TSPLIB = "EUC2D_TSPLIB"
    ATT_CONT = "ATT_CONT"
    ATT_TSPLIB = "ATT_TSPLIB"
    HAVERSINE = "HAVERSINE"
    GEO_TSPLIB = "GEO_TSPLIB"
    EXPLICIT = "EXPLICIT"


@dataclass(frozen=True)
class Metric:
    """A distance convention; ``radius`` is used by HAVERSINE only."""

    kind: MetricKind
    radius: float | None = None

    def __post_init__(self):
        if self.kind == MetricKind.HAVERSINE:
            if self.radius is None or self.radius <= 0:
                raise InputError("HAVERSINE metric requires a positive radius")


@dataclass(frozen=True)
class DistanceMatrix:
    """Immutable pairwise distances under one metric convention."""

    n: int
    entries: np.ndarray  # (n, n) float64
    metric: Metric

    def __post_init__(self):
        if self.entries.shape != (self.n, self.n):
            raise InputError(f"matrix shape {self.entries.shape} != ({self.n}, {self.n})")
        self.entries.setflags(write=False)


@dataclass(frozen=True)
class Tour:
    """A permutation of city indices 0..n-1, interpreted cyclically."""

    order: tuple[int, ...]

    def __init__(self, order):
        object.__setattr__(self, "order", tuple(int(i) for i in order))

    def __len__(self):
        return len(self.order)

    def validate(self, n: int) -> None:
        if len(self.order) != n or sorted(self.order) != list(range(n)):
            raise ValidityError(f"order is not a permutation of 0..{n - 1}")

    def canonical(self) -> "Tour":
        """Unique representative of the rotation/reflection class.

        City 0 comes first; the direction is chosen so the second element is
        smaller than the last. Idempotent.
        """
        order = list(self.order)
        self.validate(len(order))
        k = order.index(0)
        order = order[k:] + order[:k]
        if len(order) > 2 and order[1] > order[-1]:
            order = [0] + order[:0:-1]
        return Tour(order)


def nint(x: float) -> int:
    # TSPLIB rounding: floor(x + 0.5), not banker's rounding.
    return int(math.floor(x + 0.5))


def _check_dims(a: Point, b: Point, d: int | None = None) -> None:
    if len(a) != len(b):
        raise InputError(f"dimension mismatch: {len(a)} vs {len(b)}")
    if d is not None and len(a) != d:
        raise InputError(f"expected {d}-dimensional points, got {len(a)}")


def euc2d(a: Point, b: Point) -> float:
    """Euclidean distance; works for any (equal) dimension."""
    _check_dims(a, b)
    return math.sqrt(sum((ai - bi) ** 2 for ai, bi in zip(a, b)))


def euc2d_tsplib(a: Point, b: Point) -> int:
    """Euclidean distance rounded to nearest integer (TSPLIB EUC_2D)."""
    return nint(euc2d(a, b))


def att(a: Point, b: Point, rounded: bool = False) -> float | int:
    """Pseudo-Euclidean distance: Euclidean over sqrt(10).

    The rounded form applies the TSPLIB ATT rule: round to nearest and bump
    up by one when rounding went below the true value.
    """
    _check_dims(a, b, 2)
    r = math.sqrt(((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) / 10.0)
    if not rounded:
        return r
    t = nint(r)
    return t + 1 if t < r else t


def haversine(a: Point, b: Point, radius: float) -> float:
    """Great-circle distance between (lat, lon) points given in radians."""
    _check_dims(a, b, 2)
    for p in (a, b):
        if not -math.pi / 2 <= p[0] <= math.pi / 2:
            raise InputError(f"latitude {p[0]} outside [-pi/2, pi/2]")
    if radius <= 0:
        raise InputError("radius must be positive")
    h = (
        math.sin((b[0] - a[0]) / 2.0) ** 2
        + math.cos(a[0]) * math.cos(b[0]) * math.sin((b[1] - a[1]) / 2.0) ** 2
    )
    h = min(1.0, h)
    return radius * 2.0 * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def geo_radians(x: float) -> float:
    """Convert a TSPLIB DDD.MM coordinate to radians.

    The integer part (truncated toward zero) is degrees, the fraction is
    minutes. Truncation, not rounding, reproduces the distributed optimal
    tour values of the geographic benchmark instances.
    """
    if not math.isfinite(x):
        raise InputError(f"malformed DDD.MM coordinate: {x}")
    deg = math.trunc(x)
    minutes = x - deg
    return math.pi * (deg + 5.0 * minutes / 3.0) / 180.0


def geo_tsplib(a: Point, b: Point) -> int:
    """TSPLIB GEO distance: spherical distance on a 6378.388 km sphere,
    truncated after adding 1.0. Points are (lat, lon) in DDD.MM format."""
    _check_dims(a, b, 2)
    lat_a, lon_a = geo_radians(a[0]), geo_radians(a[1])
    lat_b, lon_b = geo_radians(b[0]), geo_radians(b[1])
    q1 = math.cos(lon_a - lon_b)
    q2 = math.cos(lat_a - lat_b)
    q3 = math.cos(lat_a + lat_b)
    arg = 0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)
    arg = max(-1.0, min(1.0, arg))
    return int(GEO_SPHERE_RADIUS * math.acos(arg) + 1.0)


# ---------------------------------------------------------------------------
# Vectorized matrix construction


def _euc2d_matrix(xy: np.ndarray) -> np.ndarray:
    diff = xy[:, None, :] - xy[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def _att_matrix(xy: np.ndarray, rounded: bool) -> np.ndarray:
    diff = xy[:, None, :] - xy[None, :, :]
    r = np.sqrt(np.sum(diff * diff, axis=2) / 10.0)
    if not rounded:
        return r
    t = np.floor(r + 0.5)
    return np.where(t < r, t + 1.0, t)


def _haversine_matrix(latlon: np.ndarray, radius: float) -> np.ndarray:
    lat, lon = latlon[:, 0], latlon[:, 1]
    if np.any(np.abs(lat) > math.pi / 2):
        raise InputError("latitude outside [-pi/2, pi/2]")
    dlat = lat[:, None] - lat[None, :]
    dlon = lon[:, None] - lon[None, :]
    h = np.sin(dlat / 2.0) ** 2 + np.cos(lat)[:, None] * np.cos(lat)[None, :] * np.sin(dlon / 2.0) ** 2
    h = np.clip(h, 0.0, 1.0)
    return radius * 2.0 * np.arctan2(np.sqrt(h), np.sqrt(1.0 - h))


def _geo_matrix(ddmm: np.ndarray) -> np.ndarray:
    deg = np.trunc(ddmm)
    rad = math.pi * (deg + 5.0 * (ddmm - deg) / 3.0) / 180.0
    lat, lon = rad[:, 0], rad[:, 1]
    q1 = np.cos(lon[:, None] - lon[None, :])
    q2 = np.cos(lat[:, None] - lat[None, :])
    q3 = np.cos(lat[:, None] + lat[None, :])
    arg = np.clip(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3), -1.0, 1.0)
    return np.trunc(GEO_SPHERE_RADIUS * np.arccos(arg) + 1.0)


def build_matrix(instance) -> DistanceMatrix:
    """Distance matrix for an instance under its metric; diagonal forced to 0.

    EXPLICIT instances carry their matrix from the parser and are rejected
    here (see ``matrix_for``).
    """
    metric = instance.metric
    if metric.kind == MetricKind.EXPLICIT:
        raise InputError("EXPLICIT metric has no coordinate formula; use matrix_for()")
    xy = np.asarray(instance.coords, dtype=np.float64)
    if not np.all(np.isfinite(xy)):
        raise InputError("coordinates must be finite")
    if metric.kind == MetricKind.EUC2D_CONT:
        m = _euc2d_matrix(xy)
    elif metric.kind == MetricKind.EUC2D_TSPLIB:
        m = np.floor(_euc2d_matrix(xy) + 0.5)
    elif metric.kind == MetricKind.ATT_CONT:
        m = _att_matrix(xy, rounded=False)
    elif metric.kind == MetricKind.ATT_TSPLIB:
        m = _att_matrix(xy, rounded=True)
    elif metric.kind == MetricKind.HAVERSINE:
        m = _haversine_matrix(xy, metric.radius)
    elif metric.kind == MetricKind.GEO_TSPLIB:
        m = _geo_matrix(xy)
    else:  # pragma: no cover
        raise InputError(f"unsupported metric kind: {metric.kind}")
    np.fill_diagonal(m, 0.0)
    return DistanceMatrix(n=len(xy), entries=m, metric=metric)


def matrix_for(instance) -> DistanceMatrix:
    """Like ``build_matrix`` but serves parser-provided EXPLICIT matrices."""
    if instance.metric.kind == MetricKind.EXPLICIT:
        if instance.explicit_matrix is None:
            raise ValidityError("EXPLICIT instance without an attached matrix")
        return DistanceMatrix(
            n=len(instance.explicit_matrix),
            entries=np.asarray(instance.explicit_matrix, dtype=np.float64),
            metric=instance.metric,
        )
    return build_matrix(instance)


def tour_length(m: DistanceMatrix, t: Tour) -> float:
    """Total cyclic travel distance of the tour under the matrix."""
    t.validate(m.n)
    order = np.asarray(t.order, dtype=np.intp)
    return float(np.sum(m.entries[order, np.roll(order, -1)]))
