from __future__ import annotations

import numpy as np
import pytest

from tsplab.geometry import Metric, MetricKind
from tsplab.instances import Instance


def make_instance(coords, kind=MetricKind.EUC2D_CONT, radius=None, id="t"):
    return Instance(
        coords=np.asarray(coords, dtype=np.float64),
        metric=Metric(kind, radius),
        id=id,
    )


@pytest.fixture
def unit_square():
    # perimeter order: each neighbor at distance 1, diagonals sqrt(2)
    return make_instance([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], id="square")


def random_instance(rng, n, kind=MetricKind.EUC2D_CONT):
    """Random instance under any coordinate metric, with sane coordinate ranges."""
    if kind == MetricKind.HAVERSINE:
        lat = rng.uniform(-np.pi / 2 * 0.95, np.pi / 2 * 0.95, size=n)
        lon = rng.uniform(-np.pi, np.pi, size=n)
        return make_instance(np.stack([lat, lon], axis=1), kind, radius=6371.0)
    if kind == MetricKind.GEO_TSPLIB:
        lat = rng.uniform(-80.0, 80.0, size=n)
        lon = rng.uniform(-179.0, 179.0, size=n)
        # keep the minutes part valid (< .60)
        coords = np.stack([lat, lon], axis=1)
        frac = coords - np.trunc(coords)
        coords = np.trunc(coords) + frac * 0.59
        return make_instance(coords, kind)
    if kind in (MetricKind.EUC2D_TSPLIB, MetricKind.ATT_TSPLIB):
        # integer-ish coordinates so rounded distances are non-trivial
        return make_instance(rng.integers(0, 1000, size=(n, 2)).astype(float), kind)
    return make_instance(rng.random((n, 2)), kind)


COORD_METRICS = [
    MetricKind.EUC2D_CONT,
    MetricKind.EUC2D_TSPLIB,
    MetricKind.ATT_CONT,
    MetricKind.ATT_TSPLIB,
    MetricKind.HAVERSINE,
    MetricKind.GEO_TSPLIB,
]


def random_explicit_instance(rng, n):
    """Random symmetric zero-diagonal EXPLICIT instance."""
    w = rng.uniform(1.0, 100.0, size=(n, n))
    w = (w + w.T) / 2.0
    np.fill_diagonal(w, 0.0)
    return Instance(coords=None, metric=Metric(MetricKind.EXPLICIT), id="explicit", explicit_matrix=w)
