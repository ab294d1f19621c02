"""Instance generation, oracle labeling, dataset serialization, and the
tour-length hardness statistic.

Generated datasets are reproducible across machines: points come from the
Philox 4x64 counter-based generator keyed by the seed, emitted
instance-major, point-major, x before y.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import exact, heuristics
from .errors import ConfigError, DegenerateAreaError, InputError, ParseError, SizeError
from .geometry import DistanceMatrix, Metric, MetricKind, Tour, matrix_for, tour_length

# Phase-transition constant of the tour-length statistic; instances whose
# indicator lands near it are the hard ones.
HARDNESS_PHASE_TRANSITION = 0.75

ORACLES = ("BRUTE", "HELD_KARP", "HEURISTIC_BEST", "EXTERNAL")


@dataclass
class Instance:
    """A set of cities plus the metric they live under.

    ``coords`` is None only for EXPLICIT instances, which carry their parsed
    distance matrix instead. ``model_coords`` holds the unit-square inputs
    fed to the neural model (generated data is already in range; parsed
    benchmark coordinates are min-max normalized by the loader).
    """

    coords: np.ndarray | None
    metric: Metric
    id: str
    explicit_matrix: np.ndarray | None = None
    model_coords: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.coords is None and self.explicit_matrix is None:
            raise InputError("instance needs coordinates or an explicit matrix")
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=np.float64)
            if not np.all(np.isfinite(self.coords)):
                raise InputError("coordinates must be finite")
            if self.coords.ndim != 2 or len(self.coords) < 1:
                raise InputError("coords must be a (n, d) array with n >= 1")

    @property
    def n(self) -> int:
        if self.coords is not None:
            return len(self.coords)
        return len(self.explicit_matrix)

    def matrix(self) -> DistanceMatrix:
        return matrix_for(self)

    def model_xy(self) -> np.ndarray:
        """Unit-square inputs for the neural model.

        Uses ``model_coords`` when the loader provided them; otherwise raw
        coordinates pass through when already inside [0, 1]^2 and are min-max
        normalized when not.
        """
        if self.model_coords is not None:
            return self.model_coords
        if self.coords is None:
            raise InputError(f"instance {self.id} has no coordinates for model input")
        if self.coords.min() >= 0.0 and self.coords.max() <= 1.0:
            return self.coords
        return unit_square(self.coords)


@dataclass
class LabeledPair:
    instance: Instance
    tour: Tour | None  # canonical when present
    oracle: str | None


@dataclass(frozen=True)
class HardnessReport:
    indicator: float
    rank: float  # |indicator - 0.75|
    form: str  # "A" (literal sqrt form) or "B" (scale-invariant form)
    area_convention: str  # BBOX | HULL
    tour_source: str
    area: float
    n: int
    tour_len: float


def unit_square(coords: np.ndarray) -> np.ndarray:
    """Min-max normalize each axis to [0, 1]; constant axes map to 0.5."""
    coords = np.asarray(coords, dtype=np.float64)
    lo = coords.min(axis=0)
    span = coords.max(axis=0) - lo
    out = np.full_like(coords, 0.5)
    nz = span > 0
    out[:, nz] = (coords[:, nz] - lo[nz]) / span[nz]
    return out


def generate_uniform(n: int, count: int, seed: int) -> list[Instance]:
    """``count`` instances of ``n`` i.i.d. uniform points in the unit square."""
    if n < 2:
        raise InputError(f"generate_uniform needs n >= 2, got {n}")
    if count < 1:
        raise InputError(f"count must be positive, got {count}")
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    pts = gen.random((count, n, 2), dtype=np.float64)
    metric = Metric(MetricKind.EUC2D_CONT)
    return [
        Instance(coords=pts[i], metric=metric, id=f"u{n}-s{seed}-{i:06d}", model_coords=pts[i])
        for i in range(count)
    ]


def canonicalize(t: Tour) -> Tour:
    """Rotate city 0 first and fix the direction (second < last element)."""
    return t.canonical()


@dataclass(frozen=True)
class LabelBudget:
    restarts: int = 1
    seed: int = 0
    external_tours: str | None = None  # sidecar JSONL of {"id", "tour"}


def _heuristic_best(m: DistanceMatrix, budget: LabelBudget) -> Tour:
    best_len = math.inf
    best: Tour | None = None
    for r in range(budget.restarts):
        cfg = heuristics.HeuristicConfig(start_city=r % m.n, seed=budget.seed + r)
        candidates = [heuristics.nearest_neighbor(m, cfg)]
        if m.n >= 3:
            candidates += [heuristics.insertion(m, v, cfg) for v in heuristics.INSERTION_VARIANTS]
        for cand in candidates:
            t = heuristics.two_opt(m, cand, mode="best_improvement")
            length = tour_length(m, t)
            if length < best_len - 1e-12 or (
                abs(length - best_len) <= 1e-12 and t.order < best.order
            ):
                best_len = length
                best = t
    return best


def label(
    instances: list[Instance],
    oracle: str,
    budget: LabelBudget = LabelBudget(),
) -> list[LabeledPair]:
    """Attach an optimal (BRUTE / HELD_KARP) or best-found tour to each instance."""
    oracle = oracle.upper()
    if oracle not in ORACLES:
        raise ConfigError(f"unknown oracle: {oracle}")
    external: dict[str, Tour] = {}
    if oracle == "EXTERNAL":
        if budget.external_tours is None:
            raise ConfigError("EXTERNAL oracle needs budget.external_tours")
        with open(budget.external_tours, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    external[rec["id"]] = Tour(rec["tour"])
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ParseError(f"{budget.external_tours}:{lineno}: {e}") from e

    pairs = []
    for inst in instances:
        if oracle == "BRUTE":
            if inst.n > exact.BRUTE_FORCE_MAX_N:
                raise ConfigError(f"BRUTE oracle caps at n={exact.BRUTE_FORCE_MAX_N}, got {inst.n}")
            tour = exact.brute_force(inst.matrix()).tour
        elif oracle == "HELD_KARP":
            if inst.n > exact.HELD_KARP_MAX_N:
                raise ConfigError(f"HELD_KARP oracle caps at n={exact.HELD_KARP_MAX_N}, got {inst.n}")
            tour = exact.held_karp(inst.matrix()).tour
        elif oracle == "HEURISTIC_BEST":
            tour = _heuristic_best(inst.matrix(), budget)
        else:
            if inst.id not in external:
                raise ConfigError(f"no external tour for instance {inst.id}")
            tour = external[inst.id]
            tour.validate(inst.n)
            tour = tour.canonical()
        pairs.append(LabeledPair(instance=inst, tour=tour, oracle=oracle))
    return pairs


def _hull_area(pts: np.ndarray) -> float:
    """Convex hull area by monotone chain + shoelace."""
    pts = np.unique(pts, axis=0)
    if len(pts) < 3:
        return 0.0
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    x = np.array([p[0] for p in hull])
    y = np.array([p[1] for p in hull])
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def hardness_indicator(
    instance: Instance,
    tour_len: float,
    area_convention: str = "BBOX",
    form: str = "B",
    tour_source: str = "UNKNOWN",
) -> HardnessReport:
    """Tour-length statistic whose closeness to 0.75 ranks instance hardness.

    Form B (default) is l / sqrt(N*A) and is exactly scale invariant; form A
    is the literal sqrt(l / (N*A)) variant. A is the area covered by the
    cities: axis-aligned bounding box (BBOX) or convex hull (HULL).
    """
    if tour_len <= 0:
        raise InputError(f"tour_len must be positive, got {tour_len}")
    area_convention = area_convention.upper()
    form = form.upper()
    if area_convention not in ("BBOX", "HULL"):
        raise ConfigError(f"unknown area convention: {area_convention}")
    if form not in ("A", "B"):
        raise ConfigError(f"unknown indicator form: {form}")
    if instance.coords is None:
        raise InputError("hardness indicator needs coordinates")
    pts = instance.coords
    if area_convention == "HULL":
        if instance.n < 3:
            raise SizeError("HULL area needs n >= 3")
        area = _hull_area(pts)
    else:
        span = pts.max(axis=0) - pts.min(axis=0)
        area = float(span[0] * span[1])
    if area <= 0.0:
        raise DegenerateAreaError(f"instance {instance.id} covers zero area")
    n = instance.n
    if form == "B":
        indicator = tour_len / math.sqrt(n * area)
    else:
        indicator = math.sqrt(tour_len / (n * area))
    return HardnessReport(
        indicator=indicator,
        rank=abs(indicator - HARDNESS_PHASE_TRANSITION),
        form=form,
        area_convention=area_convention,
        tour_source=tour_source,
        area=area,
        n=n,
        tour_len=tour_len,
    )


def hardness_rank(instance: Instance, tour_len: float, **kwargs) -> float:
    """Closeness of the indicator to the 0.75 transition; smaller is harder."""
    return hardness_indicator(instance, tour_len, **kwargs).rank


# ---------------------------------------------------------------------------
# JSONL dataset format: one pair per line with keys
#   id, metric, coords, tour, oracle
# tour/oracle are null for unlabeled instances.


def save_dataset(pairs: list[LabeledPair], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            inst = pair.instance
            rec = {
                "id": inst.id,
                "metric": inst.metric.kind.value,
                "coords": [[x, y] for x, y in inst.coords.tolist()],
                "tour": list(pair.tour.order) if pair.tour is not None else None,
                "oracle": pair.oracle,
            }
            if inst.metric.radius is not None:
                rec["radius"] = inst.metric.radius
            fh.write(json.dumps(rec) + "\n")


def load_dataset(path: str) -> list[LabeledPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {e}") from e
            missing = {"id", "metric", "coords", "tour", "oracle"} - rec.keys()
            if missing:
                raise ParseError(f"{path}:{lineno}: missing keys {sorted(missing)}")
            try:
                metric = Metric(MetricKind(rec["metric"]), rec.get("radius"))
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: {e}") from e
            coords = np.asarray(rec["coords"], dtype=np.float64)
            inst = Instance(coords=coords, metric=metric, id=str(rec["id"]))
            if metric.kind == MetricKind.EUC2D_CONT and coords.min() >= 0 and coords.max() <= 1:
                inst.model_coords = inst.coords
            tour = Tour(rec["tour"]) if rec["tour"] is not None else None
            if tour is not None:
                tour.validate(inst.n)
            pairs.append(LabeledPair(instance=inst, tour=tour, oracle=rec["oracle"]))
    return pairs
