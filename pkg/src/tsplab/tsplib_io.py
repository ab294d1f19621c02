"""Bit-exact parsing of TSPLIB instance and optimal-tour files.

Supports coordinate instances (EUC_2D, GEO, ATT) and EXPLICIT matrices in
FULL_MATRIX / UPPER_ROW / LOWER_DIAG_ROW / UPPER_DIAG_ROW layout. Unknown
keywords are skipped with a warning; DISPLAY_DATA sections are parsed and
discarded.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidityError
from .geometry import DistanceMatrix, Metric, MetricKind, Tour
from .instances import Instance, unit_square

SUPPORTED_EDGE_WEIGHT_TYPES = ("EUC_2D", "GEO", "ATT", "EXPLICIT")
SUPPORTED_EDGE_WEIGHT_FORMATS = ("FULL_MATRIX", "UPPER_ROW", "LOWER_DIAG_ROW", "UPPER_DIAG_ROW")

# Header keywords we read but do not act on.
_IGNORED_KEYWORDS = {"TYPE", "DISPLAY_DATA_TYPE", "NODE_COORD_TYPE", "CAPACITY"}

_METRIC_BY_EWT = {
    "EUC_2D": MetricKind.EUC2D_TSPLIB,
    "ATT": MetricKind.ATT_TSPLIB,
    "GEO": MetricKind.GEO_TSPLIB,
    "EXPLICIT": MetricKind.EXPLICIT,
}


@dataclass
class TsplibInstance:
    name: str
    dimension: int
    edge_weight_type: str
    edge_weight_format: str | None = None
    node_coords: list[tuple[int, float, float]] | None = None
    explicit_weights: DistanceMatrix | None = None
    comment: str | None = None


@dataclass
class TourFile:
    name: str
    dimension: int
    order: list[int]  # 0-based


def _decode(text: str | bytes) -> list[str]:
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    return text.splitlines()


def _split_keyword(line: str) -> tuple[str, str]:
    if ":" in line:
        key, value = line.split(":", 1)
        return key.strip().upper(), value.strip()
    return line.strip().upper(), ""


def _expand_explicit(values: list[float], n: int, fmt: str, where: str) -> np.ndarray:
    counts = {
        "FULL_MATRIX": n * n,
        "UPPER_ROW": n * (n - 1) // 2,
        "UPPER_DIAG_ROW": n * (n + 1) // 2,
        "LOWER_DIAG_ROW": n * (n + 1) // 2,
    }
    needed = counts[fmt]
    if len(values) < needed:
        raise ParseError(f"{where}: EDGE_WEIGHT_SECTION truncated: "
                         f"{fmt} needs {needed} values, got {len(values)}")
    mat = np.zeros((n, n), dtype=np.float64)
    it = iter(values[:needed])
    if fmt == "FULL_MATRIX":
        mat = np.array(values[:needed], dtype=np.float64).reshape(n, n)
        if not np.allclose(mat, mat.T):
            raise ParseError(f"{where}: explicit FULL_MATRIX is not symmetric")
    elif fmt == "UPPER_ROW":
        for i in range(n):
            for j in range(i + 1, n):
                mat[i, j] = mat[j, i] = next(it)
    elif fmt == "UPPER_DIAG_ROW":
        for i in range(n):
            for j in range(i, n):
                mat[i, j] = mat[j, i] = next(it)
    else:  # LOWER_DIAG_ROW
        for i in range(n):
            for j in range(i + 1):
                mat[i, j] = mat[j, i] = next(it)
    np.fill_diagonal(mat, 0.0)
    return mat


def parse_instance(text: str | bytes, source: str = "<tsplib>") -> TsplibInstance:
    """Parse a TSPLIB-format instance; errors name the offending line."""
    lines = _decode(text)
    name = None
    comment = None
    dimension = None
    ewt = None
    fmt = None
    coords: list[tuple[int, float, float]] = []
    seen_idx: set[int] = set()
    weights: list[float] = []
    section = None

    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper == "EOF":
            break
        if upper.endswith("_SECTION") or upper in ("NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION"):
            section = upper
            continue
        if section == "NODE_COORD_SECTION":
            parts = line.split()
            if len(parts) < 3:
                raise ParseError(f"{source}:{lineno}: bad NODE_COORD line: {line!r}")
            try:
                idx, x, y = int(parts[0]), float(parts[1]), float(parts[2])
            except ValueError as e:
                raise ParseError(f"{source}:{lineno}: bad NODE_COORD line: {line!r}") from e
            if idx in seen_idx:
                raise ParseError(f"{source}:{lineno}: duplicate node index {idx}")
            seen_idx.add(idx)
            coords.append((idx, x, y))
            continue
        if section == "EDGE_WEIGHT_SECTION":
            try:
                weights.extend(float(tok) for tok in line.split())
            except ValueError as e:
                raise ParseError(f"{source}:{lineno}: bad EDGE_WEIGHT value: {line!r}") from e
            continue
        if section == "DISPLAY_DATA_SECTION":
            continue  # parsed and discarded
        key, value = _split_keyword(line)
        if key == "NAME":
            name = value
        elif key == "COMMENT":
            comment = value if comment is None else f"{comment} {value}"
        elif key == "DIMENSION":
            try:
                dimension = int(value.split()[0])
            except (ValueError, IndexError) as e:
                raise ParseError(f"{source}:{lineno}: bad DIMENSION: {value!r}") from e
        elif key == "EDGE_WEIGHT_TYPE":
            ewt = value.upper()
            if ewt not in SUPPORTED_EDGE_WEIGHT_TYPES:
                raise ParseError(f"{source}:{lineno}: unsupported EDGE_WEIGHT_TYPE {ewt}")
        elif key == "EDGE_WEIGHT_FORMAT":
            fmt = value.upper()
            if fmt not in SUPPORTED_EDGE_WEIGHT_FORMATS:
                raise ParseError(f"{source}:{lineno}: unsupported EDGE_WEIGHT_FORMAT {fmt}")
        elif key in _IGNORED_KEYWORDS:
            pass
        else:
            warnings.warn(f"{source}:{lineno}: skipping unknown keyword {key!r}")

    if dimension is None:
        raise ParseError(f"{source}: missing DIMENSION")
    if ewt is None:
        raise ParseError(f"{source}: missing EDGE_WEIGHT_TYPE")

    if ewt == "EXPLICIT":
        if fmt is None:
            raise ParseError(f"{source}: EXPLICIT instance missing EDGE_WEIGHT_FORMAT")
        mat = _expand_explicit(weights, dimension, fmt, source)
        explicit = DistanceMatrix(n=dimension, entries=mat, metric=Metric(MetricKind.EXPLICIT))
        node_coords = None
    else:
        if len(coords) != dimension:
            raise ParseError(
                f"{source}: NODE_COORD_SECTION truncated: expected {dimension} nodes, got {len(coords)}"
            )
        if seen_idx != set(range(1, dimension + 1)):
            raise ParseError(f"{source}: node indices are not 1..{dimension}")
        node_coords = sorted(coords)
        explicit = None

    return TsplibInstance(
        name=name or source,
        dimension=dimension,
        edge_weight_type=ewt,
        edge_weight_format=fmt,
        node_coords=node_coords,
        explicit_weights=explicit,
        comment=comment,
    )


def parse_tour(text: str | bytes, source: str = "<tour>") -> TourFile:
    """Parse a TSPLIB TOUR_SECTION file (1-based, -1 terminated)."""
    lines = _decode(text)
    name = None
    dimension = None
    order: list[int] = []
    in_section = False
    terminated = False
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper == "EOF":
            break
        if upper == "TOUR_SECTION":
            in_section = True
            continue
        if not in_section:
            key, value = _split_keyword(line)
            if key == "NAME":
                name = value
            elif key == "DIMENSION":
                dimension = int(value.split()[0])
            continue
        if terminated:
            raise ParseError(f"{source}:{lineno}: data after -1 sentinel")
        for tok in line.split():
            try:
                v = int(tok)
            except ValueError as e:
                raise ParseError(f"{source}:{lineno}: bad tour index {tok!r}") from e
            if v == -1:
                terminated = True
                break
            order.append(v - 1)
    if not in_section:
        raise ParseError(f"{source}: missing TOUR_SECTION")
    if not terminated:
        raise ParseError(f"{source}: missing -1 sentinel")
    if dimension is None:
        dimension = len(order)
    if sorted(order) != list(range(dimension)):
        raise ParseError(f"{source}: tour is not a permutation of 1..{dimension}")
    return TourFile(name=name or source, dimension=dimension, order=order)


def load_instance(path: str | Path) -> TsplibInstance:
    path = Path(path)
    return parse_instance(path.read_bytes(), source=path.name)


def load_tour(path: str | Path) -> TourFile:
    path = Path(path)
    return parse_tour(path.read_bytes(), source=path.name)


def to_instance(t: TsplibInstance) -> Instance:
    """Convert a parsed file to a solver-facing instance.

    GEO coordinates stay in DDD.MM until distance time; every coordinate
    instance also gets min-max normalized model inputs.
    """
    kind = _METRIC_BY_EWT[t.edge_weight_type]
    if kind == MetricKind.EXPLICIT:
        if t.explicit_weights is None:
            raise ValidityError(f"{t.name}: EXPLICIT instance without matrix")
        return Instance(
            coords=None,
            metric=Metric(MetricKind.EXPLICIT),
            id=t.name,
            explicit_matrix=np.asarray(t.explicit_weights.entries),
        )
    coords = np.array([[x, y] for _, x, y in t.node_coords], dtype=np.float64)
    return Instance(
        coords=coords,
        metric=Metric(kind),
        id=t.name,
        model_coords=unit_square(coords),
    )


def tour_from_file(t: TourFile) -> Tour:
    return Tour(t.order)


# ---------------------------------------------------------------------------
# Serialization (test support: parse(serialize(x)) round-trips)


def serialize_instance(t: TsplibInstance) -> str:
    out = [f"NAME: {t.name}", "TYPE: TSP"]
    if t.comment:
        out.append(f"COMMENT: {t.comment}")
    out.append(f"DIMENSION: {t.dimension}")
    out.append(f"EDGE_WEIGHT_TYPE: {t.edge_weight_type}")
    if t.edge_weight_type == "EXPLICIT":
        out.append("EDGE_WEIGHT_FORMAT: FULL_MATRIX")
        out.append("EDGE_WEIGHT_SECTION")
        for row in t.explicit_weights.entries:
            out.append(" ".join(repr(float(v)) for v in row))
    else:
        out.append("NODE_COORD_SECTION")
        for idx, x, y in t.node_coords:
            out.append(f"{idx} {x!r} {y!r}")
    out.append("EOF")
    return "\n".join(out) + "\n"


def serialize_tour(t: TourFile) -> str:
    out = [
        f"NAME: {t.name}",
        "TYPE: TOUR",
        f"DIMENSION: {t.dimension}",
        "TOUR_SECTION",
    ]
    out.extend(str(i + 1) for i in t.order)
    out.append("-1")
    out.append("EOF")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Bundled benchmark fixtures


def fixtures_dir() -> Path:
    return Path(resources.files("tsplab") / "data" / "tsplib")


def fixture_names(directory: str | Path | None = None) -> list[str]:
    d = Path(directory) if directory is not None else fixtures_dir()
    return sorted(p.stem for p in d.glob("*.tsp"))


def load_fixture(name: str, directory: str | Path | None = None) -> TsplibInstance:
    d = Path(directory) if directory is not None else fixtures_dir()
    return load_instance(d / f"{name}.tsp")


def load_fixture_tour(name: str, directory: str | Path | None = None) -> TourFile | None:
    d = Path(directory) if directory is not None else fixtures_dir()
    path = d / f"{name}.opt.tour"
    if not path.exists():
        return None
    return load_tour(path)


def expected_optima() -> dict[str, int]:
    """Benchmark optima the bundled tour fixtures must reproduce exactly."""
    with resources.files("tsplab").joinpath("data/expected_optima.json").open() as fh:
        return {k: int(v) for k, v in json.load(fh).items()}
