"""Polygonal curves, datasets, and the geometric preprocessing helpers.

A curve is an ordered sequence of d-dimensional vertices, stored as a
float64 array of shape (m, d) and interpreted as the piecewise-linear
interpolation of its vertices. Datasets bundle curves of a shared
dimension with dense integer ids.

Two plain-text formats are supported:

- 1-D series: one curve per line, fields split on commas and/or
  whitespace runs, optionally with a leading class label to skip.
- 2-D trajectories: a list file naming one trajectory file per line;
  each trajectory file holds one "x y" pair per line, '#' lines ignored.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "BoundingBox",
    "Curve",
    "Dataset",
    "ParseError",
    "bounding_box",
    "densify",
    "longest_edge",
    "parse_series_1d",
    "parse_trajectories_2d",
    "simplify",
    "write_series_1d",
    "write_trajectories_2d",
]

_FIELD_SPLIT = re.compile(r"[,\s]+")


class ParseError(ValueError):
    """Raised when a dataset file cannot be parsed; names the offending location."""


@dataclass(frozen=True)
class Curve:
    """An immutable polygonal curve: id plus an (m, d) vertex array.

    Consecutive duplicate vertices are allowed; they change neither the
    discrete nor the continuous Frechet distance.
    """

    id: int
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"curve {self.id}: need a non-empty (m, d) vertex array")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"curve {self.id}: vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def __len__(self) -> int:
        return self.vertices.shape[0]


@dataclass(frozen=True)
class Dataset:
    """A list of curves sharing one dimension, with ids dense in [0, n)."""

    curves: list[Curve]
    d: int = field(init=False)

    def __post_init__(self):
        if not self.curves:
            raise ValueError("dataset must contain at least one curve")
        d = self.curves[0].dim
        for c in self.curves:
            if c.dim != d:
                raise ValueError(f"curve {c.id} has dimension {c.dim}, expected {d}")
        ids = [c.id for c in self.curves]
        if sorted(ids) != list(range(len(ids))):
            raise ValueError("curve ids must be unique and dense in [0, n)")
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    def __getitem__(self, curve_id: int) -> Curve:
        c = self.curves[curve_id]
        if c.id != curve_id:  # curves may be stored out of id order
            for c in self.curves:
                if c.id == curve_id:
                    return c
            raise KeyError(curve_id)
        return c


@dataclass(frozen=True)
class BoundingBox:
    """Coordinate-wise min/max corners of a curve's vertices."""

    lower: np.ndarray
    upper: np.ndarray


def bounding_box(p: Curve) -> BoundingBox:
    """Exact coordinate-wise min/max over the curve's vertices."""
    return BoundingBox(p.vertices.min(axis=0), p.vertices.max(axis=0))


def longest_edge(p: Curve) -> float:
    """Length of the longest edge; 0.0 for single-vertex curves."""
    if len(p) < 2:
        return 0.0
    deltas = np.diff(p.vertices, axis=0)
    return float(np.sqrt((deltas * deltas).sum(axis=1)).max())


def simplify(p: Curve, mu: float) -> Curve:
    """Greedy radius-mu simplification of a curve.

    Marks the first vertex, then repeatedly scans forward to the first
    vertex farther than mu from the last marked one, marking it; the last
    vertex is always kept. The output vertices are a subsequence of the
    input, and the curve stays within Frechet distance mu of the original.
    With mu = 0 this drops consecutive duplicates (endpoints kept).
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    v = p.vertices
    m = len(v)
    kept = [0]
    cur = 0
    for i in range(1, m):
        if np.linalg.norm(v[i] - v[cur]) > mu:
            kept.append(i)
            cur = i
    if cur != m - 1:
        kept.append(m - 1)
    return Curve(p.id, v[kept])


def densify(p: Curve, max_edge: float) -> Curve:
    """Subdivide every edge longer than max_edge into equal parts.

    The output traces the identical polyline (continuous Frechet distance
    zero to the input); only the vertex sampling changes.
    """
    if max_edge <= 0:
        raise ValueError("max_edge must be > 0")
    v = p.vertices
    if len(v) < 2:
        return p
    pieces = [v[:1]]
    for i in range(len(v) - 1):
        a, b = v[i], v[i + 1]
        length = float(np.linalg.norm(b - a))
        nseg = max(1, math.ceil(length / max_edge)) if length > max_edge else 1
        if nseg > 1:
            ts = np.linspace(0.0, 1.0, nseg + 1)[1:]
        else:
            ts = np.array([1.0])
        pieces.append(a + ts[:, None] * (b - a))
    return Curve(p.id, np.concatenate(pieces, axis=0))


def _parse_float(token: str, where: str) -> float:
    try:
        x = float(token)
    except ValueError:
        raise ParseError(f"{where}: non-numeric field {token!r}") from None
    if not math.isfinite(x):
        raise ParseError(f"{where}: non-finite value {token!r}")
    return x


def parse_series_1d(path: str | Path, skip_first_field: bool = False) -> Dataset:
    """Load a 1-D series file: one curve per line, comma/whitespace fields.

    Args:
        path: text file, one curve per line.
        skip_first_field: discard the first field of each line (class label).

    Raises:
        ParseError: non-numeric or non-finite field, or a line left empty
            after the label is skipped; the message names line and column.
    """
    path = Path(path)
    curves: list[Curve] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = _FIELD_SPLIT.split(line)
            if skip_first_field:
                fields = fields[1:]
                if not fields:
                    raise ParseError(f"{path}:{lineno}: empty curve after label skip")
            values = [
                _parse_float(tok, f"{path}:{lineno}:{col}")
                for col, tok in enumerate(fields, start=1)
            ]
            curves.append(Curve(len(curves), np.array(values, dtype=np.float64)))
    if not curves:
        raise ParseError(f"{path}: no curves found")
    return Dataset(curves)


def parse_trajectories_2d(list_path: str | Path) -> Dataset:
    """Load 2-D trajectories named by a list file, one path per line.

    Relative trajectory paths are resolved against the list file's
    directory. Lines starting with '#' inside trajectory files are ignored.

    Raises:
        ParseError: missing file, malformed coordinate pair, or an empty
            trajectory; the message names the offending file/line.
    """
    list_path = Path(list_path)
    base = list_path.parent
    curves: list[Curve] = []
    with list_path.open("r", encoding="utf-8") as fh:
        entries = [ln.strip() for ln in fh if ln.strip()]
    if not entries:
        raise ParseError(f"{list_path}: no trajectory files listed")
    for entry in entries:
        tpath = Path(entry)
        if not tpath.is_absolute():
            tpath = base / tpath
        if not tpath.is_file():
            raise ParseError(f"{list_path}: trajectory file not found: {tpath}")
        rows: list[list[float]] = []
        with tpath.open("r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                fields = _FIELD_SPLIT.split(line)
                if len(fields) != 2:
                    raise ParseError(
                        f"{tpath}:{lineno}: expected 'x y' pair, got {len(fields)} fields"
                    )
                rows.append(
                    [
                        _parse_float(fields[0], f"{tpath}:{lineno}:1"),
                        _parse_float(fields[1], f"{tpath}:{lineno}:2"),
                    ]
                )
        if not rows:
            raise ParseError(f"{tpath}: empty trajectory")
        curves.append(Curve(len(curves), np.array(rows, dtype=np.float64)))
    return Dataset(curves)


def write_series_1d(dataset: Dataset, path: str | Path) -> None:
    """Write a 1-D dataset in the series format; values round-trip exactly."""
    if dataset.d != 1:
        raise ValueError("series format holds 1-D curves only")
    with Path(path).open("w", encoding="utf-8") as fh:
        for c in sorted(dataset.curves, key=lambda c: c.id):
            fh.write(",".join(repr(float(x)) for x in c.vertices[:, 0]))
            fh.write("\n")


def write_trajectories_2d(dataset: Dataset, out_dir: str | Path, list_name: str = "files.txt") -> Path:
    """Write a 2-D dataset as per-curve trajectory files plus a list file."""
    if dataset.d != 2:
        raise ValueError("trajectory format holds 2-D curves only")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for c in sorted(dataset.curves, key=lambda c: c.id):
        name = f"curve_{c.id:05d}.txt"
        with (out_dir / name).open("w", encoding="utf-8") as fh:
            for x, y in c.vertices:
                fh.write(f"{float(x)!r} {float(y)!r}\n")
        names.append(name)
    list_path = out_dir / list_name
    list_path.write_text("".join(n + "\n" for n in names), encoding="utf-8")
    return list_path
