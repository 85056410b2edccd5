"""Marked Poisson sampling, genericity checking, and realization files.

Sampling draws a Poisson number of germs uniformly in a rectangular or disk
window with directions i.i.d. uniform on (0, pi), fully determined by a
64-bit seed.  Sampled sets are screened for the genericity condition (all
finite growth distances mutually distinct); the astronomically rare failure
is resampled under an incremented attempt counter and logged.  User-supplied
sets that fail are a hard error unless explicitly jittered.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ConditionDViolation,
    IdenticalGerms,
    InvalidIntensity,
    InvalidWindow,
    NotEnoughPoints,
)
from .geometry import MarkedPoint, PairTable, shared_pair_table

log = logging.getLogger(__name__)

REALIZATION_SCHEMA = "1"

#: Default relative tolerance for near-tie detection among growth distances.
#: Only distances sharing a germ are compared (those are the only comparisons
#: the growth protocol makes); at unit intensity that is ~2 n^3 comparisons
#: per realization, so the tolerance sits well below the typical spacing yet
#: two decades above double-precision noise in the intersection solves.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangular window."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.xmin, self.ymin, self.xmax, self.ymax))):
            raise InvalidWindow("rectangle bounds must be finite")
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise InvalidWindow(
                f"ill-ordered rectangle bounds ({self.xmin},{self.ymin},{self.xmax},{self.ymax})"
            )

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def center(self) -> Tuple[float, float]:
        return ((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    def sample(self, rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray]:
        xs = rng.uniform(self.xmin, self.xmax, count)
        ys = rng.uniform(self.ymin, self.ymax, count)
        return xs, ys

    def distance_to_boundary(self, x, y):
        """Distance from an interior point to the window boundary (vectorized)."""
        return np.minimum.reduce(
            [
                np.asarray(x) - self.xmin,
                self.xmax - np.asarray(x),
                np.asarray(y) - self.ymin,
                self.ymax - np.asarray(y),
            ]
        )

    def to_json(self) -> dict:
        return {
            "shape": "rectangle",
            "xmin": self.xmin,
            "ymin": self.ymin,
            "xmax": self.xmax,
            "ymax": self.ymax,
        }

    @staticmethod
    def square(side: float, center: Tuple[float, float] = (0.0, 0.0)) -> "Rectangle":
        cx, cy = center
        h = side / 2.0
        return Rectangle(cx - h, cy - h, cx + h, cy + h)


@dataclass(frozen=True)
class Disk:
    """Disk window given by center and radius."""

    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.cx, self.cy, self.radius))) or self.radius <= 0:
            raise InvalidWindow(f"disk needs a finite positive radius, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius * self.radius

    @property
    def center(self) -> Tuple[float, float]:
        return (self.cx, self.cy)

    def sample(self, rng: np.random.Generator, count: int) -> Tuple[np.ndarray, np.ndarray]:
        r = self.radius * np.sqrt(rng.uniform(0.0, 1.0, count))
        phi = rng.uniform(0.0, 2.0 * math.pi, count)
        return self.cx + r * np.cos(phi), self.cy + r * np.sin(phi)

    def distance_to_boundary(self, x, y):
        return self.radius - np.hypot(np.asarray(x) - self.cx, np.asarray(y) - self.cy)

    def to_json(self) -> dict:
        return {"shape": "disk", "center": [self.cx, self.cy], "radius": self.radius}


Window = Union[Rectangle, Disk]


def window_from_json(obj: Optional[dict]) -> Optional[Window]:
    if obj is None:
        return None
    shape = obj.get("shape")
    if shape == "rectangle":
        return Rectangle(obj["xmin"], obj["ymin"], obj["xmax"], obj["ymax"])
    if shape == "disk":
        cx, cy = obj["center"]
        return Disk(cx, cy, obj["radius"])
    raise InvalidWindow(f"unknown window shape {shape!r}")


@dataclass(frozen=True)
class TwoAtomMarks:
    """Directions drawn from {theta1, theta2} with P(theta1) = p.

    Probe option for two-direction systems; the default sampler uses
    uniform marks.
    """

    theta1: float
    theta2: float
    p: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.theta1 < math.pi and 0.0 <= self.theta2 < math.pi):
            raise ValueError("atom directions must lie in [0, pi)")
        if not (0.0 < self.p < 1.0):
            raise ValueError("atom weight must lie in (0, 1)")

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        pick = rng.uniform(0.0, 1.0, count) < self.p
        return np.where(pick, self.theta1, self.theta2)


@dataclass(frozen=True)
class Provenance:
    """How a sampled point set came to be: seed, intensity, window."""

    seed: int
    intensity: float
    window: Window


@dataclass(frozen=True)
class MarkedPointSet:
    """A finite ordered list of marked points with stable indices 0..n-1.

    ``provenance`` is ``None`` for user-supplied sets.  Germ locations must
    be pairwise distinct (exact duplicates are rejected on construction;
    near-duplicates surface through the genericity check).
    """

    points: Tuple[MarkedPoint, ...]
    provenance: Optional[Provenance] = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        seen = set()
        for p in self.points:
            key = (p.x, p.y)
            if key in seen:
                raise IdenticalGerms(f"duplicate germ at {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i: int) -> MarkedPoint:
        return self.points[i]

    def coords(self) -> np.ndarray:
        """Germ coordinates as an (n, 2) array."""
        return np.array([(p.x, p.y) for p in self.points], dtype=float).reshape(-1, 2)

    @property
    def window(self) -> Optional[Window]:
        return self.provenance.window if self.provenance is not None else None


@dataclass(frozen=True)
class ConditionDReport:
    """Outcome of the genericity screen on a marked point set.

    ``near_ties`` lists pairs of ordered index pairs, sharing a germ, whose
    finite growth distances differ by less than the relative tolerance;
    every collinear parallel pair forces an exact tie and is listed
    separately.  The set passes iff both lists are empty.  Coincidences
    between distances of four distinct germs are not flagged: no step of
    the growth protocol ever compares them.
    """

    passes: bool
    near_ties: Tuple[Tuple[Tuple[int, int], Tuple[int, int], float], ...]
    collinear_pairs: Tuple[Tuple[int, int], ...]


def _condition_d_from_table(table: PairTable, tie_tol: float) -> ConditionDReport:
    cached = table._condition_reports.get(tie_tol)
    if cached is not None:
        return cached
    n = table.n
    collinear_pairs: List[Tuple[int, int]] = []
    near: List[Tuple[Tuple[int, int], Tuple[int, int], float]] = []
    if n >= 2:
        ci, cj = np.nonzero(np.triu(table.collinear, k=1))
        collinear_pairs = list(zip(ci.tolist(), cj.tolist()))

        # Gather each finite distance once: both orders for transversal
        # pairs, the upper-triangle copy for collinear ones (their two
        # orders are equal by construction and reported above).
        take = table.transversal & np.isfinite(table.d)
        take |= np.triu(table.collinear, k=1)
        ii, jj = np.nonzero(take)
        values = table.d[ii, jj]
        order = np.argsort(values, kind="stable")
        values = values[order]
        ii = ii[order]
        jj = jj[order]

        # Any germ-sharing pair within tolerance sits inside a run of
        # adjacent sub-tolerance gaps; find those runs vectorized (they are
        # rare) and verify candidate pairs inside each run exactly.
        if len(values) >= 2:
            diffs = np.diff(values)
            denom = np.maximum(values[1:], 1.0)
            hits = np.nonzero(diffs < tie_tol * denom)[0]
            runs: List[Tuple[int, int]] = []
            for k in hits.tolist():
                if runs and k <= runs[-1][1]:
                    runs[-1] = (runs[-1][0], k + 1)
                else:
                    runs.append((k, k + 1))
            for lo, hi in runs:
                for a in range(lo, hi + 1):
                    for b in range(a + 1, hi + 1):
                        delta = float(values[b] - values[a])
                        if delta >= tie_tol * max(float(values[b]), 1.0):
                            continue
                        if {int(ii[a]), int(jj[a])} & {int(ii[b]), int(jj[b])}:
                            near.append(
                                (
                                    (int(ii[a]), int(jj[a])),
                                    (int(ii[b]), int(jj[b])),
                                    delta,
                                )
                            )
    report = ConditionDReport(
        passes=not near and not collinear_pairs,
        near_ties=tuple(near),
        collinear_pairs=tuple(collinear_pairs),
    )
    table._condition_reports[tie_tol] = report
    return report


def check_condition_d(point_set: MarkedPointSet, tie_tol: float = TIE_TOL) -> ConditionDReport:
    """Screen a set for mutually distinct finite growth distances."""
    return _condition_d_from_table(shared_pair_table(point_set), tie_tol)


def require_condition_d(point_set: MarkedPointSet, tie_tol: float = TIE_TOL) -> PairTable:
    """Return the pair table, raising :class:`ConditionDViolation` on failure."""
    table = shared_pair_table(point_set)
    report = _condition_d_from_table(table, tie_tol)
    if not report.passes:
        raise ConditionDViolation(report)
    return table


def ensure_condition_d(
    point_set: MarkedPointSet,
    tie_tol: float = TIE_TOL,
    perturb: bool = False,
    seed: int = 0,
    max_attempts: int = 8,
) -> MarkedPointSet:
    """Validate a user-supplied set, optionally jittering germs into genericity.

    Without ``perturb`` a failing set raises.  With it, germs receive a
    uniform jitter of at most ``1e-9 * scale`` per coordinate (scale being
    the larger of 1 and the germ norm) until the screen passes.
    """
    report = check_condition_d(point_set, tie_tol)
    if report.passes:
        return point_set
    if not perturb:
        raise ConditionDViolation(report)
    coords = point_set.coords()
    scale = np.maximum(1.0, np.hypot(coords[:, 0], coords[:, 1]))
    for attempt in range(max_attempts):
        rng = np.random.default_rng((_fold_seed(seed), 0x6A09, attempt))
        jitter = rng.uniform(-1.0, 1.0, coords.shape) * (1e-9 * scale[:, None])
        moved = coords + jitter
        candidate = MarkedPointSet(
            tuple(
                MarkedPoint(moved[i, 0], moved[i, 1], p.theta)
                for i, p in enumerate(point_set.points)
            ),
            provenance=point_set.provenance,
        )
        report = check_condition_d(candidate, tie_tol)
        if report.passes:
            log.info("jittered point set into genericity after %d attempt(s)", attempt + 1)
            return candidate
    raise ConditionDViolation(report, "jitter failed to restore genericity")


def _fold_seed(seed: int) -> int:
    return int(seed) & 0xFFFFFFFFFFFFFFFF


def sample_poisson(
    intensity: float,
    window: Window,
    seed: int,
    marks: Union[str, TwoAtomMarks] = "uniform",
    tie_tol: float = TIE_TOL,
    max_attempts: int = 16,
) -> MarkedPointSet:
    """Sample a marked Poisson process in a window, deterministically per seed.

    The point count is Poisson(intensity * area), germ locations are
    i.i.d. uniform in the window, and directions are i.i.d. uniform on
    (0, pi) (or two-atom if requested), independent of locations.  The
    result always passes the genericity screen; a failing draw is logged
    and resampled under the next attempt counter, which preserves
    determinism of the (intensity, window, seed) triple.
    """
    if not (math.isfinite(intensity) and intensity > 0):
        raise InvalidIntensity(f"intensity must be positive and finite, got {intensity}")
    if not isinstance(window, (Rectangle, Disk)):
        raise InvalidWindow(f"not a window: {window!r}")
    mean_count = intensity * window.area
    for attempt in range(max_attempts):
        rng = np.random.default_rng((_fold_seed(seed), attempt))
        count = int(rng.poisson(mean_count))
        xs, ys = window.sample(rng, count)
        if isinstance(marks, TwoAtomMarks):
            thetas = marks.sample(rng, count)
        else:
            thetas = rng.uniform(0.0, math.pi, count)
        germs = list(zip(xs.tolist(), ys.tolist()))
        if len(set(germs)) != count:
            log.warning("duplicate germ sampled (seed=%d attempt=%d); resampling", seed, attempt)
            continue
        candidate = MarkedPointSet(
            tuple(MarkedPoint(x, y, t) for (x, y), t in zip(germs, thetas.tolist())),
            provenance=Provenance(seed=int(seed), intensity=float(intensity), window=window),
        )
        report = check_condition_d(candidate, tie_tol)
        if report.passes:
            return candidate
        log.warning(
            "sampled set failed genericity (seed=%d attempt=%d, %d near ties); resampling",
            seed,
            attempt,
            len(report.near_ties),
        )
    raise ConditionDViolation(report, f"no generic sample after {max_attempts} attempts")


ORIGIN_PIN = MarkedPoint(0.0, 0.0, 0.0)


def n_closest_to_origin(
    point_set: MarkedPointSet,
    n: int,
    pinned: Optional[MarkedPoint] = None,
) -> MarkedPointSet:
    """Pin a reference point and keep only the ``n`` germs nearest to it.

    The pinned point (default: the origin with direction 0) becomes index 0;
    the selected germs follow ordered by distance, ties broken by original
    index.  This reproduces the origin-centered setup for sampling the
    typical segment.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if len(point_set) < n:
        raise NotEnoughPoints(f"asked for {n} of {len(point_set)} points")
    pin = pinned if pinned is not None else ORIGIN_PIN
    coords = point_set.coords()
    dist = np.hypot(coords[:, 0] - pin.x, coords[:, 1] - pin.y)
    order = np.lexsort((np.arange(len(point_set)), dist))
    chosen = [point_set[int(i)] for i in order[:n]]
    return MarkedPointSet((pin, *chosen), provenance=point_set.provenance)


def sample_pinned(
    intensity: float,
    n_neighbors: int,
    seed: int,
    disk_radius: Optional[float] = None,
    tie_tol: float = TIE_TOL,
) -> MarkedPointSet:
    """Sample a disk realization around the origin and pin the origin point.

    The disk radius defaults to three times the area needed for
    ``n_neighbors`` expected points, making a short draw (fewer than
    ``n_neighbors`` points) vanishingly rare; short draws resample under
    the next attempt counter.
    """
    if disk_radius is None:
        disk_radius = math.sqrt(3.0 * (n_neighbors + 1) / (math.pi * intensity))
    window = Disk(0.0, 0.0, disk_radius)
    for attempt in range(32):
        raw = sample_poisson(intensity, window, seed + 0x100000000 * attempt, tie_tol=tie_tol)
        if len(raw) < n_neighbors:
            log.warning("short pinned draw (%d < %d points); resampling", len(raw), n_neighbors)
            continue
        pinned = n_closest_to_origin(raw, n_neighbors)
        if check_condition_d(pinned, tie_tol).passes:
            return pinned
        log.warning("pinned set failed genericity (seed=%d); resampling", seed)
    raise ConditionDViolation(None, "no generic pinned sample")


# ---------------------------------------------------------------------------
# Realization files


def realization_to_json(point_set: MarkedPointSet) -> dict:
    prov = point_set.provenance
    return {
        "schema_version": REALIZATION_SCHEMA,
        "seed": prov.seed if prov else None,
        "lambda": prov.intensity if prov else None,
        "window": prov.window.to_json() if prov else None,
        "points": [{"x": p.x, "y": p.y, "theta": p.theta} for p in point_set.points],
    }


def realization_from_json(obj: dict) -> MarkedPointSet:
    points = tuple(MarkedPoint(rec["x"], rec["y"], rec["theta"]) for rec in obj["points"])
    window = window_from_json(obj.get("window"))
    if obj.get("seed") is None or obj.get("lambda") is None or window is None:
        provenance = None
    else:
        provenance = Provenance(seed=int(obj["seed"]), intensity=float(obj["lambda"]), window=window)
    return MarkedPointSet(points, provenance=provenance)


def write_realization(point_set: MarkedPointSet, fp: Union[str, IO[str]]) -> None:
    payload = json.dumps(realization_to_json(point_set), indent=2) + "\n"
    if hasattr(fp, "write"):
        fp.write(payload)
    else:
        with open(fp, "w") as fh:
            fh.write(payload)


def read_realization(path: str) -> MarkedPointSet:
    with open(path) as fh:
        return realization_from_json(json.load(fh))


def iter_realizations(path: str) -> Iterator[MarkedPointSet]:
    """Yield realizations from a JSON-lines batch file (one record per line)."""
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield realization_from_json(json.loads(line))
