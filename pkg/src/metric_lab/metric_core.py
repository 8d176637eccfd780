"""Finite metric spaces as validated distance matrices.

The distance matrix is the universal currency of the lab: every generator,
solver and probe consumes or produces a FiniteMetricSpace.  All axiom checks
use one absolute tolerance (TOL) so that shortest-path generators, which are
exact up to floating summation, validate cleanly.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MalformedMatrixError

# Absolute tolerance for every metric-axiom check in the repository.
TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Labelled point set with a full symmetric matrix of pairwise distances.

    Construction only enforces well-formedness (square, finite).  Whether the
    matrix actually satisfies the metric axioms is the job of
    :func:`validate_metric`, which reports violations instead of raising.
    """

    dist: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise MalformedMatrixError(f"distance matrix must be square, got shape {d.shape}")
        if d.size and not bool(np.all(np.isfinite(d))):
            raise MalformedMatrixError("distance matrix contains NaN or infinite entries")
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "dist", d)
        labels = tuple(self.labels) if len(self.labels) else tuple(range(d.shape[0]))
        if len(labels) != d.shape[0]:
            raise MalformedMatrixError(
                f"{len(labels)} labels for {d.shape[0]} points"
            )
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def submatrix(self, indices) -> "FiniteMetricSpace":
        """Metric subspace on the given point indices (order preserved)."""
        idx = np.asarray(indices, dtype=int)
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)],
                                 tuple(self.labels[i] for i in idx))


@dataclass(frozen=True, eq=False)
class PointedWindow:
    """A FiniteMetricSpace with a base point and the (scale, radius) it came from.

    ``space.dist`` is already expressed in rescaled units: every point lies
    within ``radius`` of ``base``.
    """

    space: FiniteMetricSpace
    base: int
    scale: float
    radius: float

    def __post_init__(self):
        if not (0 <= self.base < self.space.n):
            raise DomainError(f"base index {self.base} out of range for {self.space.n} points")
        if self.scale <= 0:
            raise DomainError(f"scale must be positive, got {self.scale}")
        if self.radius <= 0:
            raise DomainError(f"radius must be positive, got {self.radius}")
        worst = float(self.space.dist[self.base].max()) if self.space.n else 0.0
        if worst > self.radius + TOL:
            raise DomainError(
                f"window point at distance {worst} exceeds radius {self.radius}"
            )


@dataclass(frozen=True)
class AxiomViolation:
    """One violated metric axiom with its worst witness."""

    axiom: str            # "identity" | "symmetry" | "positivity" | "triangle"
    witness: tuple        # indices involved (1, 2, or 3 of them)
    magnitude: float      # size of the violation


@dataclass(frozen=True)
class GeometryStats:
    """Coarse-geometry summary at sampled scales.

    ``perfectness_constant`` is None when some sampled annulus with nonempty
    exterior is empty for every constant, i.e. the space is not uniformly
    perfect at the sampled scales.  Otherwise it is the infimal constant seen:
    annuli are nonempty for every strictly larger constant.
    """

    diameter: float
    doubling_estimate: int
    perfectness_constant: float | None


def validate_metric(m: FiniteMetricSpace) -> list[AxiomViolation]:
    """Check the metric axioms, returning one entry per violated axiom.

    Empty list iff identity, symmetry, positivity and the triangle inequality
    all hold within TOL.  Each entry carries the worst witness.
    """
    d = m.dist
    n = m.n
    out: list[AxiomViolation] = []
    if n == 0:
        return out

    diag = np.abs(np.diag(d))
    if diag.max(initial=0.0) > TOL:
        i = int(np.argmax(diag))
        out.append(AxiomViolation("identity", (i,), float(diag[i])))

    asym = np.abs(d - d.T)
    if asym.max(initial=0.0) > TOL:
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        out.append(AxiomViolation("symmetry", (int(i), int(j)), float(asym[i, j])))

    off = d + np.diag(np.full(n, np.inf))
    if n > 1 and off.min() <= TOL:
        i, j = np.unravel_index(int(np.argmin(off)), off.shape)
        out.append(AxiomViolation("positivity", (int(i), int(j)), float(d[i, j])))

    # Triangle: d[i,j] <= d[i,k] + d[k,j] + TOL, scanned one k-slab at a time
    # to keep memory linear in n^2.
    worst_excess = 0.0
    worst_triple = None
    for k in range(n):
        excess = d - (d[:, k][:, None] + d[k, :][None, :])
        e = float(excess.max())
        if e > worst_excess:
            worst_excess = e
            i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
            worst_triple = (int(i), k, int(j))
    if worst_excess > TOL and worst_triple is not None:
        out.append(AxiomViolation("triangle", worst_triple, worst_excess))
    return out


def rescale(m: FiniteMetricSpace, lam: float) -> FiniteMetricSpace:
    """Divide every distance by lam > 0 (blow-up for small lam); labels kept."""
    if lam <= 0:
        raise DomainError(f"rescale factor must be positive, got {lam}")
    return FiniteMetricSpace(m.dist / lam, m.labels)


def restrict_ball(m: FiniteMetricSpace, p: int, R: float) -> PointedWindow:
    """Closed ball of radius R around point p, as a pointed window at scale 1."""
    if not (0 <= p < m.n):
        raise DomainError(f"index {p} out of range for {m.n} points")
    if R <= 0:
        raise DomainError(f"radius must be positive, got {R}")
    keep = np.nonzero(m.dist[p] <= R + TOL)[0]
    base = int(np.nonzero(keep == p)[0][0])
    return PointedWindow(m.submatrix(keep), base, 1.0, R)


def epsilon_net(m: FiniteMetricSpace, eps: float, start: int = 0) -> list[int]:
    """Greedy (farthest-point insertion) eps-net; deterministic, lowest-index ties."""
    if m.n == 0:
        return []
    chosen = [start]
    d_near = m.dist[start].copy()
    while True:
        far = int(np.argmax(d_near))
        if d_near[far] <= eps:
            return chosen
        chosen.append(far)
        d_near = np.minimum(d_near, m.dist[far])


def _greedy_cover_count(dist_ball: np.ndarray) -> int:
    """Greedy cover of a ball (given as its submatrix, center first) by half-radius balls."""
    radius = float(dist_ball[0].max())
    if radius <= 0:
        return 1
    half = radius / 2.0
    d_near = dist_ball[0].copy()
    count = 1
    while True:
        far = int(np.argmax(d_near))
        if d_near[far] <= half + TOL:
            return count
        count += 1
        d_near = np.minimum(d_near, dist_ball[far])


def geometry_stats(m: FiniteMetricSpace, scales) -> GeometryStats:
    """Doubling and uniform-perfectness estimates over the sampled scales.

    Doubling: for every point x and scale r, greedily cover the closed ball
    B(x, r) by balls of half its realized radius; the estimate is the worst
    cover count.  Greedy farthest-point insertion gives a certified upper
    bound on the optimal count.

    Perfectness: for every (x, r) whose exterior is nonempty, the annulus
    {y : r/C < d(x,y) < r} must be nonempty; the returned constant is the
    worst critical ratio r / max{d < r}.  None when some annulus is empty
    for every C.
    """
    if m.n == 0:
        raise DomainError("geometry_stats of an empty space")
    scales = [float(s) for s in scales]
    if any(s <= 0 for s in scales):
        raise DomainError("scales must be positive")
    if any(a <= b for a, b in zip(scales, scales[1:])):
        raise DomainError("scales must be strictly descending")

    d = m.dist
    doubling = 1
    perfectness: float | None = 1.0
    for r in scales:
        for x in range(m.n):
            in_ball = np.nonzero(d[x] <= r + TOL)[0]
            order = np.concatenate(([x], in_ball[in_ball != x]))
            doubling = max(doubling, _greedy_cover_count(d[np.ix_(order, order)]))

            # open exterior / open-outer closed-inner annulus
            row = d[x]
            if not np.any(row >= r - TOL):
                continue  # ball exhausts the space: no perfectness constraint
            inside = row[(row > TOL) & (row < r - TOL)]
            if inside.size == 0:
                perfectness = None
            elif perfectness is not None:
                perfectness = max(perfectness, r / float(inside.max()))
    return GeometryStats(m.diameter(), doubling, perfectness)


# ---------------------------------------------------------------------------
# JSON interchange: {"labels": [...], "dist": [[...]]}, full symmetric matrix.
# ---------------------------------------------------------------------------

def space_to_json(m: FiniteMetricSpace) -> dict:
    return {"labels": [_label_to_json(l) for l in m.labels],
            "dist": m.dist.tolist()}


def space_from_json(obj: dict) -> FiniteMetricSpace:
    if not isinstance(obj, dict) or "dist" not in obj:
        raise MalformedMatrixError("space JSON must contain a 'dist' matrix")
    d = np.asarray(obj["dist"], dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise MalformedMatrixError(f"'dist' must be a square matrix, got shape {d.shape}")
    if d.size and not bool(np.all(np.isfinite(d))):
        raise MalformedMatrixError("'dist' contains NaN or infinite entries")
    if d.size and float(np.abs(d - d.T).max()) > TOL:
        raise MalformedMatrixError("'dist' is asymmetric beyond tolerance")
    labels = obj.get("labels")
    labels = tuple(_label_from_json(l) for l in labels) if labels else ()
    return FiniteMetricSpace(d, labels)


def _label_to_json(label):
    if isinstance(label, tuple):
        return list(_label_to_json(x) for x in label)
    if isinstance(label, (np.integer,)):
        return int(label)
    if isinstance(label, (np.floating,)):
        return float(label)
    return label


def _label_from_json(label):
    if isinstance(label, list):
        return tuple(_label_from_json(x) for x in label)
    return label


def write_space(m: FiniteMetricSpace, path: str) -> None:
    """Atomic write: temp file in the target directory, rename on success."""
    write_json_atomic(space_to_json(m), path)


def read_space(path: str) -> FiniteMetricSpace:
    with open(path) as fh:
        return space_from_json(json.load(fh))


def write_json_atomic(obj, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=1, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text_atomic(text: str, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
