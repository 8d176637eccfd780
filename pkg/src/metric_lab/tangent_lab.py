"""Blow-up pipeline: rescaled pointed windows, model comparison, trends.

A scan extracts windows (X, p, d/lambda) at a schedule of shrinking scales,
compares each against model tangent windows of equal radius via pointed GH,
and reports the per-scale bound table plus a trend verdict.  Verdicts are
deliberately modest: a decreasing upper-bound column is evidence for a
tangent, never a certificate.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError
from .fractal_gen import model_tangent_space
from .gh_solver import Correspondence, GhResult, pointed_gh_bounds
from .metric_core import FiniteMetricSpace, PointedWindow, rescale

TREND_BAND = 1e-3  # least-squares slope below this magnitude counts as flat


def resolution_rule(rule):
    """Accept a callable lambda->h or a string "lambda/K"."""
    if callable(rule):
        return rule
    if isinstance(rule, str) and rule.startswith("lambda/"):
        k = float(rule.split("/", 1)[1])
        if k <= 0:
            raise DomainError(f"bad resolution rule {rule!r}")
        return lambda lam: lam / k
    raise DomainError(f"unrecognized resolution rule {rule!r}")


@dataclass(frozen=True, eq=False)
class ScanConfig:
    """One blow-up experiment: generator, center, scale schedule, models."""

    generator: object
    center: object
    scales: tuple
    window_radius: float
    models: tuple
    rule: object = "lambda/64"
    seed: int = 0
    gh_options: dict = field(default_factory=dict)

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if not scales or any(s <= 0 for s in scales):
            raise DomainError("scales must be positive")
        if any(a <= b for a, b in zip(scales, scales[1:])):
            raise DomainError("scales must be strictly decreasing")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "models", tuple(str(m).lower() for m in self.models))
        if not self.models:
            raise DomainError("at least one model tangent is required")
        h_of = resolution_rule(self.rule)
        ratios = [h_of(s) / s for s in scales]
        if any(b > a + 1e-12 for a, b in zip(ratios, ratios[1:])):
            raise DomainError(
                "resolution rule must refine relative to scale along the schedule")

    def h_of(self, lam: float) -> float:
        return resolution_rule(self.rule)(lam)


def extract_window(gen, p, lam: float, R: float, h: float) -> PointedWindow:
    """Sample the generator at mesh h, divide the metric by lam, keep the
    closed ball of rescaled radius R around p."""
    if lam <= 0 or R <= 0:
        raise DomainError("scale and radius must be positive")
    space, base = gen.sample_ball(p, lam * R, h)
    return PointedWindow(rescale(space, lam), base, lam, R)


def _label_positions(space: FiniteMetricSpace):
    pos = np.empty((space.n, 2))
    tags = []
    for i, label in enumerate(space.labels):
        if not (isinstance(label, tuple) and len(label) >= 2):
            return None, None
        try:
            pos[i] = (float(label[0]), float(label[1]))
        except (TypeError, ValueError):
            return None, None
        tags.append(label[2] if len(label) > 2 else None)
    return pos, tags


# Seed geometry: normalized planar position plus a lift coordinate that
# separates metrically distinct nodes sharing a planar position.  Slit lips
# move by a hair inside the plane (same side of the cut stays attractive);
# glued-on sheets move far along the lift axis so they only match each other.
_LIP_OFFSETS = {"L": (-1, 0), "R": (1, 0), "U": (0, 1), "D": (0, -1)}


def _seed_coordinates(W: PointedWindow):
    pos, tags = _label_positions(W.space)
    if pos is None:
        return None
    planar = (pos - pos[W.base]) / W.scale
    span = float(np.abs(planar).max()) + 1.0
    q = np.zeros((len(planar), 3))
    q[:, :2] = planar
    for i, tag in enumerate(tags):
        if tag in _LIP_OFFSETS:
            q[i, :2] += np.asarray(_LIP_OFFSETS[tag]) * (1e-6 * span)
        elif tag == "H":
            q[i, 2] = 2.0 * span
        elif tag == "A":
            q[i, 2] = span
        elif tag == "B":
            q[i, 2] = -span
        elif tag == "P":
            label = W.space.labels[i]
            slit_id = float(label[3]) if len(label) > 3 else 0.0
            sheet = label[4] if len(label) > 4 else "G"
            lift = {"A": 0.25, "B": -0.25}.get(sheet, 0.0)
            q[i, 2] = (3.0 + slit_id + lift) * span
    return q


def nearest_position_seed(W1: PointedWindow, W2: PointedWindow):
    """Correspondence matching nearest label positions, normalized to each
    window's base and scale; None when labels carry no coordinates."""
    q1 = _seed_coordinates(W1)
    q2 = _seed_coordinates(W2)
    if q1 is None or q2 is None:
        return None
    t1, t2 = cKDTree(q1), cKDTree(q2)
    _, f = t2.query(q1)
    _, g = t1.query(q2)
    pairs = {(int(i), int(f[i])) for i in range(len(q1))}
    pairs.update((int(g[j]), int(j)) for j in range(len(q2)))
    pairs.add((W1.base, W2.base))
    return Correspondence(tuple(sorted(pairs)))


@dataclass(frozen=True)
class ScanRow:
    lam: float
    points: int
    results: dict          # model kind -> GhResult
    seconds: dict          # model kind -> wall-clock seconds


@dataclass(frozen=True)
class Verdict:
    best_model: str
    final_gap: float
    trend: str             # decreasing | flat | increasing | inconclusive

    @property
    def conclusive(self) -> bool:
        return self.trend != "inconclusive"


@dataclass(frozen=True)
class ScanReport:
    rows: tuple
    radius: float
    models: tuple
    verdict: Verdict | None = None


def tangent_scan(cfg: ScanConfig) -> ScanReport:
    """Extract a window per scale and bound its pointed GH distance to every
    requested model window of equal radius and matching relative resolution."""
    h_of = resolution_rule(cfg.rule)
    model_cache: dict = {}
    rows = []
    for lam in cfg.scales:
        h = h_of(lam)
        W = extract_window(cfg.generator, cfg.center, lam, cfg.window_radius, h)
        results, seconds = {}, {}
        for kind in cfg.models:
            h_eff = h / lam
            ck = (kind, cfg.window_radius, round(h_eff, 12))
            M = model_cache.get(ck)
            if M is None:
                M = model_cache[ck] = model_tangent_space(kind, cfg.window_radius, h_eff)
            t0 = time.perf_counter()
            seed = nearest_position_seed(W, M)
            extra = [seed] if seed is not None else []
            res = pointed_gh_bounds(W, M, extra_seeds=extra, seed=cfg.seed,
                                    **cfg.gh_options)
            seconds[kind] = time.perf_counter() - t0
            results[kind] = res
        rows.append(ScanRow(lam, W.space.n, results, seconds))
    report = ScanReport(tuple(rows), cfg.window_radius, cfg.models)
    if len(rows) >= 3:
        report = ScanReport(report.rows, report.radius, report.models,
                            classify_tangent(report))
    return report


def _trend_of(column) -> str:
    slope = float(np.polyfit(np.arange(len(column)), np.asarray(column), 1)[0])
    if slope < -TREND_BAND:
        return "decreasing"
    if slope > TREND_BAND:
        return "increasing"
    return "flat"


def classify_tangent(report: ScanReport) -> Verdict:
    """Best model by final upper bound; trend from the slope of its column;
    inconclusive when the runner-up is within the summed lower-bound gaps."""
    if len(report.rows) < 3:
        raise DomainError("need at least 3 scan rows to classify a tangent")
    final = report.rows[-1]
    uppers = {kind: res.upper for kind, res in final.results.items()}
    order = sorted(uppers, key=lambda k: (uppers[k], k))
    best = order[0]
    trend = _trend_of([row.results[best].upper for row in report.rows])
    if len(order) > 1:
        second = order[1]
        gap_b = final.results[best].upper - final.results[best].lower
        gap_s = final.results[second].upper - final.results[second].lower
        if uppers[second] - uppers[best] < gap_b + gap_s:
            trend = "inconclusive"
    final_gap = final.results[best].upper - final.results[best].lower
    return Verdict(best, float(final_gap), trend)


class ScaledGenerator:
    """The same generator with its metric multiplied by a constant; scanning
    it at scales c*lambda must reproduce the original scan at lambda."""

    def __init__(self, gen, c: float):
        if c <= 0:
            raise DomainError("metric factor must be positive")
        self.kind = f"{gen.kind}*{c}"
        self._gen = gen
        self._c = c

    def resolution_check(self, center, radius_phys, h):
        self._gen.resolution_check(center, radius_phys / self._c, h / self._c)

    def sample_ball(self, center, radius_phys, h):
        space, base = self._gen.sample_ball(center, radius_phys / self._c,
                                            h / self._c)
        return rescale(space, 1.0 / self._c), base
