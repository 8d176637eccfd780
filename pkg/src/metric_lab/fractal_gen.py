"""Generators for the explicit spaces of the lab.

Slit carpets and pillow carpets live on 4-neighbor grid graphs with the
shortest-path metric; snowflake curves are polylines carrying either their
arc-length metric (the curve measured along itself) or the chordal metric
induced from the plane (the one blow-up scans care about); Wu's line and the
product rugs are closed-form metrics evaluated pairwise; the six model
tangent spaces come as pointed windows ready for GH comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DomainError, ResolutionError, ScheduleError
from .grids import GraphBuilder, GridGraph
from .metric_core import TOL, FiniteMetricSpace, PointedWindow

MODEL_KINDS = ("plane", "half", "quarter", "t", "l", "d", "line")


def _mesh_steps(h: float) -> int:
    if h <= 0:
        raise ResolutionError(f"mesh must be positive, got {h}")
    M = round(1.0 / h)
    if M < 1 or abs(1.0 / h - M) > 1e-9 * max(M, 1):
        raise ResolutionError(f"mesh {h} must divide the unit square exactly")
    return M


# ---------------------------------------------------------------------------
# Slit carpets and pillow carpets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlitSchedule:
    """Slit length fractions per dyadic generation: generation i slits have
    length r[i] / 2^i, centered in every generation-i dyadic square."""

    r: tuple

    def __post_init__(self):
        r = tuple(float(v) for v in self.r)
        if any(not (0.0 < v < 1.0) for v in r):
            raise ScheduleError(f"slit fractions must lie in (0, 1), got {r}")
        object.__setattr__(self, "r", r)

    @property
    def levels(self) -> int:
        return len(self.r)

    @classmethod
    def harmonic(cls, levels: int) -> "SlitSchedule":
        """The square-summability-violating preset: the i-th generation
        (1-based) gets fraction 1/sqrt(i+1), staying strictly below 1."""
        return cls(tuple(1.0 / math.sqrt(i + 2) for i in range(levels)))


def _slit_table(sched: SlitSchedule, M: int):
    """Slits in grid units: (level, column, y0, y1) with endpoints snapped
    to grid nodes.  Distinct slits never share a column."""
    slits = []
    for i, ri in enumerate(sched.r):
        if M % (2 ** (i + 1)):
            raise ResolutionError(
                f"level {i}: 1/h = {M} must be divisible by {2 ** (i + 1)} "
                "to center the slits on grid nodes")
        size = M >> i
        half = ri * size / 2.0
        for kx in range(2 ** i):
            col = kx * size + size // 2
            for ky in range(2 ** i):
                cy = ky * size + size // 2
                y0, y1 = round(cy - half), round(cy + half)
                if y1 - y0 < 2:
                    raise ResolutionError(
                        f"level {i}: mesh 1/{M} too coarse to resolve slits of "
                        f"length {ri}/2^{i} (need at least 2 grid edges)")
                slits.append((i, col, y0, y1))
    return slits


def slit_carpet_graph(sched: SlitSchedule, h: float, pillows: bool = False) -> GridGraph:
    """Unit-square grid with slits carved (and optionally pillows attached).

    Slit-interior nodes are duplicated into a left and a right copy; slit
    endpoints stay single, so each slit becomes a boundary cycle of the
    intrinsic metric.  A pillow is two sheets of the slit's size glued along
    three sides, its mouth identified with that cycle node by node.
    """
    M = _mesh_steps(h)
    slits = _slit_table(sched, M)
    by_col: dict = {}
    for (_, col, y0, y1) in slits:
        by_col.setdefault(col, []).append((y0, y1))

    b = GraphBuilder()

    def key(ix, iy, side=None):
        pos = (ix * h, iy * h)
        if side is not None:
            for (y0, y1) in by_col.get(ix, ()):
                if y0 < iy < y1:
                    return b.node((pos[0], pos[1], side), pos)
        return b.node(pos, pos)

    for ix in range(M + 1):
        for iy in range(M + 1):
            if ix < M:
                b.edge(key(ix, iy, "R"), key(ix + 1, iy, "L"), h)
            if iy < M:
                if any(y0 <= iy < y1 for (y0, y1) in by_col.get(ix, ())):
                    b.edge(key(ix, iy, "L"), key(ix, iy + 1, "L"), h)
                    b.edge(key(ix, iy, "R"), key(ix, iy + 1, "R"), h)
                else:
                    b.edge(key(ix, iy), key(ix, iy + 1), h)

    if pillows:
        for slit_id, (_, col, y0, y1) in enumerate(slits):
            m = y1 - y0

            def pnode(sheet, u, v):
                if v == 0:
                    return key(col, y0 + u, "L" if sheet == "A" else "R")
                pos = (col * h, (y0 + u) * h)
                tag = "G" if (u == 0 or u == m or v == m) else sheet
                return b.node(pos + ("P", slit_id, tag, u, v), pos)

            for sheet in ("A", "B"):
                for u in range(m + 1):
                    for v in range(m + 1):
                        if u < m:
                            b.edge(pnode(sheet, u, v), pnode(sheet, u + 1, v), h)
                        if v < m:
                            b.edge(pnode(sheet, u, v), pnode(sheet, u, v + 1), h)
    return b.build()


def slit_carpet_space(sched: SlitSchedule, h: float) -> FiniteMetricSpace:
    """All grid nodes of the slit carpet with the shortest-path metric.

    Cost is quadratic in the node count; for fine meshes prefer
    slit_carpet_graph plus GridGraph.space_on over a window.
    """
    return slit_carpet_graph(sched, h).space()


def pillow_carpet_space(sched: SlitSchedule, h: float) -> FiniteMetricSpace:
    """Slit carpet with a two-sheet pillow glued mouth-to-slit at every slit."""
    return slit_carpet_graph(sched, h, pillows=True).space()


# ---------------------------------------------------------------------------
# Snowflake polylines
# ---------------------------------------------------------------------------

def _flatness_fn(flatness):
    if flatness == "standard":
        return lambda k: 2.0
    if callable(flatness):
        return flatness
    seq = [float(v) for v in flatness]
    return lambda k: seq[k - 1]


def _refine_polyline(P: np.ndarray, l: float) -> np.ndarray:
    """One construction stage: replace every segment by the four-segment bump
    with legs l/2 times the base (the middle third)."""
    if l < 1.0:
        raise ConstructionError(
            f"flatness {l} gives legs shorter than half the base")
    p, q = P[:-1], P[1:]
    d = q - p
    m1, m2 = p + d / 3.0, p + 2.0 * d / 3.0
    lengths = np.linalg.norm(d, axis=1, keepdims=True)
    normal = np.stack([-d[:, 1], d[:, 0]], axis=1) / np.where(lengths > 0, lengths, 1.0)
    height = math.sqrt(max(l * l - 1.0, 0.0)) / 2.0 * (lengths / 3.0)
    apex = (m1 + m2) / 2.0 + normal * height
    out = np.empty((4 * len(p) + 1, 2))
    out[0::4] = P
    out[1::4], out[2::4], out[3::4] = m1, apex, m2
    return out


def _segments_intersect(P: np.ndarray) -> bool:
    """Any proper crossing between non-adjacent segments of the polyline."""
    a, c = P[:-1], P[1:]
    n = len(a)

    def orient(p, q, r):
        return ((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
                - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))

    for i in range(n - 2):
        js = np.arange(i + 2, n)
        p, q = a[i], c[i]
        r, s = a[js], c[js]
        d1 = orient(p[None, :], q[None, :], r)
        d2 = orient(p[None, :], q[None, :], s)
        d3 = orient(r, s, np.broadcast_to(p, r.shape))
        d4 = orient(r, s, np.broadcast_to(q, r.shape))
        crossing = (d1 * d2 < -1e-18) & (d3 * d4 < -1e-18)
        if crossing.any():
            return True
    return False


def snowflake_polyline(stage: int, flatness="standard",
                       window=(0.0, 1.0)) -> FiniteMetricSpace:
    """Snowflake curve over [a, b] at the given stage, arc-length metric.

    "standard" is the equilateral construction (flatness 2); a sequence or
    callable supplies the per-stage flatness l_k: legs are l_k/2 times the
    base, so l_k = 1 flattens the stage exactly and l_k < 1 is rejected.
    Stages whose segments cross are rejected by a pairwise sweep.
    """
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise DomainError(f"window must be a nondegenerate interval, got {window}")
    l_of = _flatness_fn(flatness)
    P = np.array([[a, 0.0], [b, 0.0]])
    for k in range(1, stage + 1):
        P = _refine_polyline(P, l_of(k))
    if len(P) <= 4097 and _segments_intersect(P):
        raise ConstructionError(f"stage-{stage} polyline self-intersects")
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    arc = np.concatenate(([0.0], np.cumsum(seg)))
    dist = np.abs(arc[:, None] - arc[None, :])
    labels = tuple((float(x), float(y)) for x, y in P)
    return FiniteMetricSpace(dist, labels)


class FlatSnowflakeGenerator:
    """Flat snowflake curve as a subset of the plane, chordal metric.

    The default flatness schedule l_k = 1 + 2^-k tends to 1, so bumps created
    at late stages flatten out; blow-up windows are sampled by refining the
    construction locally until every segment is below the requested mesh.
    The schedule keeps l_k <= 1.5 < 2, so the curve stays inside the standard
    construction's non-crossing envelope.
    """

    kind = "flat-snowflake"

    def __init__(self, flatness=None, window=(0.0, 1.0)):
        self.l_of = _flatness_fn(flatness) if flatness is not None else (
            lambda k: 1.0 + 2.0 ** -k)
        self.window = (float(window[0]), float(window[1]))

    def stage_vertices(self, stage: int) -> np.ndarray:
        P = np.array([[self.window[0], 0.0], [self.window[1], 0.0]])
        for k in range(1, stage + 1):
            P = _refine_polyline(P, self.l_of(k))
        return P

    def vertex_position(self, stage: int, index: int):
        P = self.stage_vertices(stage)
        if not (0 <= index < len(P)):
            raise DomainError(f"stage-{stage} polyline has {len(P)} vertices")
        return (float(P[index, 0]), float(P[index, 1]))

    def resolution_check(self, center, radius_phys: float, h: float) -> None:
        if h > radius_phys:
            raise ResolutionError(
                f"mesh {h} cannot resolve a window of radius {radius_phys}")

    def _center_position(self, center) -> tuple:
        if isinstance(center, tuple) and len(center) == 3 and center[0] == "vertex":
            return self.vertex_position(int(center[1]), int(center[2]))
        return (float(center[0]), float(center[1]))

    def sample_ball(self, center, radius_phys: float, h: float):
        """Vertices within chordal distance radius_phys of the center vertex,
        refined until every nearby segment is shorter than h."""
        self.resolution_check(center, radius_phys, h)
        cpos = np.asarray(self._center_position(center))
        span = self.window[1] - self.window[0]
        depth = max(1, math.ceil(math.log(span / h) / math.log(3.0)))
        pad = 2.0 * radius_phys
        P = [np.array([self.window[0], 0.0]), np.array([self.window[1], 0.0])]
        for k in range(1, depth + 1):
            l = self.l_of(k)
            out = [P[0]]
            for p, q in zip(P[:-1], P[1:]):
                seglen = float(np.linalg.norm(q - p))
                near = min(np.linalg.norm(cpos - p), np.linalg.norm(cpos - q))
                # a segment already below the mesh, or far outside the window,
                # stays coarse; its vertices cannot enter the ball
                if seglen <= h or near - 2.0 * seglen > pad:
                    out.append(q)
                    continue
                sub = _refine_polyline(np.stack([p, q]), l)
                out.extend(sub[1:])
            P = out
        V = np.stack(P)
        dist_to_c = np.linalg.norm(V - cpos, axis=1)
        keep = np.nonzero(dist_to_c <= radius_phys + TOL)[0]
        base_candidates = np.nonzero(dist_to_c[keep] <= 1e-12)[0]
        if base_candidates.size == 0:
            raise DomainError(f"center {tuple(cpos)} is not a vertex of the curve")
        V = V[keep]
        d = np.linalg.norm(V[:, None, :] - V[None, :, :], axis=-1)
        labels = tuple((float(x), float(y)) for x, y in V)
        return FiniteMetricSpace(d, labels), int(base_candidates[0])


# ---------------------------------------------------------------------------
# The square map H -> T and the exact slit-plane metric
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlitPlanePoint:
    """A point of the slit plane T (closure of the plane minus the open ray
    x > 0).  Points on the ray exist twice, tagged by lip: +1 above, -1 below."""

    x: float
    y: float
    side: int = 0

    def __post_init__(self):
        if self.side not in (-1, 0, 1):
            raise DomainError(f"lip tag must be -1, 0 or +1, got {self.side}")
        if self.side != 0 and not (self.y == 0.0 and self.x > 0):
            raise DomainError("lip tags only apply to points on the open ray")
        if self.side == 0 and self.y == 0.0 and self.x > 0:
            raise DomainError(f"point ({self.x}, 0) lies on the slit: tag a lip")

    @property
    def radius(self) -> float:
        return math.hypot(self.x, self.y)


def square_map_phi(r: float, theta: float) -> SlitPlanePoint:
    """The half-plane-to-slit-plane square map (radius, angle) -> (r^2, 2 angle).

    The two boundary rays of the half plane land on the two distinct lips of
    the slit: angle 0 on the upper lip, angle pi on the lower one.
    """
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r}")
    if not (0.0 <= theta <= math.pi):
        raise DomainError(f"angle {theta} outside [0, pi]")
    if r == 0.0:
        return SlitPlanePoint(0.0, 0.0, 0)
    if theta == 0.0:
        return SlitPlanePoint(r * r, 0.0, +1)
    if theta == math.pi:
        return SlitPlanePoint(r * r, 0.0, -1)
    ang = 2.0 * theta
    return SlitPlanePoint(r * r * math.cos(ang), r * r * math.sin(ang), 0)


def _lip_sign(p: SlitPlanePoint) -> int:
    if p.y > 0:
        return 1
    if p.y < 0:
        return -1
    return p.side  # on the axis: lip tag for the cut, 0 for x <= 0


def slit_plane_distance(p: SlitPlanePoint, q: SlitPlanePoint) -> float:
    """Intrinsic metric of T: straight line when the segment misses the open
    ray, otherwise the two-leg geodesic through the tip."""
    direct = math.hypot(p.x - q.x, p.y - q.y)
    sp, sq = _lip_sign(p), _lip_sign(q)
    if sp * sq >= 0:
        return direct
    if p.y == 0.0 and q.y == 0.0:  # opposite lips
        return p.x + q.x
    x_cross = p.x + (q.x - p.x) * (0.0 - p.y) / (q.y - p.y)
    if x_cross <= 0.0:
        return direct
    return p.radius + q.radius


def phi_half_disk_sample(n_r: int = 6, n_theta: int = 7, r_min: float = 0.25,
                         r_max: float = 1.0):
    """A polar grid of the closed half disk (origin excluded), its image under
    the square map, and both metrics: (domain space, codomain space).

    The domain carries the Euclidean metric of the half plane; the codomain
    carries the exact intrinsic slit-plane metric, so the pair feeds straight
    into quasisymmetry probes with the identity assignment.
    """
    rs = np.linspace(r_min, r_max, n_r)
    thetas = np.linspace(0.0, math.pi, n_theta)
    pts = [(float(r), float(t)) for r in rs for t in thetas]
    dom_xy = np.array([[r * math.cos(t), r * math.sin(t)] for r, t in pts])
    dom = FiniteMetricSpace(
        np.linalg.norm(dom_xy[:, None, :] - dom_xy[None, :, :], axis=-1),
        tuple((float(x), float(y)) for x, y in dom_xy))
    imgs = [square_map_phi(r, t) for r, t in pts]
    n = len(imgs)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = slit_plane_distance(imgs[i], imgs[j])
    cod = FiniteMetricSpace(d, tuple((p.x, p.y, p.side) for p in imgs))
    return dom, cod


# ---------------------------------------------------------------------------
# Wu's distorted line
# ---------------------------------------------------------------------------

def wu_L(alpha: float, c: float) -> float:
    """Slope constant of the inner linear branch of the distortion profile."""
    if not (0 < alpha < 1) or not (0 < c < 1):
        raise ScheduleError(f"need alpha, c in (0,1), got {alpha}, {c}")
    return (1.0 / c) * (c * alpha / (1.0 - c * (1.0 - alpha))) ** alpha


def wu_phi(u: float, alpha: float, c: float) -> float:
    """The normalized distortion profile on [0, 1]: linear with slope
    L(alpha, c) up to c, then a shifted power of exponent alpha."""
    if u < 0 or u > 1 + 1e-12:
        raise DomainError(f"profile argument {u} outside [0, 1]")
    if u <= c:
        return wu_L(alpha, c) * u
    return ((u - c * (1.0 - alpha)) / (1.0 - c * (1.0 - alpha))) ** alpha


@dataclass(frozen=True)
class WuSchedule:
    """Parameters (alpha_n, c_n, s_n) of the distorted intervals
    I_n = [1/n - s_n, 1/n], 1-indexed by n."""

    alpha: tuple
    c: tuple
    s: tuple

    def validate(self, N: int) -> None:
        if min(len(self.alpha), len(self.c), len(self.s)) < N:
            raise ScheduleError(f"schedule truncation {N} exceeds provided terms")
        sl_prev = math.inf
        for n in range(1, N + 1):
            a, c, s = self.alpha[n - 1], self.c[n - 1], self.s[n - 1]
            if not (0 < a < 1):
                raise ScheduleError(f"alpha_{n} = {a} outside (0, 1)")
            if n >= 2 and a <= self.alpha[n - 2]:
                raise ScheduleError(f"alpha must increase, violated at n={n}")
            if not (0 < c < 1):
                raise ScheduleError(f"c_{n} = {c} outside (0, 1)")
            if not (0 < s < 2.0 * (1.0 / n - 1.0 / (n + 1))):
                raise ScheduleError(f"s_{n} = {s} violates s_n < 2(1/n - 1/(n+1))")
            if 1.0 / n - s <= 1.0 / (n + 1):
                raise ScheduleError(f"s_{n} = {s} makes I_{n} touch I_{n + 1}")
            sl = s * wu_L(a, c)
            if sl >= sl_prev:
                raise ScheduleError(f"s_n L(alpha_n, c_n) must decrease, "
                                    f"violated at n={n}")
            sl_prev = sl

    def interval(self, n: int):
        s = self.s[n - 1]
        return (1.0 / n - s, 1.0 / n)


def default_wu_schedule(N: int) -> WuSchedule:
    """A valid schedule with L -> infinity: alpha_n = n/(n+1), c_n = 2^(-n^2),
    s_n small enough for disjointness and decreasing s_n L_n."""
    if N > 25:
        raise ScheduleError("default schedule underflows past N = 25")
    alpha = tuple(n / (n + 1.0) for n in range(1, N + 1))
    c = tuple(2.0 ** (-n * n) for n in range(1, N + 1))
    s = []
    sl_prev = math.inf
    for n in range(1, N + 1):
        L = wu_L(alpha[n - 1], c[n - 1])
        cap = 0.5 * (1.0 / n - 1.0 / (n + 1))
        val = min(cap, 4.0 ** -n / L, 0.5 * sl_prev / L)
        s.append(val)
        sl_prev = val * L
    sched = WuSchedule(alpha, c, tuple(s))
    sched.validate(N)
    return sched


def _wu_interval_of(v: float, sched: WuSchedule, N: int):
    for n in range(1, N + 1):
        a, b = sched.interval(n)
        if a <= v <= b:
            return n
    return None


_VALIDATED_SCHEDULES: set = set()


def _validate_once(sched: WuSchedule, N: int) -> None:
    key = (sched.alpha, sched.c, sched.s, N)
    if key not in _VALIDATED_SCHEDULES:
        sched.validate(N)
        _VALIDATED_SCHEDULES.add(key)


def wu_line_metric(x: float, y: float, sched: WuSchedule, truncation: int) -> float:
    """The five-branch distorted metric on the line: plain Euclidean outside
    the intervals I_n (n <= truncation), profile-distorted inside, and sums
    of boundary hops across intervals."""
    _validate_once(sched, truncation)
    if x == y:
        return 0.0
    x, y = (x, y) if x < y else (y, x)

    def delta_n(u, v, n):
        s = sched.s[n - 1]
        return s * wu_phi(abs(u - v) / s, sched.alpha[n - 1], sched.c[n - 1])

    nx = _wu_interval_of(x, sched, truncation)
    ny = _wu_interval_of(y, sched, truncation)
    if nx is not None and nx == ny:
        return delta_n(x, y, nx)
    if nx is None and ny is None:
        return y - x
    if nx is None:  # x below or between intervals, y inside I_m
        a_m, _ = sched.interval(ny)
        return abs(x - a_m) + delta_n(a_m, y, ny)
    if ny is None:
        _, b_n = sched.interval(nx)
        return delta_n(x, b_n, nx) + abs(b_n - y)
    _, b_n = sched.interval(nx)
    a_m, _ = sched.interval(ny)
    return delta_n(x, b_n, nx) + abs(b_n - a_m) + delta_n(a_m, y, ny)


# ---------------------------------------------------------------------------
# Product rugs
# ---------------------------------------------------------------------------

def product_rug_space(line_metric, extent=(-1.0, 1.0), h: float = 0.25,
                      dim: int = 2) -> FiniteMetricSpace:
    """Grid sample of (R x R, sqrt(delta^2 + |.|^2)) for a distorted line
    metric delta: ("rickman", eps) for the power metric |.|^eps, ("wu",
    schedule, truncation) for Wu's line, or any callable of two reals.
    """
    if dim != 2:
        raise DomainError("only dim = 2 rugs are generated")
    lo, hi = float(extent[0]), float(extent[1])
    if not hi > lo:
        raise DomainError(f"extent must be increasing, got {extent}")
    if isinstance(line_metric, tuple) and line_metric and line_metric[0] == "rickman":
        eps = float(line_metric[1])
        if not (0.0 < eps < 1.0):
            raise DomainError(f"rickman exponent must be in (0, 1), got {eps}")
        delta = lambda u, v: abs(u - v) ** eps
    elif isinstance(line_metric, tuple) and line_metric and line_metric[0] == "wu":
        _, sched, N = line_metric
        delta = lambda u, v: wu_line_metric(u, v, sched, N)
    elif callable(line_metric):
        delta = line_metric
    else:
        raise DomainError(f"unrecognized line metric {line_metric!r}")

    xs = np.arange(lo, hi + h / 2.0, h)
    K = len(xs)
    dvals = np.zeros((K, K))
    for i in range(K):
        for j in range(i + 1, K):
            dvals[i, j] = dvals[j, i] = float(delta(float(xs[i]), float(xs[j])))
    ii, yy = np.meshgrid(np.arange(K), xs, indexing="ij")
    flat_i = ii.ravel()
    flat_y = yy.ravel()
    d = np.sqrt(dvals[flat_i[:, None], flat_i[None, :]] ** 2
                + (flat_y[:, None] - flat_y[None, :]) ** 2)
    labels = tuple((float(xs[i]), float(y)) for i, y in zip(flat_i, flat_y))
    return FiniteMetricSpace(d, labels)


# ---------------------------------------------------------------------------
# Model tangent spaces
# ---------------------------------------------------------------------------

def _euclid_window(pred, R: float, h: float, one_dim: bool = False) -> PointedWindow:
    K = math.floor((R + TOL) / h)
    pts = []
    base = None
    ys = (0,) if one_dim else range(-K, K + 1)
    for ix in range(-K, K + 1):
        for iy in ys:
            x, y = ix * h, iy * h
            if x * x + y * y <= (R + TOL) ** 2 and pred(x, y):
                if ix == 0 and iy == 0:
                    base = len(pts)
                pts.append((x, y))
    arr = np.array(pts)
    d = np.linalg.norm(arr[:, None, :] - arr[None, :, :], axis=-1)
    space = FiniteMetricSpace(d, tuple((float(x), float(y)) for x, y in pts))
    return PointedWindow(space, base, 1.0, R)


def _build_t_graph(K: int, h: float) -> GraphBuilder:
    b = GraphBuilder()

    def node(ix, iy, lip=None):
        pos = (ix * h, iy * h)
        if iy == 0 and ix >= 1 and lip is not None:
            return b.node((pos[0], pos[1], lip), pos)
        return b.node(pos, pos)

    for ix in range(-K, K + 1):
        for iy in range(-K, K + 1):
            if ix < K:
                if iy == 0 and ix >= 0:  # along the cut: one chain per lip
                    b.edge(node(ix, 0, "U"), node(ix + 1, 0, "U"), h)
                    b.edge(node(ix, 0, "D"), node(ix + 1, 0, "D"), h)
                else:
                    b.edge(node(ix, iy), node(ix + 1, iy), h)
            if iy < K:
                up = node(ix, iy + 1, "D" if iy + 1 == 0 else None)
                lo = node(ix, iy, "U" if iy == 0 else None)
                b.edge(lo, up, h)
    return b


def _t_graph(K: int, h: float) -> GridGraph:
    return _build_t_graph(K, h).build()


def _l_graph(K: int, h: float) -> GridGraph:
    b = _build_t_graph(K, h)

    def hnode(s, t):
        if t == 0:  # the seam: the boundary cycle of T, arc length matched
            if s == 0:
                return b.node((0.0, 0.0), (0.0, 0.0))
            lip = "U" if s > 0 else "D"
            return b.node((abs(s) * h, 0.0, lip), (abs(s) * h, 0.0))
        return b.node((s * h, t * h, "H"), (s * h, t * h))

    for s in range(-K, K + 1):
        for t in range(0, K + 1):
            if s < K and t >= 1:
                b.edge(hnode(s, t), hnode(s + 1, t), h)
            if t < K:
                b.edge(hnode(s, t), hnode(s, t + 1), h)
    return b.build()


def _d_graph(K: int, h: float) -> GridGraph:
    b = GraphBuilder()

    def node(sheet, ix, iy):
        pos = (ix * h, iy * h)
        if ix == 0 or iy == 0:
            return b.node(pos, pos)  # glued boundary, shared by both sheets
        return b.node(pos + (sheet,), pos)

    for sheet in ("A", "B"):
        for ix in range(0, K + 1):
            for iy in range(0, K + 1):
                if ix < K:
                    b.edge(node(sheet, ix, iy), node(sheet, ix + 1, iy), h)
                if iy < K:
                    b.edge(node(sheet, ix, iy), node(sheet, ix, iy + 1), h)
    return b.build()


def _graph_window(graph: GridGraph, base_key, R: float) -> PointedWindow:
    base = graph.index[base_key]
    row = graph.distances_from([base])[0]
    sel = np.nonzero(row <= R + TOL)[0]
    space = graph.space_on(sel)
    base_idx = int(np.nonzero(sel == base)[0][0])
    return PointedWindow(space, base_idx, 1.0, R)


def model_tangent_space(kind: str, R: float, h: float, pad: float = 3.0) -> PointedWindow:
    """Pointed window of radius R around the distinguished point of a model
    tangent: plane, half plane (origin on the edge), quarter plane (corner),
    the slit plane t (tip), the gluings l = t+half and d = quarter+quarter
    (seam origins), or the 1-d line.

    Euclidean kinds are exact restrictions; t, l, d are grid graphs with the
    shortest-path metric, built with enough padding that windowed geodesics
    are unaffected by the boundary.
    """
    kind = kind.lower()
    if R <= 0 or h <= 0:
        raise DomainError("window radius and mesh must be positive")
    if kind == "plane":
        return _euclid_window(lambda x, y: True, R, h)
    if kind == "half":
        return _euclid_window(lambda x, y: y >= -TOL, R, h)
    if kind == "quarter":
        return _euclid_window(lambda x, y: x >= -TOL and y >= -TOL, R, h)
    if kind == "line":
        return _euclid_window(lambda x, y: True, R, h, one_dim=True)
    K = math.ceil(pad * R / h) + 1
    if kind == "t":
        return _graph_window(_t_graph(K, h), (0.0, 0.0), R)
    if kind == "l":
        return _graph_window(_l_graph(K, h), (0.0, 0.0), R)
    if kind == "d":
        return _graph_window(_d_graph(K, h), (0.0, 0.0), R)
    raise DomainError(f"unknown model tangent kind {kind!r}; "
                      f"expected one of {MODEL_KINDS}")


# ---------------------------------------------------------------------------
# Euclidean-domain generators for blow-up scans
# ---------------------------------------------------------------------------

class _EuclideanRegionGenerator:
    """Samples a convex region of the plane on an h-grid; the intrinsic
    metric of a convex region is the Euclidean restriction, exact per pair."""

    def __init__(self, kind, pred, one_dim=False):
        self.kind = kind
        self._pred = pred
        self._one_dim = one_dim

    def resolution_check(self, center, radius_phys: float, h: float) -> None:
        if h > radius_phys:
            raise ResolutionError(
                f"mesh {h} cannot resolve a window of radius {radius_phys}")

    def sample_ball(self, center, radius_phys: float, h: float):
        self.resolution_check(center, radius_phys, h)
        cx, cy = float(center[0]), float(center[1])
        icx, icy = round(cx / h), round(cy / h)
        if abs(icx * h - cx) > 1e-9 or abs(icy * h - cy) > 1e-9:
            raise DomainError(f"center {center} is not a node of the h={h} grid")
        K = math.floor((radius_phys + TOL) / h)
        pts, base = [], None
        ys = (icy,) if self._one_dim else range(icy - K, icy + K + 1)
        for ix in range(icx - K, icx + K + 1):
            for iy in ys:
                x, y = ix * h, iy * h
                if not self._pred(x, y):
                    continue
                if (x - cx) ** 2 + (y - cy) ** 2 <= (radius_phys + TOL) ** 2:
                    if ix == icx and iy == icy:
                        base = len(pts)
                    pts.append((x, y))
        if base is None:
            raise DomainError(f"center {center} lies outside the region")
        arr = np.array(pts)
        d = np.linalg.norm(arr[:, None, :] - arr[None, :, :], axis=-1)
        space = FiniteMetricSpace(d, tuple((float(x), float(y)) for x, y in pts))
        return space, base


class SlitCarpetGenerator:
    """Windows of a slit (or pillow) carpet in its intrinsic metric."""

    def __init__(self, sched: SlitSchedule, pillows: bool = False):
        self.kind = "pillow-carpet" if pillows else "slit-carpet"
        self.sched = sched
        self.pillows = pillows
        self._cache: dict = {}

    def _graph(self, h: float) -> GridGraph:
        g = self._cache.get(h)
        if g is None:
            g = self._cache[h] = slit_carpet_graph(self.sched, h, self.pillows)
        return g

    def resolution_check(self, center, radius_phys: float, h: float) -> None:
        if h > radius_phys:
            raise ResolutionError(
                f"mesh {h} cannot resolve a window of radius {radius_phys}")
        _slit_table(self.sched, _mesh_steps(h))

    def sample_ball(self, center, radius_phys: float, h: float):
        self.resolution_check(center, radius_phys, h)
        graph = self._graph(h)
        key = tuple(center)
        if key not in graph.index:
            raise DomainError(f"center {center} is not a node of the carpet grid")
        base = graph.index[key]
        row = graph.distances_from([base])[0]
        sel = np.nonzero(row <= radius_phys + TOL)[0]
        space = graph.space_on(sel)
        return space, int(np.nonzero(sel == base)[0][0])


class ModelTangentGenerator:
    """A model tangent reused as a generator (handy for self-consistency scans)."""

    def __init__(self, model_kind: str):
        self.kind = f"model-{model_kind}"
        self.model_kind = model_kind

    def resolution_check(self, center, radius_phys: float, h: float) -> None:
        if h > radius_phys:
            raise ResolutionError(
                f"mesh {h} cannot resolve a window of radius {radius_phys}")

    def sample_ball(self, center, radius_phys: float, h: float):
        if tuple(center) != (0.0, 0.0):
            raise DomainError("model tangents are sampled at their base point")
        w = model_tangent_space(self.model_kind, radius_phys, h)
        return w.space, w.base


def unit_square_generator() -> _EuclideanRegionGenerator:
    return _EuclideanRegionGenerator(
        "square", lambda x, y: -TOL <= x <= 1 + TOL and -TOL <= y <= 1 + TOL)


def make_generator(name: str, **params):
    """Registry used by the CLI and the scan front end."""
    name = name.lower()
    if name == "square":
        return unit_square_generator()
    if name in ("plane", "half", "quarter", "line"):
        return ModelTangentGenerator(name)
    if name == "flat-snowflake":
        return FlatSnowflakeGenerator(params.get("flatness"),
                                      params.get("window", (0.0, 1.0)))
    if name == "slit-carpet":
        return SlitCarpetGenerator(params["sched"], pillows=False)
    if name == "pillow-carpet":
        return SlitCarpetGenerator(params["sched"], pillows=True)
    raise DomainError(f"unknown generator {name!r}")
