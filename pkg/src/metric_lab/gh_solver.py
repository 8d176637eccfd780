"""Exact and bounded Gromov-Hausdorff distance between finite metric spaces.

Everything is computed through the correspondence-distortion identity
d_GH = (1/2) * inf over full correspondences R of dis(R), where
dis(R) = sup |d_X(x,x') - d_Y(y,y')| over pairs (x,y), (x',y') in R.

The exact solver is a branch and bound over correspondences of the form
graph(f) + graph(g): an assignment f of every X-point to a Y-image followed by
an assignment of every still-uncovered Y-point to an X-preimage.  Every
minimal full correspondence has this shape (each relation pair must be the
unique cover of one of its endpoints), and distortion is monotone under
adding pairs, so the minimum over this family is the true minimum.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .metric_core import FiniteMetricSpace, PointedWindow

_EXACT_AUTO_LIMIT = 81  # nx*ny up to this: pointed auto mode runs exact search


@dataclass(frozen=True, eq=False)
class Correspondence:
    """A full relation between two index sets, stored as a tuple of (i, j) pairs."""

    pairs: tuple

    def arrays(self):
        p = np.asarray(self.pairs, dtype=int).reshape(-1, 2)
        return p[:, 0], p[:, 1]

    def check_full(self, nx: int, ny: int) -> None:
        I, J = self.arrays()
        for side, covered, total in (("X", set(I.tolist()), nx),
                                     ("Y", set(J.tolist()), ny)):
            for i in range(total):
                if i not in covered:
                    raise DomainError(f"correspondence does not cover {side} index {i}")


@dataclass(frozen=True, eq=False)
class GhResult:
    """Bounds (and optionally the exact value) of a GH distance."""

    lower: float
    upper: float
    exact: float | None = None
    witness: Correspondence | None = None

    def __post_init__(self):
        if self.exact is not None:
            if not (self.lower - 1e-12 <= self.exact <= self.upper + 1e-12):
                raise DomainError(
                    f"inconsistent GhResult: {self.lower} <= {self.exact} <= {self.upper} fails")

    def to_json(self) -> dict:
        obj = {"lower": self.lower, "upper": self.upper,
               "exact": self.exact if self.exact is not None else None}
        if self.witness is not None:
            obj["witness"] = [list(p) for p in self.witness.pairs]
        return obj


def _pair_distortion(DX, DY, I, J, chunk: int = 1024) -> float:
    """max over pair-pairs of |DX[i,i'] - DY[j,j']|, chunked to bound memory."""
    k = len(I)
    worst = 0.0
    for lo in range(0, k, chunk):
        hi = min(lo + chunk, k)
        a = DX[I[lo:hi]][:, I]
        b = DY[J[lo:hi]][:, J]
        worst = max(worst, float(np.abs(a - b).max()))
    return worst


def _pair_distortion_argmax(DX, DY, I, J, chunk: int = 1024):
    """Like _pair_distortion but also returns the (row, col) pair indices attaining it."""
    k = len(I)
    worst, where = -1.0, (0, 0)
    for lo in range(0, k, chunk):
        hi = min(lo + chunk, k)
        m = np.abs(DX[I[lo:hi]][:, I] - DY[J[lo:hi]][:, J])
        idx = int(np.argmax(m))
        r, c = divmod(idx, k)
        if m.flat[idx] > worst:
            worst = float(m.flat[idx])
            where = (lo + r, c)
    return worst, where


def distortion_of_correspondence(X: FiniteMetricSpace, Y: FiniteMetricSpace,
                                 R: Correspondence) -> float:
    """Worst additive mismatch of paired distances; R must cover both sides."""
    R.check_full(X.n, Y.n)
    I, J = R.arrays()
    return _pair_distortion(X.dist, Y.dist, I, J)


def map_distortion(f, X: FiniteMetricSpace, Y: FiniteMetricSpace):
    """(additive metric distortion of f, surjectivity defect of its image)."""
    f = np.asarray(f, dtype=int)
    if f.shape != (X.n,):
        raise DomainError(f"map must assign every one of {X.n} domain points")
    if X.n and (f.min() < 0 or f.max() >= Y.n):
        bad = int(f[(f < 0) | (f >= Y.n)][0])
        raise DomainError(f"image index {bad} out of range for {Y.n} codomain points")
    dist = float(np.abs(X.dist - Y.dist[f][:, f]).max()) if X.n else 0.0
    defect = float(Y.dist[f, :].min(axis=0).max()) if X.n else 0.0
    return dist, defect


def correspondence_from_map(f, X: FiniteMetricSpace, Y: FiniteMetricSpace) -> Correspondence:
    """graph(f) completed with a nearest-preimage pair for every Y point."""
    f = np.asarray(f, dtype=int)
    pairs = {(int(x), int(f[x])) for x in range(X.n)}
    near = np.argmin(Y.dist[f, :], axis=0)  # for each y, the x whose image is closest
    pairs.update((int(near[y]), int(y)) for y in range(Y.n))
    return Correspondence(tuple(sorted(pairs)))


# ---------------------------------------------------------------------------
# Lower bounds
# ---------------------------------------------------------------------------

def _directed_value_gap(a: np.ndarray, b: np.ndarray) -> float:
    """sup over values of a of the distance to the nearest value of b; both sorted."""
    pos = np.searchsorted(b, a)
    left = np.where(pos > 0, a - b[np.maximum(pos - 1, 0)], np.inf)
    right = np.where(pos < len(b), b[np.minimum(pos, len(b) - 1)] - a, np.inf)
    return float(np.minimum(left, right).max())


def _values_with_zero(D) -> np.ndarray:
    if D.shape[0] > 1:
        vals = D[np.triu_indices(D.shape[0], 1)]
        return np.unique(np.concatenate(([0.0], vals)))
    return np.asarray([0.0])


def _value_set_mismatch(DX, DY) -> float:
    """Hausdorff mismatch of realized distance values (0 included on both sides).

    Any full correspondence of distortion D matches every realized X-distance
    to a realized Y-distance (possibly 0, when two points share a partner)
    within D, and symmetrically; so half of this mismatch bounds d_GH below.
    """
    a = _values_with_zero(DX)
    b = _values_with_zero(DY)
    return max(_directed_value_gap(a, b), _directed_value_gap(b, a))


def _lower_bound(X: FiniteMetricSpace, Y: FiniteMetricSpace, base_pair=None) -> float:
    lb = abs(X.diameter() - Y.diameter()) / 2.0
    lb = max(lb, _value_set_mismatch(X.dist, Y.dist) / 2.0)
    if base_pair is not None:
        b1, b2 = base_pair
        a = np.unique(X.dist[b1])
        b = np.unique(Y.dist[b2])
        lb = max(lb, max(_directed_value_gap(a, b), _directed_value_gap(b, a)) / 2.0)
    return lb


# ---------------------------------------------------------------------------
# Upper bound: seeded maps + local search on the worst-pair repair move
# ---------------------------------------------------------------------------

def _eccentricity_order(D):
    ecc = D.max(axis=1)
    return np.lexsort((np.arange(len(ecc)), -ecc))


def _signed_coordinate(D, base: int) -> np.ndarray:
    """Distance to base, signed by which side of the farthest point one sits on.

    For interval-like spaces this recovers a monotone coordinate; for others
    it is merely a deterministic seeding feature.
    """
    far = int(np.argmax(D[base]))
    side = np.where(D[far] <= D[far, base], 1.0, -1.0)
    return side * D[base]


def _rank_match(keys_x: np.ndarray, keys_y: np.ndarray):
    """Monotone rank-proportional matching of two sorted key vectors."""
    nx, ny = len(keys_x), len(keys_y)
    ox = np.argsort(keys_x, kind="stable")
    oy = np.argsort(keys_y, kind="stable")
    f = np.empty(nx, dtype=int)
    pos = np.round(np.linspace(0, ny - 1, nx)).astype(int) if nx > 1 else np.zeros(1, int)
    f[ox] = oy[pos]
    g = np.empty(ny, dtype=int)
    pos = np.round(np.linspace(0, nx - 1, ny)).astype(int) if ny > 1 else np.zeros(1, int)
    g[oy] = ox[pos]
    return f, g


def _nearest_half(keys_from: np.ndarray, keys_to: np.ndarray) -> np.ndarray:
    order = np.argsort(keys_to, kind="stable")
    sorted_to = keys_to[order]
    pos = np.clip(np.searchsorted(sorted_to, keys_from), 0, len(sorted_to) - 1)
    left = np.maximum(pos - 1, 0)
    choose = np.where(np.abs(sorted_to[pos] - keys_from)
                      <= np.abs(keys_from - sorted_to[left]), pos, left)
    return order[choose]


def _value_match(keys_x: np.ndarray, keys_y: np.ndarray):
    """Nearest-value matching of two key vectors (better than rank matching
    when the keys are unevenly spaced)."""
    return _nearest_half(keys_x, keys_y), _nearest_half(keys_y, keys_x)


def _pairs_from_maps(nx, ny, f, g, base_pair):
    pairs = {(x, int(f[x])) for x in range(nx)}
    covered = {int(f[x]) for x in range(nx)}
    pairs.update((int(g[y]), y) for y in range(ny) if y not in covered)
    if base_pair is not None:
        pairs.add((int(base_pair[0]), int(base_pair[1])))
    pairs = sorted(pairs)
    arr = np.asarray(pairs, dtype=int)
    return arr[:, 0], arr[:, 1]


def _local_search(DX, DY, I, J, base_pair, moves: int):
    """Hill-climb on dis: repair an endpoint of the worst pair, strict descent."""
    nx, ny = DX.shape[0], DY.shape[0]
    I, J = I.copy(), J.copy()
    cur, where = _pair_distortion_argmax(DX, DY, I, J)
    for _ in range(moves):
        if cur <= 0:
            break
        improved = False
        for k in where:
            if base_pair is not None and (I[k], J[k]) == base_pair:
                continue
            others = np.ones(len(I), dtype=bool)
            others[k] = False
            Io, Jo = I[others], J[others]
            # try re-pairing pair k on either side
            cand = np.abs(DX[I[k]][Io][None, :] - DY[:, Jo])  # ny × k-1: replace J[k]
            row = cand.max(axis=1)
            jbest = int(np.lexsort((np.arange(ny), row))[0])
            cand2 = np.abs(DX[:, Io] - DY[J[k]][Jo][None, :])  # nx × k-1: replace I[k]
            row2 = cand2.max(axis=1)
            ibest = int(np.lexsort((np.arange(nx), row2))[0])
            trial = None
            if row[jbest] <= row2[ibest] and row[jbest] < cur:
                trial = (I[k], jbest)
            elif row2[ibest] < cur:
                trial = (ibest, J[k])
            if trial is None:
                continue
            oldI, oldJ = I[k], J[k]
            I[k], J[k] = trial
            # the replaced pair may have been the unique cover of its endpoints
            if oldI not in I or oldJ not in J:
                I[k], J[k] = oldI, oldJ
                continue
            new, nwhere = _pair_distortion_argmax(DX, DY, I, J)
            if new < cur - 1e-15:
                cur, where = new, nwhere
                improved = True
                break
            I[k], J[k] = oldI, oldJ
        if not improved:
            break
    return cur, I, J


def gh_bounds(X: FiniteMetricSpace, Y: FiniteMetricSpace, *,
              seed: int = 0, restarts: int = 200, local_moves: int = 80,
              extra_seeds=(), base_pair=None,
              max_pair_budget: float = 4e8) -> GhResult:
    """Certified lower bound and local-search upper bound; exact always absent.

    The lower bound is the larger of the half diameter gap and half the
    Hausdorff mismatch of realized distance values.  The upper bound is half
    the distortion of the best full correspondence found from deterministic
    seeds (identity when sizes agree, eccentricity-rank and signed-coordinate
    matchings, caller-provided seeds) plus seeded random restarts, each
    polished by a worst-pair repair search.  Fixed seed, deterministic output.
    """
    if X.n == 0 or Y.n == 0:
        raise DomainError("GH bounds of an empty space")
    DX, DY = X.dist, Y.dist
    nx, ny = X.n, Y.n
    lower = _lower_bound(X, Y, base_pair)

    seeds = []
    if nx == ny and (base_pair is None or base_pair[0] == base_pair[1]):
        ident = np.arange(nx)
        seeds.append((ident, ident))
    eccx, eccy = DX.max(axis=1), DY.max(axis=1)
    seeds.append(_rank_match(eccx, eccy))
    seeds.append(_value_match(eccx, eccy))
    if base_pair is not None:
        sx = _signed_coordinate(DX, base_pair[0])
        sy = _signed_coordinate(DY, base_pair[1])
        seeds.append(_rank_match(sx, sy))
        seeds.append(_value_match(sx, sy))
        seeds.append(_rank_match(DX[base_pair[0]], DY[base_pair[1]]))
        seeds.append(_value_match(DX[base_pair[0]], DY[base_pair[1]]))

    rng = np.random.default_rng(seed)
    if nx + ny <= 2000:  # random restarts only pay off at small sizes
        for _ in range(max(0, restarts - len(seeds))):
            seeds.append((rng.integers(0, ny, size=nx), rng.integers(0, nx, size=ny)))

    best = (np.inf, None, None)
    for item in list(extra_seeds) + seeds:
        if item is None:
            continue
        if isinstance(item, Correspondence):
            I, J = item.arrays()
            if base_pair is not None and not any(
                    (int(i), int(j)) == tuple(base_pair) for i, j in zip(I, J)):
                I = np.append(I, base_pair[0])
                J = np.append(J, base_pair[1])
        else:
            f, g = item
            I, J = _pairs_from_maps(nx, ny, np.asarray(f, int), np.asarray(g, int), base_pair)
        k = len(I)
        moves = local_moves if k * k <= max_pair_budget else 0
        dis, I, J = _local_search(DX, DY, I, J, base_pair, moves)
        if dis < best[0]:
            best = (dis, I, J)
        if best[0] / 2.0 <= lower + 1e-15:
            break

    dis, I, J = best
    witness = Correspondence(tuple(zip(I.tolist(), J.tolist())))
    upper = dis / 2.0
    return GhResult(lower=lower, upper=upper, exact=None, witness=witness)


# ---------------------------------------------------------------------------
# Exact search
# ---------------------------------------------------------------------------

def gh_exact_small(X: FiniteMetricSpace, Y: FiniteMetricSpace, *,
                   budget: int = 5_000_000, base_pair=None,
                   seed: int = 0) -> GhResult:
    """Branch-and-bound exact GH distance; exact absent if the budget runs out.

    Slots are the X points (choose an image) followed by the uncovered Y
    points (choose a preimage), both in decreasing-eccentricity order with
    lower-index tie break; the pruning bound is the current partial
    distortion.  An upper bound from gh_bounds seeds the incumbent.
    """
    if X.n == 0 or Y.n == 0:
        raise DomainError("GH distance of an empty space")
    DX, DY = X.dist, Y.dist
    nx, ny = X.n, Y.n

    warm = gh_bounds(X, Y, seed=seed, restarts=min(40, 8 + 2 * max(nx, ny)),
                     base_pair=base_pair)
    lower = warm.lower
    bestI, bestJ = warm.witness.arrays()
    best_dis = _pair_distortion(DX, DY, bestI, bestJ)

    xs = _eccentricity_order(DX)
    ys_order = _eccentricity_order(DY)

    pre_I = [int(base_pair[0])] if base_pair is not None else []
    pre_J = [int(base_pair[1])] if base_pair is not None else []

    nodes = 0
    exhausted = False

    I_buf = np.empty(nx + ny + 1, dtype=int)
    J_buf = np.empty(nx + ny + 1, dtype=int)
    I_buf[:len(pre_I)] = pre_I
    J_buf[:len(pre_J)] = pre_J

    def dfs(slot: int, k: int, cur: float):
        # slot < nx: assign image of xs[slot]; afterwards cover remaining Y
        nonlocal best_dis, bestI, bestJ, nodes, exhausted
        if exhausted:
            return
        if slot == nx:
            covered = set(J_buf[:k].tolist())
            rest = [int(y) for y in ys_order if int(y) not in covered]
            dfs_y(rest, k, cur)
            return
        x = int(xs[slot])
        nodes += 1
        if nodes > budget:
            exhausted = True
            return
        I, J = I_buf[:k], J_buf[:k]
        if k:
            delta = np.abs(DX[x, I][None, :] - DY[:, J]).max(axis=1)
        else:
            delta = np.zeros(ny)
        order = np.lexsort((np.arange(ny), delta))
        for y in order:
            d = max(cur, float(delta[y]))
            if d >= best_dis:
                break  # candidates sorted: the rest only get worse
            I_buf[k], J_buf[k] = x, int(y)
            dfs(slot + 1, k + 1, d)
            if exhausted:
                return

    def dfs_y(rest, k: int, cur: float):
        nonlocal best_dis, bestI, bestJ, nodes, exhausted
        if exhausted:
            return
        if not rest:
            if cur < best_dis:
                best_dis = cur
                bestI = I_buf[:k].copy()
                bestJ = J_buf[:k].copy()
            return
        y = rest[0]
        nodes += 1
        if nodes > budget:
            exhausted = True
            return
        I, J = I_buf[:k], J_buf[:k]
        delta = np.abs(DX[:, I] - DY[y, J][None, :]).max(axis=1)
        order = np.lexsort((np.arange(nx), delta))
        for x in order:
            d = max(cur, float(delta[x]))
            if d >= best_dis:
                break
            I_buf[k], J_buf[k] = int(x), y
            dfs_y(rest[1:], k + 1, d)
            if exhausted:
                return

    k0 = len(pre_I)
    cur0 = 0.0
    if k0:
        cur0 = float(np.abs(DX[pre_I[0], pre_I[0]] - DY[pre_J[0], pre_J[0]]))
    dfs(0, k0, cur0)

    witness = Correspondence(tuple(zip(bestI.tolist(), bestJ.tolist())))
    if exhausted:
        return GhResult(lower=lower, upper=best_dis / 2.0, exact=None, witness=witness)
    value = best_dis / 2.0
    return GhResult(lower=min(lower, value), upper=value, exact=value, witness=witness)


def pointed_gh_bounds(W1: PointedWindow, W2: PointedWindow, *,
                      method: str = "auto", **kwargs) -> GhResult:
    """GH bounds between pointed windows, base matched to base.

    Windows extracted at unequal rescaled radii are compared anyway, with a
    warning: pointed convergence tolerates radius slack.  method="auto" runs
    the exact search when both windows are small, otherwise bounds.
    """
    if abs(W1.radius - W2.radius) > 1e-12:
        warnings.warn(
            f"pointed windows have different radii ({W1.radius} vs {W2.radius}); "
            "comparing anyway", stacklevel=2)
    base_pair = (W1.base, W2.base)
    X, Y = W1.space, W2.space
    if method == "exact" or (method == "auto" and X.n * Y.n <= _EXACT_AUTO_LIMIT):
        return gh_exact_small(X, Y, base_pair=base_pair,
                              **{k: v for k, v in kwargs.items()
                                 if k in ("budget", "seed")})
    return gh_bounds(X, Y, base_pair=base_pair, **kwargs)
