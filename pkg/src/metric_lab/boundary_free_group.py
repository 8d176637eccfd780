"""Boundary at infinity of a free group F(a1,...,ar) as truncated reduced words.

Points of the boundary are semi-infinite reduced words; the lab works with
finite truncations and only asserts claims at depths where the truncation
cannot affect the answer.  Letters are integers +-1..+-r internally and
serialize as strings over a..z (generators) and A..Z (inverses).

With base point the identity, the Gromov product of two boundary points is
the length of their maximal common prefix, and a^(-product) is a visual
metric with comparison constants exactly 1; the Cayley graph is a tree, so
delta = 0 and cylinder translations expand distances by exactly a^m.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlphabetError, DomainError, InsufficientDepthError
from .metric_core import FiniteMetricSpace

DEFAULT_BASE = 2.0  # visual parameter a


def parse_word(text: str, rank: int):
    """String over a..z / A..Z to a letter tuple, checked against the rank."""
    letters = []
    for ch in text:
        if "a" <= ch <= "z":
            val = ord(ch) - ord("a") + 1
        elif "A" <= ch <= "Z":
            val = -(ord(ch) - ord("A") + 1)
        else:
            raise AlphabetError(f"unexpected character {ch!r} in word {text!r}")
        if abs(val) > rank:
            raise AlphabetError(f"letter {ch!r} outside alphabet of rank {rank}")
        letters.append(val)
    return tuple(letters)


def word_to_string(letters) -> str:
    out = []
    for val in letters:
        if val > 0:
            out.append(chr(ord("a") + val - 1))
        else:
            out.append(chr(ord("A") - val - 1))
    return "".join(out)


@dataclass(frozen=True)
class ReducedWord:
    """A freely reduced word; construction checks reducedness."""

    letters: tuple
    rank: int

    def __post_init__(self):
        for ch in self.letters:
            if not isinstance(ch, int) or ch == 0 or abs(ch) > self.rank:
                raise AlphabetError(f"letter {ch} outside alphabet of rank {self.rank}")
        for u, v in zip(self.letters, self.letters[1:]):
            if u == -v:
                raise AlphabetError(f"word {self.letters} is not reduced")

    @property
    def depth(self) -> int:
        return len(self.letters)

    def inverse(self) -> "ReducedWord":
        return ReducedWord(tuple(-x for x in reversed(self.letters)), self.rank)

    def __str__(self) -> str:
        return word_to_string(self.letters)


def reduce_word(word, rank: int) -> ReducedWord:
    """Free reduction: cancel adjacent inverse pairs until none remain.

    Accepts a string over the serialization alphabet or an iterable of
    nonzero integers.  The fully reduced result is unique, so this is
    idempotent.
    """
    if isinstance(word, ReducedWord):
        return word
    letters = parse_word(word, rank) if isinstance(word, str) else tuple(word)
    stack: list[int] = []
    for ch in letters:
        if not isinstance(ch, (int, np.integer)) or ch == 0 or abs(ch) > rank:
            raise AlphabetError(f"letter {ch} outside alphabet of rank {rank}")
        ch = int(ch)
        if stack and stack[-1] == -ch:
            stack.pop()
        else:
            stack.append(ch)
    return ReducedWord(tuple(stack), rank)


@dataclass(frozen=True)
class BoundaryPoint:
    """Truncation of a semi-infinite reduced word: its known length-N prefix."""

    prefix: ReducedWord

    def __post_init__(self):
        if self.prefix.depth < 1:
            raise DomainError("boundary points need at least one known letter")

    @property
    def depth(self) -> int:
        return self.prefix.depth

    @property
    def rank(self) -> int:
        return self.prefix.rank

    def __str__(self) -> str:
        return str(self.prefix)


def boundary_point(word, rank: int) -> BoundaryPoint:
    return BoundaryPoint(reduce_word(word, rank))


@dataclass(frozen=True)
class Cylinder:
    """U(p, m): boundary points sharing p's length-m prefix."""

    p: BoundaryPoint
    m: int

    def __post_init__(self):
        if not (0 <= self.m <= self.p.depth):
            raise DomainError(f"cylinder depth {self.m} exceeds known prefix {self.p.depth}")

    @property
    def prefix(self) -> ReducedWord:
        return ReducedWord(self.p.prefix.letters[:self.m], self.p.rank)


def gromov_product_prefix(x: BoundaryPoint, y: BoundaryPoint) -> int:
    """Length of the maximal common prefix; equals the truncation depth
    exactly when the known prefixes coincide entirely (saturated)."""
    if x.depth != y.depth:
        raise DomainError(f"truncation depths differ: {x.depth} vs {y.depth}")
    lcp = 0
    for u, v in zip(x.prefix.letters, y.prefix.letters):
        if u != v:
            break
        lcp += 1
    return lcp


def is_saturated(x: BoundaryPoint, y: BoundaryPoint) -> bool:
    return gromov_product_prefix(x, y) == x.depth


def visual_distance(x: BoundaryPoint, y: BoundaryPoint, a: float = DEFAULT_BASE) -> float:
    """a^(-(x,y)); zero when the known prefixes coincide entirely."""
    if a <= 1:
        raise DomainError(f"visual parameter must exceed 1, got {a}")
    lcp = gromov_product_prefix(x, y)
    if lcp == x.depth:
        return 0.0
    return float(a) ** (-lcp)


def _extensions(rank: int):
    """Letters in canonical order a, A, b, B, ..."""
    out = []
    for i in range(1, rank + 1):
        out.extend((i, -i))
    return out


def enumerate_words(rank: int, depth: int, prefix=()):
    """All reduced words of the given depth extending the given prefix."""
    prefix = tuple(prefix)
    if len(prefix) == depth:
        return [prefix]
    out = []
    stack = [prefix]
    letters = _extensions(rank)
    while stack:
        w = stack.pop()
        if len(w) == depth:
            out.append(w)
            continue
        last = w[-1] if w else 0
        for ch in reversed(letters):
            if ch != -last:
                stack.append(w + (ch,))
    return out


def _word_matrix_space(words, rank: int, a: float) -> FiniteMetricSpace:
    depth = len(words[0])
    L = np.asarray(words, dtype=int).reshape(len(words), depth)
    eq = L[:, None, :] == L[None, :, :]
    lcp = np.cumprod(eq, axis=2).sum(axis=2)
    dist = np.asarray(a, dtype=float) ** (-lcp.astype(float))
    np.fill_diagonal(dist, 0.0)
    labels = tuple(word_to_string(w) for w in words)
    return FiniteMetricSpace(dist, labels)


def cylinder_ball(p: BoundaryPoint, m: int, depth: int, count="all",
                  a: float = DEFAULT_BASE, seed: int = 0) -> FiniteMetricSpace:
    """The cylinder U(p, m) realized at the given truncation depth.

    count="all" enumerates every depth-N extension of p's length-m prefix;
    an integer draws a seeded uniform sample without replacement.
    """
    if m > depth:
        raise DomainError(f"cylinder depth {m} exceeds truncation depth {depth}")
    if m > p.depth:
        raise DomainError(f"cylinder depth {m} exceeds known prefix of {p}")
    prefix = p.prefix.letters[:m]
    words = enumerate_words(p.rank, depth, prefix)
    if count != "all":
        k = int(count)
        if k < 1:
            raise DomainError("sample count must be positive")
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(words), size=min(k, len(words)), replace=False)
        words = [words[i] for i in np.sort(idx)]
    return _word_matrix_space(words, p.rank, a)


def translate_boundary(g: ReducedWord, x: BoundaryPoint) -> BoundaryPoint:
    """Left translation g.x on the boundary, acting on the known prefix.

    Reduction cancels between g's tail and x's head; as long as cancellation
    stops strictly inside the known prefix, the result is a correct known
    prefix of g.x (the unseen continuation of x cannot cancel further).  The
    returned point's depth reports how much survives.
    """
    if g.rank != x.rank:
        raise DomainError("translation and point live in different free groups")
    gl = list(g.letters)
    cancelled = 0
    px = x.prefix.letters
    while gl and cancelled < len(px) and gl[-1] == -px[cancelled]:
        gl.pop()
        cancelled += 1
    if cancelled == len(px):
        raise InsufficientDepthError(
            f"translating {x} by {g} consumes the entire known prefix")
    return BoundaryPoint(ReducedWord(tuple(gl) + px[cancelled:], x.rank))


@dataclass(frozen=True)
class ExpansionStats:
    minimum: float
    maximum: float
    mean: float
    count: int


def expansion_factor_probe(p: BoundaryPoint, m: int, samples="all",
                           depth: int | None = None, a: float = DEFAULT_BASE,
                           seed: int = 0) -> ExpansionStats:
    """Measured ratios d(gx, gy)/d(x, y) over pairs of U(p, m), g = prefix^-1.

    In the tree case the ratio is a^m for every pair (min = max = mean); the
    probe computes each ratio from actual translated distances rather than
    from the exponent identity.
    """
    if depth is None:
        depth = p.depth
    if m > depth:
        raise DomainError(f"cylinder depth {m} exceeds truncation depth {depth}")
    prefix = ReducedWord(p.prefix.letters[:m], p.rank)
    g = prefix.inverse()
    words = enumerate_words(p.rank, depth, prefix.letters)
    if samples != "all":
        k = int(samples)
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(words), size=min(k, len(words)), replace=False)
        words = [words[i] for i in np.sort(idx)]
    pts = [BoundaryPoint(ReducedWord(w, p.rank)) for w in words]
    ratios = []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = visual_distance(pts[i], pts[j], a)
            if d == 0.0:
                continue
            gd = visual_distance(translate_boundary(g, pts[i]),
                                 translate_boundary(g, pts[j]), a)
            ratios.append(gd / d)
    if not ratios:
        return ExpansionStats(1.0, 1.0, 1.0, 0)
    arr = np.asarray(ratios)
    return ExpansionStats(float(arr.min()), float(arr.max()), float(arr.mean()),
                          len(ratios))


@dataclass(frozen=True)
class CoverElement:
    """One cylinder of an expanding cover with its contraction translation."""

    cylinder: Cylinder
    contraction: ReducedWord  # inverse of the cylinder prefix


def expanding_cover(m: int, depth: int, rank: int,
                    a: float = DEFAULT_BASE) -> list[CoverElement]:
    """All length-m prefixes as disjoint cylinders covering the whole boundary."""
    if m > depth:
        raise DomainError(f"cover depth {m} exceeds truncation depth {depth}")
    if m < 1:
        raise DomainError("cover depth must be at least 1")
    out = []
    for w in enumerate_words(rank, m):
        word = ReducedWord(w, rank)
        rep = enumerate_words(rank, depth, w)[0]
        cyl = Cylinder(BoundaryPoint(ReducedWord(rep, rank)), m)
        out.append(CoverElement(cyl, word.inverse()))
    return out
