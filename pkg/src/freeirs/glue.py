"""Truncations of the glued transitive action.

Block j is a copy W_j of V_{f(j)} carrying alpha_{f(j)}, plus a linking point
u_j. Points are numbered block by block (W_0, u_0, W_1, u_1, ...), so every
truncation T_m is an index prefix. Four rule families define the generators:

* block: g_k with k <= f(j) acts on W_j as alpha_{f(j)}(g_k);
* u-link: g_{f(j)+1} swaps the marked point w_j (index 0 of W_j) with u_j;
* w-chain: g_{l_j} swaps w_j with w_{j+1};
* top cycles: g_n (n >= 1) cycles the u_d, d in [kn, (k+1)n), with
  f(d)+1 != n, in increasing order.

Everything else is fixed. A rule whose target lies outside T_M yields
``BOUNDARY``; nothing silently fixes such a point.
"""

from __future__ import annotations

import math
from collections import deque
from itertools import chain
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Mapping, Union

from .actions import FiniteAction, check_family
from .schedule import Schedule
from .words import Product, Word, WordSet


class GlueError(ValueError):
    pass


class DoubleAssignment(GlueError):
    def __init__(self, generator: int, point: GluedPoint, first: str, second: str):
        super().__init__(
            f"g{generator} at {point} assigned by both {first} and {second}"
        )
        self.generator = generator
        self.point = point


class BoundaryError(GlueError):
    pass


class _Boundary:
    _instance = None

    def __new__(cls) -> _Boundary:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOUNDARY"

    def __bool__(self) -> bool:
        return False


BOUNDARY = _Boundary()
_OUT = -1


@dataclass(frozen=True, order=True)
class GluedPoint:
    block: int
    tag: str
    index: int | None = None

    def __post_init__(self) -> None:
        if self.tag not in ("U", "W"):
            raise ValueError(f"bad tag {self.tag!r}")
        if (self.tag == "U") != (self.index is None):
            raise ValueError("U-points carry no index, W-points need one")

    @classmethod
    def W(cls, block: int, index: int) -> GluedPoint:
        return cls(block, "W", index)

    @classmethod
    def U(cls, block: int) -> GluedPoint:
        return cls(block, "U")

    @classmethod
    def parse(cls, text: str) -> GluedPoint:
        """``"W3.1"`` or ``"U3"``."""
        text = text.strip()
        if text.startswith("U"):
            return cls.U(int(text[1:]))
        if text.startswith("W"):
            block, index = text[1:].split(".")
            return cls.W(int(block), int(index))
        raise ValueError(f"cannot parse point {text!r}")

    def __str__(self) -> str:
        return f"U{self.block}" if self.tag == "U" else f"W{self.block}.{self.index}"


PointOrBoundary = Union[GluedPoint, _Boundary]


def chain_indices(s: Schedule, count: int) -> list[int]:
    """Least strictly increasing l_0 < l_1 < ... with max(n, f(0..n+1)) + 1 < l_n."""
    out: list[int] = []
    running = s.f(0)
    for n in range(count):
        running = max(running, s.f(n + 1))
        floor = max(n, running) + 2
        out.append(max(floor, out[-1] + 1) if out else floor)
    return out


class GluedTruncation:
    """The glued action restricted to T_M (blocks 0..M-1)."""

    def __init__(self, alphas: Mapping[int, FiniteAction], schedule: Schedule, M: int):
        if M < 1:
            raise GlueError("M must be >= 1")
        if M >= schedule.horizon:
            raise GlueError(f"M={M} needs f up to index M, horizon is {schedule.horizon}")
        used = {schedule.f(j) for j in range(M + 1)}
        check_family(alphas, used)
        for n in used:
            if schedule.g[n] != alphas[n].size + 1:
                raise GlueError(f"schedule weight g({n}) != |V_{n}| + 1")
        self.M = M
        self.schedule = schedule
        self.alphas = {n: alphas[n] for n in sorted(used)}
        self.family = dict(sorted(alphas.items()))
        self.f = schedule.values
        self.l = chain_indices(schedule, M)

        self.offsets: list[int] = []
        self.points: list[GluedPoint] = []
        for j in range(M):
            self.offsets.append(len(self.points))
            size = self.alphas[self.f[j]].size
            self.points.extend(GluedPoint.W(j, i) for i in range(size))
            self.points.append(GluedPoint.U(j))
        self.size = len(self.points)
        self._index = {p: i for i, p in enumerate(self.points)}

        self.max_generator = max(
            [self.l[-1], M] + [self.f[j] + 1 for j in range(M)]
        )
        ident = list(range(self.size))
        self._fwd = [ident[:] for _ in range(self.max_generator + 1)]
        self._inv = [ident[:] for _ in range(self.max_generator + 1)]
        self.provenance: dict[tuple[int, int], str] = {}
        self._assemble()

    # -- indexing ---------------------------------------------------------

    def w(self, j: int, i: int = 0) -> int:
        return self.offsets[j] + i

    def u(self, j: int) -> int:
        return self.offsets[j] + self.block_size(j)

    def block_size(self, j: int) -> int:
        return self.alphas[self.f[j]].size

    def index(self, p: GluedPoint) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise GlueError(f"{p} is not in T_{self.M}") from None

    def point(self, i: int) -> GluedPoint:
        return self.points[i]

    def block_points(self, j: int) -> range:
        return range(self.offsets[j], self.offsets[j] + self.block_size(j))

    def prefix_size(self, m: int) -> int:
        """|T_m|."""
        if not 0 <= m <= self.M:
            raise GlueError(f"T_{m} is not inside T_{self.M}")
        return self.offsets[m] if m < self.M else self.size

    # -- construction -----------------------------------------------------

    def _set(self, gen: int, p: int, fwd: int, inv: int, family: str) -> None:
        key = (gen, p)
        if key in self.provenance:
            raise DoubleAssignment(gen, self.points[p], self.provenance[key], family)
        self.provenance[key] = family
        self._fwd[gen][p] = fwd
        self._inv[gen][p] = inv

    def _assemble(self) -> None:
        M = self.M
        for j in range(M):
            alpha = self.alphas[self.f[j]]
            base = self.offsets[j]
            for gen in sorted(alpha.support):
                for i in range(alpha.size):
                    self._set(gen, base + i, base + alpha.step(gen, i),
                              base + alpha.step(gen, i, inverse=True), "block")
        for j in range(M):
            gen, wj, uj = self.f[j] + 1, self.w(j), self.u(j)
            self._set(gen, wj, uj, uj, "u-link")
            self._set(gen, uj, wj, wj, "u-link")
        for j in range(M):
            gen = self.l[j]
            if j + 1 < M:
                a, b = self.w(j), self.w(j + 1)
                self._set(gen, a, b, b, "w-chain")
                self._set(gen, b, a, a, "w-chain")
            else:
                self._set(gen, self.w(j), _OUT, _OUT, "w-chain")
        for gen in range(1, self.max_generator + 1):
            for j in range(M):
                if self.f[j] + 1 == gen:
                    continue
                self._set(gen, self.u(j), self._top_step(gen, j, False),
                          self._top_step(gen, j, True), "top")

    def _eligible(self, n: int, d: int) -> bool | None:
        if d >= self.schedule.horizon:
            return None
        return self.schedule.values[d] + 1 != n

    def _top_step(self, n: int, j: int, inverse: bool) -> int:
        """Image of u_j under the top cycle of g_n (or its inverse)."""
        lo = (j // n) * n
        hi = lo + n
        horizon = self.schedule.horizon
        if inverse:
            order = chain(range(j - 1, lo - 1, -1), range(min(hi - 1, horizon), j, -1))
        else:
            order = chain(range(j + 1, min(hi, horizon + 1)), range(lo, j))
        for d in order:
            e = self._eligible(n, d)
            if e is None:
                return _OUT
            if e:
                return self.u(d) if d < self.M else _OUT
        return self.u(j)

    # -- action -----------------------------------------------------------

    def step_index(self, gen: int, p: int, inverse: bool = False) -> int:
        """Image of point index ``p`` under g_gen^(+-1); ``-1`` is the boundary."""
        if gen <= self.max_generator:
            return (self._inv if inverse else self._fwd)[gen][p]
        pt = self.points[p]
        if pt.tag == "W":
            return p
        return self._top_step(gen, pt.block, inverse)

    def apply_index(self, w: Word, p: int) -> int:
        for gen, sign in w.units_applied_order():
            p = self.step_index(gen, p, sign < 0)
            if p < 0:
                return _OUT
        return p

    def step(self, gen: int, p: GluedPoint, inverse: bool = False) -> PointOrBoundary:
        q = self.step_index(gen, self.index(p), inverse)
        return BOUNDARY if q < 0 else self.points[q]

    def apply(self, w: Word, p: GluedPoint) -> PointOrBoundary:
        q = self.apply_index(w, self.index(p))
        return BOUNDARY if q < 0 else self.points[q]

    # -- structure --------------------------------------------------------

    def skips(self, gen: int, j: int) -> bool:
        """Is u_j left out of the top cycles of g_gen?"""
        return self.f[j] + 1 == gen

    def edges(self, gen: int) -> Iterator[tuple[int, int]]:
        """Defined (non-fixed-by-default) edges of g_gen as index pairs."""
        for p in range(self.size):
            if (gen, p) in self.provenance:
                yield p, self._fwd[gen][p]

    def to_json(self) -> dict[str, Any]:
        gens = {}
        for gen in range(self.max_generator + 1):
            rows = []
            for p, q in self.edges(gen):
                if q == p:
                    continue
                rows.append([str(self.points[p]),
                             "boundary" if q < 0 else str(self.points[q]),
                             self.provenance[(gen, p)]])
            if rows:
                gens[str(gen)] = rows
        return {
            "M": self.M,
            "size": self.size,
            "f": list(self.f[:self.M]),
            "l": self.l,
            "blocks": [self.block_size(j) for j in range(self.M)],
            "edges": gens,
        }


def assemble(alphas: Mapping[int, FiniteAction], s: Schedule, M: int) -> GluedTruncation:
    return GluedTruncation(alphas, s, M)


def apply_glued(b: GluedTruncation, w: Word, p: GluedPoint) -> PointOrBoundary:
    return b.apply(w, p)


def factorial_stage(b: GluedTruncation, m: int) -> int:
    if m < 0 or math.factorial(m) > b.M:
        raise GlueError(f"{m}! exceeds M={b.M}")
    return math.factorial(m)


def invariant_prefix(b: GluedTruncation, m: int) -> list[GluedPoint]:
    """T_{m!}, after certifying closure under g_0..g_m and inverses."""
    size = certify_prefix(b, factorial_stage(b, m), range(m + 1))
    return b.points[:size]


def certify_prefix(b: GluedTruncation, blocks: int, generators: Iterable[int]) -> int:
    size = b.prefix_size(blocks)
    for gen in generators:
        for p in range(size):
            for inverse in (False, True):
                q = b.step_index(gen, p, inverse)
                if not 0 <= q < size:
                    raise GlueError(
                        f"T_{blocks} not closed: g{gen}{'^-1' if inverse else ''} "
                        f"maps {b.points[p]} to "
                        f"{'boundary' if q < 0 else b.points[q]}"
                    )
    return size


# -- images of point sets under word sets ----------------------------------


def _ball_image(b: GluedTruncation, sources: set[int], ws: WordSet) -> tuple[set[int], bool]:
    dist = {p: 0 for p in sources}
    queue = deque(sorted(sources))
    hit = False
    units = [(g, inv) for g in ws.generators for inv in (False, True)]
    while queue:
        p = queue.popleft()
        if dist[p] == ws.max_length:
            continue
        for gen, inv in units:
            q = b.step_index(gen, p, inv)
            if q < 0:
                hit = True
            elif q not in dist:
                dist[q] = dist[p] + 1
                queue.append(q)
    out = set(dist)
    for w in ws.extra:
        more, h = _explicit_image(b, sources, (w,))
        out |= more
        hit |= h
    return out, hit


def _explicit_image(b: GluedTruncation, sources: set[int], words: Iterable[Word]) -> tuple[set[int], bool]:
    out, hit = set(), False
    for w in words:
        for p in sources:
            q = b.apply_index(w, p)
            if q < 0:
                hit = True
            else:
                out.add(q)
    return out, hit


def image_indices(
    b: GluedTruncation, sources: Iterable[int], Q: WordSet | Product
) -> tuple[set[int], bool]:
    """Resolvable images ``{q p}`` and whether some word ran off T_M.

    Ball stages are evaluated as breadth-first balls in the Schreier graph,
    which reaches exactly the endpoints of the reduced words in the ball.
    """
    current = set(sources)
    hit = False
    stages = Q.applied_order() if isinstance(Q, Product) else (Q,)
    for ws in stages:
        if ws.is_ball:
            current, h = _ball_image(b, current, ws)
        else:
            current, h = _explicit_image(b, current, ws.explicit or ())
        hit |= h
    return current, hit


def orbit(b: GluedTruncation, p: GluedPoint, Q: WordSet | Product) -> set[GluedPoint]:
    found, _ = image_indices(b, [b.index(p)], Q)
    return {b.points[q] for q in found}
