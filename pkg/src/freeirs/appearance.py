"""Equivariant copies of finite actions, block navigation, cylinder measures.

``appears_in`` looks for a G_n-invariant subset of a region carrying a copy
of a finite transitive action. ``verify_claim1`` builds the explicit word
chain that walks from any point of a low block to the nearest block with
f(l) = n and covers it. The cylinder functions compute exact measures for
generalized Bernoulli shifts on 2^J, and ``truncated_action`` produces finite
actions that agree with a given action on a finite window.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

from .actions import FiniteAction
from .glue import (
    BOUNDARY,
    GlueError,
    GluedPoint,
    GluedTruncation,
    image_indices,
)
from .schedule import Schedule
from .words import IDENTITY, Word, make_s_sets, navigation_product

Step = Callable[[int, Any, bool], Any]


@dataclass(frozen=True)
class Embedding:
    """phi[v] is the image of point v; ``base`` is the seed pair."""

    phi: tuple[Hashable, ...]
    base: tuple[int, Hashable]

    @property
    def image(self) -> frozenset:
        return frozenset(self.phi)

    def to_json(self) -> dict[str, Any]:
        return {
            "phi": [str(p) for p in self.phi],
            "base": [self.base[0], str(self.base[1])],
        }


def _is_out(x: Any) -> bool:
    return x is BOUNDARY or (isinstance(x, int) and x < 0)


def appears_in_indices(
    alpha: FiniteAction, n: int, step: Step, region: Sequence[Any]
) -> tuple[Any, ...] | None:
    """Core search; ``step(gen, point, inverse)`` is the target action.

    Seeds v0 = 0 and tries every candidate image in ``region`` order,
    propagating along the Schreier graph of alpha over g0..gn.
    """
    if alpha.max_generator() > n:
        raise ValueError(f"alpha moves g{alpha.max_generator()} beyond g{n}")
    inside = set(region)
    units = [(g, inv) for g in range(n + 1) for inv in (False, True)]
    for w0 in region:
        phi: dict[int, Any] = {0: w0}
        used = {w0}
        queue = deque([0])
        ok = True
        while queue and ok:
            v = queue.popleft()
            for gen, inv in units:
                v2 = alpha.step(gen, v, inv)
                w2 = step(gen, phi[v], inv)
                if _is_out(w2) or w2 not in inside:
                    ok = False
                    break
                if v2 in phi:
                    if phi[v2] != w2:
                        ok = False
                        break
                elif w2 in used:
                    ok = False
                    break
                else:
                    phi[v2] = w2
                    used.add(w2)
                    queue.append(v2)
        if ok and len(phi) == alpha.size:
            return tuple(phi[v] for v in range(alpha.size))
    return None


def appears_in(
    alpha: FiniteAction,
    n: int,
    target: GluedTruncation | FiniteAction,
    region: Iterable[Any],
) -> Embedding | None:
    """An equivariant embedding of alpha (relative to n) into ``region``, or None."""
    if not alpha.is_transitive():
        raise ValueError("alpha must be transitive")
    pts = sorted(set(region))
    if isinstance(target, GluedTruncation):
        idx = [target.index(p) for p in pts]
        phi = appears_in_indices(alpha, n, target.step_index, idx)
        if phi is None:
            return None
        phi = tuple(target.points[q] for q in phi)
    else:
        if any(not 0 <= p < target.size for p in pts):
            raise ValueError("region contains points outside the target")
        phi = appears_in_indices(alpha, n, target.step, pts)
        if phi is None:
            return None
    emb = Embedding(phi, (0, phi[0]))
    if not verify_embedding(alpha, n, target, emb):
        raise AssertionError("embedding search returned an invalid embedding")
    return emb


def verify_embedding(
    alpha: FiniteAction, n: int, target: GluedTruncation | FiniteAction, emb: Embedding
) -> bool:
    """Injective, equivariant for g0..gn, and with a G_n-invariant image."""
    if len(set(emb.phi)) != alpha.size:
        return False
    image = emb.image
    for gen in range(n + 1):
        for inv in (False, True):
            for v in range(alpha.size):
                w = target.step(gen, emb.phi[v], inv)
                if w != emb.phi[alpha.step(gen, v, inv)] or w not in image:
                    return False
    return True


# -- navigation to a block with f(l) = n -----------------------------------


class Claim1Failure(RuntimeError):
    def __init__(self, stage: int, message: str, frontier: Iterable[str] = ()):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage
        self.frontier = sorted(frontier)


@dataclass(frozen=True)
class Claim1Witness:
    start: GluedPoint
    j: int
    l: int
    n: int
    t: int
    K: int
    gamma: Word
    link: Word
    gamma_prime: Word
    enter: Word
    covering: tuple[tuple[GluedPoint, Word], ...]

    @property
    def head(self) -> Word:
        """g_{n+1} gamma' s2 gamma, taking the start point to w_l."""
        return self.enter * self.gamma_prime * self.link * self.gamma

    def full_words(self) -> list[tuple[GluedPoint, Word]]:
        return [(x, s5 * self.head) for x, s5 in self.covering]

    def to_json(self) -> dict[str, Any]:
        return {
            "start": str(self.start),
            "j": self.j,
            "l": self.l,
            "n": self.n,
            "t": self.t,
            "K": self.K,
            "S1": str(self.gamma),
            "S2": str(self.link),
            "S3": str(self.gamma_prime),
            "S4": str(self.enter),
            "S5": {str(x): str(w) for x, w in self.covering},
            "words": {str(x): str(w) for x, w in self.full_words()},
        }


def _bfs_word(
    b: GluedTruncation,
    start: int,
    targets: set[int],
    generators: Sequence[int],
    max_length: int,
    allowed: Callable[[int], bool] = lambda p: True,
) -> dict[int, Word] | tuple[None, set[int]]:
    """Shortest words from ``start`` to each reachable target within max_length."""
    parent: dict[int, tuple[int, int, int] | None] = {start: None}
    dist = {start: 0}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        if dist[p] == max_length:
            continue
        for gen in generators:
            for sign in (1, -1):
                q = b.step_index(gen, p, sign < 0)
                if q < 0 or q in parent or not allowed(q):
                    continue
                parent[q] = (p, gen, sign)
                dist[q] = dist[p] + 1
                queue.append(q)
    found = {}
    for tgt in targets:
        if tgt not in parent:
            continue
        units = []
        q = tgt
        while parent[q] is not None:
            p, gen, sign = parent[q]
            units.append((gen, sign))
            q = p
        # units were collected from the endpoint back; the first applied
        # letter is rightmost in the word
        found[tgt] = Word.from_units(units)
    if len(found) < len(targets):
        return None, set(parent)
    return found


def target_block(s: Schedule, j: int, n: int) -> int:
    """Least l in the K_n-interval of j with f(l) = n."""
    K = s.K[n]
    lo = (j // K) * K
    for l in range(lo, min(lo + K, s.horizon)):
        if s.values[l] == n:
            return l
    raise Claim1Failure(3, f"no l with f(l)={n} in [{lo}, {lo + K}) within the horizon")


def verify_claim1(
    b: GluedTruncation, s: Schedule, v: GluedPoint, n: int, t: int
) -> Claim1Witness:
    """Explicit words taking v to every point of W_l, stage by stage."""
    p = b.index(v)
    j = v.block
    fj = b.f[j]
    if fj > t:
        raise ValueError(f"f({j}) = {fj} > t = {t}")
    if n > t:
        raise ValueError(f"need n <= t, got n={n}, t={t}")
    if n not in s.K:
        raise ValueError(f"schedule has no K_{n}")
    K = s.K[n]
    sizes = {i: a.size for i, a in b.family.items()}
    S1, S2, S3, S4, S5 = make_s_sets(t, n, K, sizes)
    wj, uj = b.w(j), b.u(j)

    # stage 1: inside W_j to the marked point
    if v.tag == "U":
        gamma = IDENTITY
    else:
        found = _bfs_word(b, p, {wj}, range(t + 1), S1.max_length)
        if isinstance(found, tuple):
            raise Claim1Failure(1, f"w_{j} not reached from {v}", map(str, map(b.point, found[1])))
        gamma = found[wj]
    # stage 2: across the u-link
    link = IDENTITY if v.tag == "U" else Word.gen(fj + 1)
    if b.apply_index(link * gamma, p) != uj:
        raise Claim1Failure(2, f"{link} does not link w_{j} to u_{j}")

    # stage 3: along the top cycles of g_K, g_2K, g_3K
    l = target_block(s, j, n)
    if l >= b.M:
        raise Claim1Failure(3, f"target block {l} outside T_{b.M}")
    ul = b.u(l)
    u_points = {b.u(d) for d in range(b.M)}
    found = _bfs_word(b, uj, {ul}, (K, 2 * K, 3 * K), 3 * K, u_points.__contains__)
    if isinstance(found, tuple):
        raise Claim1Failure(3, f"u_{l} not reached from u_{j}", map(str, map(b.point, found[1])))
    gamma_prime = found[ul]

    # stage 4: into W_l
    enter = Word.gen(n + 1)
    wl = b.w(l)
    if b.step_index(n + 1, ul) != wl:
        raise Claim1Failure(4, f"g{n + 1} does not take u_{l} to w_{l}")

    # stage 5: cover W_l
    block = set(b.block_points(l))
    found = _bfs_word(b, wl, block, range(n + 1), S5.max_length)
    if isinstance(found, tuple):
        raise Claim1Failure(5, f"W_{l} not covered from w_{l}", map(str, map(b.point, found[1])))
    covering = tuple((b.point(x), found[x]) for x in sorted(block))

    for word, ws in ((gamma, S1), (link, S2), (gamma_prime, S3), (enter, S4)):
        if word not in ws:
            raise Claim1Failure(0, f"{word} not in {ws.description}")
    for _, word in covering:
        if word not in S5:
            raise Claim1Failure(5, f"{word} not in S5")
    witness = Claim1Witness(v, j, l, n, t, K, gamma, link, gamma_prime, enter, covering)
    for x, word in witness.full_words():
        if b.apply(word, v) != x:
            raise Claim1Failure(0, f"replay of {word} misses {x}")
    return witness


def claim1_region(b: GluedTruncation, s: Schedule, v: GluedPoint, n: int, t: int) -> set[GluedPoint]:
    """Q.v for Q = S5 S4 S3 S2 S1, by breadth-first stages (no witness search)."""
    sizes = {i: a.size for i, a in b.family.items()}
    sets = make_s_sets(t, n, s.K[n], sizes)
    found, _ = image_indices(b, [b.index(v)], navigation_product(sets))
    return {b.point(q) for q in found}


def eligible_points(b: GluedTruncation, t: int, blocks: int | None = None) -> list[GluedPoint]:
    blocks = b.M if blocks is None else blocks
    return [p for p in b.points[: b.prefix_size(blocks)] if b.f[p.block] <= t]


# -- cylinder sets in 2^J and generalized shifts ---------------------------


@dataclass(frozen=True)
class CylinderSpec:
    values: Mapping[int, int]

    def __post_init__(self) -> None:
        if any(x not in (0, 1) for x in self.values.values()):
            raise ValueError("cylinder values must be 0 or 1")
        object.__setattr__(self, "values", dict(sorted(self.values.items())))

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(self.values)

    def measure(self) -> Fraction:
        return Fraction(1, 2 ** len(self.values))


def all_cylinders(domain: Sequence[int]) -> list[CylinderSpec]:
    pts = sorted(domain)
    return [CylinderSpec(dict(zip(pts, bits))) for bits in product((0, 1), repeat=len(pts))]


def _resolve(action: Any, g: Word, v: int) -> int:
    w = action.apply(g, v)
    if _is_out(w):
        raise GlueError(f"action of {g} at {v} is not resolvable")
    return w


def shift_cylinder_measure(
    action: Any, g: Word, rho: CylinderSpec, sigma: CylinderSpec
) -> Fraction:
    """mu(s(g) N_rho cap N_sigma) for the shift (s(g) x)(i) = x(g^-1 i).

    s(g) N_rho is the cylinder rho o g^-1 on g.dom(rho); the intersection is a
    cylinder or empty.
    """
    moved = {_resolve(action, g, v): bit for v, bit in rho.values.items()}
    for p, bit in sigma.values.items():
        if p in moved and moved[p] != bit:
            return Fraction(0)
    return Fraction(1, 2 ** len(moved.keys() | sigma.values.keys()))


def check_truncation_agreement(
    alpha: FiniteAction, alpha_hat: FiniteAction, n: int, T: Iterable[int]
) -> bool:
    """alpha_hat(g_k) v = alpha(g_k) v for all k < n and v in T."""
    return all(
        alpha.step(k, v) == alpha_hat.step(k, v) for k in range(n) for v in T
    )


def cylinder_agreement(
    alpha: FiniteAction, alpha_hat: FiniteAction, n: int, T: Sequence[int]
) -> bool:
    """Shift cylinder measures agree for all rho, sigma in 2^T and k < n."""
    cyl = all_cylinders(T)
    for k in range(n):
        g = Word.gen(k)
        for rho in cyl:
            for sigma in cyl:
                if shift_cylinder_measure(alpha, g, rho, sigma) != \
                        shift_cylinder_measure(alpha_hat, g, rho, sigma):
                    return False
    return True


def truncated_action(
    alpha: FiniteAction, n: int, T: Sequence[int] | None = None
) -> tuple[FiniteAction, tuple[int, ...]]:
    """A finite action alpha_hat on the points of alpha with

    (I)   alpha_hat(g_k) = alpha(g_k) on T for k < n,
    (II)  g_k trivial for k > n,
    (III) a finite invariant V_n, transitive under alpha_hat, off which the
          action is trivial.

    T defaults to the first n points. Returns (alpha_hat, V_n).
    """
    T = list(range(min(n, alpha.size))) if T is None else sorted(set(T))
    if not T:
        raise ValueError("window T must be non-empty")
    perms = {}
    window = set(T)
    for k in range(n):
        images = {v: alpha.step(k, v) for v in T}
        span = sorted(window | set(images.values()))
        free_src = [x for x in span if x not in images]
        free_dst = [x for x in span if x not in set(images.values())]
        images.update(zip(free_src, free_dst))
        table = list(range(alpha.size))
        for x, y in images.items():
            table[x] = y
        perms[k] = tuple(table)
        window |= set(span)
    V = tuple(sorted(window))
    cycle = list(range(alpha.size))
    for a, c in zip(V, V[1:] + V[:1]):
        cycle[a] = c
    perms[n] = tuple(cycle)
    return FiniteAction(alpha.size, perms), V


def truncated_family(alpha: FiniteAction, max_n: int) -> dict[int, FiniteAction]:
    """alpha_n = alpha_hat_n restricted to V_n, for n = 1..max_n."""
    out = {}
    for n in range(1, max_n + 1):
        hat, V = truncated_action(alpha, n)
        out[n] = hat.restrict_to_invariant(V)
    return out


@dataclass(frozen=True)
class NeighborhoodChecklist:
    """The finitely many cylinder conditions defining U_{n, eps, T} around alpha."""

    n: int
    epsilon: Fraction
    T: tuple[int, ...]
    rows: tuple[tuple[int, CylinderSpec, CylinderSpec, Fraction], ...]

    def contains(self, other: Any) -> bool:
        return all(
            abs(shift_cylinder_measure(other, Word.gen(k), rho, sigma) - value) < self.epsilon
            for k, rho, sigma, value in self.rows
        )


def neighborhood_checklist(
    alpha: FiniteAction, n: int, epsilon: Fraction, T: Sequence[int]
) -> NeighborhoodChecklist:
    cyl = all_cylinders(T)
    rows = tuple(
        (k, rho, sigma, shift_cylinder_measure(alpha, Word.gen(k), rho, sigma))
        for k in range(n) for rho in cyl for sigma in cyl
    )
    return NeighborhoodChecklist(n, Fraction(epsilon), tuple(sorted(T)), rows)
