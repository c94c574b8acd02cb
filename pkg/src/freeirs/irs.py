"""Stage measures on the space of subgroups.

A stage measure is the pushforward of the uniform measure on an invariant
prefix F = T_{m!} under v -> stab(v). It is only ever evaluated on basic
clopen sets, so a stabilizer is represented by the membership queries
"does w fix v?", cached as bitmasks over F.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .appearance import appears_in_indices
from .glue import BoundaryError, GluedPoint, GluedTruncation, certify_prefix, factorial_stage, image_indices
from .words import IDENTITY, Product, Word, WordSet, conjugate


class StageError(ValueError):
    pass


@dataclass(frozen=True)
class ClopenSet:
    """Subgroups containing every ``in_words`` and none of ``out_words``."""

    in_words: frozenset[Word] = frozenset()
    out_words: frozenset[Word] = frozenset()

    @classmethod
    def of(cls, ins: Iterable[Word | str] = (), outs: Iterable[Word | str] = ()) -> ClopenSet:
        def norm(ws):
            return frozenset(w if isinstance(w, Word) else Word.parse(w) for w in ws)

        return cls(norm(ins), norm(outs))

    @property
    def contradictory(self) -> bool:
        return bool(self.in_words & self.out_words) or IDENTITY in self.out_words

    def words(self) -> frozenset[Word]:
        return self.in_words | self.out_words

    def max_generator(self) -> int:
        return max((w.max_generator() for w in self.words()), default=-1)

    def to_json(self) -> dict[str, Any]:
        return {
            "in": sorted(str(w) for w in self.in_words),
            "out": sorted(str(w) for w in self.out_words),
        }


def conjugate_clopen(C: ClopenSet, g: Word) -> ClopenSet:
    return ClopenSet(
        frozenset(conjugate(w, g) for w in C.in_words),
        frozenset(conjugate(w, g) for w in C.out_words),
    )


@dataclass
class EmpiricalIRS:
    """The stage-m measure of a truncation; the support is T_{m!}."""

    truncation: GluedTruncation
    m: int
    size: int = field(init=False)
    _masks: dict[Word, int] = field(init=False, default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        blocks = factorial_stage(self.truncation, self.m)
        self.size = certify_prefix(self.truncation, blocks, range(self.m + 1))
        self.blocks = blocks

    @property
    def support(self) -> range:
        return range(self.size)

    def support_points(self) -> list[GluedPoint]:
        return self.truncation.points[: self.size]

    def _check_word(self, w: Word) -> None:
        if w.max_generator() > self.m:
            raise StageError(
                f"{w} uses g{w.max_generator()}, not certified on T_{self.blocks} (stage {self.m})"
            )

    def fixed_mask(self, w: Word) -> int:
        """Bit v set iff w fixes point v of the support."""
        mask = self._masks.get(w)
        if mask is None:
            self._check_word(w)
            b = self.truncation
            mask = 0
            for v in range(self.size):
                if b.apply_index(w, v) == v:
                    mask |= 1 << v
            self._masks[w] = mask
        return mask

    def count(self, C: ClopenSet) -> int:
        full = (1 << self.size) - 1
        mask = full
        for w in C.in_words:
            mask &= self.fixed_mask(w)
        for w in C.out_words:
            mask &= full ^ self.fixed_mask(w)
        return mask.bit_count()


def theta(e: EmpiricalIRS, C: ClopenSet) -> Fraction:
    return Fraction(e.count(C), e.size)


@dataclass(frozen=True)
class InvarianceResult:
    lhs: Fraction
    rhs: Fraction

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


def check_invariance(e: EmpiricalIRS, C: ClopenSet, g: Word) -> InvarianceResult:
    """theta(g C g^-1) against theta(C); exact at every stage m >= indices."""
    if max(C.max_generator(), g.max_generator()) > e.m:
        raise StageError(f"generator indices exceed stage {e.m}")
    return InvarianceResult(theta(e, conjugate_clopen(C, g)), theta(e, C))


def invariance_sweep(
    e: EmpiricalIRS, words: Sequence[Word], conjugators: Sequence[Word]
) -> dict[str, Any]:
    """Conjugation invariance for every clopen set built from ``words``.

    For each conjugator g the fixed-point masks of h and g h g^-1 are computed
    by acting with both words directly. Reading the masks column-wise gives,
    for every support point, the pattern of words fixing it; the two pattern
    multisets coincide iff theta(C) = theta(g C g^-1) for every clopen set C
    with constraints drawn from ``words`` (any number of them).
    """
    base = [e.fixed_mask(w) for w in words]
    base_columns = sorted(_columns(base, e.size))
    failures = []
    for g in conjugators:
        conj = [e.fixed_mask(conjugate(w, g)) for w in words]
        if sorted(_columns(conj, e.size)) != base_columns:
            failures.append(str(g))
    return {
        "stage": e.m,
        "words": len(words),
        "conjugators": len(conjugators),
        "distinct_masks": len(set(base)),
        "failures": failures,
        "passed": not failures,
    }


def _columns(masks: Sequence[int], size: int) -> list[tuple[int, ...]]:
    return [tuple((m >> v) & 1 for m in masks) for v in range(size)]


# -- the sets A_{n,k} ------------------------------------------------------


def membership_A(
    e: EmpiricalIRS, v: int | GluedPoint, n: int, Q: WordSet | Product
) -> bool:
    """Does alpha_n appear in the orbit action of v within Q.v?

    The coset space G/stab(v) is identified with the orbit of v, so Q/stab(v)
    becomes the region Q.v. The region is computed inside T_M; a word that
    runs off the truncation is dropped, which can only shrink the region. A
    found embedding is therefore conclusive, while a failed search that lost
    words to the boundary is not and raises ``BoundaryError``.
    """
    b = e.truncation
    p = b.index(v) if isinstance(v, GluedPoint) else v
    if not 0 <= p < e.size:
        raise StageError(f"{b.points[p]} is not in the support")
    alpha = b.alphas.get(n)
    if alpha is None:
        raise StageError(f"alpha_{n} not available in the truncation")
    region, hit = image_indices(b, [p], Q)
    if appears_in_indices(alpha, n, b.step_index, sorted(region)) is not None:
        return True
    if hit:
        raise BoundaryError(f"region of {b.points[p]} under Q is cut by the truncation")
    return False


def claim3_statistic(e: EmpiricalIRS, n: int, Q: WordSet | Product) -> Fraction:
    """theta_m(A_{n,k}) for the region Q."""
    hits = sum(1 for v in e.support if membership_A(e, v, n, Q))
    return Fraction(hits, e.size)


@dataclass(frozen=True)
class Claim3Chain:
    stage: int
    n: int
    t: int
    statistic: Fraction
    eligible_fraction: Fraction
    weighted_fraction: Fraction

    @property
    def lower_bound_holds(self) -> bool:
        return self.statistic >= self.eligible_fraction

    @property
    def identity_holds(self) -> bool:
        return self.eligible_fraction == self.weighted_fraction

    def exceeds(self, epsilon: Fraction) -> bool:
        return self.weighted_fraction > 1 - epsilon and self.statistic > 1 - epsilon

    def to_json(self, epsilon: Fraction | None = None) -> dict[str, Any]:
        out = {
            "stage": self.stage,
            "n": self.n,
            "t": self.t,
            "statistic": str(self.statistic),
            "eligible_fraction": str(self.eligible_fraction),
            "weighted_fraction": str(self.weighted_fraction),
            "lower_bound_holds": self.lower_bound_holds,
            "identity_holds": self.identity_holds,
        }
        if epsilon is not None:
            out["epsilon"] = str(epsilon)
            out["passed"] = (
                self.lower_bound_holds and self.identity_holds and self.exceeds(epsilon)
            )
        return out


def claim3_chain(e: EmpiricalIRS, n: int, t: int, Q: WordSet | Product) -> Claim3Chain:
    """The statistic and the two counting expressions that bound it.

    ``eligible_fraction`` counts support points of blocks with f(j) <= t;
    ``weighted_fraction`` is the same count written through the schedule as
    sum of (|V_i| + 1) * #{j < m!: f(j) = i} over i <= t.
    """
    b = e.truncation
    f = b.f
    eligible = sum(
        1 for v in e.support if f[b.points[v].block] <= t
    )
    s = b.schedule
    weighted = sum(
        s.g[i] * sum(1 for j in range(e.blocks) if f[j] == i)
        for i in sorted(s.g) if i <= t
    )
    return Claim3Chain(
        e.m, n, t,
        claim3_statistic(e, n, Q),
        Fraction(eligible, e.size),
        Fraction(weighted, e.size),
    )
