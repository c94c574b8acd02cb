"""Reduced words in the free group on generators g0, g1, g2, ...

Words are kept in run-length form ``((generator, exponent), ...)`` and are
freely reduced on construction, so equality and hashing are exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

Letter = tuple[int, int]

_TOKEN = re.compile(r"^g(\d+)(?:\^(-?\d+))?$")


def _reduce(letters: Iterable[Letter]) -> tuple[Letter, ...]:
    stack: list[Letter] = []
    for gen, exp in letters:
        if gen < 0:
            raise ValueError(f"negative generator index {gen}")
        if exp == 0:
            continue
        if stack and stack[-1][0] == gen:
            merged = stack[-1][1] + exp
            stack.pop()
            if merged:
                stack.append((gen, merged))
        else:
            stack.append((gen, exp))
    return tuple(stack)


@dataclass(frozen=True, order=True)
class Word:
    letters: tuple[Letter, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "letters", _reduce(self.letters))

    @classmethod
    def gen(cls, index: int, exponent: int = 1) -> Word:
        return cls(((index, exponent),))

    @classmethod
    def from_units(cls, units: Iterable[Letter]) -> Word:
        """Build a word from unit letters written left to right."""
        return cls(tuple(units))

    @classmethod
    def parse(cls, text: str) -> Word:
        """Parse ``"g0 g1^-2 g3"``; ``""`` and ``"1"`` give the identity."""
        text = text.strip()
        if text in ("", "1", "e"):
            return IDENTITY
        letters = []
        for token in text.split():
            m = _TOKEN.match(token)
            if m is None:
                raise ValueError(f"cannot parse word token {token!r}")
            letters.append((int(m.group(1)), int(m.group(2) or 1)))
        return cls(tuple(letters))

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(f"g{g}" if e == 1 else f"g{g}^{e}" for g, e in self.letters)

    def __repr__(self) -> str:
        return f"Word({str(self)!r})"

    def __len__(self) -> int:
        return sum(abs(e) for _, e in self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __mul__(self, other: Word) -> Word:
        return multiply(self, other)

    def inverse(self) -> Word:
        return Word(tuple((g, -e) for g, e in reversed(self.letters)))

    def generators(self) -> frozenset[int]:
        return frozenset(g for g, _ in self.letters)

    def max_generator(self) -> int:
        """Largest generator index used, or -1 for the identity."""
        return max((g for g, _ in self.letters), default=-1)

    def units(self) -> Iterator[Letter]:
        """Unit letters ``(gen, +-1)`` left to right."""
        for g, e in self.letters:
            step = 1 if e > 0 else -1
            for _ in range(abs(e)):
                yield (g, step)

    def units_applied_order(self) -> Iterator[Letter]:
        """Unit letters in the order they act on a point (right to left)."""
        for g, e in reversed(self.letters):
            step = 1 if e > 0 else -1
            for _ in range(abs(e)):
                yield (g, step)


IDENTITY = Word()


def multiply(a: Word, b: Word) -> Word:
    return Word(a.letters + b.letters)


def conjugate(w: Word, g: Word) -> Word:
    """Return ``g w g^-1``."""
    return Word(g.letters + w.letters + g.inverse().letters)


def count_reduced(rank: int, max_length: int) -> int:
    """Number of reduced words of length <= max_length on ``rank`` generators."""
    if rank == 0:
        return 1
    total, layer = 1, 2 * rank
    for _ in range(max_length):
        total += layer
        layer *= 2 * rank - 1
    return total


@dataclass(frozen=True)
class WordSet:
    """A finite set of reduced words.

    Either an explicit list (``explicit``) or a ball: every reduced word of
    length at most ``max_length`` over ``generators``. Balls are enumerated
    lazily because the sets used for navigation get very large; membership
    and action on points never need the enumeration.
    """

    description: str
    explicit: tuple[Word, ...] | None = None
    generators: tuple[int, ...] = ()
    max_length: int = 0
    extra: tuple[Word, ...] = field(default=())

    @property
    def is_ball(self) -> bool:
        return self.explicit is None

    def __contains__(self, w: object) -> bool:
        if not isinstance(w, Word):
            return False
        if self.explicit is not None:
            return w in self._explicit_set
        if w in self.extra:
            return True
        return len(w) <= self.max_length and w.generators() <= set(self.generators)

    @cached_property
    def _explicit_set(self) -> frozenset[Word]:
        return frozenset(self.explicit or ())

    def __iter__(self) -> Iterator[Word]:
        if self.explicit is not None:
            return iter(self.explicit)
        return iter(self.words)

    def __len__(self) -> int:
        if self.explicit is not None:
            return len(self.explicit)
        extra = sum(1 for w in self.extra if not self._in_ball(w))
        return count_reduced(len(self.generators), self.max_length) + extra

    def _in_ball(self, w: Word) -> bool:
        return len(w) <= self.max_length and w.generators() <= set(self.generators)

    @cached_property
    def words(self) -> tuple[Word, ...]:
        if self.explicit is not None:
            return self.explicit
        out = list(_enumerate_ball(self.generators, self.max_length))
        out.extend(w for w in self.extra if not self._in_ball(w))
        return tuple(out)


def _enumerate_ball(generators: Sequence[int], max_length: int) -> Iterator[Word]:
    units = [(g, s) for g in sorted(generators) for s in (1, -1)]
    layer: list[tuple[Letter, ...]] = [()]
    yield IDENTITY
    for _ in range(max_length):
        nxt = []
        for seq in layer:
            for u in units:
                if seq and seq[-1] == (u[0], -u[1]):
                    continue
                nxt.append(seq + (u,))
        for seq in nxt:
            yield Word(seq)
        layer = nxt


def ball(generators: Iterable[int], max_length: int, description: str = "") -> WordSet:
    gens = tuple(sorted(set(generators)))
    if not gens:
        raise ValueError("ball needs at least one generator")
    if max_length < 0:
        raise ValueError("max_length must be >= 0")
    return WordSet(
        description or f"ball(g{{{','.join(map(str, gens))}}}, {max_length})",
        generators=gens,
        max_length=max_length,
    )


def explicit(words: Iterable[Word], description: str) -> WordSet:
    seen: dict[Word, None] = {}
    for w in words:
        seen.setdefault(w, None)
    return WordSet(description, explicit=tuple(seen))


@dataclass(frozen=True)
class Product:
    """A product ``Q_r ... Q_2 Q_1`` of word sets, kept in stages.

    ``stages`` is written left to right like the product, so the last stage
    acts first on a point.
    """

    stages: tuple[WordSet, ...]

    @property
    def description(self) -> str:
        return " . ".join(s.description for s in self.stages)

    def applied_order(self) -> Iterator[WordSet]:
        return reversed(self.stages)


def make_s_sets(
    t: int, n: int, K: int, v_sizes: dict[int, int]
) -> tuple[WordSet, WordSet, WordSet, WordSet, WordSet]:
    """The five navigation sets used to reach a block with f(l) = n.

    ``S5`` ranges over g0..gn: the blocks carry a transitive action of G_n,
    which includes g0.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not v_sizes:
        raise ValueError("need block sizes |V_j|")
    if not t >= n >= 1:
        raise ValueError(f"need t >= n >= 1, got t={t}, n={n}")
    if n not in v_sizes:
        raise ValueError(f"missing |V_{n}|")
    reach = max(size for j, size in v_sizes.items() if 1 <= j <= t)
    s1 = ball(range(t + 1), reach, "S1")
    s2 = explicit([IDENTITY] + [Word.gen(i) for i in range(t + 2)], "S2")
    s3 = ball((K, 2 * K, 3 * K), 3 * K, "S3")
    s4 = explicit([Word.gen(n + 1)], "S4")
    s5 = ball(range(n + 1), v_sizes[n], "S5")
    return s1, s2, s3, s4, s5


def navigation_product(s_sets: Sequence[WordSet]) -> Product:
    s1, s2, s3, s4, s5 = s_sets
    return Product((s5, s4, s3, s2, s1))
