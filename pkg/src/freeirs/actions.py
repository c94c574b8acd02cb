"""Finite actions of the free group, stored as Schreier graphs.

Points are ``0..size-1``. Each supported generator carries an image array and
its inverse; every generator outside the support acts as the identity.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .words import Word


class NotInvariantError(ValueError):
    def __init__(self, generator: int, point: int, image: int) -> None:
        super().__init__(
            f"g{generator} maps {point} to {image}, which leaves the subset"
        )
        self.generator = generator
        self.point = point
        self.image = image


@dataclass(frozen=True)
class FiniteAction:
    size: int
    perms: Mapping[int, tuple[int, ...]]
    _inverses: dict[int, tuple[int, ...]] = field(
        init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self) -> None:
        perms = {}
        inverses = {}
        for gen in sorted(self.perms):
            images = tuple(int(x) for x in self.perms[gen])
            if gen < 0:
                raise ValueError(f"negative generator index {gen}")
            if len(images) != self.size or sorted(images) != list(range(self.size)):
                raise ValueError(f"g{gen} is not a permutation of {self.size} points")
            if images == tuple(range(self.size)):
                continue
            inv = [0] * self.size
            for i, x in enumerate(images):
                inv[x] = i
            perms[gen] = images
            inverses[gen] = tuple(inv)
        object.__setattr__(self, "perms", perms)
        object.__setattr__(self, "_inverses", inverses)

    def __hash__(self) -> int:
        return hash((self.size, tuple(sorted(self.perms.items()))))

    @property
    def support(self) -> frozenset[int]:
        """Generators acting nontrivially; identity tables are dropped on construction."""
        return frozenset(self.perms)

    @property
    def points(self) -> range:
        return range(self.size)

    def max_generator(self) -> int:
        return max(self.perms, default=-1)

    def step(self, gen: int, v: int, inverse: bool = False) -> int:
        table = (self._inverses if inverse else self.perms).get(gen)
        return v if table is None else table[v]

    def apply(self, w: Word, v: int) -> int:
        if not 0 <= v < self.size:
            raise IndexError(f"point {v} not in 0..{self.size - 1}")
        for gen, exp in reversed(w.letters):
            table = (self.perms if exp > 0 else self._inverses).get(gen)
            if table is None:
                continue
            for _ in range(abs(exp)):
                v = table[v]
        return v

    def stabilizes(self, w: Word, v: int) -> bool:
        return self.apply(w, v) == v

    def orbits(self, generators: Iterable[int] | None = None) -> list[frozenset[int]]:
        gens = sorted(self.perms if generators is None else generators)
        seen = [False] * self.size
        classes = []
        for start in range(self.size):
            if seen[start]:
                continue
            seen[start] = True
            stack, orbit = [start], [start]
            while stack:
                v = stack.pop()
                for g in gens:
                    for x in (self.step(g, v), self.step(g, v, inverse=True)):
                        if not seen[x]:
                            seen[x] = True
                            stack.append(x)
                            orbit.append(x)
            classes.append(frozenset(orbit))
        return classes

    def is_transitive(self) -> bool:
        if self.size == 0:
            raise ValueError("empty point set")
        return len(self.orbits()) == 1

    def restrict_to_invariant(self, subset: Iterable[int]) -> FiniteAction:
        """Action on an invariant subset, re-indexed in increasing order."""
        points = sorted(set(subset))
        index = {p: i for i, p in enumerate(points)}
        perms = {}
        for gen in sorted(self.perms):
            for table in (self.perms[gen], self._inverses[gen]):
                for p in points:
                    if table[p] not in index:
                        raise NotInvariantError(gen, p, table[p])
            perms[gen] = tuple(index[self.perms[gen][p]] for p in points)
        return FiniteAction(len(points), perms)

    def to_json(self) -> dict[str, Any]:
        return {
            "size": self.size,
            "perms": {str(g): list(p) for g, p in sorted(self.perms.items())},
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> FiniteAction:
        perms = {int(g): tuple(p) for g, p in data.get("perms", {}).items()}
        return cls(int(data["size"]), perms)

    @classmethod
    def load(cls, path: str) -> FiniteAction:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def trivial_action(size: int = 1) -> FiniteAction:
    return FiniteAction(size, {})


def cycle_action(size: int, generator: int = 0) -> FiniteAction:
    return FiniteAction(size, {generator: tuple((i + 1) % size for i in range(size))})


def from_cycles(size: int, cycles: Mapping[int, Iterable[Iterable[int]]]) -> FiniteAction:
    """Build an action from cycle notation, e.g. ``{0: [(0, 1), (2, 3)]}``."""
    perms = {}
    for gen, cyc_list in cycles.items():
        images = list(range(size))
        for cyc in cyc_list:
            cyc = list(cyc)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                images[a] = b
        perms[gen] = tuple(images)
    return FiniteAction(size, perms)


def random_transitive(
    size: int, n: int, rng: random.Random, max_tries: int = 1000
) -> FiniteAction:
    """A random transitive action of size ``size`` with support {0..n}."""
    if size < 1:
        raise ValueError("size must be >= 1")
    for _ in range(max_tries):
        perms = {}
        for gen in range(n + 1):
            images = list(range(size))
            rng.shuffle(images)
            perms[gen] = tuple(images)
        a = FiniteAction(size, perms)
        if a.is_transitive():
            return a
    raise RuntimeError(f"no transitive action of size {size} found")


# Families of (alpha_n): n -> transitive action with support within {0..n}.


def cyclic_family(max_n: int) -> dict[int, FiniteAction]:
    """g0 acts as an (n+1)-cycle on V_n."""
    return {n: cycle_action(n + 1) for n in range(1, max_n + 1)}


def random_family(
    max_n: int, seed: int, min_size: int = 1, max_size: int = 4
) -> dict[int, FiniteAction]:
    rng = random.Random(seed)
    return {
        n: random_transitive(rng.randint(min_size, max_size), n, rng)
        for n in range(1, max_n + 1)
    }


def check_family(alphas: Mapping[int, FiniteAction], ns: Iterable[int]) -> None:
    for n in sorted(set(ns)):
        if n not in alphas:
            raise ValueError(f"no action alpha_{n} supplied")
        a = alphas[n]
        if a.max_generator() > n:
            raise ValueError(f"alpha_{n} moves g{a.max_generator()}, beyond g{n}")
        if not a.is_transitive():
            raise ValueError(f"alpha_{n} is not transitive")


def family_weights(alphas: Mapping[int, FiniteAction]) -> dict[int, int]:
    """g(n) = |V_n| + 1."""
    return {n: a.size + 1 for n, a in sorted(alphas.items())}
