"""The scheduling function f: N -> N+ and its density properties.

``build_schedule`` follows the interval construction: the even numbers are
reserved for n = 1, each later A_n takes one point of every interval
``[i K_n, (i+1) K_n)``, and whatever is left over also goes to n = 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    horizon: int
    values: tuple[int, ...]
    g: Mapping[int, int]
    K: Mapping[int, int] = field(default_factory=dict)
    a: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.values) != self.horizon:
            raise ScheduleError("values must cover the whole horizon")
        missing = set(self.values) - set(self.g)
        if missing:
            raise ScheduleError(f"no weight g(n) for n in {sorted(missing)}")
        if any(v < 1 for v in self.values):
            raise ScheduleError("f takes values in N+")

    @classmethod
    def from_values(cls, values: Sequence[int], g: Mapping[int, int]) -> Schedule:
        """A schedule with arbitrary values and no interval guarantees."""
        return cls(len(values), tuple(values), dict(g))

    @property
    def max_n(self) -> int:
        return max(self.g)

    def f(self, j: int) -> int:
        if not 0 <= j < self.horizon:
            raise IndexError(f"f({j}) is beyond the horizon {self.horizon}")
        return self.values[j]

    def members(self, n: int) -> list[int]:
        return [j for j, v in enumerate(self.values) if v == n]

    def C(self, m: int) -> int:
        """Sum of g(f(j)) over j < m."""
        if not 0 <= m <= self.horizon:
            raise ScheduleError(f"m={m} is beyond the horizon {self.horizon}")
        return sum(self.g[v] for v in self.values[:m])

    def to_json(self) -> dict[str, Any]:
        return {
            "horizon": self.horizon,
            "f": list(self.values),
            "a": {str(k): v for k, v in sorted(self.a.items())},
            "K": {str(k): v for k, v in sorted(self.K.items())},
            "g": {str(k): v for k, v in sorted(self.g.items())},
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> Schedule:
        def ints(d: Mapping[str, Any]) -> dict[int, int]:
            return {int(k): int(v) for k, v in d.items()}

        return cls(
            int(data["horizon"]),
            tuple(int(v) for v in data["f"]),
            ints(data["g"]),
            ints(data.get("K", {})),
            ints(data.get("a", {})),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def C_m(s: Schedule, m: int) -> int:
    return s.C(m)


def choose_multipliers(g: Mapping[int, int], max_n: int) -> dict[int, int]:
    """Least admissible a_2 < a_3 < ... < a_max_n.

    Each a_n is a multiple of 3 with a_n / 3 > g(n) 2^n / g(n-1) and the
    running sum of 1 / (a_2 ... a_n) stays below 1/3.
    """
    a: dict[int, int] = {}
    prev, prod, partial = 0, 1, Fraction(0)
    for n in range(2, max_n + 1):
        floor = max(Fraction(prev), Fraction(3 * g[n] * 2**n, g[n - 1]))
        c = (int(floor) // 3 + 1) * 3
        while partial + Fraction(1, prod * c) >= Fraction(1, 3):
            c += 3
        a[n] = c
        prev, prod = c, prod * c
        partial += Fraction(1, prod)
    return a


def interval_lengths(a: Mapping[int, int], max_n: int) -> dict[int, int]:
    K = {1: 2}
    prod = 1
    for n in range(2, max_n + 1):
        prod *= a[n]
        K[n] = 2 * prod
    return K


def build_schedule(g: Mapping[int, int], max_n: int, horizon: int) -> Schedule:
    """Materialize f on ``0..horizon-1``.

    The partition is built on a whole number of the largest intervals and then
    cut to the horizon, so the result is the restriction of the same
    construction to any longer horizon.
    """
    if max_n < 1:
        raise ScheduleError("max_n must be >= 1")
    missing = [n for n in range(1, max_n + 1) if n not in g]
    if missing:
        raise ScheduleError(f"no weight g(n) for n in {missing}")
    a = choose_multipliers(g, max_n)
    K = interval_lengths(a, max_n)
    if horizon < K[max_n]:
        raise ScheduleError(f"horizon {horizon} < K_{max_n} = {K[max_n]}")
    full = -(-horizon // K[max_n]) * K[max_n]
    owner = [0] * full
    owner[::2] = [1] * len(owner[::2])
    for n in range(2, max_n + 1):
        k = K[n]
        for i in range(full // k):
            lo, hi = i * k, (i + 1) * k
            used = sum(1 for x in owner[lo:hi] if x)
            if not 2 * k > 3 * used:
                raise ScheduleError(
                    f"counting bound fails for A_{n} in interval {i}: K={k}, used={used}"
                )
            start = lo if i else -(-k // 3)
            for j in range(start, hi):
                if not owner[j]:
                    owner[j] = n
                    break
            else:
                raise ScheduleError(f"no free index for A_{n} in interval {i}")
    values = tuple(x or 1 for x in owner[:horizon])
    return Schedule(
        horizon, values, {n: g[n] for n in range(1, max_n + 1)}, K, a
    )


def check_hitting(s: Schedule, n: int, i_max: int) -> bool:
    """Does A_n meet every interval ``[i K_n, (i+1) K_n)`` for i <= i_max?"""
    if n not in s.K:
        raise ScheduleError(f"no interval length K_{n}")
    k = s.K[n]
    if (i_max + 1) * k > s.horizon:
        raise ScheduleError(f"horizon {s.horizon} too small for {i_max + 1} intervals")
    return all(n in s.values[i * k:(i + 1) * k] for i in range(i_max + 1))


def full_intervals(s: Schedule, n: int) -> int:
    return s.horizon // s.K[n]


def tail_cutoff(epsilon: Fraction) -> int:
    """Least t > 1 with sum_{n>t} 2^-n = 2^-t < epsilon."""
    t = 2
    while Fraction(1, 2**t) >= epsilon:
        t += 1
    return t


@dataclass(frozen=True)
class DensityReport:
    epsilon: Fraction
    t: int
    worst_ratio: Fraction
    worst_m: int
    per_n_worst: dict[int, Fraction]
    per_n_ok: bool

    @property
    def passed(self) -> bool:
        return self.worst_ratio < self.epsilon and self.per_n_ok

    def to_json(self) -> dict[str, Any]:
        return {
            "epsilon": str(self.epsilon),
            "t": self.t,
            "worst_m": self.worst_m,
            "worst_ratio": str(self.worst_ratio),
            "per_n_worst": {str(n): str(r) for n, r in sorted(self.per_n_worst.items())},
            "passed": self.passed,
        }

    def csv_row(self) -> list[str]:
        return [str(self.epsilon), str(self.t), str(self.worst_m),
                str(self.worst_ratio), str(self.passed).lower()]


DENSITY_CSV_HEADER = ["epsilon", "t", "worst_m", "worst_ratio", "passed"]


def check_density(s: Schedule, epsilon: Fraction, m_max: int) -> DensityReport:
    """Tail mass of the weights beyond t, over every prefix length m <= m_max.

    Also checks the per-n bound |A_n cap m| g(n) / C_m(f) < 2^-n for n > t.
    All comparisons are exact.
    """
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < 1:
        raise ScheduleError("epsilon must lie in (0, 1)")
    if not 1 <= m_max <= s.horizon:
        raise ScheduleError(f"m_max={m_max} outside 1..{s.horizon}")
    t = tail_cutoff(epsilon)
    tail_ns = [n for n in sorted(s.g) if n > t]
    counts = {n: 0 for n in s.g}
    total = tail = 0
    worst_num, worst_den, worst_m = 0, 1, 1
    per_n = {n: (0, 1) for n in tail_ns}
    per_n_ok = True
    for m in range(1, m_max + 1):
        v = s.values[m - 1]
        counts[v] += 1
        total += s.g[v]
        if v > t:
            tail += s.g[v]
        if tail * worst_den > worst_num * total:
            worst_num, worst_den, worst_m = tail, total, m
        for n in tail_ns:
            num = counts[n] * s.g[n]
            if num * 2**n >= total:
                per_n_ok = False
            pn, pd = per_n[n]
            if num * pd > pn * total:
                per_n[n] = (num, total)
    return DensityReport(
        epsilon,
        t,
        Fraction(worst_num, worst_den),
        worst_m,
        {n: Fraction(*per_n[n]) for n in tail_ns},
        per_n_ok,
    )
