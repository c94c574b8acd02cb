"""Seeded configurations shared by the unit and acceptance tests."""

from __future__ import annotations

import random

from freeirs.actions import random_family, family_weights
from freeirs.schedule import Schedule, build_schedule, choose_multipliers, interval_lengths


def random_config(seed):
    """A random family plus either a built schedule or a random value list."""
    rng = random.Random(seed)
    fam = random_family(3, seed, 1, 4)
    g = family_weights(fam)
    if rng.random() < 0.5:
        horizon = interval_lengths(choose_multipliers(g, 3), 3)[3]
        s = build_schedule(g, 3, horizon)
        M = rng.randint(1, min(200, horizon - 1))
    else:
        values = [rng.choice([1, 1, 2, 3]) for _ in range(80)]
        s = Schedule.from_values(values, g)
        M = rng.randint(1, 70)
    return fam, s, M
