"""Run configuration: one JSON document describing a whole experiment."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from .actions import FiniteAction, cyclic_family, family_weights, random_family
from .appearance import truncated_family
from .glue import GluedTruncation
from .irs import ClopenSet
from .schedule import Schedule, build_schedule, choose_multipliers, interval_lengths
from .words import Word, ball


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    raw: dict[str, Any]
    base_dir: str = "."
    seed: int | None = None
    stage_override: int | None = None
    _alphas: dict[int, FiniteAction] | None = field(default=None, repr=False)
    _schedule: Schedule | None = field(default=None, repr=False)
    _truncation: GluedTruncation | None = field(default=None, repr=False)

    @classmethod
    def load(cls, path: str, seed: int | None = None, stage: int | None = None) -> RunConfig:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = cls(raw, os.path.dirname(os.path.abspath(path)), seed, stage)
        cfg.validate()
        return cfg

    # -- scalar fields ----------------------------------------------------

    @property
    def max_n(self) -> int:
        return int(self.raw.get("max_n", 3))

    @property
    def M(self) -> int:
        return int(self.raw.get("M", math.factorial(self.stage)))

    @property
    def stage(self) -> int:
        if self.stage_override is not None:
            return self.stage_override
        return int(self.raw.get("stage", 1))

    @property
    def epsilons(self) -> list[Fraction]:
        return [Fraction(e) for e in self.raw.get("epsilons", ["1/2"])]

    @property
    def claim_ns(self) -> list[int]:
        return [int(n) for n in self.raw.get("claim_n", [1])]

    @property
    def dot_blocks(self) -> int:
        return int(self.raw.get("dot_blocks", min(self.M, math.factorial(self.stage))))

    def effective(self) -> dict[str, Any]:
        out = dict(self.raw)
        if self.seed is not None:
            out["alpha"] = dict(out.get("alpha", {}), seed=self.seed)
        if self.stage_override is not None:
            out["stage"] = self.stage_override
        return out

    def digest(self) -> str:
        text = json.dumps(self.effective(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def validate(self) -> None:
        if self.max_n < 1:
            raise ConfigError("max_n must be >= 1")
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        if self.stage < 0 or math.factorial(self.stage) > self.M:
            raise ConfigError(f"stage {self.stage}: {self.stage}! exceeds M={self.M}")
        if "schedule" not in self.raw:
            K_max = self.K_max()
            if self.horizon < K_max:
                raise ConfigError(f"horizon {self.horizon} < K_{self.max_n} = {K_max}")
        if self.M >= self.horizon:
            raise ConfigError(f"M={self.M} must be below the horizon {self.horizon}")
        for e in self.epsilons:
            if not 0 < e < 1:
                raise ConfigError(f"epsilon {e} outside (0, 1)")

    def K_max(self) -> int:
        g = family_weights(self.alphas())
        return interval_lengths(choose_multipliers(g, self.max_n), self.max_n)[self.max_n]

    @property
    def horizon(self) -> int:
        if "schedule" in self.raw:
            return len(self.raw["schedule"]["values"])
        if "horizon" in self.raw:
            return int(self.raw["horizon"])
        return self.K_max()

    # -- built objects ----------------------------------------------------

    def _path(self, p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def _action(self, spec: Any) -> FiniteAction:
        if isinstance(spec, str):
            return FiniteAction.load(self._path(spec))
        return FiniteAction.from_json(spec)

    def alphas(self) -> dict[int, FiniteAction]:
        if self._alphas is None:
            spec = self.effective().get("alpha", {"family": "cyclic"})
            family = spec.get("family", "cyclic")
            if family == "cyclic":
                alphas = cyclic_family(self.max_n)
            elif family == "random":
                alphas = random_family(
                    self.max_n,
                    int(spec.get("seed", 0)),
                    int(spec.get("min_size", 1)),
                    int(spec.get("max_size", 4)),
                )
            elif family == "files":
                alphas = {int(n): self._action(p) for n, p in spec["paths"].items()}
            elif family == "truncated":
                alphas = truncated_family(self._action(spec["action"]), self.max_n)
            else:
                raise ConfigError(f"unknown alpha family {family!r}")
            self._alphas = alphas
        return self._alphas

    def schedule(self) -> Schedule:
        if self._schedule is None:
            g = family_weights(self.alphas())
            if "schedule" in self.raw:
                spec = self.raw["schedule"]
                values = [int(v) for v in spec["values"]]
                s = Schedule(
                    len(values), tuple(values),
                    {n: g[n] for n in sorted(set(values))},
                    {int(k): int(v) for k, v in spec.get("K", {}).items()},
                )
            else:
                s = build_schedule(g, self.max_n, self.horizon)
            self._schedule = s
        return self._schedule

    def truncation(self) -> GluedTruncation:
        if self._truncation is None:
            self._truncation = GluedTruncation(self.alphas(), self.schedule(), self.M)
        return self._truncation

    def clopen_sets(self) -> list[tuple[str, ClopenSet]]:
        out = []
        for i, spec in enumerate(self.raw.get("clopen", [])):
            out.append((str(spec.get("id", f"c{i}")),
                        ClopenSet.of(spec.get("in", []), spec.get("out", []))))
        return out

    def conjugators(self) -> list[Word]:
        return _word_list(self.raw.get("conjugators", ["1"]))

    def invariance_grid(self) -> tuple[list[Word], list[Word]] | None:
        spec = self.raw.get("invariance_grid")
        if not spec:
            return None
        words = _word_list(spec.get("words", {"generators": list(range(self.stage + 1)),
                                              "max_length": 1}))
        conj = _word_list(spec.get("conjugators", {"generators": list(range(self.stage + 1)),
                                                   "max_length": 1}))
        return words, conj

    def section(self, name: str) -> Mapping[str, Any]:
        return self.raw.get(name, {})

    def action(self, spec: Any) -> FiniteAction:
        return self._action(spec)


def _word_list(spec: Any) -> list[Word]:
    if isinstance(spec, Mapping):
        return list(ball(spec["generators"], int(spec["max_length"])))
    return [Word.parse(w) for w in spec]
