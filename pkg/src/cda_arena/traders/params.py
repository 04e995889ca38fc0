"""Strategy parameter files: flat ``strategy.param = value`` text."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

STRATEGIES = ("AA", "GDX", "GVWY", "SHVR", "ZIC", "ZIP")

_UNIT_INTERVAL = {
    "zip": ("margin", "beta", "momentum", "ca", "cr"),
    "gdx": ("discount",),
    "aa": ("short_rate", "long_rate", "lambda_rel", "lambda_abs", "eq_decay", "initial_margin"),
}
_WINDOWS = {"gdx": ("memory", "max_horizon"), "aa": ("eq_window",)}


class ParamError(ValueError):
    pass


def canonical_strategy(name: str) -> str:
    up = name.strip().upper()
    if up not in STRATEGIES:
        raise ParamError(f"unknown strategy {name!r}; expected one of {', '.join(STRATEGIES)}")
    return up


@dataclass(frozen=True)
class StrategyParams:
    strategy: str
    values: Mapping[str, float] = field(default_factory=dict)

    def get(self, key: str, default: Optional[float] = None) -> float:
        if key in self.values:
            return self.values[key]
        if default is None:
            raise KeyError(f"{self.strategy.lower()}.{key}")
        return default

    def draw(self, key: str, rng: random.Random) -> float:
        """A fixed value if ``key`` is set, else a uniform draw from ``key_lo``..``key_hi``."""
        if key in self.values:
            return self.values[key]
        lo, hi = self.get(key + "_lo"), self.get(key + "_hi")
        return rng.uniform(lo, hi) if hi > lo else lo


class ParamTable:
    def __init__(self, text: str, source: str = "<string>"):
        self.text = text
        self.source = source
        self.values: dict[str, dict[str, float]] = {s.lower(): {} for s in STRATEGIES}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line or "." not in line.split("=", 1)[0]:
                raise ParamError(f"{source}:{n}: expected 'strategy.param = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            strat, param = key.split(".", 1)
            strat = canonical_strategy(strat).lower()
            try:
                self.values[strat][param] = float(value)
            except ValueError:
                raise ParamError(f"{source}:{n}: {value!r} is not a number") from None
        self._validate()

    def _validate(self) -> None:
        for strat, names in _UNIT_INTERVAL.items():
            for k, v in self.values[strat].items():
                if k.rsplit("_", 1)[0] in names or k in names:
                    if not 0.0 <= v <= 1.0:
                        raise ParamError(f"{strat}.{k} = {v} must lie in [0, 1]")
        for strat, names in _WINDOWS.items():
            for k in names:
                if k in self.values[strat] and self.values[strat][k] < 1:
                    raise ParamError(f"{strat}.{k} must be >= 1")

    @classmethod
    def default(cls) -> "ParamTable":
        text = resources.files(__package__).joinpath("defaults.params").read_text()
        return cls(text, "defaults.params")

    @classmethod
    def load(cls, path) -> "ParamTable":
        path = Path(path)
        return cls(path.read_text(), str(path))

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def for_strategy(self, name: str) -> StrategyParams:
        strat = canonical_strategy(name)
        return StrategyParams(strat, dict(self.values[strat.lower()]))

    def with_overrides(self, overrides: Mapping[str, float]) -> "ParamTable":
        lines = [self.text.rstrip("\n")]
        lines += [f"{k} = {v!r}" for k, v in overrides.items()]
        return ParamTable("\n".join(lines) + "\n", self.source + "+overrides")
