"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored; unknown keys are rejected.  Every
key has a default, so an empty file is a valid configuration.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, fields
from pathlib import Path

from .dde import GridError, TimeGrid
from .extraversion import CANONICAL_B, DynamicsParams, PersonalityProfile, check_grid
from .ga import MODES, FitnessSpec, GaConfig
from .pk import StimulantParams


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | tuple[str, ...] | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    # stimulant
    dose: float = 1.0
    alpha: float = 0.0121
    beta: float = 0.0071
    # dynamics
    a: float = 0.025
    p: float = 0.8
    q: float = 0.15
    tau: float = 340.0
    t0: float = 5.0
    # personalities
    profiles: tuple[str, ...] = ("extrovert", "ambivert", "introvert")
    y0: float | None = None
    # grid
    t_end: float = 725.0
    h: float = 0.01
    # genetic algorithm
    pop_size: int = 50
    crossover_rate: float = 0.75
    mutation_rate: float = 0.15
    mutation_span: float = 0.1
    max_generations: int = 200
    stagnation_window: int = 25
    elite_count: int = 1
    random_partners: int = 1
    seed: int = 42
    # fitness
    fitness_mode: str = "paper_literal"
    eval_time: float = 120.0
    target_peak_time: float = 120.0
    peak_penalty: float = 0.01
    # output
    output_dir: str = "out"
    charts: bool = False

    def stim(self) -> StimulantParams:
        return StimulantParams(self.dose, self.alpha, self.beta)

    def dynamics(self) -> DynamicsParams:
        return DynamicsParams(self.a, self.p, self.q, self.tau, self.t0)

    def grid(self) -> TimeGrid:
        return TimeGrid(0.0, self.t_end, self.h)

    def personality_profiles(self) -> list[PersonalityProfile]:
        out = []
        for label in self.profiles:
            prof = PersonalityProfile.canonical(label)
            if self.y0 is not None:
                prof = PersonalityProfile(label, prof.b, y0=self.y0, expert=True)
            out.append(prof)
        return out

    def ga_config(self) -> GaConfig:
        return GaConfig(
            pop_size=self.pop_size,
            crossover_rate=self.crossover_rate,
            mutation_rate=self.mutation_rate,
            mutation_range=(-self.mutation_span, self.mutation_span),
            max_generations=self.max_generations,
            stagnation_window=self.stagnation_window,
            elite_count=self.elite_count,
            random_partners=self.random_partners,
            rng_seed=self.seed,
        )

    def fitness_spec(self) -> FitnessSpec:
        return FitnessSpec(
            mode=self.fitness_mode,
            eval_time=self.eval_time,
            d=self.dose,
            target_peak_time=self.target_peak_time,
            peak_penalty=self.peak_penalty,
        )

    def validate(self) -> "RunConfig":
        """Build every module-level object once so bad values fail early."""
        checks = [
            (("dose", "alpha", "beta"), self.stim),
            (("a", "p", "q", "tau", "t0"), self.dynamics),
            (("profiles", "y0"), self.personality_profiles),
            (("t_end", "h"), self.grid),
            (("pop_size", "crossover_rate", "mutation_rate", "mutation_span",
              "max_generations", "stagnation_window", "elite_count",
              "random_partners", "seed"), self.ga_config),
            (("fitness_mode", "eval_time", "target_peak_time", "peak_penalty"), self.fitness_spec),
        ]
        for keys, build in checks:
            try:
                build()
            except ValueError as exc:
                msg = str(exc)
                named = tuple(k for k in keys if re.search(rf"\b{k}\b", msg))
                raise ConfigError(msg, named or keys) from None
        if not self.profiles:
            raise ConfigError("profiles: at least one personality is required", "profiles")
        if self.seed < 0:
            raise ConfigError("seed: must be >= 0", "seed")
        try:
            check_grid(self.grid(), self.dynamics())
        except GridError as exc:
            raise ConfigError(f"h: {exc}", "h") from None
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_DEFAULTS = RunConfig()


def _parse_value(name: str, raw: str):
    default = getattr(_DEFAULTS, name)
    if name == "profiles":
        labels = tuple(x.strip() for x in raw.split(",") if x.strip())
        for label in labels:
            if label not in CANONICAL_B:
                raise ValueError(f"unknown personality {label!r}")
        return labels
    if name == "y0":
        return None if raw == "auto" else _float(raw)
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true/false, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return _float(raw)
    if name == "fitness_mode" and raw not in MODES:
        raise ValueError(f"expected one of {', '.join(MODES)}, got {raw!r}")
    return raw


def _float(raw: str) -> float:
    v = float(raw)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {raw!r}")
    return v


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}", key)
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}", key)
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}", key) from None
        lines[key] = lineno
    cfg = RunConfig(**values)
    try:
        return cfg.validate()
    except ConfigError as exc:
        keys = exc.key if isinstance(exc.key, tuple) else (exc.key,)
        hit = sorted(lines[k] for k in keys if k in lines)
        where = f"{source}:{','.join(map(str, hit))}" if hit else source
        raise ConfigError(f"{where}: {exc}", exc.key) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


_SECTIONS = {
    "dose": "stimulant: dose and uptake/clearance rates (1/min)",
    "a": "dynamics: homeostatic rate, excitation/inhibition power, delays (min)",
    "profiles": "personalities (extrovert, ambivert, introvert); y0 = auto uses y0 = b",
    "t_end": "time grid (min); h must put t0 and t0 + tau on grid nodes",
    "pop_size": "genetic algorithm",
    "fitness_mode": "fitness: paper_literal or peak_constrained",
    "output_dir": "output",
}


def _format_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig = _DEFAULTS) -> str:
    out = []
    for f in fields(RunConfig):
        if f.name in _SECTIONS:
            if out:
                out.append("")
            out.append(f"# {_SECTIONS[f.name]}")
        out.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(out) + "\n"
