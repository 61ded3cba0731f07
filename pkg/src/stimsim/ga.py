"""Real-coded two-population genetic algorithm for the uptake/clearance rates.

One population holds candidate ``alpha`` genes and the other ``beta`` genes.
Each generation the alpha genes are scored against the best beta found so
far and vice versa (cooperative coevolution, best-partner pairing).  Within
each population: roulette-wheel parent selection, one-point crossover on the
decimal digits of the gene, additive uniform mutation, and elitism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .pk import DEGENERACY_TOL, StimulantParams, _level, peak_time

DIGITS = 6
EPS = 1e-6
MODES = ("paper_literal", "peak_constrained")


@dataclass(frozen=True)
class GaConfig:
    pop_size: int = 50
    crossover_rate: float = 0.75
    mutation_rate: float = 0.15
    mutation_range: tuple[float, float] = (-0.1, 0.1)
    max_generations: int = 200
    stagnation_window: int = 25
    elite_count: int = 1
    random_partners: int = 1
    rng_seed: int = 42

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError(f"pop_size must be >= 2, got {self.pop_size}")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        lo, hi = self.mutation_range
        if not (hi >= 0 and math.isclose(lo, -hi, abs_tol=1e-15)):
            raise ValueError(f"mutation_range must be symmetric about 0, got {self.mutation_range}")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if self.stagnation_window < 1:
            raise ValueError("stagnation_window must be >= 1")
        if self.random_partners < 0:
            raise ValueError("random_partners must be >= 0")
        if not 0 <= self.elite_count <= self.pop_size:
            raise ValueError(f"elite_count must lie in [0, pop_size], got {self.elite_count}")


@dataclass(frozen=True)
class FitnessSpec:
    mode: str = "paper_literal"
    eval_time: float = 120.0
    d: float = 1.0
    target_peak_time: float = 120.0
    peak_penalty: float = 0.01

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown fitness mode {self.mode!r}; expected one of {MODES}")
        if not self.eval_time > 0:
            raise ValueError("eval_time must be > 0")
        if not self.peak_penalty >= 0:
            raise ValueError("peak_penalty must be >= 0")
        if not self.d >= 0:
            raise ValueError("dose must be >= 0")


def raw_fitness(alpha: float, beta: float, spec: FitnessSpec) -> float:
    """Unclamped score; may be negative in peak_constrained mode.

    Degenerate rate pairs score ``-inf``.
    """
    if abs(alpha - beta) < DEGENERACY_TOL:
        return -math.inf
    value = _level(spec.eval_time, spec.d, alpha, beta)
    if spec.mode == "peak_constrained":
        tp = peak_time(StimulantParams(spec.d, alpha, beta))
        value -= spec.peak_penalty * abs(tp - spec.target_peak_time)
    return value


def evaluate_fitness(alpha: float, beta: float, spec: FitnessSpec) -> float:
    """Plasma level at ``spec.eval_time``, optionally penalised by peak-time miss.

    Clamped below at 0 so it can weight a roulette wheel; degenerate rate
    pairs score 0 instead of raising.
    """
    return max(0.0, raw_fitness(alpha, beta, spec))


def roulette_select(fitnesses: Sequence[float], rng: np.random.Generator) -> int:
    """Index drawn with probability proportional to fitness (uniform if all zero)."""
    w = np.asarray(fitnesses, dtype=float)
    if w.size == 0:
        raise ValueError("cannot select from an empty population")
    if np.any(w < 0):
        raise ValueError("fitnesses must be non-negative")
    total = w.sum()
    if total <= 0:
        return int(rng.integers(w.size))
    cum = np.cumsum(w)
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(idx, w.size - 1)


def clamp(v: float) -> float:
    return min(max(v, EPS), 1.0 - EPS)


def normalize(v: float, digits: int = DIGITS) -> float:
    """Snap a value onto the ``digits``-decimal lattice inside [EPS, 1 - EPS]."""
    scale = 10**digits
    return clamp(round(v * scale) / scale)


def to_digits(v: float, digits: int = DIGITS) -> str:
    """Fractional digits of a gene, e.g. 0.0121 -> '012100'."""
    n = int(round(v * 10**digits))
    n = min(max(n, 0), 10**digits - 1)
    return f"{n:0{digits}d}"


def from_digits(s: str) -> float:
    return int(s) / 10 ** len(s)


def splice(g1: float, g2: float, cut: int, digits: int = DIGITS) -> tuple[float, float]:
    """Swap the digit tails of two genes after position ``cut``."""
    a, b = to_digits(g1, digits), to_digits(g2, digits)
    c1 = clamp(from_digits(a[:cut] + b[cut:]))
    c2 = clamp(from_digits(b[:cut] + a[cut:]))
    return c1, c2


def one_point_crossover(
    g1: float,
    g2: float,
    rng: np.random.Generator,
    rate: float = 0.75,
    digits: int = DIGITS,
) -> tuple[float, float]:
    if rng.random() < rate:
        cut = int(rng.integers(1, digits))
        return splice(g1, g2, cut, digits)
    return g1, g2


def mutate(
    g: float,
    rng: np.random.Generator,
    rate: float = 0.15,
    span: float = 0.1,
    digits: int = DIGITS,
) -> float:
    if rng.random() < rate:
        return normalize(g + rng.uniform(-span, span), digits)
    return g


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_alpha: float
    best_beta: float


@dataclass
class CalibrationResult:
    best_alpha: float
    best_beta: float
    best_fitness: float
    generations_run: int
    termination: str
    history: list[GenerationRecord] = field(default_factory=list)


def _next_generation(pop, scores, keep, rng, config: GaConfig) -> list[float]:
    """Breed a new population; ``keep`` is this population's member of the best pair."""
    new = []
    if config.elite_count:
        new.append(keep)
        order = sorted(range(len(pop)), key=lambda i: -scores[i])
        skipped = False
        for i in order:
            if len(new) >= config.elite_count:
                break
            if pop[i] == keep and not skipped:
                skipped = True
                continue
            new.append(pop[i])
    fit = [max(0.0, v) for v in scores]
    span = config.mutation_range[1]
    while len(new) < config.pop_size:
        p1 = pop[roulette_select(fit, rng)]
        p2 = pop[roulette_select(fit, rng)]
        for child in one_point_crossover(p1, p2, rng, config.crossover_rate):
            if len(new) < config.pop_size:
                new.append(mutate(child, rng, config.mutation_rate, span))
    return new


def _score(pop, partner_of, others, rng, n_random, objective):
    """Score each gene against the best partner and ``n_random`` random ones.

    Returns the scores plus the best (score, gene index, partner) found.
    """
    scores = []
    top = (-math.inf, -1, None)
    picks = rng.integers(len(others), size=(len(pop), n_random)) if n_random else None
    for i, g in enumerate(pop):
        partner = partner_of
        v = objective(g, partner)
        for j in range(n_random):
            cand = others[picks[i, j]]
            r = objective(g, cand)
            if r > v:
                v, partner = r, cand
        scores.append(v)
        if v > top[0]:
            top = (v, i, partner)
    return scores, top


Objective = Callable[[float, float], float]


def calibrate(
    config: GaConfig = GaConfig(),
    spec: FitnessSpec = FitnessSpec(),
    objective: Objective | None = None,
    on_generation: Callable[[int, list[float], list[float]], None] | None = None,
) -> CalibrationResult:
    """Run the two-population GA.

    ``objective(alpha, beta)`` replaces the plasma-level score when given.
    Each gene is credited with the better of its score against the other
    population's best-pair member and against ``config.random_partners``
    randomly drawn members.  Elites and the best pair are ranked on the raw
    score; roulette weights are the score clamped at 0.  ``on_generation``
    receives the generation number and both populations before scoring.
    """
    if objective is None:
        objective = lambda a, b: raw_fitness(a, b, spec)
    seeds = np.random.SeedSequence(config.rng_seed).spawn(2)
    rng_a, rng_b = (np.random.default_rng(s) for s in seeds)
    pop_a = [normalize(v) for v in rng_a.random(config.pop_size)]
    pop_b = [normalize(v) for v in rng_b.random(config.pop_size)]
    best_a, best_b = pop_a[0], pop_b[0]
    best = objective(best_a, best_b)
    k = config.random_partners

    history: list[GenerationRecord] = []
    raw_best: list[float] = []
    termination = "max_generations"
    w = config.stagnation_window
    for gen in range(config.max_generations):
        if on_generation is not None:
            on_generation(gen, list(pop_a), list(pop_b))
        score_a, (v, i, partner) = _score(pop_a, best_b, pop_b, rng_a, k, objective)
        if v > best:
            best, best_a, best_b = v, pop_a[i], partner
        score_b, (v, i, partner) = _score(pop_b, best_a, pop_a, rng_b, k, lambda b, a: objective(a, b))
        if v > best:
            best, best_a, best_b = v, partner, pop_b[i]
        raw_best.append(best)
        clamped = [max(0.0, v) for v in score_a + score_b]
        history.append(
            GenerationRecord(gen, max(0.0, best), float(np.mean(clamped)), best_a, best_b)
        )
        if len(raw_best) > w and _unchanged(raw_best[-1], raw_best[-1 - w]):
            termination = "stagnation"
            break
        if gen + 1 < config.max_generations:
            pop_a = _next_generation(pop_a, score_a, best_a, rng_a, config)
            pop_b = _next_generation(pop_b, score_b, best_b, rng_b, config)

    last = history[-1]
    return CalibrationResult(
        best_alpha=last.best_alpha,
        best_beta=last.best_beta,
        best_fitness=last.best_fitness,
        generations_run=len(history),
        termination=termination,
        history=history,
    )


def _unchanged(now: float, before: float) -> bool:
    return now == before or abs(now - before) < 1e-9
