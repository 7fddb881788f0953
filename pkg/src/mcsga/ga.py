"""Real-valued genetic algorithm.

Fitness-proportional (roulette) selection on linearly scaled fitness,
local arithmetic crossover, uniform random mutation, elitism and a fixed
number of generations.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._io import atomic_write_text


class GaError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Genome:
    genes: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def unit(cls, genes) -> "Genome":
        genes = np.asarray(genes, dtype=np.float64)
        return cls(genes, np.zeros_like(genes), np.ones_like(genes))

    def __post_init__(self):
        if not (self.genes.shape == self.lower.shape == self.upper.shape):
            raise GaError("genes and bounds must share one shape")

    @property
    def dimension(self) -> int:
        return len(self.genes)

    def within_bounds(self) -> bool:
        return bool(np.all((self.genes >= self.lower) & (self.genes <= self.upper)))


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 1000
    iterations: int = 500
    mutation_rate: float = 0.1
    crossover_rate: float = 0.8
    elite_count: int = 1
    scaling_multiple: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise GaError("population_size must be at least 2")
        if self.iterations < 1:
            raise GaError("iterations must be at least 1")
        if not 0 <= self.mutation_rate <= 1:
            raise GaError("mutation_rate must lie in [0, 1]")
        if not 0 <= self.crossover_rate <= 1:
            raise GaError("crossover_rate must lie in [0, 1]")
        if not 0 <= self.elite_count < self.population_size:
            raise GaError("elite_count must be below population_size")
        if self.scaling_multiple <= 1:
            raise GaError("scaling_multiple must exceed 1")


@dataclass(frozen=True, eq=False)
class GaResult:
    best: Genome
    best_fitness: float
    history: list[tuple[float, float]] = field(default_factory=list)
    n_evaluations: int = 0

    def history_csv(self) -> str:
        buf = io.StringIO()
        buf.write("generation,best_fitness,mean_fitness\n")
        for g, (best, mean) in enumerate(self.history, start=1):
            buf.write(f"{g},{best!r},{mean!r}\n")
        return buf.getvalue()

    def write_history(self, path) -> None:
        atomic_write_text(path, self.history_csv())


# ------------------------------------------------------------------ operators


def linear_scale(fitnesses, multiple: float = 2.0) -> np.ndarray:
    """Affine rescaling ``a*f + b`` that keeps the mean and maps the maximum
    to ``multiple * mean``; when that would push the minimum below zero the
    map instead sends the minimum to zero, still keeping the mean.

    Negative inputs are first shifted so the minimum is zero (roulette
    selection needs nonnegative weights). Equal inputs come back unchanged.
    """
    f = np.asarray(fitnesses, dtype=np.float64)
    if f.size == 0:
        raise GaError("cannot scale an empty fitness list")
    f_min, f_max = f.min(), f.max()
    if f_max == f_min:
        return f.copy()
    if f_min < 0:
        f = f - f_min
        f_min, f_max = 0.0, f_max - f_min
    f_avg = f.mean()
    if f_min > (multiple * f_avg - f_max) / (multiple - 1.0):
        delta = f_max - f_avg
        a = (multiple - 1.0) * f_avg / delta
        b = f_avg * (f_max - multiple * f_avg) / delta
    else:
        delta = f_avg - f_min
        a = f_avg / delta
        b = -f_min * f_avg / delta
    return np.maximum(a * f + b, 0.0)


def select_parent(scaled_fitnesses, rng: np.random.Generator) -> int:
    """Roulette wheel: index ``i`` with probability ``f_i / sum(f)``."""
    return int(select_parents(scaled_fitnesses, 1, rng)[0])


def select_parents(scaled_fitnesses, count: int, rng: np.random.Generator) -> np.ndarray:
    f = np.asarray(scaled_fitnesses, dtype=np.float64)
    total = f.sum()
    if not total > 0:
        return rng.integers(0, len(f), count)
    cum = np.cumsum(f)
    draws = rng.random(count) * cum[-1]
    return np.minimum(np.searchsorted(cum, draws, side="right"), len(f) - 1)


def crossover_local_arithmetic(p1: Genome, p2: Genome, rng: np.random.Generator, mix=None):
    """Per-gene convex blend; ``mix`` overrides the drawn coefficients."""
    if p1.dimension != p2.dimension:
        raise GaError(f"parent dimensions differ: {p1.dimension} vs {p2.dimension}")
    a = rng.random(p1.dimension) if mix is None else np.broadcast_to(np.asarray(mix, dtype=np.float64), p1.genes.shape)
    c1 = p2.genes + a * (p1.genes - p2.genes)
    c2 = (p1.genes + p2.genes) - c1  # conserves gene sums up to one rounding
    return Genome(c1, p1.lower, p1.upper), Genome(c2, p1.lower, p1.upper)


def mutate_uniform(g: Genome, rate: float, rng: np.random.Generator) -> Genome:
    if not 0 <= rate <= 1:
        raise GaError("mutation rate must lie in [0, 1]")
    genes = _mutate(g.genes[None, :], rate, g.lower, g.upper, rng)[0]
    return Genome(genes, g.lower, g.upper)


def _mutate(pop, rate, lower, upper, rng):
    mask = rng.random(pop.shape) < rate
    fresh = lower + rng.random(pop.shape) * (upper - lower)
    return np.where(mask, fresh, pop)


# ------------------------------------------------------------------ driver


class _FitnessCache:
    """Memoizes fitness per genome; evaluates the misses of a population in one batch."""

    def __init__(self, fitness, vectorized):
        self.fitness = fitness
        self.vectorized = vectorized
        self.table: dict[bytes, float] = {}
        self.evaluations = 0

    def __call__(self, pop):
        keys = [row.tobytes() for row in pop]
        out = np.empty(len(pop))
        missing: dict[bytes, int] = {}
        for i, k in enumerate(keys):
            v = self.table.get(k)
            if v is None:
                missing.setdefault(k, i)
            else:
                out[i] = v
        if missing:
            rows = np.array(list(missing.values()))
            if self.vectorized:
                vals = np.asarray(self.fitness(pop[rows]), dtype=np.float64).reshape(-1)
            else:
                vals = np.array([float(self.fitness(pop[r].copy())) for r in rows])
            self.evaluations += len(rows)
            for k, r, v in zip(missing, rows, vals):
                if not math.isfinite(v):
                    raise GaError(f"non-finite fitness {v} for genome {pop[r].tolist()}")
                self.table[k] = float(v)
        for i, k in enumerate(keys):
            out[i] = self.table[k]
        return out


def run_ga(
    fitness: Callable,
    config: GaConfig,
    dimension: int,
    bounds=(0.0, 1.0),
    vectorized: bool = False,
    callback: Callable | None = None,
) -> GaResult:
    """Maximize ``fitness`` over the box ``bounds`` (scalar pair or per-gene arrays).

    ``fitness`` takes a gene vector, or a (n, dimension) matrix when
    ``vectorized``. Each generation draws from a stream seeded by
    ``(seed, generation)`` and the draws never depend on fitness evaluation
    order, so the result is reproducible however the batch is evaluated.
    """
    if dimension < 1:
        raise GaError("dimension must be at least 1")
    lower = np.broadcast_to(np.asarray(bounds[0], dtype=np.float64), (dimension,)).copy()
    upper = np.broadcast_to(np.asarray(bounds[1], dtype=np.float64), (dimension,)).copy()
    if np.any(upper < lower):
        raise GaError("upper bounds must not be below lower bounds")
    n_pop = config.population_size
    evaluate = _FitnessCache(fitness, vectorized)

    rng = np.random.default_rng([config.seed, 0])
    pop = lower + rng.random((n_pop, dimension)) * (upper - lower)
    fit = evaluate(pop)
    best_i = int(np.argmax(fit))
    best_genes, best_fit = pop[best_i].copy(), float(fit[best_i])

    history = []
    n_children = n_pop - config.elite_count
    n_pairs = (n_children + 1) // 2
    for gen in range(1, config.iterations + 1):
        rng = np.random.default_rng([config.seed, gen])
        scaled = linear_scale(fit, config.scaling_multiple)
        parents = select_parents(scaled, 2 * n_pairs, rng).reshape(n_pairs, 2)
        p1, p2 = pop[parents[:, 0]], pop[parents[:, 1]]
        cross = rng.random(n_pairs) < config.crossover_rate
        a = rng.random((n_pairs, dimension))
        c1 = p2 + a * (p1 - p2)
        c2 = (p1 + p2) - c1
        c1 = np.where(cross[:, None], c1, p1)  # non-crossed pairs copy through
        c2 = np.where(cross[:, None], c2, p2)
        children = np.empty((2 * n_pairs, dimension))
        children[0::2] = c1
        children[1::2] = c2
        children = _mutate(children[:n_children], config.mutation_rate, lower, upper, rng)
        np.clip(children, lower, upper, out=children)

        elite_idx = np.argsort(-fit, kind="stable")[: config.elite_count]
        pop = np.vstack([pop[elite_idx], children])
        fit = evaluate(pop)
        i = int(np.argmax(fit))
        if fit[i] > best_fit:
            best_genes, best_fit = pop[i].copy(), float(fit[i])
        history.append((float(fit.max()), float(fit.mean())))
        if callback is not None:
            callback(gen, pop, fit)

    return GaResult(Genome(best_genes, lower, upper), best_fit, history, evaluate.evaluations)
