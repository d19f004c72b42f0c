"""Domain types and the pure decision rules of the forum model."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import IntEnum

from .errors import ParamError

SOURCE = -1  # author_id of the source message


class AgentCategory(IntEnum):
    A = 0
    B = 1
    N = 2


class Valence(IntEnum):
    NEGATIVE = -1
    NEUTRAL = 0
    POSITIVE = 1


def _is_opposed(reader: int, target: int) -> bool:
    return reader != target and reader != AgentCategory.N and target != AgentCategory.N


def interaction_factor(reader: AgentCategory, target: AgentCategory, f_star: float) -> float:
    """Arousal factor: 1 for A/B opposition, ``f_star`` for every other pair."""
    if not 0.0 < f_star <= 1.0:
        raise ParamError(f"f_star must lie in (0, 1], got {f_star}")
    return 1.0 if _is_opposed(reader, target) else float(f_star)


def factor_table(f_star: float) -> tuple[tuple[float, ...], ...]:
    """``interaction_factor`` tabulated as ``table[reader][target]``."""
    return tuple(
        tuple(interaction_factor(AgentCategory(r), AgentCategory(t), f_star) for t in range(3))
        for r in range(3)
    )


def comment_valence(
    author: AgentCategory, target: AgentCategory, x_N: float, random_draw: float
) -> Valence:
    """Emotion of a comment, fixed by author and target categories.

    ``random_draw`` is only consulted for an A/B author replying to a neutral
    target, where the comment is negative with probability ``x_N``.
    """
    if author == AgentCategory.N:
        return Valence.NEUTRAL
    if target == AgentCategory.N:
        return Valence.NEGATIVE if random_draw < x_N else Valence.NEUTRAL
    return Valence.POSITIVE if author == target else Valence.NEGATIVE


def needs_draw(author: int, target: int) -> bool:
    """True when ``comment_valence`` depends on its random draw."""
    return author != AgentCategory.N and target == AgentCategory.N


DEFAULT_PARAMS = dict(
    population=25000,
    agent_mix=(0.32, 0.32, 0.36),
    source_mix=(0.25, 0.25, 0.50),
    n_threads=110000,
    p_s=0.5,
    p_c=0.93,
    p_r=0.89,
    f_star=0.86,
    x_N=0.91,
    seed=0,
    reader_prior=1.0,
)

PROBABILITY_FIELDS = ("p_s", "p_c", "p_r", "x_N")
MIX_FIELDS = ("agent_mix", "source_mix")


@dataclass(frozen=True)
class ModelParams:
    """All controls of one simulation run; defaults are the baseline parameter set."""

    population: int = DEFAULT_PARAMS["population"]
    agent_mix: tuple[float, float, float] = DEFAULT_PARAMS["agent_mix"]
    source_mix: tuple[float, float, float] = DEFAULT_PARAMS["source_mix"]
    n_threads: int = DEFAULT_PARAMS["n_threads"]
    p_s: float = DEFAULT_PARAMS["p_s"]
    p_c: float = DEFAULT_PARAMS["p_c"]
    p_r: float = DEFAULT_PARAMS["p_r"]
    f_star: float = DEFAULT_PARAMS["f_star"]
    x_N: float = DEFAULT_PARAMS["x_N"]
    seed: int = DEFAULT_PARAMS["seed"]
    # weight of each agent in the reader urn before it has posted; None draws
    # readers uniformly from the population
    reader_prior: float | None = DEFAULT_PARAMS["reader_prior"]

    def __post_init__(self):
        object.__setattr__(self, "agent_mix", tuple(float(v) for v in self.agent_mix))
        object.__setattr__(self, "source_mix", tuple(float(v) for v in self.source_mix))
        validate_params(self)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["agent_mix"] = list(self.agent_mix)
        d["source_mix"] = list(self.source_mix)
        return d


def validate_params(p: ModelParams) -> None:
    if isinstance(p.population, bool) or not isinstance(p.population, int) or p.population < 2:
        raise ParamError(f"population must be an integer >= 2, got {p.population!r}")
    # n_threads=0 is allowed: it yields an empty run
    if isinstance(p.n_threads, bool) or not isinstance(p.n_threads, int) or p.n_threads < 0:
        raise ParamError(f"n_threads must be a non-negative integer, got {p.n_threads!r}")
    if isinstance(p.seed, bool) or not isinstance(p.seed, int) or p.seed < 0:
        raise ParamError(f"seed must be an unsigned integer, got {p.seed!r}")
    for name in PROBABILITY_FIELDS:
        v = getattr(p, name)
        if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
            raise ParamError(f"{name} must lie in [0, 1], got {v!r}")
    if not (isinstance(p.f_star, (int, float)) and 0.0 < p.f_star <= 1.0):
        raise ParamError(f"f_star must lie in (0, 1], got {p.f_star!r}")
    if p.reader_prior is not None and not (
        isinstance(p.reader_prior, (int, float)) and math.isfinite(p.reader_prior) and p.reader_prior > 0
    ):
        raise ParamError(f"reader_prior must be a positive number or None, got {p.reader_prior!r}")
    for name in MIX_FIELDS:
        mix = getattr(p, name)
        if len(mix) != 3 or any(not math.isfinite(v) or v < 0.0 or v > 1.0 for v in mix):
            raise ParamError(f"{name} must be three probabilities, got {mix!r}")
        if abs(sum(mix) - 1.0) > 1e-9:
            raise ParamError(f"{name} must sum to 1, got {sum(mix)!r}")


@dataclass
class Post:
    post_id: int
    author_id: int
    category: AgentCategory
    valence: Valence | None
    target_id: int | None
    indegree: int = 0
    in_quarrel: bool = False
