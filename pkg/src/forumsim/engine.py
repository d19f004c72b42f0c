"""Thread-by-thread simulation of an opinionated discussion forum.

Each thread starts from a source message. Randomly drawn readers pick a
target (the source with probability ``p_s``, otherwise an earlier comment
chosen by preferential attachment on total degree) and comment with
probability ``p_c * f(reader, target)``. A comment on another comment opens a
quarrel in which the two authors answer each other with probability
``p_r * f``. The first reader who declines ends the thread.

Readers come from a :class:`ReaderPool`. With ``reader_prior`` set, an agent
is drawn with weight ``posts written in earlier threads + reader_prior``, so
threads depend on their predecessors and are simulated in order. With
``reader_prior=None`` readers are uniform and threads are independent, which
lets blocks of threads run on worker processes.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .model import (
    SOURCE,
    AgentCategory,
    ModelParams,
    Post,
    Valence,
    factor_table,
)
from .records import RecordSet

QUARREL_CAP = 10**6

_N = int(AgentCategory.N)


def thread_rng(seed: int, thread_id: int) -> random.Random:
    """Independent stream for one thread.

    The Mersenne Twister is keyed by the integer ``seed * 2**64 + thread_id``,
    so a thread's history does not depend on which worker simulates it.
    """
    return random.Random((seed << 64) | thread_id)


def create_agents(params: ModelParams) -> np.ndarray:
    """Fixed category of every agent, sampled once from ``agent_mix``."""
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    return rng.choice(3, size=params.population, p=params.agent_mix).astype(np.int8)


def _draw_category(mix, u: float) -> int:
    if u < mix[0]:
        return 0
    if u < mix[0] + mix[1]:
        return 1
    return 2


class ReaderPool:
    """Source of readers: uniform, or an urn weighted by past activity."""

    def __init__(self, categories, prior: float | None):
        self.categories = categories.tolist() if isinstance(categories, np.ndarray) else list(categories)
        self.population = len(self.categories)
        self.prior_weight = None if prior is None else prior * self.population
        self.authors: list[int] = []

    def draw(self, rng: random.Random) -> int:
        w = self.prior_weight
        if w is None or rng.random() * (w + len(self.authors)) < w:
            return int(rng.random() * self.population)
        return self.authors[int(rng.random() * len(self.authors))]

    def record(self, thread: "Thread") -> None:
        if self.prior_weight is not None:
            self.authors.extend(thread.authors[1:])


@dataclass
class Thread:
    """Reply graph of one thread, stored column-wise; post 0 is the source."""

    thread_id: int
    source_category: AgentCategory
    authors: list = field(default_factory=list)
    categories: list = field(default_factory=list)
    valences: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    indegrees: list = field(default_factory=list)
    in_quarrel: list = field(default_factory=list)
    # each comment appears indegree + 1 times; the source is never in the urn
    urn: list = field(default_factory=list)
    capped_quarrels: int = 0

    def __post_init__(self):
        if not self.authors:
            self.authors.append(SOURCE)
            self.categories.append(int(self.source_category))
            self.valences.append(None)
            self.targets.append(None)
            self.indegrees.append(0)
            self.in_quarrel.append(False)

    def add_post(self, author: int, category: int, valence: int, target: int) -> int:
        k = len(self.authors)
        self.authors.append(author)
        self.categories.append(category)
        self.valences.append(valence)
        self.targets.append(target)
        self.indegrees.append(0)
        self.in_quarrel.append(False)
        self.indegrees[target] += 1
        self.urn.append(k)
        if target != 0:
            self.urn.append(target)
        return k

    @property
    def n_comments(self) -> int:
        return len(self.authors) - 1

    @property
    def quarrel_post_count(self) -> int:
        return sum(self.in_quarrel)

    @property
    def posts(self) -> list[Post]:
        return [
            Post(
                post_id=k,
                author_id=self.authors[k],
                category=AgentCategory(self.categories[k]),
                valence=None if k == 0 else Valence(self.valences[k]),
                target_id=self.targets[k],
                indegree=self.indegrees[k],
                in_quarrel=self.in_quarrel[k],
            )
            for k in range(len(self.authors))
        ]


def select_target(thread: Thread, p_s: float, rng: random.Random) -> int:
    """Post the current reader reads: the source, or a comment by total degree."""
    if not thread.urn or rng.random() < p_s:
        return 0
    urn = thread.urn
    return urn[int(rng.random() * len(urn))]


def _valence(author_cat: int, target_cat: int, x_N: float, rng: random.Random) -> int:
    # comment_valence, inlined; a draw is consumed only on the A/B-on-N branch
    if author_cat == _N:
        return 0
    if target_cat == _N:
        return -1 if rng.random() < x_N else 0
    return 1 if author_cat == target_cat else -1


def quarrel(
    thread: Thread,
    first_comment: int,
    params: ModelParams,
    rng: random.Random,
    factors=None,
) -> list[int]:
    """Alternating replies following ``first_comment``; returns new post ids.

    The author of the post just answered gets the chance to respond to the
    newest post. The exchange stops on the first decline, or after
    ``QUARREL_CAP`` responses. Only the responses are flagged ``in_quarrel``.
    """
    f = factors or factor_table(params.f_star)
    p_r, x_N = params.p_r, params.x_N
    authors, cats = thread.authors, thread.categories
    newest = first_comment
    responder = authors[thread.targets[first_comment]]
    responder_cat = cats[thread.targets[first_comment]]
    created = []
    while len(created) < QUARREL_CAP:
        newest_cat = cats[newest]
        if rng.random() >= p_r * f[responder_cat][newest_cat]:
            break
        answered_author = authors[newest]
        newest = thread.add_post(responder, responder_cat,
                                 _valence(responder_cat, newest_cat, x_N, rng), newest)
        created.append(newest)
        responder, responder_cat = answered_author, newest_cat
    else:
        thread.capped_quarrels += 1
    for k in created:
        thread.in_quarrel[k] = True
    return created


def simulate_thread(
    params: ModelParams,
    agents,
    rng: random.Random,
    thread_id: int = 0,
    factors=None,
) -> Thread:
    """One thread; ``agents`` is a category table or a :class:`ReaderPool`.

    A bare category table draws readers uniformly. The pool is not updated;
    callers record the finished thread themselves.
    """
    f = factors or factor_table(params.f_star)
    pool = agents if isinstance(agents, ReaderPool) else ReaderPool(agents, None)
    cats = pool.categories
    thread = Thread(thread_id, AgentCategory(_draw_category(params.source_mix, rng.random())))
    p_s, p_c, x_N = params.p_s, params.p_c, params.x_N
    while True:
        reader = pool.draw(rng)
        reader_cat = cats[reader]
        target = select_target(thread, p_s, rng)
        target_cat = thread.categories[target]
        if rng.random() >= p_c * f[reader_cat][target_cat]:
            return thread
        k = thread.add_post(reader, reader_cat, _valence(reader_cat, target_cat, x_N, rng), target)
        if target != 0:
            quarrel(thread, k, params, rng, f)


@dataclass
class SimulationOutput:
    records: RecordSet
    n_active_threads: int
    n_active_agents: int
    total_posts: int
    quarrel_fraction: float
    n_threads: int = 0
    quarrel_posts: int = 0
    capped_quarrels: int = 0


def _simulate_block(params: ModelParams, pool: ReaderPool, start: int, stop: int):
    f = factor_table(params.f_star)
    tids, idx, auth, val = [], [], [], []
    active = quarrel_posts = capped = 0
    for tid in range(start, stop):
        th = simulate_thread(params, pool, thread_rng(params.seed, tid), tid, f)
        pool.record(th)
        n = th.n_comments
        if n:
            active += 1
            tids.extend([tid] * n)
            idx.extend(range(1, n + 1))
            auth.extend(th.authors[1:])
            val.extend(th.valences[1:])
            quarrel_posts += th.quarrel_post_count
        capped += th.capped_quarrels
    block = RecordSet(
        np.array(tids, dtype=np.int64), np.array(idx, dtype=np.int64),
        np.array(auth, dtype=np.int64), np.array(val, dtype=np.int8),
    )
    return block, active, quarrel_posts, capped


_worker_state: dict = {}


def _init_worker(params, agents):
    _worker_state["params"] = params
    _worker_state["pool"] = ReaderPool(agents, None)


def _run_block(bounds):
    return _simulate_block(_worker_state["params"], _worker_state["pool"], *bounds)


def _blocks(n: int, size: int):
    return [(s, min(s + size, n)) for s in range(0, n, size)]


def run_simulation(params: ModelParams, workers: int = 1, block_size: int = 2000) -> SimulationOutput:
    """Simulate ``params.n_threads`` threads over one fixed agent population.

    The result depends only on ``params``: every thread draws from its own
    stream, and blocks are merged in thread order whatever ``workers`` is.
    Worker processes are used only with uniform readers; the activity urn
    makes threads sequential.
    """
    if not isinstance(params, ModelParams):
        raise TypeError("params must be a ModelParams")
    agents = create_agents(params)
    bounds = _blocks(params.n_threads, block_size)
    if workers > 1 and len(bounds) > 1 and params.reader_prior is None:
        ctx = get_context("fork")
        with ctx.Pool(workers, initializer=_init_worker, initargs=(params, agents)) as pool:
            results = pool.map(_run_block, bounds)
    else:
        pool = ReaderPool(agents, params.reader_prior)
        results = [_simulate_block(params, pool, s, e) for s, e in bounds]
    records = RecordSet.concat([r[0] for r in results])
    total = len(records)
    quarrel_posts = sum(r[2] for r in results)
    return SimulationOutput(
        records=records,
        n_active_threads=sum(r[1] for r in results),
        n_active_agents=int(np.unique(records.author_id).size),
        total_posts=total,
        quarrel_fraction=quarrel_posts / total if total else 0.0,
        n_threads=params.n_threads,
        quarrel_posts=quarrel_posts,
        capped_quarrels=sum(r[3] for r in results),
    )
