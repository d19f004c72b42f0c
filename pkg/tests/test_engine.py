import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from forumsim import ModelParams, run_simulation, simulate_thread
from forumsim.engine import QUARREL_CAP, ReaderPool, Thread, create_agents, quarrel, select_target, thread_rng
from forumsim.model import AgentCategory as C, comment_valence, factor_table

A, B, N = int(C.A), int(C.B), int(C.N)


def _thread_with_indegrees():
    # comments c1 (indegree 3) and c2 (indegree 0), set up by hand
    th = Thread(0, C.A)
    th.add_post(1, A, 1, 0)  # c1
    th.add_post(2, A, 1, 0)  # c2
    th.urn = [1, 1, 1, 1, 2]
    th.indegrees[1] = 3
    return th


def test_select_target_source_only():
    th = Thread(0, C.N)
    rnd = random.Random(0)
    assert all(select_target(th, 0.0, rnd) == 0 for _ in range(100))


def test_select_target_forced_source():
    th = _thread_with_indegrees()
    rnd = random.Random(0)
    assert all(select_target(th, 1.0, rnd) == 0 for _ in range(100))


def test_select_target_preferential_weights():
    th = _thread_with_indegrees()
    rnd = random.Random(1)
    M = 100_000
    hits = sum(select_target(th, 0.0, rnd) == 1 for _ in range(M))
    sigma = math.sqrt(M * 0.8 * 0.2)
    assert abs(hits - 0.8 * M) < 3 * sigma


def test_urn_tracks_total_degree():
    params = ModelParams(n_threads=1, population=50, seed=2)
    agents = create_agents(params)
    for tid in range(200):
        th = simulate_thread(params, agents, thread_rng(2, tid), tid)
        counts = np.bincount(th.urn, minlength=len(th.authors))
        assert counts[0] == 0
        assert np.array_equal(counts[1:], np.asarray(th.indegrees[1:]) + 1)


def _pair_thread(first_cat, second_cat):
    th = Thread(0, C.N)
    th.add_post(10, first_cat, 0, 0)
    k = th.add_post(20, second_cat, 0, 1)
    return th, k


def test_quarrel_zero_response_probability():
    th, k = _pair_thread(A, B)
    created = quarrel(th, k, ModelParams(p_r=0.0), random.Random(0))
    assert created == [] and not any(th.in_quarrel)


def test_quarrel_alternates_and_flags_responses():
    th, k = _pair_thread(A, B)
    created = quarrel(th, k, ModelParams(p_r=0.95, f_star=1.0), random.Random(3))
    assert created
    authors = [th.authors[i] for i in [k] + created]
    assert all(a != b for a, b in zip(authors, authors[1:]))
    assert set(authors) == {10, 20}
    for i in created:
        assert th.targets[i] == i - 1
        assert th.valences[i] == -1  # A and B always disagree
    assert not th.in_quarrel[k] and all(th.in_quarrel[i] for i in created)


def test_quarrel_cap():
    th, k = _pair_thread(N, N)
    created = quarrel(th, k, ModelParams(p_r=1.0, f_star=1.0), random.Random(0))
    assert len(created) == QUARREL_CAP
    assert th.capped_quarrels == 1


def test_quarrel_length_is_geometric():
    # A vs B: f = 1, so each response happens with probability p_r
    p_r, runs = 0.6, []
    rnd = random.Random(8)
    for _ in range(20_000):
        th, k = _pair_thread(A, B)
        runs.append(len(quarrel(th, k, ModelParams(p_r=p_r), rnd)))
    mean = p_r / (1 - p_r)
    se = math.sqrt(p_r) / (1 - p_r) / math.sqrt(len(runs))
    assert abs(np.mean(runs) - mean) < 4 * se


def test_no_comment_probability_gives_inactive_threads():
    out = run_simulation(ModelParams(n_threads=500, p_c=0.0))
    assert out.total_posts == 0 and out.n_active_threads == 0 and out.n_active_agents == 0
    assert out.quarrel_fraction == 0.0


def test_zero_threads():
    out = run_simulation(ModelParams(n_threads=0))
    assert len(out.records) == 0 and out.total_posts == 0 and out.n_active_threads == 0


def test_all_neutral_population():
    out = run_simulation(ModelParams(n_threads=500, agent_mix=(0.0, 0.0, 1.0), x_N=0.7))
    assert out.total_posts > 0
    assert np.all(out.records.valence == 0)


def test_same_seed_identical():
    p = ModelParams(n_threads=800, seed=4)
    assert run_simulation(p).records.equals(run_simulation(p).records)
    assert not run_simulation(p).records.equals(run_simulation(p.replace(seed=5)).records)


@pytest.mark.parametrize("prior", [None, 1.0])
def test_worker_count_does_not_change_output(prior):
    p = ModelParams(n_threads=1500, seed=6, reader_prior=prior)
    one = run_simulation(p, workers=1, block_size=300)
    two = run_simulation(p, workers=2, block_size=300)
    assert one.records.equals(two.records)
    assert (one.n_active_threads, one.quarrel_posts) == (two.n_active_threads, two.quarrel_posts)


def test_block_size_does_not_change_output():
    p = ModelParams(n_threads=900, seed=6)
    assert run_simulation(p, block_size=100).records.equals(run_simulation(p, block_size=2000).records)


def test_output_invariants(small_run):
    rs = small_run.records
    assert small_run.total_posts == len(rs)
    assert small_run.n_active_agents == np.unique(rs.author_id).size
    assert small_run.n_active_threads == np.unique(rs.thread_id).size
    assert 0.0 <= small_run.quarrel_fraction <= 1.0
    assert set(np.unique(rs.valence)) <= {-1, 0, 1}
    assert small_run.capped_quarrels == 0


@given(seed=st.integers(0, 2**32), tid=st.integers(0, 10**6))
def test_thread_invariants(seed, tid):
    params = ModelParams(population=40, seed=seed % 1000)
    agents = create_agents(params)
    th = simulate_thread(params, agents, thread_rng(seed, tid), tid)
    n = th.n_comments
    assert sum(th.indegrees) == n
    assert th.quarrel_post_count <= n
    posts = th.posts
    assert posts[0].target_id is None and posts[0].valence is None
    for p in posts[1:]:
        assert 0 <= p.target_id < p.post_id
        assert p.category == agents[p.author_id]
        t = posts[p.target_id].category
        if p.category == C.N:
            assert p.valence == 0
        elif t == C.N:
            assert p.valence in (-1, 0)
        else:
            assert p.valence == comment_valence(p.category, t, 0.5, 0.5)


def test_activation_rate_closed_form():
    # uniform readers: the first reader's category follows agent_mix
    p = ModelParams(seed=21, n_threads=110_000, reader_prior=None)
    out = run_simulation(p)
    agents = create_agents(p)
    mix = np.bincount(agents, minlength=3) / agents.size
    opposed = mix[A] * p.source_mix[B] + mix[B] * p.source_mix[A]
    prob = p.p_c * (opposed + (1 - opposed) * p.f_star)
    sigma = math.sqrt(prob * (1 - prob) / p.n_threads)
    assert abs(out.n_active_threads / p.n_threads - prob) < 3 * sigma
    # with the default mixes the opposed share is 0.16
    assert 0.32 * 0.25 * 2 == pytest.approx(0.16)


def test_quarrel_fraction_grows_with_response_probability():
    for seed in range(5):
        fracs = [run_simulation(ModelParams(n_threads=1500, seed=seed, p_r=p_r)).quarrel_fraction
                 for p_r in (0.5, 0.75, 0.89)]
        assert fracs[0] < fracs[1] < fracs[2]


def test_reader_pool_uniform_range():
    pool = ReaderPool(np.zeros(7, dtype=np.int8), None)
    rnd = random.Random(0)
    draws = {pool.draw(rnd) for _ in range(2000)}
    assert draws == set(range(7))


def test_reader_pool_favours_active_agents():
    pool = ReaderPool(np.zeros(1000, dtype=np.int8), 0.01)
    th = Thread(0, C.A)
    for _ in range(90):
        th.add_post(3, A, 1, 0)
    pool.record(th)
    rnd = random.Random(0)
    share = np.mean([pool.draw(rnd) == 3 for _ in range(10_000)])
    assert share == pytest.approx(0.9, abs=0.02)
