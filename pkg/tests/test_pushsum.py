import numpy as np
import pytest

from ftpushsum.digraph import DiGraph, random_strongly_connected
from ftpushsum.pushsum import (
    AgentConsensusState,
    BaselineState,
    baseline_matrix,
    baseline_push_sum_round,
    baseline_run,
    decompose_initial,
    decomposed_round,
    make_weights,
    stacked_matrix,
)

from oracles import power_iterate

RING3 = DiGraph(3, frozenset({(1, 0), (2, 1), (0, 2)}))
PAIR = DiGraph(2, frozenset({(1, 0), (0, 1)}))


def _stack(states, l):
    return np.array([s.alpha[l] for s in states] + [s.beta[l] for s in states])


# ---------------------------------------------------------------------------
# baseline push-sum


def test_baseline_single_node_round_is_identity():
    g = DiGraph(1, frozenset())
    state = BaselineState.from_values([5.0])
    nxt = baseline_push_sum_round(state, g)
    assert nxt.x1[0] == 5.0 and nxt.x2[0] == 1.0


def test_baseline_two_node_matches_power_iteration_oracle():
    state = BaselineState.from_values([0.0, 2.0])
    p = baseline_matrix(PAIR)
    for k in range(1, 20):
        state = baseline_push_sum_round(state, PAIR)
        assert np.allclose(state.x1, power_iterate(p, np.array([0.0, 2.0]), k), atol=1e-13)
    assert np.abs(state.ratios() - 1.0).max() < 1e-8


def test_baseline_conserves_value_sum_and_mass():
    for seed in range(10):
        g = random_strongly_connected(2 + seed % 8, 0.3, seed=seed)
        values = np.random.default_rng(seed).standard_normal(g.n)
        state = BaselineState.from_values(values)
        for _ in range(30):
            state = baseline_push_sum_round(state, g)
        assert abs(state.x1.sum() - values.sum()) <= 1e-12 * (1 + abs(values.sum()))
        assert abs(state.x2.sum() - g.n) <= 1e-12 * g.n


def test_baseline_ratio_convergence_by_500_rounds():
    for seed in range(8):
        rng = np.random.default_rng([21, seed])
        n = int(rng.integers(2, 11))
        g = random_strongly_connected(n, 0.3, rng)
        values = rng.standard_normal(n)
        state = baseline_run(g, values, 500)
        assert np.abs(state.ratios() - values.mean()).max() <= 1e-8


def test_baseline_matrix_is_column_stochastic():
    for seed in range(6):
        g = random_strongly_connected(2 + seed, 0.4, seed=seed)
        p = baseline_matrix(g)
        assert np.abs(p.sum(axis=0) - 1.0).max() < 1e-14
        assert (p >= 0).all()


# ---------------------------------------------------------------------------
# weight mechanism


def test_steady_weights_for_out_degree_two():
    # center sends to two neighbors; ring closes the graph
    g = DiGraph(3, frozenset({(1, 0), (2, 0), (0, 1), (0, 2)}))
    w = make_weights(g, "steady")
    assert w.p[0, 0] == 0.25 and w.p[1, 0] == 0.25 and w.p[2, 0] == 0.25
    assert w.a_ba[0] == 0.25
    assert w.a_bb[0] == 0.5 and w.a_ab[0] == 0.5


def test_initial_weights_column_constraint_is_exact():
    for seed in range(25):
        g = random_strongly_connected(2 + seed % 9, 0.4, seed=seed)
        w = make_weights(g, "initial", seed=seed)
        for i in range(g.n):
            assert w.p[:, i].sum() + w.a_ba[i] == 1.0
        assert (w.a_ab == 1.0).all() and (w.a_bb == 0.0).all()


def test_initial_weights_zero_outside_out_neighborhood():
    g = RING3
    w = make_weights(g, "initial", seed=4)
    assert w.p[2, 0] == 0.0  # node 0 does not send to node 2
    assert w.p[1, 0] != 0.0


def test_initial_weights_differ_across_seeds():
    g = random_strongly_connected(4, 0.3, seed=2)
    w1 = make_weights(g, "initial", seed=1)
    w2 = make_weights(g, "initial", seed=2)
    assert not np.allclose(w1.p, w2.p)


def test_make_weights_rejects_unknown_phase():
    with pytest.raises(ValueError):
        make_weights(RING3, "warmup")


# ---------------------------------------------------------------------------
# stacked matrix form


def test_stacked_matrix_three_cycle_blocks():
    ph = stacked_matrix(make_weights(RING3, "steady"))
    third = 1.0 / 3.0
    assert ph[0, 0] == third and ph[1, 0] == third  # cycle edge plus self
    assert ph[0, 3] == 0.5 and ph[3, 3] == 0.5  # half blocks
    assert ph[3, 0] == third  # beta<-alpha coupling
    assert ph.shape == (6, 6)


def test_stacked_matrix_spectral_radius_one():
    for seed in range(8):
        g = random_strongly_connected(2 + seed, 0.3, seed=seed)
        ph = stacked_matrix(make_weights(g, "steady"))
        assert abs(np.abs(np.linalg.eigvals(ph)).max() - 1.0) < 1e-10


def test_stacked_matrix_column_sums():
    for seed in range(8):
        g = random_strongly_connected(2 + seed, 0.3, seed=seed)
        ph = stacked_matrix(make_weights(g, "steady"))
        assert np.abs(ph.sum(axis=0) - 1.0).max() < 1e-14


def test_stacked_matrix_rejects_initial_phase():
    with pytest.raises(ValueError):
        stacked_matrix(make_weights(RING3, "initial", seed=0))


# ---------------------------------------------------------------------------
# decomposed dynamics


def test_decompose_initial_split_constraint():
    values = [1.5, -2.0, 0.25]
    states = decompose_initial(values, seed=9)
    for x, s in zip(values, states):
        assert s.alpha[0] + s.beta[0] == pytest.approx(2 * x, abs=1e-12)
        assert s.alpha[1] == 0.0 and s.beta[1] == 2.0
        assert s.alpha_history == ((), ())


def test_round_zero_conserves_decomposed_sums():
    values = [1.0, 2.0, 3.0]
    states = decompose_initial(values, seed=5)
    states = decomposed_round(states, make_weights(RING3, "initial", seed=6), RING3)
    total1 = sum(s.alpha[0] + s.beta[0] for s in states)
    total2 = sum(s.alpha[1] + s.beta[1] for s in states)
    assert total1 == pytest.approx(2 * sum(values), abs=1e-12)
    assert total2 == pytest.approx(2 * len(values), abs=1e-12)


def test_history_grows_one_entry_per_round_per_iteration():
    states = decompose_initial([1.0, 2.0, 3.0], seed=1)
    w = make_weights(RING3, "steady")
    for k in range(1, 5):
        states = decomposed_round(states, w, RING3)
        for s in states:
            assert len(s.alpha_history[0]) == k
            assert len(s.alpha_history[1]) == k
            assert s.alpha_history[0][-1] == s.alpha[0]


def test_steady_round_equals_stacked_matrix_multiplication():
    states = decompose_initial([0.3, -1.2, 2.4], seed=8)
    w0 = make_weights(RING3, "initial", seed=8)
    ws = make_weights(RING3, "steady")
    states = decomposed_round(states, w0, RING3)
    ph = stacked_matrix(ws)
    for _ in range(5):
        expect = (ph @ np.column_stack([_stack(states, 0), _stack(states, 1)]).T.reshape(2, -1).T)
        nxt = decomposed_round(states, ws, RING3)
        for l in range(2):
            assert np.abs(_stack(nxt, l) - ph @ _stack(states, l)).max() < 1e-12
        states = nxt


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_fifty_rounds_match_matrix_power(n):
    g = random_strongly_connected(n, 0.3, seed=n)
    rng = np.random.default_rng(n)
    states = decompose_initial(rng.standard_normal(n), rng)
    ws = make_weights(g, "steady")
    states = decomposed_round(states, make_weights(g, "initial", rng), g)
    start = [_stack(states, l) for l in range(2)]
    ph = stacked_matrix(ws)
    for _ in range(50):
        states = decomposed_round(states, ws, g)
    power = np.linalg.matrix_power(ph, 50)
    for l in range(2):
        assert np.abs(_stack(states, l) - power @ start[l]).max() < 1e-10


def test_single_node_ratio_is_exact_from_second_sample():
    c = -3.7
    g = DiGraph(1, frozenset())
    rng = np.random.default_rng(12)
    states = decompose_initial([c], rng)
    states = decomposed_round(states, make_weights(g, "initial", rng), g)
    ws = make_weights(g, "steady")
    ph = stacked_matrix(ws)
    start = np.array([_stack(states, l)[:, 0] if False else _stack(states, l) for l in range(2)])
    for k in range(2, 8):
        states = decomposed_round(states, ws, g)
        for l in range(2):  # trajectory equals the matrix-power oracle
            expect = np.linalg.matrix_power(ph, k - 1) @ start[l].reshape(2)
            assert states[0].alpha_history[l][-1] == pytest.approx(expect[0], abs=1e-13)
        ratio = states[0].alpha_history[0][-1] / states[0].alpha_history[1][-1]
        assert ratio == pytest.approx(c, abs=1e-12)


def test_decomposed_ratio_converges_to_mean():
    for seed in range(5):
        rng = np.random.default_rng([31, seed])
        n = int(rng.integers(2, 9))
        g = random_strongly_connected(n, 0.3, rng)
        values = rng.standard_normal(n)
        states = decompose_initial(values, rng)
        states = decomposed_round(states, make_weights(g, "initial", rng), g)
        ws = make_weights(g, "steady")
        for _ in range(500):
            states = decomposed_round(states, ws, g)
        ratios = np.array([s.alpha[0] / s.alpha[1] for s in states])
        assert np.abs(ratios - values.mean()).max() <= 1e-8


def test_mass_conservation_through_both_phases():
    for seed in range(6):
        rng = np.random.default_rng([41, seed])
        n = int(rng.integers(2, 9))
        g = random_strongly_connected(n, 0.3, rng)
        values = rng.standard_normal(n)
        states = decompose_initial(values, rng)
        states = decomposed_round(states, make_weights(g, "initial", rng), g)
        ws = make_weights(g, "steady")
        for _ in range(60):
            states = decomposed_round(states, ws, g)
        total1 = sum(s.alpha[0] + s.beta[0] for s in states)
        total2 = sum(s.alpha[1] + s.beta[1] for s in states)
        assert abs(total1 - 2 * values.sum()) <= 1e-12 * (1 + abs(2 * values.sum()))
        assert abs(total2 - 2 * n) <= 1e-12 * 2 * n


def test_round_is_pure_and_inputs_unchanged():
    states = decompose_initial([1.0, 2.0, 3.0], seed=3)
    w = make_weights(RING3, "steady")
    before = [(s.alpha, s.beta, s.alpha_history) for s in states]
    decomposed_round(states, w, RING3)
    assert [(s.alpha, s.beta, s.alpha_history) for s in states] == before


def test_round_validates_sizes():
    states = decompose_initial([1.0, 2.0], seed=0)
    with pytest.raises(ValueError):
        decomposed_round(states, make_weights(RING3, "steady"), RING3)
