import itertools
import json

import numpy as np
import pytest
import scipy.linalg

from quditsim.hilbert import DimensionError, QuantumState, RegisterSpec
from quditsim.hilbert import measure_sample
from quditsim.qaoa import (
    Graph,
    QaoaExperiment,
    brute_force_best,
    cost,
    expected_cost,
    ndar_distribution,
    ndar_init,
    ndar_round,
    optimize_angles,
    parse_edge_list,
    planted_coloring_graph,
    qaoa_state,
    run_experiment,
    run_ndar,
    triangle,
    uniform_expected_cost,
)
from quditsim.util import json_ready, rng_from


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, ((0, 0),))
    with pytest.raises(ValueError):
        Graph(3, ((0, 1), (1, 0)))
    with pytest.raises(DimensionError):
        Graph(3, ((0, 3),))
    g = Graph(4, ((2, 0), (3, 1)))
    assert g.edges == ((0, 2), (1, 3))


def test_parse_edge_list():
    text = """
    # a triangle plus a pendant
    0 1
    1 2
    2 0   # closing edge
    2 3
    """
    g = parse_edge_list(text)
    assert g.n == 4
    assert set(g.edges) == {(0, 1), (1, 2), (0, 2), (2, 3)}
    with pytest.raises(ValueError):
        parse_edge_list("0 1 2")
    with pytest.raises(ValueError):
        parse_edge_list("# nothing here")


def test_cost_by_hand():
    g = triangle()
    assert cost((0, 1, 2), g) == 3
    assert cost((0, 0, 1), g) == 2
    assert cost((1, 1, 1), g) == 0
    with pytest.raises(ValueError):
        cost((0, 1, 3), g, d=3)
    with pytest.raises(DimensionError):
        cost((0, 1), g)


def test_cost_random_graph_matches_recount():
    rng = rng_from(91)
    edges = [(u, v) for u in range(7) for v in range(u + 1, 7)
             if rng.random() < 0.5]
    g = Graph(7, tuple(edges))
    for _ in range(20):
        a = tuple(int(c) for c in rng.integers(0, 3, size=7))
        recount = sum(1 for u, v in g.edges if a[u] != a[v])
        assert cost(a, g, d=3) == recount


def test_global_color_permutation_leaves_cost_invariant():
    rng = rng_from(14)
    for trial in range(10):
        n = int(rng.integers(4, 8))
        edges = tuple((u, v) for u in range(n) for v in range(u + 1, n)
                      if rng.random() < 0.6)
        if not edges:
            continue
        g = Graph(n, edges)
        d = int(rng.integers(2, 5))
        a = tuple(int(c) for c in rng.integers(0, d, size=n))
        sigma = rng.permutation(d)
        assert cost(tuple(int(sigma[c]) for c in a), g, d) == cost(a, g, d)


def test_brute_force_triangle_both_dims():
    _, c3 = brute_force_best(triangle(), 3)
    assert c3 == 3
    _, c2 = brute_force_best(triangle(), 2)
    assert c2 == 2   # odd cycle is not 2-colorable


def test_brute_force_matches_itertools_recount():
    # K4 with 3 colors: one pair must collide, so the optimum is 5 of 6 edges.
    g = Graph(4, tuple(itertools.combinations(range(4), 2)))
    best_assignment, best_cost = brute_force_best(g, 3)
    oracle = max(itertools.product(range(3), repeat=4),
                 key=lambda a: cost(a, g))
    assert best_cost == cost(oracle, g) == 5
    assert cost(best_assignment, g) == 5
    # ties break to the lexicographically smallest assignment
    candidates = [a for a in itertools.product(range(3), repeat=4)
                  if cost(a, g) == 5]
    assert best_assignment == min(candidates)


def test_uniform_expected_cost_formula():
    for d in (2, 3, 5):
        g = triangle()
        reg = RegisterSpec((d,) * g.n)
        value = expected_cost(QuantumState.uniform(reg), g)
        assert value == pytest.approx(g.n_edges * (1 - 1 / d), abs=1e-12)
        assert value == pytest.approx(uniform_expected_cost(g, d), abs=1e-12)


def _dense_qaoa_oracle(graph, d, gammas, betas):
    """Straight-line rebuild with explicit kron matrices and scipy.expm."""
    n = graph.n
    D = d ** n
    levels = list(itertools.product(range(d), repeat=n))
    psi = np.full(D, 1 / np.sqrt(D), dtype=complex)
    omega = np.exp(2j * np.pi / d)
    x = np.zeros((d, d), dtype=complex)
    for k in range(d):
        x[(k + 1) % d, k] = 1.0
    mixer_gen = x + x.conj().T
    for gamma, beta in zip(gammas, betas):
        sep = np.ones(D, dtype=complex)
        for i, lv in enumerate(levels):
            for u, v in graph.edges:
                if lv[u] == lv[v]:
                    sep[i] *= np.exp(-1j * gamma)
        psi = sep * psi
        u_mix = scipy.linalg.expm(-1j * beta * mixer_gen)
        for site in range(n):
            mats = [u_mix if s == site else np.eye(d) for s in range(n)]
            full = mats[0]
            for m in mats[1:]:
                full = np.kron(full, m)
            psi = full @ psi
    return psi


def test_qaoa_state_matches_dense_oracle():
    g = triangle()
    gammas, betas = [0.7, 1.3], [0.4, 0.9]
    state = qaoa_state(g, 3, gammas, betas)
    oracle = _dense_qaoa_oracle(g, 3, gammas, betas)
    np.testing.assert_allclose(state.amplitudes, oracle, atol=1e-12)
    # and on an irregular graph with d = 2
    g2 = Graph(4, ((0, 1), (1, 2), (2, 3)))
    state2 = qaoa_state(g2, 2, [0.5], [1.1])
    oracle2 = _dense_qaoa_oracle(g2, 2, [0.5], [1.1])
    np.testing.assert_allclose(state2.amplitudes, oracle2, atol=1e-12)


def test_qaoa_state_zero_angles_is_uniform():
    state = qaoa_state(triangle(), 3, [0.0], [0.0])
    np.testing.assert_allclose(state.probabilities(), np.full(27, 1 / 27),
                               atol=1e-12)


def test_qaoa_state_edgeless_graph_stays_product():
    g = Graph(3, ())
    state = qaoa_state(g, 3, [0.8], [0.6])
    tensor = state.amplitudes.reshape(3, 3, 3)
    # rank-one along every bipartition of a product state
    m = tensor.reshape(3, 9)
    s = np.linalg.svd(m, compute_uv=False)
    assert s[1] < 1e-12
    m2 = np.moveaxis(tensor, 1, 0).reshape(3, 9)
    s2 = np.linalg.svd(m2, compute_uv=False)
    assert s2[1] < 1e-12


def test_expected_cost_basis_state_and_sampling():
    g = triangle()
    reg = RegisterSpec((3, 3, 3))
    for levels in [(0, 1, 2), (0, 0, 1), (2, 2, 2)]:
        state = QuantumState.from_levels(reg, levels)
        assert expected_cost(state, g) == pytest.approx(cost(levels, g), abs=1e-12)
    # sampling estimate of a random state agrees with the dense value
    rng = rng_from(5)
    amps = rng.normal(size=27) + 1j * rng.normal(size=27)
    state = QuantumState(amps / np.linalg.norm(amps), reg)
    dense = expected_cost(state, g)
    shots = 100_000
    counts = measure_sample(state, shots, seed=77)
    estimate = sum(cost(lv, g) * c for lv, c in counts.items()) / shots
    probs = state.probabilities()
    costs = np.array([cost(reg.levels_of(i), g) for i in range(27)])
    sigma = np.sqrt(probs @ (costs - dense) ** 2 / shots)
    assert abs(estimate - dense) < 5 * sigma


def test_sampling_estimator_unbiased_over_batches():
    g = triangle()
    state = qaoa_state(g, 3, [0.9], [0.5])
    dense = expected_cost(state, g)
    probs = state.probabilities()
    reg = state.register
    costs = np.array([cost(reg.levels_of(i), g) for i in range(27)])
    per_shot_var = float(probs @ (costs - dense) ** 2)
    batches, shots = 200, 64
    means = []
    for b in range(batches):
        counts = measure_sample(state, shots, seed=1000 + b)
        means.append(sum(cost(lv, g) * c for lv, c in counts.items()) / shots)
    sigma_mean = np.sqrt(per_shot_var / (batches * shots))
    assert abs(np.mean(means) - dense) < 3 * sigma_mean


def test_optimize_angles_beats_grid_search():
    g = triangle()
    grid_best = 0.0
    for gamma in np.linspace(0, 2 * np.pi, 25):
        for beta in np.linspace(0, np.pi, 25):
            val = expected_cost(qaoa_state(g, 3, [gamma], [beta]), g)
            grid_best = max(grid_best, val)
    gammas, betas, value = optimize_angles(g, 3, p=1, restarts=3, seed=11)
    assert value >= grid_best - 0.02
    assert value > uniform_expected_cost(g, 3)
    state_value = expected_cost(qaoa_state(g, 3, gammas, betas), g)
    assert state_value == pytest.approx(value, abs=1e-9)


def test_optimize_angles_never_below_uniform():
    g = Graph(4, ((0, 1), (1, 2), (2, 3), (0, 3)))
    _, _, value = optimize_angles(g, 2, p=1, restarts=1, seed=5, maxiter=1)
    assert value >= uniform_expected_cost(g, 2) - 1e-12


def test_optimize_angles_deterministic():
    g = triangle()
    first = optimize_angles(g, 3, p=2, restarts=2, seed=8, maxiter=60)
    second = optimize_angles(g, 3, p=2, restarts=2, seed=8, maxiter=60)
    np.testing.assert_array_equal(first[0], second[0])
    np.testing.assert_array_equal(first[1], second[1])
    assert first[2] == second[2]


def test_lossless_round_distribution_matches_plain_qaoa():
    g = triangle()
    gammas, betas = [0.9], [0.5]
    dist = ndar_distribution(g, 3, gammas, betas, gamma_loss=0.0)
    plain = qaoa_state(g, 3, gammas, betas).probabilities()
    np.testing.assert_allclose(dist, plain, atol=1e-12)
    # empirical check at the sampling level
    shots = 100_000
    counts = rng_from(6).multinomial(shots, dist)
    tv = 0.5 * np.sum(np.abs(counts / shots - plain))
    assert tv < 0.01


def test_frame_shift_is_a_relabeling_of_the_distribution():
    # shifting the frame permutes outcome labels; probabilities follow suit
    g = triangle()
    gammas, betas = [0.7], [0.3]
    base = ndar_distribution(g, 3, gammas, betas, gamma_loss=0.0)
    shifted = ndar_distribution(g, 3, gammas, betas, gamma_loss=0.0,
                                shifts=(1, 2, 0))
    reg = RegisterSpec((3, 3, 3))
    costs_base = np.array([cost(reg.levels_of(i), g) for i in range(27)])
    mean_base = costs_base @ base
    # un-remapped cost of a frame outcome: color = (frame + shift) mod d
    costs_frame = np.array([
        cost(tuple((np.array(reg.levels_of(i)) + np.array([1, 2, 0])) % 3), g)
        for i in range(27)])
    assert costs_frame @ shifted == pytest.approx(mean_base, abs=1e-12)


def test_ndar_round_without_loss_is_plain_sampling():
    g = triangle()
    gammas, betas, _ = optimize_angles(g, 3, p=1, restarts=2, seed=3)
    state = ndar_init(g, 3)
    shots = 200_000
    new_state, record = ndar_round(g, 3, gammas, betas, 0.0, shots, state, seed=42)
    target = expected_cost(qaoa_state(g, 3, gammas, betas), g)
    sigma = g.n_edges / np.sqrt(shots)
    assert record.mean_sampled == pytest.approx(target, abs=4 * sigma)
    assert new_state.best.cost == 3   # a proper coloring appears in 2e5 shots


def test_ndar_round_full_loss_pins_the_incumbent():
    g = triangle()
    state = ndar_init(g, 3)
    # give the loop a nontrivial incumbent first
    state, _ = ndar_round(g, 3, [0.9], [0.5], 0.0, 4096, state, seed=7)
    incumbent = state.best
    assert incumbent.cost == 3
    after, record = ndar_round(g, 3, [0.9], [0.5], 1.0, 512, state, seed=8,
                               round_index=2)
    # total loss collapses every sample onto the incumbent
    assert after.best == incumbent
    assert record.round_best == incumbent.cost
    assert record.mean_sampled == pytest.approx(incumbent.cost)


def test_ndar_history_monotone_and_consistent():
    g = triangle()
    final, records = run_ndar(g, 3, [0.9], [0.5], rounds=8, gamma_loss=0.2,
                              shots=256, seed=17)
    assert len(final.history) == 8
    assert all(b <= a for b, a in zip(final.history, final.history[1:]))
    assert final.history[-1] == final.best.cost
    assert [r.best_cost for r in records] == list(final.history)
    assert cost(final.best.assignment, g) == final.best.cost
    # shifts track the incumbent so it reads all-zeros in the frame
    assert final.shifts == final.best.assignment
    perms = final.permutations(3)
    for i, color in enumerate(final.best.assignment):
        assert perms[i, color] == 0


def test_ndar_improves_triangle_to_proper_coloring():
    g = triangle()
    gammas, betas, _ = optimize_angles(g, 3, p=1, restarts=3, seed=0)
    final, _ = run_ndar(g, 3, gammas, betas, rounds=10, gamma_loss=0.2,
                        shots=512, seed=2024)
    assert final.best.cost == 3


def test_run_experiment_deterministic_and_complete():
    exp = QaoaExperiment(graph=triangle(), d=3, p=1, restarts=2, rounds=4,
                         gamma_loss=0.2, shots=128)
    out1 = run_experiment(exp, seed=9)
    out2 = run_experiment(exp, seed=9)
    assert json.dumps(json_ready(out1["report"]), sort_keys=True) == \
           json.dumps(json_ready(out2["report"]), sort_keys=True)
    report = out1["report"]
    assert report["brute_force_cost"] == 3
    assert report["expected_cost_uniform"] == pytest.approx(2.0)
    assert report["expected_cost_optimized"] > 2.0
    assert len(report["history"]) == 4
    assert len(out1["round_rows"]) == 4


def test_planted_graph_is_colorable():
    g = planted_coloring_graph(9, 3, 14, seed=33)
    assert g.n == 9 and g.n_edges == 14
    _, best = brute_force_best(g, 3)
    assert best == g.n_edges
