import itertools
import math

import numpy as np
import pytest

from recipz.models.ergm import (
    EdgeListError,
    ErgmParams,
    GraphState,
    ergm_edge_flip_sweep,
    ergm_logZ_bruteforce,
    ergm_log_unnorm,
    ergm_stats,
    florentine_business_path,
    load_graph_edgelist,
)
from recipz.models.ising import (
    IsingParams,
    grid_edges,
    ising_gibbs_sweep,
    ising_logZ_bruteforce,
    ising_logZ_transfer,
    ising_log_unnorm,
    sample_tau_params,
    sufficient_stats,
)


def naive_ising_logz(p: IsingParams) -> float:
    """Independent enumeration using explicit (r, c) neighbour loops."""
    r, c = p.rows, p.cols
    h, v = p.horizontal(), p.vertical()
    a = p.alpha.reshape(r, c)
    vals = []
    for spins in itertools.product((-1, 1), repeat=r * c):
        x = np.array(spins).reshape(r, c)
        e = (a * x).sum()
        for i in range(r):
            for j in range(c - 1):
                e += h[i, j] * x[i, j] * x[i, j + 1]
        for i in range(r - 1):
            for j in range(c):
                e += v[i, j] * x[i, j] * x[i + 1, j]
        vals.append(e)
    vals = np.array(vals)
    m = vals.max()
    return float(m + math.log(np.exp(vals - m).sum()))


# --- Ising -------------------------------------------------------------------


def test_grid_edge_order():
    e = grid_edges(2, 3)
    np.testing.assert_array_equal(e, [[0, 1], [1, 2], [3, 4], [4, 5], [0, 3], [1, 4], [2, 5]])


def test_one_site_zero_field_is_log_two():
    p = IsingParams(1, 1, [0.0], [])
    assert ising_logZ_transfer(p) == pytest.approx(math.log(2), abs=1e-15)
    assert ising_logZ_bruteforce(p) == pytest.approx(math.log(2), abs=1e-15)


def test_one_site_field():
    p = IsingParams(1, 1, [0.7], [])
    assert ising_logZ_transfer(p) == pytest.approx(math.log(2 * math.cosh(0.7)), rel=1e-14)


def test_zero_parameters_give_sites_log_two():
    p = IsingParams.homogeneous(10, 30, 0.0, 0.0)
    assert ising_logZ_transfer(p) == pytest.approx(300 * math.log(2), rel=1e-14)


@pytest.mark.parametrize("shape", [(1, 4), (2, 2), (3, 3), (2, 4), (4, 2)])
def test_oracles_match_naive_enumeration(shape):
    p = sample_tau_params(*shape, 0.8, np.random.default_rng(sum(shape)))
    ref = naive_ising_logz(p)
    assert ising_logZ_bruteforce(p) == pytest.approx(ref, abs=1e-10)
    assert ising_logZ_transfer(p) == pytest.approx(ref, abs=1e-10)


def test_transfer_handles_strong_couplings():
    p = IsingParams.homogeneous(3, 4, 0.0, 5.0)
    assert ising_logZ_transfer(p) == pytest.approx(ising_logZ_bruteforce(p), abs=1e-9)


def test_bruteforce_refuses_large_lattice():
    with pytest.raises(ValueError):
        ising_logZ_bruteforce(IsingParams.homogeneous(10, 30, 0.1, 0.1))


def test_transfer_refuses_too_many_rows():
    with pytest.raises(ValueError):
        ising_logZ_transfer(IsingParams.homogeneous(15, 2, 0.1, 0.1))


def test_log_unnorm_hand_computed():
    p = IsingParams(1, 2, [0.5, -1.0], [2.0])
    assert ising_log_unnorm(p, [1, -1]) == pytest.approx(0.5 + 1.0 - 2.0)
    assert ising_log_unnorm(p, [1, 1], inv_temp=0.5) == pytest.approx(0.5 * (0.5 - 1.0 + 2.0))
    np.testing.assert_allclose(ising_log_unnorm(p, [[1, -1], [-1, -1]]), [-0.5, 2.5])


def test_log_unnorm_rejects_bad_spins():
    p = IsingParams.homogeneous(2, 2, 0.0, 0.0)
    with pytest.raises(ValueError):
        ising_log_unnorm(p, [0, 1, 1, 1])


def test_sufficient_stats():
    x = np.array([1, 1, -1, 1])  # 2x2 grid
    s1, s2 = sufficient_stats(2, 2, x)
    assert s1 == 2
    # edges (0,1) (2,3) (0,2) (1,3): 1 - 1 - 1 + 1
    assert s2 == 0


def test_params_validation():
    with pytest.raises(ValueError):
        IsingParams(2, 2, np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        IsingParams(2, 2, np.zeros(4), np.zeros(3))
    with pytest.raises(ValueError):
        IsingParams(2, 2, [0, 0, 0, math.nan], np.zeros(4))
    p = IsingParams.homogeneous(2, 2, 0.1, 0.1)
    with pytest.raises(ValueError):
        p.alpha[0] = 1.0


def test_tau_zero_params_are_exactly_zero():
    p = sample_tau_params(3, 5, 0.0, np.random.default_rng(0))
    assert not p.alpha.any() and not p.beta.any()


def test_tau_params_range():
    p = sample_tau_params(10, 30, 0.4, np.random.default_rng(1))
    assert np.all(np.abs(p.alpha) <= 0.4) and np.all(np.abs(p.beta) <= 0.4)
    assert p.beta.size == 10 * 29 + 9 * 30


def test_gibbs_sweep_infinite_temperature_is_uniform():
    p = sample_tau_params(2, 3, 1.0, np.random.default_rng(2))
    rng = np.random.default_rng(3)
    x = np.ones(6, dtype=np.int8)
    ups = 0
    for _ in range(4000):
        x = ising_gibbs_sweep(p, x, 0.0, rng)
        ups += (x == 1).sum()
    frac = ups / (4000 * 6)
    assert abs(frac - 0.5) < 4 * math.sqrt(0.25 / 24000)


def test_gibbs_sweep_preserves_target_distribution():
    p = sample_tau_params(2, 2, 0.7, np.random.default_rng(4))
    states = np.array(list(itertools.product((-1, 1), repeat=4)))
    logp = ising_log_unnorm(p, states)
    exact = np.exp(logp - ising_logZ_bruteforce(p))
    rng = np.random.default_rng(5)
    x = np.ones(4, dtype=np.int8)
    counts = np.zeros(16)
    n = 60_000
    for _ in range(n):
        x = ising_gibbs_sweep(p, x, 1.0, rng)
        counts[int("".join("1" if s == 1 else "0" for s in x), 2)] += 1
    emp = counts / n
    # state index ordering matches itertools.product over (-1, 1)
    np.testing.assert_allclose(emp, exact, atol=0.01)


def test_gibbs_sweep_does_not_mutate_input():
    p = IsingParams.homogeneous(2, 2, 0.0, 0.5)
    x = np.ones(4, dtype=np.int8)
    ising_gibbs_sweep(p, x, 1.0, np.random.default_rng(0))
    assert np.all(x == 1)


# --- ERGM --------------------------------------------------------------------


def test_ergm_stats_star_graph():
    g = GraphState.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    e, s = ergm_stats(g)
    assert e == 3
    assert s == pytest.approx(3 / 4)  # centre has C(3,2) = 3 two-stars


def test_ergm_log_unnorm():
    g = GraphState.from_edges(3, [(0, 1), (1, 2)])
    assert ergm_log_unnorm(ErgmParams(0.5, 2.0), g) == pytest.approx(0.5 * 2 + 2.0 / 3)


def test_ergm_zero_params_logz():
    for n in (2, 3, 4, 5):
        assert ergm_logZ_bruteforce(ErgmParams(0.0, 0.0), n) == pytest.approx(math.comb(n, 2) * math.log(2))


def test_ergm_logz_matches_naive_enumeration():
    p = ErgmParams(-0.4, 0.7)
    n = 4
    pairs = list(itertools.combinations(range(n), 2))
    vals = []
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        g = GraphState.from_edges(n, [pr for pr, b in zip(pairs, bits) if b])
        vals.append(ergm_log_unnorm(p, g))
    vals = np.array(vals)
    assert ergm_logZ_bruteforce(p, n) == pytest.approx(math.log(np.exp(vals).sum()), rel=1e-13)


def test_ergm_bruteforce_limit():
    with pytest.raises(ValueError):
        ergm_logZ_bruteforce(ErgmParams(0, 0), 6)


def test_graph_state_validation():
    with pytest.raises(ValueError):
        GraphState([[0, 1], [0, 0]])
    with pytest.raises(ValueError):
        GraphState([[1, 0], [0, 0]])


def test_edge_flip_sweep_stationary_distribution():
    p = ErgmParams(-0.3, 0.8)
    n = 3
    pairs = list(itertools.combinations(range(n), 2))
    graphs = [GraphState.from_edges(n, [pr for pr, b in zip(pairs, bits) if b])
              for bits in itertools.product((0, 1), repeat=3)]
    logp = np.array([ergm_log_unnorm(p, g) for g in graphs])
    exact = np.exp(logp - ergm_logZ_bruteforce(p, n))
    rng = np.random.default_rng(0)
    g = GraphState.empty(n)
    counts = np.zeros(8)
    sweeps = 60_000
    for _ in range(sweeps):
        g = ergm_edge_flip_sweep(p, g, 1.0, rng)
        counts[4 * g.adjacency[0, 1] + 2 * g.adjacency[0, 2] + g.adjacency[1, 2]] += 1
    np.testing.assert_allclose(counts / sweeps, exact, atol=0.01)


def test_edge_flip_sweep_at_zero_inverse_temperature_is_fair_coin():
    rng = np.random.default_rng(1)
    g = GraphState.empty(6)
    total = 0
    for _ in range(2000):
        g = ergm_edge_flip_sweep(ErgmParams(3.0, -1.0), g, 0.0, rng)
        total += len(g.edge_list())
    frac = total / (2000 * 15)
    assert abs(frac - 0.5) < 0.01


def test_florentine_business_graph():
    g = load_graph_edgelist(florentine_business_path())
    assert g.n_nodes == 16
    assert len(g.edge_list()) == 15
    e, s = ergm_stats(g)
    assert e == 15
    # Medici (index 8) is the best-connected family; five families have no business ties
    assert g.degrees()[8] == 5
    assert sorted(g.degrees().tolist(), reverse=True) == [5, 4, 4, 4, 3, 3, 2, 2, 1, 1, 1, 0, 0, 0, 0, 0]


@pytest.mark.parametrize("body, msg", [
    ("3\n0 0\n", "self-loop"),
    ("3\n0 5\n", "out of range"),
    ("3\n0 1 2\n", "expected 'u v'"),
    ("x\n", "not an integer"),
    ("# only comments\n", "missing node count"),
    ("3\n0 a\n", "non-integer"),
])
def test_edgelist_errors_name_the_line(tmp_path, body, msg):
    f = tmp_path / "g.txt"
    f.write_text(body)
    with pytest.raises(EdgeListError, match=msg):
        load_graph_edgelist(f)


def test_edgelist_error_carries_line_number(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("# header\n3\n0 1\n1 1\n")
    with pytest.raises(EdgeListError, match=r"g\.txt:4"):
        load_graph_edgelist(f)
