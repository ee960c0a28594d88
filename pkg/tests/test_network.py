import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffnet.network import (AcwState, NetworkTopology, TopologyError, acw_update,
                             build_random_geometric_network, metropolis_weights,
                             normalized_adjacency_shift, uniform_weights, validate_weights)


def ring(V):
    return NetworkTopology(V, tuple((k, (k + 1) % V) for k in range(V)))


def star(leaves):
    return NetworkTopology(leaves + 1, tuple((0, k) for k in range(1, leaves + 1)))


@st.composite
def connected_graphs(draw, max_v=12):
    V = draw(st.integers(2, max_v))
    # random spanning tree plus extra edges keeps the graph connected
    edges = {(draw(st.integers(0, k - 1)), k) for k in range(1, V)}
    extra = draw(st.lists(st.tuples(st.integers(0, V - 1), st.integers(0, V - 1)), max_size=2 * V))
    edges |= {(min(i, j), max(i, j)) for i, j in extra if i != j}
    return NetworkTopology(V, tuple(edges))


def test_neighborhoods_include_self_and_are_symmetric():
    topo = ring(5)
    assert topo.neighbors[0] == [0, 1, 4]
    assert np.array_equal(topo.mask, topo.mask.T)
    assert np.all(np.diag(topo.mask))
    assert topo.sizes.tolist() == [3] * 5


def test_edges_are_canonicalized():
    topo = NetworkTopology(3, ((1, 0), (2, 1), (0, 1)))
    assert topo.edges == ((0, 1), (1, 2))


@pytest.mark.parametrize("edges, message", [
    (((0, 0),), "self-loop"),
    (((0, 5),), "outside"),
    (((0, 1),), "not connected"),
])
def test_invalid_topologies_rejected(edges, message):
    with pytest.raises(TopologyError, match=message):
        NetworkTopology(3, edges)


def test_json_round_trip(tmp_path):
    topo = ring(6)
    path = tmp_path / "net.json"
    topo.save(path)
    assert NetworkTopology.load(path) == topo
    assert set(topo.to_dict()) == {"V", "edges"}


def test_rgg_two_nodes_is_single_edge():
    topo = build_random_geometric_network(2, 1, seed=7)
    assert topo.edges == ((0, 1),)
    assert topo.neighbors == [[0, 1], [0, 1]]


def test_rgg_reference_network():
    a = build_random_geometric_network(20, 9.8, seed=1)
    b = build_random_geometric_network(20, 9.8, seed=1)
    assert np.array_equal(a.adjacency, b.adjacency)
    assert abs(a.degrees.mean() - 9.8) <= 1
    # the neighborhood mass behind the m_min = 5.4 figure
    assert a.sizes.sum() == 216


def test_rgg_rejects_bad_arguments():
    with pytest.raises(TopologyError):
        build_random_geometric_network(1, 1, seed=0)
    with pytest.raises(TopologyError):
        build_random_geometric_network(5, 7, seed=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(8, 30), st.floats(3.0, 6.0), st.integers(0, 10_000))
def test_rgg_connected_and_near_target(V, degree, seed):
    degree = min(degree, V - 1)
    topo = build_random_geometric_network(V, degree, seed)
    assert abs(topo.degrees.mean() - degree) <= 1


def test_shift_complete_graph():
    topo = NetworkTopology(3, ((0, 1), (0, 2), (1, 2)))
    A = normalized_adjacency_shift(topo).A
    assert np.allclose(A, (np.ones((3, 3)) - np.eye(3)) / 2)


def test_shift_two_node_path():
    A = normalized_adjacency_shift(NetworkTopology(2, ((0, 1),))).A
    assert np.array_equal(A, [[0.0, 1.0], [1.0, 0.0]])


def test_shift_matches_power_iteration():
    topo = build_random_geometric_network(20, 9.8, seed=1)
    adj = topo.adjacency.astype(float)
    # power iteration on a connected nonnegative matrix (shifted to break bipartite ties)
    B = adj + np.eye(20)
    v = np.ones(20)
    for _ in range(2000):
        v = B @ v
        v /= np.linalg.norm(v)
    lam = v @ adj @ v
    shift = normalized_adjacency_shift(topo)
    assert abs(shift.scale - lam) < 1e-9
    assert abs(np.max(np.abs(np.linalg.eigvals(shift.A))) - 1) < 1e-9


def test_shift_rejects_edgeless():
    with pytest.raises(TopologyError):
        normalized_adjacency_shift(NetworkTopology(1, ()))


def test_uniform_weights_values():
    C = uniform_weights(NetworkTopology(2, ((0, 1),)))
    assert np.array_equal(C, np.full((2, 2), 0.5))
    C = uniform_weights(star(3))
    assert np.allclose(C[:, 0], 0.25)
    assert validate_weights(C, star(3))


def test_metropolis_star():
    topo = star(4)
    C = metropolis_weights(topo)
    assert C[1, 0] == pytest.approx(1 / 5)
    assert C[0, 1] == pytest.approx(1 / 5)
    assert C[1, 1] == pytest.approx(4 / 5)
    assert np.allclose(C.sum(axis=0), 1, atol=1e-12)


def test_metropolis_two_node_path():
    assert np.allclose(metropolis_weights(NetworkTopology(2, ((0, 1),))), 0.5)


@settings(max_examples=40, deadline=None)
@given(connected_graphs())
def test_static_rules_are_valid(topo):
    for C in (uniform_weights(topo), metropolis_weights(topo)):
        assert validate_weights(C, topo)
    M = metropolis_weights(topo)
    assert np.allclose(M, M.T)


def test_validate_weights_reports_violations():
    topo = ring(4)
    C = uniform_weights(topo)
    bad = C.copy()
    bad[0, 0] = -0.1
    rep = validate_weights(bad, topo)
    assert not rep and rep.reason == "negative weight" and rep.index == (0, 0)
    bad = C.copy()
    bad[0, 1] -= 0.1
    rep = validate_weights(bad, topo)
    assert not rep and "sum" in rep.reason and rep.index == (1,)
    bad = C.copy()
    bad[2, 0] = 0.1
    assert validate_weights(bad, topo).reason == "weight outside neighborhood"


def test_acw_equal_deviations_give_uniform_column():
    topo = ring(5)
    state = AcwState.create(topo, M=1, nu=1.0)
    psi = np.zeros((5, 1))
    C = acw_update(state, psi, np.zeros((5, 1)), np.ones(5, bool))
    assert np.allclose(C, uniform_weights(topo))


def test_acw_hand_example():
    topo = NetworkTopology(2, ((0, 1),))
    state = AcwState.create(topo, M=1, nu=1.0, delta_c=1e-5)
    # column 1 sees distances 0.1 (neighbor 0) and 0.3 (itself)
    psi = np.array([[np.sqrt(0.1)], [np.sqrt(0.3)]])
    w = np.zeros((2, 1))
    C = acw_update(state, psi, w, np.ones(2, bool))
    a, b = 1 / 0.10001, 1 / 0.30001
    assert C[0, 1] == pytest.approx(a / (a + b), abs=1e-12)
    assert C[:, 1] == pytest.approx([0.7500, 0.2500], abs=1e-4)


def test_acw_psi_bar_tracks_last_sampled_estimate():
    topo = ring(3)
    state = AcwState.create(topo, M=2)
    first = np.arange(6.0).reshape(3, 2)
    acw_update(state, first, np.zeros((3, 2)), np.ones(3, bool))
    second = first + 10
    acw_update(state, second, np.zeros((3, 2)), np.array([True, False, True]))
    assert np.array_equal(state.psi_bar[1], first[1])
    assert np.array_equal(state.psi_bar[[0, 2]], second[[0, 2]])


@settings(max_examples=40, deadline=None)
@given(connected_graphs(8), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_acw_output_always_valid(topo, M, seed):
    rng = np.random.default_rng(seed)
    state = AcwState.create(topo, M, nu=rng.uniform(0.01, 1.0, topo.V), batch=(2,))
    for _ in range(5):
        psi = rng.normal(scale=10.0, size=(2, topo.V, M))
        w = rng.normal(size=(2, topo.V, M))
        C = acw_update(state, psi, w, rng.random((2, topo.V)) < 0.5)
        assert validate_weights(C, topo, tol=1e-12)
        assert np.all(state.sigma_hat_sq >= 0)
