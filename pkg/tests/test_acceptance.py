"""Desk-scale acceptance suite.

Every scenario runs V=20 nodes, M=50 taps (M=10 in graph mode), R=20
realizations and N=20000 iterations with the invariant checker switched on.
Each test prints one PASS/FAIL line with its measured values in the terminal
summary (see conftest.py).
"""

from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffnet.adaptive import DiffusionEngine, RunMode, SamplingController, diffusion_iteration
from diffnet.harness import ScenarioConfig, simulate
from diffnet.metrics import moving_average, to_db
from diffnet.network import (NetworkTopology, build_random_geometric_network,
                             normalized_adjacency_shift)
from diffnet.signals import Purpose, RegressorSource, StreamBlock, substream
from diffnet.theory import min_step_size_mu_s

pytestmark = pytest.mark.acceptance

R, N, V = 20, 20000, 20
RULE = {"delta_n": 3000}


def _as(label, beta_r, mu_s, algorithm="as_dnlms"):
    return {"algorithm": algorithm, "label": label, "beta_r": beta_r, "mu_s": mu_s}


SCENARIOS = {
    # flip at N/2, heterogeneous noise, ACW
    "flip": ("fig3", {}, [
        {"algorithm": "dnlms_full"},
        _as("as_fixed", 1.6, 0.06),
        _as("asc", 2.1, 0.0333, "asc_dnlms"),
        *[_as(f"as_rule_{b}", b, RULE) for b in (1.6, 2.1, 2.6, 3.1)],
    ]),
    "homogeneous": ("fig4b", {}, [_as(f"as_{b}", b, RULE) for b in (2, 5, 10)]),
    "heterogeneous": ("fig4a", {}, [
        {"algorithm": "dnlms_full"},
        *[_as(f"as_{b}", b, 0.06) for b in (0.25, 0.5, 1.0, 2.0, 5.0)],
    ]),
    "walk": ("fig9", {"trajectory": {"mode": "random_walk", "trq": 1e-2}}, [
        {"algorithm": "dnlms_full"},
        *[_as(f"as_{b}", b, RULE) for b in (1.6, 2.1, 2.6)],
    ]),
    "graph": ("fig11", {}, [
        {"algorithm": "dnlms_full"},
        {"algorithm": "dnlms_random", "v_s": 5},
        _as("as_rule_1.8", 1.8, RULE),
    ]),
    "uniform": ("fig4a", {"combiner": {"rule": "uniform"}}, [_as("as", 1.6, 0.06)]),
    "metropolis": ("fig4a", {"combiner": {"rule": "metropolis"}}, [_as("as", 1.6, 0.06)]),
}

FAILURES = {}


@lru_cache(maxsize=None)
def scenario(name) -> ScenarioConfig:
    preset, overrides, algorithms = SCENARIOS[name]
    doc = ScenarioConfig.load(preset).to_dict()
    doc.update(overrides, algorithms=algorithms, realizations=R, iterations=N, name=name)
    return ScenarioConfig.from_dict(doc)


@lru_cache(maxsize=None)
def run(name, label):
    cfg = scenario(name)
    spec = next(a for a in cfg.algorithms if a.label == label)
    try:
        return simulate(cfg, spec, check=True)
    except AssertionError as exc:
        FAILURES[(name, label)] = str(exc)
        raise


def ss_db(summary):
    return float(to_db(summary.steady_state["nmsd"]))


def first_below(curve, level):
    hits = np.flatnonzero(curve <= level)
    return int(hits[0]) if len(hits) else None


def settle_index(summary, end):
    """First n where the smoothed NMSE is within 1 dB of its level just before ``end``."""
    nmse = summary.series["nmse"][:end]
    steady = float(to_db(nmse[-600:].mean()))
    return first_below(to_db(moving_average(nmse, 64)), steady + 1.0)


def test_criterion_01_mu_s_cross_check(criterion):
    tag = criterion(1)
    mu = min_step_size_mu_s(4, 1.8 * 0.009, 0.009, 3000)
    tag.measured(f"mu_s={mu:.4f} (reference 2.0364)")
    assert abs(mu / 2.0364 - 1) < 0.01


def _paired_engines(seed, graph, iterations):
    topo = build_random_geometric_network(V, 9.8, seed=1)
    M = 10 if graph else 50
    mu = np.r_[np.full(10, 0.1), np.full(10, 1.0)]
    full = DiffusionEngine(topo, M, mu, RunMode("dnlms_full"))
    zero = DiffusionEngine(topo, M, mu, RunMode("as_dnlms"), SamplingController(beta=0.0, mu_s=0.06))
    shift = normalized_adjacency_shift(topo) if graph else None
    src = RegressorSource(V, M, shift, batch=(1,))
    u = StreamBlock(seed, [0], Purpose.INPUT, V)
    v = StreamBlock(seed, [0], Purpose.NOISE, V)
    w_o = substream(seed, 0, Purpose.SYSTEM).uniform(-1, 1, M)
    sigma = np.linspace(0.1, 0.4, V) * (0.009 / 0.4 if graph else 1.0)
    for n in range(iterations):
        x = src.step(u.next())
        d = x @ w_o + np.sqrt(sigma) * v.next()
        diffusion_iteration(full, x, d, w_o)
        diffusion_iteration(zero, x, d, w_o)
        yield n, full, zero


@pytest.mark.parametrize("graph", [False, True], ids=["classical", "graph"])
def test_criterion_02_beta_zero_equals_full(criterion, graph):
    tag = criterion(2)

    @settings(max_examples=2, deadline=None, derandomize=True)
    @given(st.integers(0, 2**32 - 1))
    def check(seed):
        for n, full, zero in _paired_engines(seed, graph, 5000):
            assert np.array_equal(full.w, zero.w), f"seed {seed}: diverged at iteration {n}"
            assert np.array_equal(full.psi, zero.psi)

    check()
    tag.measured(f"{'graph' if graph else 'classical'}: bit-identical over 5000 iterations")


def test_criterion_03_graph_regressor_oracle(criterion):
    tag = criterion(3)
    worst = [0.0]

    @settings(max_examples=60, deadline=None, derandomize=True)
    @given(st.integers(2, 25), st.integers(1, 10), st.integers(0, 2**31 - 1))
    def check(V_, M, seed):
        rng = np.random.default_rng(seed)
        # random spanning tree plus random chords
        edges = {(int(rng.integers(k)), k) for k in range(1, V_)}
        edges |= {(i, j) for i, j in rng.integers(V_, size=(V_, 2)) if i < j}
        A = normalized_adjacency_shift(NetworkTopology(V_, tuple(edges))).A
        u = rng.normal(size=(M + 20, V_))
        src = RegressorSource(V_, M, A)
        for n in range(len(u)):
            x = src.step(u[n])
            ref = np.zeros((V_, M))
            for m in range(min(M, n + 1)):
                ref[:, m] = np.linalg.matrix_power(A, m) @ u[n - m]
            err = np.max(np.abs(x - ref))
            worst[0] = max(worst[0], err)
            assert err < 1e-10

    check()
    tag.measured(f"max abs error {worst[0]:.2e}")


def test_criterion_04_sampled_nodes_homogeneous(criterion):
    tag = criterion(4)
    ok = True
    for b in (2, 5, 10):
        vs = run("homogeneous", f"as_{b}").steady_state["v_s"]
        lo, hi = 0.5 * V / b, 1.2 * V / b
        ok &= lo <= vs <= hi
        tag.measured(f"beta_r={b}: V_s={vs:.2f} in [{lo:.1f}, {hi:.1f}]")
    assert ok


def test_criterion_05_sampled_nodes_heterogeneous(criterion):
    tag = criterion(5)
    noise = scenario("heterogeneous").build_noise(V)
    s_min, s_max = noise.sigma_min_sq, noise.sigma_max_sq
    ok = True
    for b in (0.25, 0.5, 1.0, 2.0, 5.0):
        beta = b * s_max
        vs = run("heterogeneous", f"as_{b}").steady_state["v_s"]
        lo = V * min(1, s_min / beta) - 1
        hi = V * min(1, s_max / beta) + 1
        ok &= lo <= vs <= hi
        tag.measured(f"beta_r={b}: V_s={vs:.2f} in [{lo:.1f}, {hi:.1f}]")
    assert ok


def test_criterion_06_transient_preservation(criterion):
    tag = criterion(6)
    full, asd = run("flip", "dnlms_full"), run("flip", "as_fixed")
    t_full = first_below(to_db(moving_average(full.series["nmsd"])), -20)
    t_as = first_below(to_db(moving_average(asd.series["nmsd"])), -20)
    gap = ss_db(asd) - ss_db(full)
    tag.measured(f"-20 dB at n={t_as} vs {t_full} (ratio {t_as / t_full:.3f})")
    tag.measured(f"steady NMSD {ss_db(asd):.2f} vs {ss_db(full):.2f} dB (gap {gap:+.2f})")
    assert t_as <= 1.1 * t_full
    assert abs(gap) < 0.5


def test_criterion_07_cost_reduction(criterion):
    tag = criterion(7)
    full, asd = run("flip", "dnlms_full"), run("flip", "as_fixed")
    m_full = full.steady_state["mults"]
    m_as = asd.steady_state["mults"]
    peak = float(np.max(asd.series["mults"]) / np.max(full.series["mults"]) - 1)
    tag.measured(f"steady mults {m_as:.0f} vs {m_full:.0f}; transient excess {100 * peak:.2f}%")
    assert m_as < m_full
    assert peak < 0.05


def test_criterion_08_sampling_cessation(criterion):
    tag = criterion(8)
    flip = scenario("flip").flip_at()
    ok = True
    for b in (1.6, 2.1, 2.6, 3.1):
        s = run("flip", f"as_rule_{b}")
        n_ss = settle_index(s, flip)
        n_stop = first_below(moving_average(s.series["v_s"][:flip], 64), V - 1)
        lag = None if n_stop is None else n_stop - n_ss
        ok &= lag is not None and lag <= 3000
        tag.measured(f"beta_r={b}: settle n={n_ss}, V_s<=V-1 at n={n_stop} (lag {lag})")
    assert ok


def test_criterion_09_censoring(criterion):
    tag = criterion(9)
    full, asc = run("flip", "dnlms_full"), run("flip", "asc")
    n_ss = settle_index(asc, scenario("flip").flip_at())
    transient_min = float(np.min(asc.series["v_t"][:n_ss]))
    vt = asc.steady_state["v_t"]
    gap = ss_db(asc) - ss_db(full)
    tag.measured(f"min v_t over first {n_ss} iterations {transient_min:.2f}")
    tag.measured(f"steady v_t {vt:.2f} (< {0.3 * V:.0f}); NMSD gap {gap:+.2f} dB")
    assert transient_min == V
    assert vt < 0.3 * V
    assert abs(gap) < 1.5


def test_criterion_10_random_walk_saturation(criterion):
    tag = criterion(10)
    full = run("walk", "dnlms_full")
    ok = True
    for b in (1.6, 2.1, 2.6):
        s = run("walk", f"as_{b}")
        vs, gap = s.steady_state["v_s"], ss_db(s) - ss_db(full)
        ok &= vs >= 0.95 * V and abs(gap) < 0.5
        tag.measured(f"beta_r={b}: V_s={vs:.2f}, gap {gap:+.2f} dB")
    assert ok


def test_criterion_11_weight_rule_invariants(criterion):
    tag = criterion(11)
    count = 0
    for name, (_, _, algorithms) in SCENARIOS.items():
        for spec in scenario(name).algorithms:
            try:
                run(name, spec.label)
            except AssertionError:
                pass
            count += 1
    tag.measured(f"{count} runs x {N} iterations x {R} realizations checked; "
                 f"{len(FAILURES)} violations")
    assert not FAILURES, FAILURES


def test_criterion_12_nmse_floor(criterion):
    tag = criterion(12)
    full = run("heterogeneous", "dnlms_full")
    floor = float(scenario("heterogeneous").build_noise(V).sigma_v_sq.mean())
    nmse = full.steady_state["nmse"]
    tag.measured(f"steady NMSE {nmse:.4f} vs noise floor {floor:.4f} ({100 * (nmse / floor - 1):+.1f}%)")
    assert abs(nmse / floor - 1) < 0.1
