import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from scamap.netlist import parse_netlist
from scamap.powersim import PowerModel, TraceSet, simulate_traces
from scamap.sca import (
    AES_SBOX, PRESENT_SBOX, StatisticError, cpa_attack, dpa_attack, estimate_mutual_information, netlist_change,
    success_rate, tvla, welch_t,
)

from oracles import welch_t_reference

HW = [bin(v).count("1") for v in range(256)]
# FIPS-197 spot values
AES_KNOWN = {0x00: 0x63, 0x01: 0x7C, 0x53: 0xED, 0xFF: 0x16}


def synthetic(key, n=200, seed=0, leak=lambda s: HW[s], sbox=PRESENT_SBOX):
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, len(sbox), n, dtype=np.uint64)
    col = np.array([leak(sbox[int(p) ^ key]) for p in pts], dtype=float)
    return TraceSet(pts, key, np.column_stack([rng.normal(size=n), col]))


def test_aes_sbox_table():
    for x, y in AES_KNOWN.items():
        assert AES_SBOX[x] == y
    assert sorted(AES_SBOX) == list(range(256))


@pytest.mark.parametrize("key", range(16))
def test_cpa_noiseless_hw(key):
    res = cpa_attack(synthetic(key))
    assert res.best_key == key and res.success
    assert res.statistics[key] == pytest.approx(1.0, abs=1e-12)
    assert sorted(res.ranked_keys) == list(range(16))


def test_cpa_constant_traces():
    ts = TraceSet(np.arange(16) % 16, 5, np.full((16, 3), 2.5))
    res = cpa_attack(ts)
    assert res.statistics == (0.0,) * 16
    assert res.ranked_keys == tuple(range(16))


def test_cpa_too_few_traces():
    with pytest.raises(StatisticError):
        cpa_attack(TraceSet([1], 0, [[1.0]]))


def test_cpa_noise_not_informative():
    # pure noise: the true key's rank is spread over all positions
    ranks = []
    for seed in range(200):
        rng = np.random.default_rng(seed)
        ts = TraceSet(rng.integers(0, 16, 100, dtype=np.uint64), 6, rng.normal(size=(100, 1)))
        ranks.append(cpa_attack(ts).rank_of(6))
    assert 0.02 < np.mean(np.array(ranks) == 0) < 0.2
    assert 4 < np.mean(ranks) < 11


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 15), st.floats(0.1, 100), st.floats(-100, 100))
def test_cpa_affine_invariant(key, scale, shift):
    ts = synthetic(key, n=64, seed=key)
    ts.traces[:, 0] += 0.3 * ts.traces[:, 1]
    a = cpa_attack(ts)
    b = cpa_attack(TraceSet(ts.plaintexts, key, ts.traces * scale + shift))
    assert a.ranked_keys == b.ranked_keys
    np.testing.assert_allclose(a.statistics, b.statistics, atol=1e-9)


@pytest.mark.parametrize("bit", [1, 2, 3])
@pytest.mark.parametrize("key", range(16))
def test_dpa_noiseless_single_bit(bit, key):
    res = dpa_attack(synthetic(key, leak=lambda s: (s >> bit) & 1), bit)
    assert res.best_key == key
    assert res.statistics[key] == pytest.approx(1.0)


def test_dpa_bit0_linear_structure_ties():
    # S(x ^ 1), S(x ^ 8), S(x ^ 9) agree or disagree in bit 0 for every x, so |difference| ties
    res = dpa_attack(synthetic(6, leak=lambda s: s & 1), 0)
    top = [k for k, s in enumerate(res.statistics) if s == pytest.approx(1.0)]
    assert sorted(top) == sorted({6, 6 ^ 1, 6 ^ 8, 6 ^ 9})


def test_dpa_identical_plaintexts():
    ts = TraceSet(np.full(20, 3), 1, np.random.default_rng(0).normal(size=(20, 2)))
    res = dpa_attack(ts, 1)
    assert res.statistics == (0.0,) * 16


def test_dpa_cpa_aes_end_to_end(aes_synth):
    lib, mapped = aes_synth.lib, aes_synth.mapped["conventional"]
    rng = np.random.default_rng(11)
    pts = rng.integers(0, 256, 4000, dtype=np.uint64)
    ts = simulate_traces(mapped, lib, pts, 0x3C, PowerModel(seed=11))
    assert dpa_attack(ts, 0, AES_SBOX).success
    assert cpa_attack(ts, AES_SBOX).success


def test_success_rate():
    assert success_rate([True] * 3 + [False] * 47) == 0.06
    assert success_rate([False] * 9) == 0.0
    assert success_rate([1, 0, 1, 1]) == 3 / 4
    with pytest.raises(StatisticError):
        success_rate([])


@given(st.integers(1, 200), st.data())
def test_success_rate_bounds(n, data):
    k = data.draw(st.integers(0, n))
    r = success_rate([True] * k + [False] * (n - k))
    assert 0 <= r <= 1 and r == k / n
    if k < n:
        assert success_rate([True] * (k + 1) + [False] * (n - k - 1)) > r


def test_welch_hand_values():
    assert welch_t([1, 2, 3, 4], [1, 2, 3, 4]) == 0
    assert welch_t([1, 2, 3], [4, 5, 6]) == pytest.approx(-3 / math.sqrt(2 / 3), rel=1e-12)
    with pytest.raises(StatisticError):
        welch_t([5, 5, 5], [5, 5, 5])
    with pytest.raises(StatisticError):
        welch_t([1], [1, 2])


WELCH_VECTORS = [
    ([1.0, 2.0, 3.0], [4.0, 5.0, 6.0]),
    ([0.5, 0.7, 0.2, 0.9], [0.1, 0.3]),
    ([10, 12, 9, 11, 10], [10, 10]),  # zero variance in one group only
    ([-1, 1], [-2, 2, -2, 2]),
]


def _welch_vectors():
    rng = np.random.default_rng(2024)
    vecs = list(WELCH_VECTORS)
    while len(vecs) < 20:
        na, nb = rng.integers(2, 30, 2)
        vecs.append((list(rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), na)),
                     list(rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 3), nb))))
    return vecs


@pytest.mark.parametrize("a,b", _welch_vectors())
def test_welch_fixed_vectors(a, b):
    assert welch_t(a, b) == pytest.approx(welch_t_reference(a, b), rel=1e-9)
    assert welch_t(b, a) == pytest.approx(-welch_t(a, b), rel=1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_welch_matches_scipy():
    from scipy.stats import ttest_ind

    for a, b in _welch_vectors():
        assert welch_t(a, b) == pytest.approx(ttest_ind(a, b, equal_var=False).statistic, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=20),
       st.lists(st.floats(-100, 100), min_size=2, max_size=20), st.floats(-50, 50))
def test_welch_properties(a, b, c):
    assume(np.var(a) > 1e-3 or np.var(b) > 1e-3)
    t = welch_t(a, b)
    assert welch_t(b, a) == pytest.approx(-t, rel=1e-9, abs=1e-9)
    shifted = welch_t([x + c for x in a], [x + c for x in b])
    assert shifted == pytest.approx(t, rel=1e-6, abs=1e-6)


def test_tvla_identical_populations(ps_synth):
    lib, mapped = ps_synth.lib, ps_synth.mapped["conventional"]
    pts = np.random.default_rng(1).integers(0, 16, 500, dtype=np.uint64)
    a = simulate_traces(mapped, lib, pts, 9, PowerModel(seed=4))
    b = simulate_traces(mapped, lib, pts, 9, PowerModel(seed=4))
    res = tvla(a, b)
    assert all(t == 0 for t in res.t_values)
    assert res.max_abs_t == 0 and not res.leaks


def test_tvla_excluded_and_threshold():
    fixed = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]])
    rand = np.array([[1.0, 5.0], [1.0, 6.0], [1.0, 7.0]])
    res = tvla(fixed, rand, threshold=1.0)
    assert res.t_values[0] is None and res.excluded == (0,)
    assert res.max_abs_t == pytest.approx(5 / math.sqrt(2 / 3))
    assert res.exceed_count == 1 and res.leaks
    with pytest.raises(StatisticError):
        tvla(fixed, rand[:, :1])


def test_tvla_noiseless_sbox_leaks(ps_synth):
    lib, mapped = ps_synth.lib, ps_synth.mapped["conventional"]
    m = PowerModel(noise_sigma=0)
    rand = np.random.default_rng(0).integers(0, 16, 2000, dtype=np.uint64)
    fixed = simulate_traces(mapped, lib, np.zeros(2000, np.uint64), 5, m)
    res = tvla(fixed, simulate_traces(mapped, lib, rand, 5, m))
    assert res.max_abs_t > 4.5


def test_mi_identity():
    k = np.random.default_rng(0).integers(0, 16, 100_000)
    assert estimate_mutual_information(k, k, bins=16) == pytest.approx(4.0, abs=0.05)


def test_mi_independent():
    rng = np.random.default_rng(1)
    k = rng.integers(0, 16, 100_000)
    assert estimate_mutual_information(k, rng.normal(size=100_000), bins=16) <= 0.05


def test_mi_errors_and_constant():
    with pytest.raises(StatisticError):
        estimate_mutual_information([], [])
    with pytest.raises(StatisticError):
        estimate_mutual_information([1, 2], [1.0])
    with pytest.raises(StatisticError):
        estimate_mutual_information([1, 2], [1.0, 2.0], bins=1)
    assert estimate_mutual_information([0, 1, 2, 3], [7.0] * 4) == 0.0


def test_mi_value_range_clips():
    k = np.array([0, 1, 0, 1])
    l = np.array([-5.0, 5.0, -5.0, 5.0])
    assert estimate_mutual_information(k, l, bins=2, value_range=(-1, 1)) == pytest.approx(1.0)
    assert estimate_mutual_information(k, l, bins=2, value_range=(10, 20)) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 15), st.floats(-10, 10)), min_size=1, max_size=300), st.integers(2, 32))
def test_mi_bounds(samples, bins):
    k, l = zip(*samples)
    mi = estimate_mutual_information(k, l, bins)
    assert 0 <= mi <= 4 + 1e-9


def _mapped(cells):
    lines = ["module m", "  wire 2 input a", f"  wire {len(cells)} output y"]
    lines += [f"  inst {c} {cone}__{j} A=a[0] B=a[1] Z=y[{j}]" for j, (cone, c) in enumerate(cells)]
    return parse_netlist("\n".join(lines + ["end", ""]))


def test_netlist_change_identity():
    d = _mapped([("b0", "AND2_X1")])
    assert netlist_change(d, d) == 0.0


def test_netlist_change_ratio():
    conv = [(f"b{i}", "AND2_X1") for i in range(10)]
    pos = list(conv)
    pos[3] = ("b3", "AND2_X2")
    pos[7] = ("b7", "AND2_X4")
    assert netlist_change(_mapped(conv), _mapped(pos)) == 20.0


def test_netlist_change_unmatched_cone():
    conv = [("b0", "AND2_X1"), ("b1", "AND2_X1")]
    pos = [("b0", "AND2_X1"), ("b9", "AND2_X1")]
    # b1 vanished and b9 appeared: both count in full
    assert netlist_change(_mapped(conv), _mapped(pos)) == 100.0
    assert netlist_change(_mapped(conv), _mapped(conv[:1])) == 50.0
