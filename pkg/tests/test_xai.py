import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbm_xai import qbm, qsim, rbm, xai
from qbm_xai.errors import DimensionMismatch, EmptyData, NonFiniteValue, NotADistribution
from qbm_xai.pca import BinaryDataset, ReducedDataset

LN4 = math.log(4)
MASKS = list(itertools.product((0, 1), repeat=4))


def brute_shapley(f, x, baseline):
    """Textbook Shapley sum over subsets, evaluated one coalition at a time."""
    k = len(x)
    phi = np.zeros(k)

    def value(S):
        z = np.array([x[j] if j in S else baseline[j] for j in range(k)], dtype=float)
        return float(f(z[None, :])[0])

    for i in range(k):
        others = [j for j in range(k) if j != i]
        for size in range(k):
            for S in itertools.combinations(others, size):
                w = math.factorial(size) * math.factorial(k - size - 1) / math.factorial(k)
                phi[i] += w * (value(set(S) | {i}) - value(set(S)))
    return phi


# ---- exact Shapley examples and axioms ---------------------------------------


def test_shapley_additive():
    phi = xai.exact_shapley(lambda X: X.sum(axis=1), np.array([1.0, 0, 1, 1]), np.zeros(4))
    np.testing.assert_allclose(phi, [1, 0, 1, 1], atol=1e-15)


def test_shapley_constant():
    phi = xai.exact_shapley(lambda X: np.full(len(X), 3.7), np.ones(4), np.zeros(4))
    np.testing.assert_array_equal(phi, 0.0)


def test_shapley_xor():
    f = lambda X: np.logical_xor(X[:, 0] > 0.5, X[:, 1] > 0.5).astype(float)  # noqa: E731
    phi = xai.exact_shapley(f, np.array([1.0, 1, 0, 1]), np.zeros(4))
    np.testing.assert_allclose(phi, 0.0, atol=1e-15)


def _random_table(seed):
    """An arbitrary value function on {0,1}^4, defined by a random lookup table."""
    table = np.random.default_rng(seed).normal(size=16)
    return lambda X: table[(X > 0.5).astype(int) @ (1 << np.arange(4))]


@pytest.mark.parametrize("seed", range(10))
def test_shapley_matches_brute_force_and_efficiency(seed):
    f = _random_table(seed)
    rng = np.random.default_rng(seed + 50)
    x = rng.integers(0, 2, size=4).astype(float)
    baseline = 1.0 - x
    phi = xai.exact_shapley(f, x, baseline)
    np.testing.assert_allclose(phi, brute_shapley(f, x, baseline), atol=1e-12)
    assert abs(phi.sum() - (f(x[None])[0] - f(baseline[None])[0])) < 1e-10


def test_shapley_symmetry_over_all_coalitions():
    # f depends on x0 and x1 only through x0 + x1, so they are interchangeable
    f = lambda X: np.sin(X[:, 0] + X[:, 1]) + X[:, 2] * X[:, 3]  # noqa: E731
    for mask in MASKS:
        x = np.array(mask, dtype=float)
        if x[0] != x[1]:
            continue
        phi = xai.exact_shapley(f, x, np.zeros(4))
        assert abs(phi[0] - phi[1]) < 1e-10


def test_shapley_dummy_over_all_coalitions():
    f = lambda X: X[:, 0] * X[:, 1] - 2 * X[:, 2]  # noqa: E731 - feature 3 never matters
    for mask in MASKS:
        phi = xai.exact_shapley(f, np.array(mask, dtype=float), np.full(4, 0.5))
        assert abs(phi[3]) < 1e-10


def test_shapley_linearity():
    f, g = _random_table(1), _random_table(2)
    alpha, beta = 0.7, -1.3
    h = lambda X: alpha * f(X) + beta * g(X)  # noqa: E731
    for mask in MASKS:
        x = np.array(mask, dtype=float)
        base = np.zeros(4)
        lhs = xai.exact_shapley(h, x, base)
        rhs = alpha * xai.exact_shapley(f, x, base) + beta * xai.exact_shapley(g, x, base)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_shapley_errors():
    with pytest.raises(NonFiniteValue):
        xai.exact_shapley(lambda X: np.full(len(X), np.nan), np.ones(4), np.zeros(4))
    with pytest.raises(DimensionMismatch):
        xai.exact_shapley(lambda X: X.sum(axis=1), np.ones(4), np.zeros(3))


# ---- entropy and normalization ----------------------------------------------


def test_entropy_examples():
    assert xai.entropy([0.25] * 4) == pytest.approx(LN4, abs=1e-15)
    assert xai.entropy([1.0, 0, 0, 0]) == 0.0


def test_entropy_rejects_non_distribution():
    with pytest.raises(NotADistribution):
        xai.entropy([0.5, 0.6, 0, 0])
    with pytest.raises(NotADistribution):
        xai.entropy([1.5, -0.5, 0, 0])


def test_entropy_max_only_at_uniform_on_grid():
    N = 12
    for a in range(N + 1):
        for b in range(N + 1 - a):
            for c in range(N + 1 - a - b):
                p = np.array([a, b, c, N - a - b - c]) / N
                H = xai.entropy(p)
                assert 0 <= H <= LN4 + 1e-12
                if not np.allclose(p, 0.25):
                    assert H < LN4 - 1e-6


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=4, max_size=4), st.permutations(range(4)))
def test_entropy_permutation_invariant(scores, perm):
    dist, _ = xai.normalize(scores)
    assert abs(dist.sum() - 1) < 1e-12
    assert xai.entropy(dist) == pytest.approx(xai.entropy(dist[list(perm)]), abs=1e-12)


def test_normalize_degenerate():
    dist, degenerate = xai.normalize(np.zeros(4))
    assert degenerate
    np.testing.assert_array_equal(dist, 0.25)


# ---- QBM saliency -----------------------------------------------------------


def _qbm(seed=0, layers=2):
    rng = np.random.default_rng(seed)
    return qbm.QbmModel(qsim.CircuitParams.random(layers, 4, rng), rng.normal(size=4), 0.1,
                        -np.ones(4), np.ones(4) * 2)


def test_saliency_matches_finite_difference():
    model = _qbm(3)
    x = np.random.default_rng(4).uniform(-0.8, 1.8, size=(5, 4))
    grads = xai.saliency_gradients(model, x)
    h = 1e-6
    for i in range(4):
        up, dn = x.copy(), x.copy()
        up[:, i] += h
        dn[:, i] -= h
        fd = (qbm.predict(model, up) - qbm.predict(model, dn)) / (2 * h)
        np.testing.assert_allclose(grads[:, i], fd, atol=1e-5)


def test_saliency_report_is_mean_abs():
    model = _qbm(5)
    data = ReducedDataset(np.random.default_rng(6).uniform(-1, 2, size=(7, 4)), np.zeros(7, dtype=int))
    rep = xai.qbm_saliency(model, data)
    np.testing.assert_allclose(rep.raw_scores, np.abs(xai.saliency_gradients(model, data.features)).mean(axis=0))
    assert abs(rep.distribution.sum() - 1) < 1e-12
    assert 0 <= rep.entropy_nats <= LN4 + 1e-12


def test_zero_readout_is_degenerate():
    model = qbm.QbmModel(qsim.CircuitParams.random(1, 4, np.random.default_rng(0)), np.zeros(4), 0.0,
                         np.zeros(4), np.ones(4))
    data = ReducedDataset(np.random.default_rng(1).random((5, 4)), np.zeros(5, dtype=int))
    rep = xai.qbm_saliency(model, data)
    assert rep.degenerate
    np.testing.assert_array_equal(rep.distribution, 0.25)


def test_single_feature_saliency_is_one_hot():
    # zero circuit: after the CNOT ring <Z_1> = cos(a0) cos(a1). With feature 1 pinned at
    # angle 0 its derivative sin(0) vanishes, and features 2, 3 never reach qubit 1.
    model = qbm.QbmModel(qsim.CircuitParams.zeros(1, 4), np.array([0.0, 2.0, 0, 0]), 0.0,
                         np.zeros(4), np.ones(4))
    features = np.zeros((6, 4))
    features[:, 0] = np.linspace(0.1, 0.9, 6)
    features[:, 2:] = np.random.default_rng(2).random((6, 2))
    rep = xai.qbm_saliency(model, ReducedDataset(features, np.zeros(6, dtype=int)))
    np.testing.assert_allclose(rep.distribution, [1, 0, 0, 0], atol=1e-12)
    assert rep.entropy_nats == pytest.approx(0.0, abs=1e-10)


def test_saliency_empty():
    with pytest.raises(EmptyData):
        xai.qbm_saliency(_qbm(), ReducedDataset(np.zeros((0, 4)), np.zeros(0, dtype=int)))


# ---- CBM Shapley attribution ------------------------------------------------


def _cbm(seed=0):
    rng = np.random.default_rng(seed)
    params = rbm.RbmParams(rng.normal(size=(4, 2)), rng.normal(size=4), rng.normal(size=2))
    return params, rbm.RbmReadout(rng.normal(size=2), 0.2)


def test_cbm_efficiency_per_sample():
    params, readout = _cbm(1)
    bits = np.array(MASKS, dtype=float)
    baseline = np.array([0.3, 0.6, 0.5, 0.1])
    phi = xai.cbm_shapley_values(params, readout, bits, baseline)
    f = lambda v: rbm.readout_probs(params, readout, v)  # noqa: E731
    np.testing.assert_allclose(phi.sum(axis=1), f(bits) - f(baseline[None])[0], atol=1e-10)


def test_constant_cbm_is_degenerate():
    params = rbm.RbmParams(np.zeros((4, 2)), np.zeros(4), np.zeros(2))
    data = BinaryDataset(np.array(MASKS, dtype=float), np.zeros(4), np.zeros(16, dtype=int))
    rep = xai.cbm_attribution(params, rbm.RbmReadout(np.ones(2), 0.0), data, np.full(4, 0.5))
    assert rep.degenerate


def test_cbm_attribution_empty():
    params, readout = _cbm()
    with pytest.raises(EmptyData):
        xai.cbm_attribution(params, readout, BinaryDataset(np.zeros((0, 4)), np.zeros(4), np.zeros(0, dtype=int)),
                            np.zeros(4))


# ---- reports and comparison -------------------------------------------------


def test_compare_identical():
    rep = xai.make_report("QBM", np.random.default_rng(0).random((5, 4)))
    cmp = xai.compare(rep, rep)
    assert cmp.entropy_delta == 0.0
    assert cmp.to_dict()["qbm_ranking"] == cmp.to_dict()["cbm_ranking"]


def test_compare_one_hot_vs_uniform():
    one_hot = xai.make_report("QBM", np.array([[1.0, 0, 0, 0]]))
    uniform = xai.make_report("CBM", np.ones((1, 4)))
    assert xai.compare(one_hot, uniform).entropy_delta == pytest.approx(-LN4, abs=1e-15)


def test_compare_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        xai.compare(xai.make_report("QBM", np.ones((1, 4))), xai.make_report("CBM", np.ones((1, 3))))


def test_ranking_and_csv():
    rep = xai.make_report("QBM", np.array([[0.1, 0.4, 0.3, 0.2]]))
    assert rep.ranking() == ["PC1", "PC2", "PC3", "PC0"]
    lines = xai.to_csv([rep]).strip().split("\n")
    assert lines[0] == ",".join(xai.CSV_HEADER)
    assert len(lines) == 5 and all(line.startswith("QBM,PC") for line in lines[1:])
