import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calim import errors
from calim.binning import (
    assign_bin,
    classwise_reliability_table,
    equal_frequency_edges,
    equal_width_edges,
    reliability_table,
)
from calim.data_model import validate

from oracles import interval_index


@pytest.mark.parametrize(
    "M, edges",
    [(1, [0, 1]), (2, [0, 0.5, 1]), (4, [0, 0.25, 0.5, 0.75, 1])],
)
def test_equal_width_edges(M, edges):
    e = equal_width_edges(M)
    np.testing.assert_array_equal(e.edges, edges)
    assert e.M == M


@pytest.mark.parametrize("M", [0, -1, 2.5])
def test_invalid_bin_count(M):
    with pytest.raises(errors.InvalidBinCount):
        equal_width_edges(M)
    with pytest.raises(errors.InvalidBinCount):
        equal_frequency_edges([0.5], M)


def test_equal_frequency_median_split():
    e = equal_frequency_edges([0.1, 0.2, 0.3, 0.4], 2)
    np.testing.assert_allclose(e.edges, [0, 0.25, 1])


def test_equal_frequency_single_bin():
    np.testing.assert_array_equal(equal_frequency_edges([0.3, 0.9, 0.1], 1).edges, [0, 1])


def test_equal_frequency_all_ties_collapse():
    e = equal_frequency_edges([0.5] * 9, 3)
    assert e.M == 1
    np.testing.assert_array_equal(e.edges, [0, 1])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.randoms(use_true_random=False))
def test_equal_frequency_balanced_counts(M, per_bin, rnd):
    n = M * per_bin
    confs = sorted({round(rnd.random(), 9) for _ in range(3 * n)})
    if len(confs) < n:
        return
    confs = rnd.sample(confs, n)
    e = equal_frequency_edges(confs, M)
    assert e.M == M
    counts = np.bincount(e.assign(np.array(confs)), minlength=e.M)
    assert np.all(counts == per_bin)


@pytest.mark.parametrize("p, M, expected", [(1.0, 10, 9), (0.5, 2, 1), (0.0, 10, 0)])
def test_assign_bin(p, M, expected):
    assert assign_bin(p, equal_width_edges(M)) == expected


@pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
def test_assign_bin_out_of_range(p):
    with pytest.raises(errors.OutOfRange):
        assign_bin(p, equal_width_edges(4))


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.integers(1, 40))
def test_assign_bin_matches_interval_definition(p, M):
    assert assign_bin(p, equal_width_edges(M)) == interval_index(p, M)


def test_equal_width_widths_exact():
    for M in range(1, 30):
        e = equal_width_edges(M)
        np.testing.assert_allclose(np.diff(e.edges), 1.0 / M, rtol=0, atol=1e-15)


def _binary(conf, correct):
    """Two-class set whose top-label confidences and correctness are given."""
    probs = [[c, 1 - c] for c in conf]
    labels = [0 if ok else 1 for ok in correct]
    return validate(probs=probs, labels=labels)


def test_reliability_table_hand_values():
    t = reliability_table(_binary([0.6, 0.9], [True, False]), equal_width_edges(2))
    np.testing.assert_array_equal(t.counts, [0, 2])
    assert np.isnan(t.accuracy[0]) and np.isnan(t.confidence[0])
    assert t.accuracy[1] == pytest.approx(0.5)
    assert t.confidence[1] == pytest.approx(0.75)


def test_reliability_table_confident_correct():
    ps = validate(probs=[[1.0, 0.0], [0.0, 1.0]], labels=[0, 1])
    t = reliability_table(ps, equal_width_edges(10))
    assert t.counts[-1] == 2 and t.counts[:-1].sum() == 0
    assert t.accuracy[-1] == 1.0 and t.confidence[-1] == 1.0


def test_classwise_table_hand_values():
    ps = validate(probs=[[0.8, 0.2], [0.6, 0.4]], labels=[0, 1])
    t0 = classwise_reliability_table(ps, equal_width_edges(1), 0)
    t1 = classwise_reliability_table(ps, equal_width_edges(1), 1)
    assert (t0.counts[0], t0.accuracy[0], t0.confidence[0]) == (2, 0.5, pytest.approx(0.7))
    assert (t1.counts[0], t1.accuracy[0], t1.confidence[0]) == (2, 0.5, pytest.approx(0.3))
    assert t0.mode == "classwise" and t0.cls == 0


def test_classwise_out_of_range():
    ps = validate(probs=[[0.8, 0.2]], labels=[0])
    with pytest.raises(errors.ClassOutOfRange):
        classwise_reliability_table(ps, equal_width_edges(2), 2)


def test_calibrated_binary_classwise_bins_match():
    # Confidence 0.7 with exactly 70% positives, 0.2 with 20%.
    probs = [[0.7, 0.3]] * 10 + [[0.2, 0.8]] * 10
    labels = [0] * 7 + [1] * 3 + [0] * 2 + [1] * 8
    t = classwise_reliability_table(validate(probs=probs, labels=labels), equal_width_edges(5), 0)
    mask = t.counts > 0
    np.testing.assert_allclose(t.accuracy[mask], t.confidence[mask], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30), st.integers(2, 5), st.integers(1, 15), st.randoms(use_true_random=False),
       st.sampled_from(["equal-width", "equal-frequency"]))
def test_table_partition_and_confidence_in_interval(n, K, M, rnd, scheme):
    rng = np.random.default_rng(rnd.randint(0, 2**32 - 1))
    z = rng.normal(scale=3, size=(n, K))
    ps = validate(logits=z, labels=rng.integers(0, K, n))
    from calim.binning import make_edges
    from calim.data_model import top_label

    edges = make_edges(top_label(ps).conf, M, scheme)
    t = reliability_table(ps, edges)
    assert t.counts.sum() == n
    for m in np.flatnonzero(t.counts):
        assert edges.edges[m] - 1e-12 <= t.confidence[m] <= edges.edges[m + 1] + 1e-12
        assert 0 <= t.accuracy[m] <= 1
    for j in range(K):
        assert classwise_reliability_table(ps, edges, j).counts.sum() == n
