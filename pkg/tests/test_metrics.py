import math
from itertools import combinations, permutations

import numpy as np
import pytest

from intentlab import metrics


def oracle_nmi(true_labels, pred):
    """From-scratch contingency NMI with pure-python dicts."""
    n = len(true_labels)
    joint = {}
    row = {}
    col = {}
    for t, p in zip(true_labels, pred):
        joint[(t, p)] = joint.get((t, p), 0) + 1
        row[t] = row.get(t, 0) + 1
        col[p] = col.get(p, 0) + 1
    h_t = -sum((c / n) * math.log(c / n) for c in row.values())
    h_p = -sum((c / n) * math.log(c / n) for c in col.values())
    if h_t == 0.0 and h_p == 0.0:
        return 1.0
    mi = sum(
        (c / n) * math.log(n * c / (row[t] * col[p]))
        for (t, p), c in joint.items()
    )
    return mi / ((h_t + h_p) / 2.0)


def oracle_ari(true_labels, pred):
    """Pair-enumeration ARI over all C(n,2) pairs."""
    n = len(true_labels)
    s11 = same_true = same_pred = 0
    for i, j in combinations(range(n), 2):
        st = true_labels[i] == true_labels[j]
        sp = pred[i] == pred[j]
        s11 += st and sp
        same_true += st
        same_pred += sp
    total = n * (n - 1) // 2
    expected = same_true * same_pred / total
    max_index = (same_true + same_pred) / 2.0
    if max_index == expected:
        return 1.0
    return (s11 - expected) / (max_index - expected)


def oracle_acc(true_labels, pred):
    """Exhaustive search over cluster-to-class assignments."""
    classes = sorted(set(true_labels))
    clusters = sorted(set(pred))
    k = max(len(classes), len(clusters))
    counts = np.zeros((k, k))
    cls_idx = {c: i for i, c in enumerate(classes)}
    clu_idx = {c: i for i, c in enumerate(clusters)}
    for t, p in zip(true_labels, pred):
        counts[clu_idx[p], cls_idx[t]] += 1
    best = max(
        sum(counts[i, perm[i]] for i in range(k))
        for perm in permutations(range(k))
    )
    return best / len(true_labels)


def random_instance(rng, max_n=30, max_k=6):
    n = int(rng.integers(2, max_n + 1))
    kt = int(rng.integers(1, max_k + 1))
    kp = int(rng.integers(1, max_k + 1))
    return rng.integers(0, kt, n).tolist(), rng.integers(0, kp, n).tolist()


def test_nmi_trivial_cases():
    assert metrics.nmi([0, 1, 2], [0, 1, 2]) == 1.0
    assert metrics.nmi([0, 0, 1, 1], [2, 2, 3, 3]) == 1.0  # relabeled
    assert metrics.nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-12)
    assert metrics.nmi([0, 0, 0], [1, 1, 1]) == 1.0  # both trivial


def test_nmi_derived_value():
    true_labels = [0, 0, 0, 1, 1, 1]
    pred = [0, 0, 1, 1, 2, 2]
    expected = oracle_nmi(true_labels, pred)
    # (2/3)ln2 over mean(ln2, ln3)
    assert expected == pytest.approx(
        (2 / 3) * math.log(2) / ((math.log(2) + math.log(3)) / 2)
    )
    assert metrics.nmi(true_labels, pred) == pytest.approx(expected, abs=1e-12)


def test_ari_trivial_and_derived():
    assert metrics.ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert metrics.ari([0, 1], [0, 0]) == pytest.approx(0.0, abs=1e-12)


def test_aligned_acc_examples():
    assert metrics.aligned_acc([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert metrics.aligned_acc([0, 0, 1, 1], [0, 1, 0, 1]) == 0.5


def test_metrics_match_oracles_on_random_instances():
    rng = np.random.default_rng(42)
    for _ in range(120):
        t, p = random_instance(rng)
        assert metrics.nmi(t, p) == pytest.approx(
            min(1.0, max(0.0, oracle_nmi(t, p))), abs=1e-9
        )
        assert metrics.ari(t, p) == pytest.approx(oracle_ari(t, p), abs=1e-9)
        assert metrics.aligned_acc(t, p) == pytest.approx(oracle_acc(t, p), abs=1e-9)


def test_permutation_invariance():
    rng = np.random.default_rng(7)
    for _ in range(20):
        t, p = random_instance(rng)
        relabel = {c: (c * 7 + 3) % 101 for c in set(p)}
        q = [relabel[c] for c in p]
        assert metrics.nmi(t, p) == pytest.approx(metrics.nmi(t, q), abs=1e-12)
        assert metrics.ari(t, p) == pytest.approx(metrics.ari(t, q), abs=1e-12)
        assert metrics.aligned_acc(t, p) == pytest.approx(
            metrics.aligned_acc(t, q), abs=1e-12
        )


def test_aligned_acc_majority_cluster_baseline():
    # The single-cluster predictor scores exactly the majority fraction.
    rng = np.random.default_rng(9)
    for _ in range(30):
        t, _ = random_instance(rng)
        freq = max(t.count(c) for c in set(t))
        assert metrics.aligned_acc(t, [0] * len(t)) == pytest.approx(freq / len(t))


def test_aggregate_and_formatting():
    agg = metrics.aggregate("acc", [68.0, 70.0, 72.0])
    assert agg.mean == pytest.approx(70.0)
    assert agg.std == pytest.approx(math.sqrt(8 / 3))
    assert agg.formatted == "70.00±1.63"

    single = metrics.aggregate("acc", [55.5])
    assert single.formatted == "55.50±0.00"

    assert metrics.format_mean_std(71.2666, 2.2753) == "71.27±2.28"

    with pytest.raises(ValueError):
        metrics.aggregate("acc", [])


def test_render_tables():
    rows = [("ds", "emb", "None", "RandomSampling", "71.27±2.28", "60.72±1.00", "82.96±0.50")]
    csv_text = metrics.render_results_csv(rows)
    assert csv_text.splitlines()[0] == "dataset,embedding,balance,strategy,NMI,ARI,ACC"
    assert "71.27±2.28" in csv_text
    txt = metrics.render_results_text(rows)
    assert "RandomSampling" in txt
    assert txt.endswith("\n")
