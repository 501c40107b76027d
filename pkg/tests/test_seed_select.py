import numpy as np
import pytest

from intentlab import seed_select
from intentlab.corpus import (
    ClassMask,
    EmbeddingMatrix,
    UtteranceRecord,
    matrix_checksum,
)
from intentlab.seed_select import (
    SeedPlan,
    largest_remainder,
    seed_count,
    select_cluster_based,
    select_cluster_based_sentence_emb,
    select_known_cluster_based,
    select_predicted_cluster_sampling,
    select_random,
)
from intentlab.synth import make_blob_corpus


def pool_of(records):
    return [r for r in records if r.split == "train"]


def two_blob_pool(per_blob=10, dim=4, gap=40.0, seed=0, labels=("a", "b")):
    rng = np.random.default_rng(seed)
    points = np.vstack(
        [
            rng.normal(0.0, 0.5, (per_blob, dim)),
            rng.normal(gap, 0.5, (per_blob, dim)),
        ]
    )
    records = [
        UtteranceRecord(
            id=i,
            text=f"u{i}",
            gold_label=labels[0] if i < per_blob else labels[1],
            split="train",
        )
        for i in range(2 * per_blob)
    ]
    emb = EmbeddingMatrix(data=points, checksum=matrix_checksum(points))
    return records, emb


def test_select_random_exhaustive_and_deterministic():
    records, _ = make_blob_corpus(10, 4, 2, rng_seed=0)
    pool = pool_of(records)
    plan = select_random(pool, 10, rng_seed=3)
    assert sorted(plan.selected_ids) == [r.id for r in sorted(pool, key=lambda r: r.id)]

    records, _ = make_blob_corpus(100, 4, 2, rng_seed=0)
    pool = pool_of(records)
    p1 = select_random(pool, 10, rng_seed=5)
    p2 = select_random(pool, 10, rng_seed=5)
    assert p1 == p2
    assert len(p1.selected_ids) == 10

    with pytest.raises(ValueError, match="out of range"):
        select_random(pool, 0, rng_seed=0)
    with pytest.raises(ValueError, match="out of range"):
        select_random(pool, 101, rng_seed=0)


def test_select_random_uniformity_chi_square_style():
    records, _ = make_blob_corpus(5, 4, 1, rng_seed=0)
    pool = pool_of(records)
    counts = {r.id: 0 for r in pool}
    for trial in range(1000):
        plan = select_random(pool, 1, rng_seed=trial)
        counts[plan.selected_ids[0]] += 1
    for rid, count in counts.items():
        assert 150 <= count <= 250, f"id {rid} picked {count}/1000"


def test_cluster_based_two_blobs():
    records, emb = two_blob_pool()
    plan = select_cluster_based(records, emb, 2, rng_seed=1)
    assert len(plan.selected_ids) == 2
    sides = {0 <= rid < 10 for rid in plan.selected_ids}
    assert sides == {True, False}  # one id from each blob
    # Brute-force check: each selected id is the pool point nearest to
    # its blob mean.
    for rid in plan.selected_ids:
        block = emb.data[:10] if rid < 10 else emb.data[10:]
        offset = 0 if rid < 10 else 10
        mean = block.mean(axis=0)
        nearest = offset + int(np.argmin(((block - mean) ** 2).sum(axis=1)))
        assert rid == nearest


def test_cluster_based_identity_when_n_equals_pool():
    records, emb = two_blob_pool(per_blob=5)
    plan = select_cluster_based(records, emb, 10, rng_seed=2)
    assert sorted(plan.selected_ids) == list(range(10))


def test_cluster_based_duplicate_point_lowest_id():
    point = np.array([[1.0, 2.0, 3.0]])
    data = np.repeat(point, 5, axis=0)
    records = [
        UtteranceRecord(id=i, text="same", gold_label="a", split="train")
        for i in range(5)
    ]
    emb = EmbeddingMatrix(data=data, checksum=matrix_checksum(data))
    plan = select_cluster_based(records, emb, 1, rng_seed=0)
    assert plan.selected_ids == (0,)


def test_cse_equals_cb_for_same_matrix_and_permuted_dims():
    records, emb = two_blob_pool(per_blob=4)
    cb = select_cluster_based(records, emb, 3, rng_seed=4)
    cse_same = select_cluster_based_sentence_emb(records, emb, 3, rng_seed=4)
    assert cse_same.selected_ids == cb.selected_ids

    permuted = EmbeddingMatrix(
        data=emb.data[:, ::-1].copy(), checksum=emb.checksum
    )
    cse_perm = select_cluster_based_sentence_emb(records, permuted, 3, rng_seed=4)
    assert cse_perm.selected_ids == cb.selected_ids


def test_cse_differs_when_geometry_reversed():
    records, emb = two_blob_pool(per_blob=6, seed=3)
    rng = np.random.default_rng(9)
    # Alternate matrix with a completely different blob structure:
    # interleave membership so CB picks different exemplars.
    alt = np.vstack(
        [
            rng.normal(0.0 if i % 2 == 0 else 40.0, 0.5, (1, 4))
            for i in range(12)
        ]
    )
    alt_emb = EmbeddingMatrix(data=alt, checksum=matrix_checksum(alt))
    cb = select_cluster_based(records, emb, 2, rng_seed=5)
    cse = select_cluster_based_sentence_emb(records, alt_emb, 2, rng_seed=5)
    assert cb.selected_ids != cse.selected_ids


def test_kcb_counts_per_cluster():
    records, emb = two_blob_pool(per_blob=10)
    mask = ClassMask(frozenset({"a", "b"}), frozenset())
    plan = select_known_cluster_based(records, emb, 0.2, mask, rng_seed=0)
    assert plan.n == 4
    left = sum(1 for rid in plan.selected_ids if rid < 10)
    assert left == 2  # 2 per blob


def test_kcb_identity_at_ratio_one():
    records, emb = two_blob_pool(per_blob=5)
    mask = ClassMask(frozenset({"a", "b"}), frozenset())
    plan = select_known_cluster_based(records, emb, 1.0, mask, rng_seed=0)
    assert sorted(plan.selected_ids) == list(range(10))


def test_kcb_degenerate_plan():
    records, emb = two_blob_pool(per_blob=2)
    mask = ClassMask(frozenset({"a", "b"}), frozenset())
    with pytest.raises(ValueError, match="degenerate seed plan"):
        select_known_cluster_based(records, emb, 0.2, mask, rng_seed=0)


def test_largest_remainder_examples():
    assert largest_remainder([30, 10, 10], 5).tolist() == [3, 1, 1]
    assert largest_remainder([20, 20, 20], 6).tolist() == [2, 2, 2]
    counts = largest_remainder([7, 5, 3], 6)
    assert counts.sum() == 6
    # floor(quota) never exceeds the stratum, remainder fills by size.
    assert all(c <= s for c, s in zip(counts, [7, 5, 3]))


def test_largest_remainder_quota_gap_below_one():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(1, 8))
        sizes = rng.integers(1, 50, k)
        n = int(rng.integers(1, sizes.sum() + 1))
        counts = largest_remainder(sizes, n)
        assert counts.sum() == n
        quotas = n * sizes / sizes.sum()
        base = np.floor(quotas)
        assert np.all(np.abs(base - quotas) < 1.0)


def three_blob_pool(per_blob=20, dim=6, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 25.0, (3, dim))
    core = per_blob - 3
    chunks = []
    for c in range(3):
        chunks.append(centers[c] + rng.normal(0.0, 0.3, (core, dim)))
        chunks.append(centers[c] + rng.normal(0.0, 2.5, (3, dim)))
    points = np.vstack(chunks)
    labels = np.repeat(["a", "b", "c"], per_blob)
    records = [
        UtteranceRecord(id=i, text=f"u{i}", gold_label=str(labels[i]), split="train")
        for i in range(3 * per_blob)
    ]
    return records, EmbeddingMatrix(data=points, checksum=matrix_checksum(points))


def test_pcs_three_blobs_two_each():
    records, emb = three_blob_pool()
    plan = select_predicted_cluster_sampling(records, emb, 6, k_prime=6, rng_seed=2)
    assert plan.n == 6
    blob_counts = [0, 0, 0]
    for rid in plan.selected_ids:
        blob_counts[rid // 20] += 1
    assert blob_counts == [2, 2, 2]


def test_pcs_identity_when_n_is_pool():
    records, emb = three_blob_pool(per_blob=8)
    plan = select_predicted_cluster_sampling(
        records, emb, 24, k_prime=6, rng_seed=1
    )
    assert sorted(plan.selected_ids) == list(range(24))


def test_pcs_requires_k_prime_at_least_two():
    records, emb = three_blob_pool(per_blob=4)
    with pytest.raises(ValueError, match="k_prime"):
        select_predicted_cluster_sampling(records, emb, 3, k_prime=1, rng_seed=0)


def test_all_strategies_deterministic_and_sized(blob_corpus):
    records, emb = blob_corpus
    pool = pool_of(records)[:100]
    mask = ClassMask(frozenset({"intent_a", "intent_b"}), frozenset({"intent_c"}))
    n = seed_count(0.2, len(pool))
    assert n == 20
    for maker in (
        lambda s: select_random(pool, n, s),
        lambda s: select_cluster_based(pool, emb, n, s),
        lambda s: select_cluster_based_sentence_emb(pool, emb, n, s),
        lambda s: select_predicted_cluster_sampling(pool, emb, n, 6, s),
    ):
        p1, p2 = maker(17), maker(17)
        assert p1 == p2
        assert len(p1.selected_ids) == n
        assert set(p1.selected_ids) <= {r.id for r in pool}
    k1 = select_known_cluster_based(pool, emb, 0.2, mask, 17)
    k2 = select_known_cluster_based(pool, emb, 0.2, mask, 17)
    assert k1 == k2


def test_seed_plan_json_round_trip(tmp_path):
    plan = SeedPlan(strategy="random", selected_ids=(3, 1, 2), n=3, rng_seed=9)
    path = tmp_path / "plan.json"
    plan.save(path)
    loaded = SeedPlan.load(path)
    assert loaded == plan
    obj = plan.to_json()
    assert '"strategy": "random"' in obj


def test_seed_plan_validation():
    with pytest.raises(ValueError, match="unknown strategy"):
        SeedPlan(strategy="magic", selected_ids=(1,), n=1, rng_seed=0)
    with pytest.raises(ValueError, match="does not match"):
        SeedPlan(strategy="random", selected_ids=(1, 2), n=3, rng_seed=0)
    with pytest.raises(ValueError, match="unique"):
        SeedPlan(strategy="random", selected_ids=(1, 1), n=2, rng_seed=0)
