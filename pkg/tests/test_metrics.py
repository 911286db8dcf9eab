import numpy as np
import pytest

from oodkit.errors import ConfigError, DataError
from oodkit.metrics import (
    MetricsTriple,
    ScoredSample,
    aggregate_trials,
    aupr,
    auroc,
    evaluate,
    fpr_at_tpr,
)
from oodkit.tensor_io import ID, OOD


def make(ood_scores, id_scores):
    samples = [ScoredSample(f"o{i}", s, OOD) for i, s in enumerate(ood_scores)]
    samples += [ScoredSample(f"i{i}", s, ID) for i, s in enumerate(id_scores)]
    return samples


def pairwise_auroc(samples):
    """O(n^2) oracle: fraction of (OOD, ID) pairs won, ties counting 1/2."""
    ood = [s.score for s in samples if s.label == OOD]
    idd = [s.score for s in samples if s.label == ID]
    total = 0.0
    for o in ood:
        for i in idd:
            if o > i:
                total += 1.0
            elif o == i:
                total += 0.5
    return total / (len(ood) * len(idd))


def random_samples(rng, n_max=200, tie_prob=0.3):
    n = int(rng.integers(2, n_max + 1))
    labels = np.zeros(n, dtype=bool)
    labels[: int(rng.integers(1, n))] = True
    rng.shuffle(labels)
    scores = rng.standard_normal(n)
    # inject ties by snapping some scores onto a coarse grid
    snap = rng.random(n) < tie_prob
    scores[snap] = np.round(scores[snap] * 2) / 2
    return [
        ScoredSample(f"s{i}", float(s), OOD if l else ID)
        for i, (s, l) in enumerate(zip(scores, labels))
    ]


# ---------------------------------------------------------------------------
# AUROC
# ---------------------------------------------------------------------------

def test_auroc_perfect_separation():
    assert auroc(make([0.9, 0.8], [0.2, 0.1])) == 1.0


def test_auroc_half():
    assert auroc(make([0.8, 0.2], [0.5, 0.4])) == 0.5


def test_auroc_tie_convention():
    assert auroc(make([0.5], [0.5])) == 0.5


def test_auroc_single_class_raises():
    with pytest.raises(DataError):
        auroc(make([0.5], []))
    with pytest.raises(DataError):
        auroc(make([], [0.5]))


def test_auroc_matches_pairwise_oracle():
    rng = np.random.default_rng(11)
    for _ in range(200):
        samples = random_samples(rng)
        if not any(s.label == ID for s in samples):
            continue
        if not any(s.label == OOD for s in samples):
            continue
        assert abs(auroc(samples) - pairwise_auroc(samples)) < 1e-12


def test_auroc_matches_sklearn():
    from sklearn.metrics import roc_auc_score

    rng = np.random.default_rng(12)
    for _ in range(50):
        samples = random_samples(rng)
        y = [1 if s.label == OOD else 0 for s in samples]
        if len(set(y)) < 2:
            continue
        scores = [s.score for s in samples]
        assert abs(auroc(samples) - roc_auc_score(y, scores)) < 1e-12


def test_auroc_label_flip_duality():
    rng = np.random.default_rng(13)
    for _ in range(50):
        samples = random_samples(rng)
        y = {s.label for s in samples}
        if y != {ID, OOD}:
            continue
        flipped = [
            ScoredSample(s.sample_id, -s.score, ID if s.label == OOD else OOD)
            for s in samples
        ]
        assert abs(auroc(samples) - auroc(flipped)) < 1e-12


# ---------------------------------------------------------------------------
# AUPR
# ---------------------------------------------------------------------------

def test_aupr_perfect():
    assert aupr(make([0.9], [0.1])) == 1.0


def test_aupr_hand_enumerated_fixture():
    # thresholds 0.9 / 0.5 / 0.3 give (P, R) = (1, .5), (.5, .5), (2/3, 1)
    assert abs(aupr(make([0.9, 0.3], [0.5])) - 5.0 / 6.0) < 1e-15


def test_aupr_all_ood():
    assert aupr(make([0.3, 0.2, 0.9], [])) == 1.0


def test_aupr_no_ood_raises():
    with pytest.raises(DataError):
        aupr(make([], [0.5]))


def test_aupr_matches_sklearn_average_precision():
    from sklearn.metrics import average_precision_score

    rng = np.random.default_rng(14)
    for _ in range(50):
        samples = random_samples(rng)
        if not any(s.label == OOD for s in samples):
            continue
        y = [1 if s.label == OOD else 0 for s in samples]
        scores = [s.score for s in samples]
        assert abs(aupr(samples) - average_precision_score(y, scores)) < 1e-12


# ---------------------------------------------------------------------------
# FPR at TPR
# ---------------------------------------------------------------------------

def test_fpr_hand_enumerated_fixture():
    samples = make([0.9, 0.7, 0.5, 0.3], [0.8, 0.2, 0.1])
    assert abs(fpr_at_tpr(samples, 0.75) - 1.0 / 3.0) < 1e-15


def test_fpr_perfect_separation():
    assert fpr_at_tpr(make([0.9, 0.8], [0.2, 0.1]), 0.75) == 0.0


def test_fpr_tied_singletons():
    assert fpr_at_tpr(make([0.5], [0.5]), 0.75) == 1.0


def test_fpr_monotone_in_target():
    rng = np.random.default_rng(15)
    for _ in range(50):
        samples = random_samples(rng)
        y = {s.label for s in samples}
        if y != {ID, OOD}:
            continue
        assert fpr_at_tpr(samples, 0.5) <= fpr_at_tpr(samples, 0.75) + 1e-15


def test_fpr_bad_target():
    with pytest.raises(ConfigError):
        fpr_at_tpr(make([1.0], [0.0]), 0.0)


# ---------------------------------------------------------------------------
# evaluate + invariances
# ---------------------------------------------------------------------------

def test_evaluate_perfect():
    triple = evaluate(make([0.9, 0.8], [0.2, 0.1]))
    assert (triple.auroc, triple.aupr, triple.fpr_at_tpr) == (1.0, 1.0, 0.0)
    assert triple.tpr_target == 0.75


def test_evaluate_permutation_null():
    rng = np.random.default_rng(16)
    values = []
    for _ in range(100):
        scores = rng.standard_normal(2000)
        labels = np.array([OOD] * 1000 + [ID] * 1000)
        rng.shuffle(labels)
        samples = [ScoredSample(f"s{i}", float(s), l)
                   for i, (s, l) in enumerate(zip(scores, labels))]
        a = auroc(samples)
        assert abs(a - 0.5) < 0.05
        values.append(a)
    assert abs(np.mean(values) - 0.5) < 0.01


def test_monotone_transform_invariance_exact():
    rng = np.random.default_rng(17)
    transforms = [lambda s: 2.0 * s + 1.0, np.exp, lambda s: s ** 3]
    for _ in range(50):
        samples = random_samples(rng)
        if {s.label for s in samples} != {ID, OOD}:
            continue
        base = evaluate(samples)
        for fn in transforms:
            mapped = [
                ScoredSample(s.sample_id, float(fn(np.float64(s.score))), s.label)
                for s in samples
            ]
            out = evaluate(mapped)
            assert out == base  # exact equality, not approximate


def test_order_permutation_invariance():
    rng = np.random.default_rng(18)
    samples = random_samples(rng)
    while {s.label for s in samples} != {ID, OOD}:
        samples = random_samples(rng)
    base = evaluate(samples)
    for _ in range(5):
        shuffled = list(samples)
        rng.shuffle(shuffled)
        assert evaluate(shuffled) == base


# ---------------------------------------------------------------------------
# trial aggregation
# ---------------------------------------------------------------------------

def test_aggregate_single_trial_zero_sd():
    t = MetricsTriple(0.9, 0.8, 0.1)
    s = aggregate_trials([t])
    assert s.mean == t
    assert (s.sd.auroc, s.sd.aupr, s.sd.fpr_at_tpr) == (0.0, 0.0, 0.0)
    assert s.n_trials == 1


def test_aggregate_population_sd():
    triples = [MetricsTriple(0.7, 0.5, 0.3), MetricsTriple(0.9, 0.5, 0.3)]
    s = aggregate_trials(triples)
    assert abs(s.mean.auroc - 0.8) < 1e-15
    assert abs(s.sd.auroc - 0.1) < 1e-15


def test_aggregate_identical_trials():
    t = MetricsTriple(0.82, 0.87, 0.27)
    s = aggregate_trials([t] * 10)
    assert s.mean == t
    assert s.sd.auroc == 0.0 and s.sd.aupr == 0.0 and s.sd.fpr_at_tpr == 0.0


def test_aggregate_rejects_empty_and_mixed_targets():
    with pytest.raises(ConfigError):
        aggregate_trials([])
    with pytest.raises(ConfigError):
        aggregate_trials([MetricsTriple(0.5, 0.5, 0.5, 0.75),
                          MetricsTriple(0.5, 0.5, 0.5, 0.5)])
