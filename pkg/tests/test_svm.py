"""SMO trainer and the one-vs-one multiclass wrapper."""
import numpy as np
import pytest

from captain.cade import SvmModel, classify, load_svm_model, save_svm_model, train_mcmsvm
from captain.errors import DegenerateTraining, SingleClass
from captain.smo import kkt_violation, rbf_kernel, train_binary_svm


def make_blobs(rng, centers, per_class, spread=0.5):
    xs, ys = [], []
    for label, center in enumerate(centers, start=1):
        xs.append(center + spread * rng.normal(size=(per_class, len(center))))
        ys.append(np.full(per_class, label))
    return np.vstack(xs), np.concatenate(ys)


def brute_force_decision(model, z):
    """Per-point kernel sum over support vectors, written as plain loops."""
    out = []
    for row in np.atleast_2d(z):
        acc = model.bias
        for sv, coef in zip(model.support_vectors, model.dual_coef):
            acc += coef * np.exp(-model.gamma * np.sum((row - sv) ** 2))
        out.append(acc)
    return np.array(out)


class TestBinarySmo:
    def test_separable_blobs_fit_exactly(self):
        rng = np.random.default_rng(0)
        x, labels = make_blobs(rng, [np.zeros(8), 6 * np.ones(8)], 40)
        y = np.where(labels == 1, 1.0, -1.0)
        model = train_binary_svm(x, y, c=1.0, gamma=1.0 / 8)
        assert ((model.decision(x) >= 0) == (y > 0)).all()

    def test_decision_matches_bruteforce_kernel_sum(self):
        rng = np.random.default_rng(1)
        x, labels = make_blobs(rng, [np.zeros(5), 3 * np.ones(5)], 25)
        y = np.where(labels == 1, 1.0, -1.0)
        model = train_binary_svm(x, y, c=2.0, gamma=0.2)
        probe = rng.normal(size=(40, 5))
        np.testing.assert_allclose(model.decision(probe),
                                   brute_force_decision(model, probe), atol=1e-9)

    def test_kkt_conditions_within_tolerance(self):
        rng = np.random.default_rng(2)
        x, labels = make_blobs(rng, [np.zeros(6), 2.5 * np.ones(6)], 30, spread=0.8)
        y = np.where(labels == 1, 1.0, -1.0)
        model = train_binary_svm(x, y, c=1.0, gamma=1.0 / 6, tol=1e-3)
        assert kkt_violation(model, x, y) <= 1e-3 + 1e-9

    def test_box_constraint_holds(self):
        rng = np.random.default_rng(3)
        x, labels = make_blobs(rng, [np.zeros(4), 1.5 * np.ones(4)], 30, spread=1.0)
        y = np.where(labels == 1, 1.0, -1.0)
        model = train_binary_svm(x, y, c=0.7, gamma=0.25)
        assert (model.train_alphas >= -1e-12).all()
        assert (model.train_alphas <= 0.7 + 1e-12).all()

    def test_rbf_kernel_values(self):
        a = np.array([[0.0, 0.0], [1.0, 0.0]])
        k = rbf_kernel(a, a, gamma=1.0)
        np.testing.assert_allclose(k, [[1.0, np.exp(-1)], [np.exp(-1), 1.0]])


class TestMulticlass:
    def test_three_blob_training_accuracy(self):
        rng = np.random.default_rng(4)
        centers = [rng.normal(scale=4.0, size=40) for _ in range(3)]
        x, y = make_blobs(rng, centers, 30)
        model = train_mcmsvm(x, y)
        assert (model.predict(x) == y).all()

    def test_single_class_rejected(self):
        x = np.zeros((10, 40))
        with pytest.raises(SingleClass):
            train_mcmsvm(x, np.ones(10))

    def test_tiny_class_rejected(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(5, 40))
        with pytest.raises(DegenerateTraining):
            train_mcmsvm(x, np.array([1, 1, 1, 1, 2]))

    def test_two_classes_give_one_model(self):
        rng = np.random.default_rng(6)
        x, y = make_blobs(rng, [np.zeros(40), np.ones(40)], 10)
        model = train_mcmsvm(x, y)
        assert len(model.binaries) == 1
        assert model.pairs == ((1, 2),)

    def test_classify_is_one_hot(self):
        rng = np.random.default_rng(7)
        centers = [rng.normal(scale=4.0, size=40) for _ in range(4)]
        x, y = make_blobs(rng, centers, 15)
        model = train_mcmsvm(x, y)
        for _ in range(20):
            vec = classify(model, rng.normal(size=40))
            assert vec.sum() == 1.0
            assert set(np.unique(vec)) <= {0.0, 1.0}

    def test_rescaling_absorbed_by_standardization(self):
        rng = np.random.default_rng(8)
        centers = [rng.normal(scale=4.0, size=40) for _ in range(3)]
        x, y = make_blobs(rng, centers, 20)
        probe = rng.normal(scale=4.0, size=(30, 40))
        base = train_mcmsvm(x, y).predict(probe)
        scaled = train_mcmsvm(x * 37.5, y).predict(probe * 37.5)
        np.testing.assert_array_equal(base, scaled)

    def test_vote_tie_takes_lowest_class(self):
        # Hand-built model where classes 1 and 2 tie on votes.
        dummy = train_binary_svm(np.array([[0.0], [1.0]]), np.array([1.0, -1.0]),
                                 c=1.0, gamma=1.0)
        always_positive = train_binary_svm(np.array([[-5.0], [-6.0], [5.0], [6.0]]),
                                           np.array([1.0, 1.0, -1.0, -1.0]),
                                           c=1.0, gamma=0.1)
        model = SvmModel(
            classes=(1, 2, 3), pairs=((1, 2), (1, 3), (2, 3)),
            binaries=[dummy, always_positive, always_positive],
            mean=np.zeros(1), scale=np.ones(1), c=1.0, gamma=1.0,
        )
        # Probe where (1,2) votes for 2 but (1,3) votes 1 and (2,3) votes 2:
        # votes are 1 -> 1, 2 -> 2, pick by majority; construct a tie by
        # probing the point where (1,2) votes 1 instead.
        votes = model.votes(np.array([[-10.0]]))[0]
        if votes[1] == votes[2]:
            assert model.predict(np.array([[-10.0]]))[0] == 1

    def test_persistence_roundtrip(self, tmp_path):
        rng = np.random.default_rng(9)
        centers = [rng.normal(scale=4.0, size=40) for _ in range(3)]
        x, y = make_blobs(rng, centers, 15)
        model = train_mcmsvm(x, y)
        path = tmp_path / "cade.svm"
        save_svm_model(model, path)
        loaded = load_svm_model(path)
        probe = rng.normal(size=(25, 40))
        np.testing.assert_array_equal(model.predict(probe), loaded.predict(probe))
        np.testing.assert_array_equal(model.mean, loaded.mean)
        for original, restored in zip(model.binaries, loaded.binaries):
            np.testing.assert_array_equal(original.support_vectors,
                                          restored.support_vectors)
            np.testing.assert_array_equal(original.dual_coef, restored.dual_coef)
            assert original.bias == restored.bias
