import math

import numpy as np
import pytest

from gradeline.classifiers import (LabeledDataset, Label, knn_predict, knn_train, load_model,
                                   machine_decision, nb_predict, nb_train, predict, rbf_kernel,
                                   rf_predict, rf_train, save_model, svm_predict, svm_train)
from gradeline.classifiers.knn import distances
from gradeline.errors import ModelFormatError, VariantMismatchError

U, R, O = Label.UNRIPENED, Label.RIPENED, Label.OVERRIPENED


def ds(vectors, labels, variant="raw") -> LabeledDataset:
    return LabeledDataset(np.asarray(vectors, dtype=float), np.asarray(labels, dtype=int),
                          variant)


class TestKnn:
    def setup_method(self):
        self.train = ds([[0, 0], [0, 1], [5, 5]], [U, U, O])

    def test_nearest_point_wins_k1(self):
        m = knn_train(self.train, k=1)
        assert knn_predict(m, [0.1, 0.1]) == U

    def test_majority_wins_k3(self):
        m = knn_train(self.train, k=3)
        assert knn_predict(m, [0, 0]) == U

    def test_metric_values(self):
        X = np.array([[0.0, 0.0]])
        assert distances("euclidean", X, np.array([3.0, 4.0]))[0] == pytest.approx(5.0)
        assert distances("manhattan", X, np.array([3.0, 4.0]))[0] == pytest.approx(7.0)

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            knn_train(self.train, k=4)
        with pytest.raises(ValueError):
            knn_train(self.train, k=0)

    def test_k1_memorizes_training_set(self, rng):
        X = rng.normal(size=(30, 4))
        y = rng.integers(0, 3, size=30)
        m = knn_train(ds(X, y), k=1)
        assert all(knn_predict(m, x) == Label(int(t)) for x, t in zip(X, y))

    def test_training_order_invariance(self, rng):
        X = rng.normal(size=(20, 3))
        y = rng.integers(0, 3, size=20)
        m1 = knn_train(ds(X, y), k=5)
        perm = rng.permutation(20)
        m2 = knn_train(ds(X[perm], y[perm]), k=5)
        for x in rng.normal(size=(25, 3)):
            assert knn_predict(m1, x) == knn_predict(m2, x)

    def test_vote_tie_breaks_by_summed_distance(self):
        # k=2 forces a 1-1 vote; the closer class must win.
        m = knn_train(ds([[0.0], [1.0]], [O, U]), k=2)
        assert knn_predict(m, [0.2]) == O
        assert knn_predict(m, [0.8]) == U

    def test_vote_tie_breaks_by_label_order_last(self):
        m = knn_train(ds([[-1.0], [1.0]], [O, R]), k=2)
        # Equal counts and equal summed distance: earlier label wins.
        assert knn_predict(m, [0.0]) == R


class TestNaiveBayes:
    def test_symmetric_tie_goes_to_label_order(self):
        data = ds([[-1.2], [-0.8], [0.8], [1.2]], [U, U, R, R])
        m = nb_train(data)
        assert nb_predict(m, [0.0]) == U

    def test_obvious_side(self):
        data = ds([[-1.2], [-0.8], [0.8], [1.2]], [U, U, R, R])
        m = nb_train(data)
        assert nb_predict(m, [-1.0]) == U
        assert nb_predict(m, [1.0]) == R

    def test_matches_hand_computed_posteriors(self):
        # Three classes, two samples each; evaluate the Gaussian posteriors
        # with an independent direct computation.
        X = [[0.0, 1.0], [0.4, 1.2], [2.0, 0.0], [2.4, 0.4], [5.0, 5.0], [5.5, 4.5]]
        y = [U, U, R, R, O, O]
        m = nb_train(ds(X, y))

        def hand_posterior(x):
            scores = []
            for c in (U, R, O):
                members = np.array([xi for xi, yi in zip(X, y) if yi == c])
                mu = members.mean(axis=0)
                var = np.maximum(members.var(axis=0), 1e-9)
                log_lik = sum(
                    -0.5 * (math.log(2 * math.pi * var[j]) + (x[j] - mu[j]) ** 2 / var[j])
                    for j in range(2))
                scores.append(math.log(2 / 6) + log_lik)
            return [U, R, O][int(np.argmax(scores))]

        queries = [[0.1, 1.1], [2.2, 0.2], [5.2, 4.8], [1.0, 0.8], [3.0, 2.0]]
        for q in queries:
            assert nb_predict(m, q) == hand_posterior(q)

    def test_single_sample_class_rejected(self):
        with pytest.raises(ValueError):
            nb_train(ds([[0.0], [1.0], [2.0]], [U, U, R]))

    def test_training_order_invariance(self, rng):
        X = rng.normal(size=(24, 3))
        y = rng.integers(0, 3, size=24)
        m1 = nb_train(ds(X, y))
        perm = rng.permutation(24)
        m2 = nb_train(ds(X[perm], y[perm]))
        for x in rng.normal(size=(20, 3)):
            assert nb_predict(m1, x) == nb_predict(m2, x)


class TestRandomForest:
    def test_perfectly_separating_dimension(self, rng):
        X = np.column_stack([np.r_[np.zeros(10), np.ones(10)], rng.normal(size=20)])
        y = np.r_[np.zeros(10, dtype=int), np.full(10, 2, dtype=int)]
        m = rf_train(ds(X, y), trees=20, seed=1)
        assert all(rf_predict(m, x) == Label(int(t)) for x, t in zip(X, y))

    def test_single_tree_overfits_xor(self):
        X = [[0, 0], [0, 1], [1, 0], [1, 1]]
        y = [U, R, R, U]
        # Seed chosen so the size-4 bootstrap covers all four points; the tree
        # then splits to purity even though no single split improves gini.
        m = rf_train(ds(X, y), trees=1, seed=8)
        assert all(rf_predict(m, x) == t for x, t in zip(X, y))

    def test_same_seed_identical_forest(self, rng):
        X = rng.normal(size=(40, 5))
        y = rng.integers(0, 3, size=40)
        m1 = rf_train(ds(X, y), trees=12, seed=9)
        m2 = rf_train(ds(X, y), trees=12, seed=9)
        assert [t.to_obj() for t in m1.trees] == [t.to_obj() for t in m2.trees]

    def test_different_seed_changes_forest(self, rng):
        X = rng.normal(size=(40, 5))
        y = rng.integers(0, 3, size=40)
        m1 = rf_train(ds(X, y), trees=12, seed=9)
        m2 = rf_train(ds(X, y), trees=12, seed=10)
        assert [t.to_obj() for t in m1.trees] != [t.to_obj() for t in m2.trees]


class TestSvm:
    def test_kernel_self_similarity_is_one(self, rng):
        X = rng.normal(size=(10, 4))
        K = rbf_kernel(X, X, gamma=0.7)
        assert np.allclose(np.diag(K), 1.0)

    def test_separable_blobs(self, rng):
        a = rng.normal(loc=(-2, 0), scale=0.3, size=(30, 2))
        b = rng.normal(loc=(2, 0), scale=0.3, size=(30, 2))
        X = np.vstack([a, b])
        y = np.r_[np.zeros(30, dtype=int), np.ones(30, dtype=int)]
        m = svm_train(ds(X, y), gamma=0.5, C=10.0)
        assert all(svm_predict(m, x) == Label(int(t)) for x, t in zip(X, y))
        # Decision value flips sign across the midline.
        machine = m.machines[0]
        left = machine_decision(machine, m, np.array([[-2.0, 0.0]]))[0]
        right = machine_decision(machine, m, np.array([[2.0, 0.0]]))[0]
        assert left > 0 > right

    def test_concentric_circles(self, rng):
        angles = rng.uniform(0, 2 * np.pi, size=200)
        radii = np.r_[rng.uniform(0.0, 1.0, 100), rng.uniform(2.0, 3.0, 100)]
        X = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        y = np.r_[np.zeros(100, dtype=int), np.ones(100, dtype=int)]
        m = svm_train(ds(X, y), gamma=1.0, C=10.0)
        acc = np.mean([svm_predict(m, x) == Label(int(t)) for x, t in zip(X, y)])
        assert acc >= 0.95

    def test_dual_feasibility_and_kkt(self, rng):
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 3, size=60)
        m = svm_train(ds(X, y), gamma=0.2, C=5.0, tol=1e-3)
        for machine in m.machines:
            assert machine.converged
            assert np.all(machine.alphas >= 0.0)
            assert np.all(machine.alphas <= m.C + 1e-12)
            assert abs(machine.dual_balance) <= 1e-6
            assert machine.kkt_max_violation <= m.tol

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            svm_train(ds([[0.0], [1.0]], [U, U]))

    def test_deterministic_training(self, rng):
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 3, size=50)
        m1 = svm_train(ds(X, y), gamma=0.3, C=3.0)
        m2 = svm_train(ds(X, y), gamma=0.3, C=3.0)
        for a, b in zip(m1.machines, m2.machines):
            assert np.array_equal(a.alphas, b.alphas)
            assert a.bias == b.bias
        for x in rng.normal(size=(20, 4)):
            assert svm_predict(m1, x) == svm_predict(m2, x)


class TestGradingSetAccuracy:
    """All four algorithms on the synthetic grading set, richer feature
    variant: held-out accuracy at or above 95%."""

    def test_all_four_reach_95_percent_on_variant_a(self, small_dataset_a):
        train, test = small_dataset_a.split(0.25, seed=3)
        models = {
            "knn": knn_train(train, k=3),
            "nb": nb_train(train),
            "rf": rf_train(train, trees=100, seed=0),
            "svm": svm_train(train, gamma=0.005, C=1000.0),
        }
        for name, model in models.items():
            acc = np.mean([predict(model, x) == Label(int(t))
                           for x, t in zip(test.vectors, test.labels)])
            assert acc >= 0.95, f"{name} held-out accuracy {acc:.3f}"


class TestPersistence:
    @pytest.fixture()
    def trained_models(self, rng):
        X = rng.normal(size=(30, 2))
        y = rng.integers(0, 3, size=30)
        data = LabeledDataset(np.asarray(X), np.asarray(y), "B")
        return {
            "knn": knn_train(data, k=3),
            "nb": nb_train(data),
            "rf": rf_train(data, trees=8, seed=2),
            "svm": svm_train(data, gamma=0.4, C=2.0),
        }

    def test_round_trip_predictions_exact(self, trained_models, tmp_path, rng):
        queries = rng.normal(size=(100, 2))
        for name, model in trained_models.items():
            path = tmp_path / f"{name}.json"
            save_model(model, path)
            loaded = load_model(path)
            for q in queries:
                assert predict(loaded, q) == predict(model, q), name

    def test_variant_dim_mismatch_rejected(self, trained_models, tmp_path):
        import json
        path = tmp_path / "knn.json"
        save_model(trained_models["knn"], path)
        doc = json.loads(path.read_text())
        doc["variant"] = "A"  # says 258 dims, file holds 2-dim vectors
        path.write_text(json.dumps(doc))
        with pytest.raises(VariantMismatchError):
            load_model(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("")
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_schema_version_mismatch_rejected(self, trained_models, tmp_path):
        import json
        path = tmp_path / "nb.json"
        save_model(trained_models["nb"], path)
        doc = json.loads(path.read_text())
        doc["schema_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_file_records_variant_and_lbp_order(self, trained_models, tmp_path):
        import json
        path = tmp_path / "svm.json"
        save_model(trained_models["svm"], path)
        doc = json.loads(path.read_text())
        assert doc["variant"] == "B"
        assert doc["lbp_neighbor_order"] == "top-left-clockwise"
        assert doc["data"]["gamma"] == 0.4
