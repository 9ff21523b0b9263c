import numpy as np
import pytest

from drowsyhrv.errors import BudgetTooSmall, TargetTooLarge
from drowsyhrv.explain import (
    FeatureRanking,
    kernel_shap_explain,
    load_ranking,
    rank_features,
    ranking_from_phi,
    sample_background,
    save_phi_csv,
    save_ranking,
    select_features,
    shap_matrix,
)
from drowsyhrv.models import GbtConfig, gbt_fit, make_model
from oracles import shapley_ref


class Fn:
    """Wraps a row-wise function as a model exposing decision_function."""

    def __init__(self, f):
        self.f = f

    def decision_function(self, X):
        return self.f(np.asarray(X, dtype=float))


def coalition_value(model, x, bg):
    def value(S):
        rows = bg.copy()
        for j in S:
            rows[:, j] = x[j]
        return float(model.decision_function(rows).mean())
    return value


def nonlinear_model(m, rng):
    W, V = rng.normal(size=m), rng.normal(size=m)
    return Fn(lambda X: np.tanh(X @ W) + X[:, 0] * X[:, 1] + np.sin(X @ V) * X[:, -1])


def test_additive_model_phi():
    w = np.array([2.0, -3.0])
    model = Fn(lambda X: X @ w)
    x, b = np.array([1.5, 4.0]), np.array([[0.5, 1.0]])
    e = kernel_shap_explain(model, x, b)
    assert np.allclose(e.phi, w * (x - b[0]), atol=1e-12)
    assert e.base_value == pytest.approx(float(b[0] @ w))


@pytest.mark.parametrize("m", [3, 6, 9])
def test_exact_matches_oracle(m):
    rng = np.random.default_rng(m)
    model = nonlinear_model(m, rng)
    x, bg = rng.normal(size=m), rng.normal(size=(7, m))
    e = kernel_shap_explain(model, x, bg, method="exact")
    ref = shapley_ref(coalition_value(model, x, bg), m)
    assert np.abs(e.phi - ref).max() <= 1e-9
    assert e.local_accuracy_error <= 1e-6


@pytest.mark.parametrize("m", [4, 7, 10])
def test_sampled_matches_enumeration(m):
    rng = np.random.default_rng(100 + m)
    model = nonlinear_model(m, rng)
    x, bg = rng.normal(size=m), rng.normal(size=(10, m))
    ref = shapley_ref(coalition_value(model, x, bg), m)
    s = kernel_shap_explain(model, x, bg, budget=2 ** m, method="sampled", seed=3)
    assert np.abs(s.phi - ref).max() <= 1e-3
    assert s.local_accuracy_error <= 1e-3


def test_sampled_additive_exact_at_small_budget():
    rng = np.random.default_rng(5)
    w = rng.normal(size=20)
    model = Fn(lambda X: X @ w)
    x, bg = rng.normal(size=20), rng.normal(size=(5, 20))
    e = kernel_shap_explain(model, x, bg, budget=60, seed=1)
    assert np.allclose(e.phi, w * (x - bg.mean(axis=0)), atol=1e-9)


def test_sampled_local_accuracy_many_features():
    rng = np.random.default_rng(6)
    model = nonlinear_model(16, rng)
    x, bg = rng.normal(size=16), rng.normal(size=(8, 16))
    e = kernel_shap_explain(model, x, bg, budget=2 ** 11, seed=0)
    f = model.decision_function(x[None])[0]
    assert abs(e.base_value + e.phi.sum() - f) <= 1e-3


def test_sampled_is_seeded():
    rng = np.random.default_rng(7)
    model = nonlinear_model(15, rng)
    x, bg = rng.normal(size=15), rng.normal(size=(4, 15))
    a = kernel_shap_explain(model, x, bg, budget=300, seed=11)
    b = kernel_shap_explain(model, x, bg, budget=300, seed=11)
    assert np.array_equal(a.phi, b.phi)


def test_symmetry_for_duplicated_columns():
    rng = np.random.default_rng(8)
    model = Fn(lambda X: np.exp(0.3 * (X[:, 0] + X[:, 1])) * X[:, 2])
    bg = rng.normal(size=(6, 3))
    bg[:, 1] = bg[:, 0]
    x = np.array([1.2, 1.2, -0.7])
    for method, budget in (("exact", 0), ("sampled", 64)):
        e = kernel_shap_explain(model, x, bg, budget=budget, method=method)
        assert abs(e.phi[0] - e.phi[1]) <= 1e-6


def test_dummy_and_null_axioms():
    rng = np.random.default_rng(9)
    model = Fn(lambda X: np.sin(X[:, 0]) * X[:, 2])
    x, bg = rng.normal(size=4), rng.normal(size=(5, 4))
    e = kernel_shap_explain(model, x, bg)
    assert e.phi[1] == 0.0 and e.phi[3] == 0.0
    s = kernel_shap_explain(model, x, bg, budget=40, method="sampled")
    assert abs(s.phi[1]) <= 1e-9 and abs(s.phi[3]) <= 1e-9
    same = kernel_shap_explain(model, bg[2], bg[2:3])
    assert np.all(same.phi == 0.0)


def test_budget_too_small():
    rng = np.random.default_rng(10)
    with pytest.raises(BudgetTooSmall):
        kernel_shap_explain(nonlinear_model(14, rng), np.zeros(14), np.ones((2, 14)), budget=15)


def test_tree_model_ranking():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(200, 4))
    y = (X[:, 2] > 0.1).astype(int)
    m = gbt_fit(X, y, GbtConfig(n_trees=1, max_depth=1, learning_rate=1.0))
    assert set(int(f) for t in m.trees_ for f, l in zip(t.feature, t.left) if l >= 0) == {2}
    names = ["a", "b", "c", "d"]
    r = rank_features(m, X[:20], X[100:130], names=names)
    assert r.names[0] == "c"
    assert r.scores[1:] == (0.0, 0.0, 0.0) and r.names[1:] == ("a", "b", "d")
    shuffled = rank_features(m, X[:20][::-1], X[100:130], names=names)
    assert shuffled.names == r.names
    assert np.allclose(shuffled.scores, r.scores, rtol=1e-12)


def test_ranking_ties_and_order():
    phi = np.array([[1.0, -2.0, 0.5, 2.0], [-1.0, 0.0, 0.5, -2.0]])
    r = ranking_from_phi(phi, ["d", "c", "b", "a"])
    assert r.names == ("a", "c", "d", "b")
    assert r.scores == (2.0, 1.0, 1.0, 0.5)
    assert sorted(r.names) == ["a", "b", "c", "d"]


def test_select_features_round_robin():
    one = FeatureRanking(tuple("abcdefg"), (7, 6, 5, 4, 3, 2, 1))
    assert select_features([one], 5) == list("abcde")
    other = FeatureRanking(tuple("gfedcba"), (7, 6, 5, 4, 3, 2, 1))
    assert select_features([one, other], 4) == ["a", "g", "b", "f"]
    overlap = FeatureRanking(tuple("acbdefg"), (7, 6, 5, 4, 3, 2, 1))
    # second ranking skips "a" (already taken) and contributes "c"
    assert select_features([one, overlap], 3) == ["a", "c", "b"]
    with pytest.raises(TargetTooLarge):
        select_features([one], 8)


def test_selected_subset_model_width():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(120, 6))
    y = (X[:, 1] - X[:, 4] > 0).astype(int)
    names = [f"f{j}" for j in range(6)]
    full = make_model("svm", {"C": 10, "gamma": 0.5}).fit(X, y)
    r = rank_features(full, X[:15], sample_background(X, 30), names=names)
    subset = select_features([r], 2)
    assert set(subset) == {"f1", "f4"}
    cols = [names.index(n) for n in subset]
    small = make_model("svm", {"C": 10, "gamma": 0.5}).fit(X[:, cols], y)
    assert small.n_features_ == 2
    with pytest.raises(ValueError):
        small.predict(X)


def test_persistence_and_parallel(tmp_path):
    rng = np.random.default_rng(13)
    model = nonlinear_model(5, rng)
    X, bg = rng.normal(size=(6, 5)), rng.normal(size=(4, 5))
    phi, base = shap_matrix(model, X, bg)
    phi2, base2 = shap_matrix(model, X, bg, n_jobs=2)
    assert np.array_equal(phi, phi2) and np.array_equal(base, base2)
    r = ranking_from_phi(phi, list("vwxyz"))
    save_ranking(tmp_path / "r.json", r)
    assert load_ranking(tmp_path / "r.json") == r
    save_phi_csv(tmp_path / "phi.csv", phi, base, list("vwxyz"))
    text = (tmp_path / "phi.csv").read_text().splitlines()
    assert text[0] == "row,base_value,v,w,x,y,z" and len(text) == 7


def test_background_sampling():
    X = np.arange(200.0).reshape(100, 2)
    a, b = sample_background(X, 50, seed=4), sample_background(X, 50, seed=4)
    assert a.shape == (50, 2) and np.array_equal(a, b)
    assert sample_background(X[:10], 50).shape == (10, 2)
