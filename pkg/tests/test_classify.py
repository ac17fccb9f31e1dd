import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from subnyq_amr.classify import (
    KernelSpec,
    SvmModel,
    cross_validate,
    decision_values,
    grid_search,
    hierarchical_orders,
    kernel_eval,
    kernel_matrix,
    kkt_violation,
    median_heuristic,
    predict,
    predict_many,
    train,
)
from subnyq_amr.features import FEATURE_ORDERS, extract_features
from subnyq_amr.npt import nyquist_spectrum
from subnyq_amr.sigsyn import ALL_CLASSES, ModulationType, desk_profile, synthesize

vec = arrays(np.float64, 6, elements=st.floats(-10, 10))


def blobs(rng, centers, n=20, spread=0.3):
    X, y = [], []
    names = ["BPSK", "QPSK", "8PSK", "OQPSK", "MSK"]
    for k, c in enumerate(centers):
        X.append(np.asarray(c) + spread * rng.standard_normal((n, len(c))))
        y += [names[k]] * n
    return np.vstack(X), y


class TestKernels:
    def test_hand_values(self):
        x, y = np.array([1.0, 2.0]), np.array([3.0, -1.0])
        assert kernel_eval(KernelSpec("linear"), x, y) == 1.0
        assert kernel_eval(KernelSpec("polynomial", gamma=0.5, r=1.0, d=2), x, y) == 2.25
        assert abs(kernel_eval(KernelSpec("rbf", sigma=2.0), x, y) - np.exp(-13 / 8)) < 1e-12

    def test_trivial(self):
        e1, e2 = np.eye(3)[0], np.eye(3)[1]
        assert kernel_eval(KernelSpec("linear"), e1, e2) == 0.0
        assert kernel_eval(KernelSpec("rbf", sigma=0.3), e1, e1) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            kernel_eval(KernelSpec("linear"), np.ones(2), np.ones(3))
        with pytest.raises(ValueError):
            kernel_matrix(KernelSpec("linear"), np.ones((2, 2)), np.ones((2, 3)))

    @pytest.mark.parametrize("bad", [dict(kind="rbf", sigma=0.0), dict(kind="polynomial", d=0),
                                     dict(kind="sigmoid")])
    def test_spec_invariants(self, bad):
        with pytest.raises(ValueError):
            KernelSpec(**bad)

    @settings(max_examples=50, deadline=None)
    @given(vec, vec, st.sampled_from(["linear", "polynomial", "rbf"]))
    def test_matrix_matches_eval_and_symmetric(self, x, y, kind):
        spec = KernelSpec(kind, gamma=0.1, r=0.5, d=2, sigma=3.0)
        K = kernel_matrix(spec, np.vstack([x, y]))
        assert K[0, 1] == pytest.approx(kernel_eval(spec, x, y), rel=1e-9, abs=1e-9)
        assert K[0, 1] == pytest.approx(K[1, 0], rel=1e-12, abs=1e-12)

    def test_median_heuristic(self):
        X = np.array([[0.0], [1.0], [3.0]])
        assert median_heuristic(X) == 2.0


class TestTrain:
    def test_separable_linear(self, rng):
        X, y = blobs(rng, [[-2, 0], [2, 0]])
        model = train(X, y, KernelSpec("linear"), C=10.0)
        preds, _ = predict_many(model, X)
        assert [p.value for p in preds] == y
        assert kkt_violation(model, X, y) <= 1e-3

    def test_dual_constraints(self, rng):
        X, y = blobs(rng, [[0, 0], [1, 1], [0, 2]], spread=0.6)
        model = train(X, y, None, C=5.0)
        for m in model.machines:
            assert np.all(np.abs(m.coef) <= 5.0 + 1e-12)
            assert abs(m.coef.sum()) < 1e-6
        assert len(model.machines) == 3
        assert kkt_violation(model, X, y) <= 1e-3

    def test_vote_tally(self, rng):
        X, y = blobs(rng, [[0, 0], [3, 0], [0, 3], [3, 3], [6, 6]])
        model = train(X, y)
        label, tally = predict(model, X[0])
        assert sum(tally.values()) == 10 and label.value == "BPSK"

    def test_support_vector_predicts_own_class(self, rng):
        X, y = blobs(rng, [[0, 0], [5, 5]], spread=0.2)
        model = train(X, y, KernelSpec("rbf", sigma=1.0))
        sv = model.machines[0].support_vectors[0]
        assert predict(model, sv)[0] in model.classes
        idx = int(np.flatnonzero(np.all(X == sv, axis=1))[0])
        assert predict(model, sv)[0].value == y[idx]

    def test_deterministic_with_duplicates(self, rng):
        X, y = blobs(rng, [[0, 0], [2, 2]], n=15, spread=0.8)
        X2, y2 = np.vstack([X, X]), y + y
        a = train(X2, y2).to_dict()
        b = train(X2, y2).to_dict()
        assert a == b

    def test_degenerate_warns(self):
        X = np.vstack([np.ones((12, 3)), np.ones((12, 3))])
        y = ["BPSK"] * 12 + ["QPSK"] * 12
        with pytest.warns(RuntimeWarning):
            model = train(X, y, KernelSpec("linear"))
        assert isinstance(model, SvmModel)

    @pytest.mark.parametrize("n", [9, 1])
    def test_too_few(self, rng, n):
        X, y = blobs(rng, [[0, 0], [2, 2]], n=n)
        with pytest.raises(ValueError):
            train(X, y)

    def test_single_class(self, rng):
        X, y = blobs(rng, [[0, 0]], n=12)
        with pytest.raises(ValueError):
            train(X, y)

    def test_feature_mismatch(self, rng):
        X, y = blobs(rng, [[0, 0], [2, 2]])
        model = train(X, y)
        with pytest.raises(ValueError):
            decision_values(model, np.ones((1, 3)))

    def test_json_roundtrip(self, rng, tmp_path):
        X, y = blobs(rng, [[0, 0], [2, 2], [0, 3]])
        model = train(X, y, feature_config={"m": 1})
        model.save(tmp_path / "m.json")
        back = SvmModel.load(tmp_path / "m.json")
        np.testing.assert_allclose(decision_values(back, X), decision_values(model, X))
        assert back.classes == model.classes


class TestTieBreak:
    def test_margin_breaks_three_way_tie(self):
        # three classes voting in a cycle: A beats B, B beats C, C beats A
        X = np.zeros((30, 1))
        X[10:20] = 1.0
        X[20:] = 2.0
        y = ["BPSK"] * 10 + ["QPSK"] * 10 + ["8PSK"] * 10
        model = train(X, y, KernelSpec("linear"))
        for m in model.machines:
            m.support_vectors = np.zeros((0, 1))
            m.coef = np.zeros(0)
        # decision = -rho; choose rhos forming a cycle with unequal margins
        pairs = {(m.pos, m.neg): m for m in model.machines}
        pairs[(0, 1)].rho = -1.0   # BPSK beats QPSK by 1
        pairs[(0, 2)].rho = 0.5    # 8PSK beats BPSK by 0.5
        pairs[(1, 2)].rho = -2.0   # QPSK beats 8PSK by 2
        label, tally = predict(model, np.zeros(1))
        assert set(tally.values()) == {1}
        assert label is ModulationType.QPSK  # summed margin: B +0.5, Q +1, 8 -1.5


class TestHierarchical:
    def test_examples(self):
        assert hierarchical_orders(["BPSK", "not-BPSK"]) == (2,)
        assert hierarchical_orders(["QPSK", "OQPSK", "MSK"]) == (2, 4)
        assert hierarchical_orders(["QPSK", "8PSK"]) == (2, 4, 8)
        assert hierarchical_orders(None) == (2, 4, 8)


def _features(mod, seed, snr, scale=1.0):
    rec = synthesize(mod, desk_profile(seed=seed, snr_db=snr, amplitude=scale))
    return extract_features({n: nyquist_spectrum(rec, n) for n in FEATURE_ORDERS}, 20).values


@pytest.fixture(scope="module")
def desk_dataset():
    X, y = [], []
    for mod in ALL_CLASSES:
        for s in range(40):
            X.append(_features(mod, 1000 + s, 10.0))
            y.append(mod.value)
    return np.vstack(X), y


class TestPipeline:
    def test_cv_accuracy(self, desk_dataset):
        X, y = desk_dataset
        assert cross_validate(X, y, None, 10.0, k=5) >= 0.9

    def test_noiseless_bpsk(self, desk_dataset):
        X, y = desk_dataset
        model = train(X, y)
        assert predict(model, _features("BPSK", 77, None))[0] is ModulationType.BPSK

    def test_amplitude_invariance(self, desk_dataset):
        X, y = desk_dataset
        model = train(X, y)
        a = _features("QPSK", 5, 12.0)
        rec = synthesize("QPSK", desk_profile(seed=5, snr_db=12.0))
        rec.samples *= 3.0
        b = extract_features({n: nyquist_spectrum(rec, n) for n in FEATURE_ORDERS}, 20).values
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-14)
        assert predict(model, a)[0] == predict(model, b)[0]

    def test_grid_search(self, desk_dataset):
        X, y = desk_dataset
        spec, C, acc = grid_search(X[::2], y[::2], Cs=(1.0, 10.0), sigma_scales=(1.0,), k=3)
        assert spec.kind == "rbf" and C in (1.0, 10.0) and 0 <= acc <= 1
