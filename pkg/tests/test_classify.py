import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helpers import brute_knn_counts
from nonresp.classify import KNNClassifier, NullModel, knn_fit, knn_score, null_fit_predict
from nonresp.errors import UsageError


class TestNull:
    def test_majority(self):
        m = NullModel().fit(np.zeros((5, 1)), [0, 0, 0, 1, 1])
        assert m.predict(np.zeros((3, 1))).tolist() == [0, 0, 0]

    def test_even_split_predicts_zero(self):
        assert null_fit_predict([0, 1], 2).tolist() == [0, 0]
        assert null_fit_predict([1, 1, 0], 1).tolist() == [1]

    def test_empty(self):
        with pytest.raises(UsageError):
            null_fit_predict([], 3)


class TestKNN:
    def test_known_neighbours(self):
        train = np.array([[0.0], [1.0], [2.0], [10.0]])
        m = knn_fit(train, [1, 1, 0, 0], k=2)
        assert knn_score(m, [[0.4], [9.0]]).tolist() == [1.0, 0.0]

    def test_tie_goes_to_lower_index(self):
        train = np.array([[-1.0], [1.0]])
        assert knn_fit(train, [1, 0], 1).score([[0.0]]).tolist() == [1.0]
        assert knn_fit(train, [0, 1], 1).score([[0.0]]).tolist() == [0.0]

    def test_half_vote_is_negative(self):
        m = knn_fit(np.array([[0.0], [1.0]]), [0, 1], 2)
        assert m.predict([[0.5]]).tolist() == [0]

    def test_k_range(self):
        with pytest.raises(UsageError):
            KNNClassifier(5).fit(np.zeros((3, 1)), [0, 1, 0])

    def test_feature_count(self):
        m = knn_fit(np.zeros((3, 2)), [0, 1, 0], 1)
        with pytest.raises(UsageError):
            m.score(np.zeros((1, 3)))

    def test_k1_memorises(self, gen):
        x = gen.normal(size=(40, 3))
        y = gen.integers(0, 2, 40)
        assert np.array_equal(knn_fit(x, y, 1).predict(x), y)

    @settings(max_examples=30, deadline=None)
    @given(
        train=arrays(np.float64, st.tuples(st.integers(1, 25), st.just(2)), elements=st.integers(-3, 3).map(float)),
        data=st.data(),
    )
    def test_matches_brute_force(self, train, data):
        n = train.shape[0]
        labels = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
        k = data.draw(st.integers(1, n))
        q = data.draw(arrays(np.float64, (4, 2), elements=st.integers(-3, 3).map(float)))
        got = knn_fit(train, labels, k).score(q) * k
        assert np.array_equal(np.round(got), brute_knn_counts(train, labels, q, k))
