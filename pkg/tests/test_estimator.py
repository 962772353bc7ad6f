import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import qmaxent as qm
from qmaxent import MaxEntEstimator


@pytest.fixture(scope="module")
def instance():
    fam = qm.build_family("ising", 3, seed=13)
    return qm.make_instance(fam, seed=13)


class TestSklearnProtocol:
    def test_get_set_params_roundtrip(self):
        est = MaxEntEstimator(method="qis", tol=1e-9)
        params = est.get_params()
        assert params["method"] == "qis"
        est2 = MaxEntEstimator().set_params(**params)
        assert est2.get_params() == params

    def test_clone(self):
        est = MaxEntEstimator(method="lbfgs-gd", history=5)
        copy = clone(est)
        assert copy.get_params() == est.get_params()

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            MaxEntEstimator().predict()

    def test_score_before_fit_raises(self, instance):
        with pytest.raises(NotFittedError):
            MaxEntEstimator().score(instance.observables, instance.alpha)


class TestFit:
    def test_fit_on_family(self, instance):
        est = MaxEntEstimator(method="am-qis", tol=1e-11).fit(
            instance.observables, instance.alpha
        )
        assert est.converged_
        assert np.abs(est.moments_ - instance.alpha).max() <= 1e-11
        np.testing.assert_allclose(
            est.mu_, instance.ground_truth.mu, atol=1e-5
        )

    def test_fit_on_raw_stack(self, instance):
        est = MaxEntEstimator(method="lbfgs-gd", tol=1e-10).fit(
            np.asarray(instance.observables.operators), instance.alpha
        )
        assert est.converged_
        assert est.lambda_.shape == (len(instance.observables),)

    def test_fit_returns_self(self, instance):
        est = MaxEntEstimator()
        assert est.fit(instance.observables, instance.alpha) is est

    def test_state_is_density_matrix(self, instance):
        est = MaxEntEstimator().fit(instance.observables, instance.alpha)
        assert abs(np.trace(est.state_).real - 1.0) <= 1e-12
        assert np.linalg.eigvalsh(est.state_)[0] >= -1e-14

    def test_rejects_bad_moments(self, instance):
        est = MaxEntEstimator()
        with pytest.raises(ValueError):
            est.fit(instance.observables, np.zeros(len(instance.observables)))
        with pytest.raises(ValueError):
            est.fit(instance.observables, instance.alpha[:-1])

    def test_rejects_non_psd_observables(self):
        ops = np.stack([np.diag([0.5, -0.2]).astype(complex)])
        with pytest.raises(ValueError):
            MaxEntEstimator().fit(ops, np.array([0.3]))


class TestPredict:
    def test_default_predicts_family_moments(self, instance):
        est = MaxEntEstimator(tol=1e-11).fit(
            instance.observables, instance.alpha
        )
        np.testing.assert_allclose(est.predict(), instance.alpha, atol=1e-10)

    def test_forward_mapping_on_new_operators(self, instance):
        est = MaxEntEstimator(tol=1e-11).fit(
            instance.observables, instance.alpha
        )
        d = instance.observables.dim
        eye = np.eye(d, dtype=complex)
        np.testing.assert_allclose(est.predict(eye[None]), [1.0], atol=1e-12)

    def test_dimension_mismatch(self, instance):
        est = MaxEntEstimator().fit(instance.observables, instance.alpha)
        with pytest.raises(ValueError):
            est.predict(np.eye(4, dtype=complex)[None])

    def test_score(self, instance):
        est = MaxEntEstimator(tol=1e-11).fit(
            instance.observables, instance.alpha
        )
        assert est.score(instance.observables, instance.alpha) >= -1e-10
