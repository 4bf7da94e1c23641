import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import random_channel, random_phases
from trihybrid import FullyDigitalBeamformer, HybridBeamformer, TriHybridBeamformer
from trihybrid.exceptions import DimensionError, InvalidConfigError


def _pair(n, seed=0):
    rng = np.random.default_rng(seed)
    return np.vstack([random_channel(rng, n), random_phases(rng, n)])


def test_params_round_trip():
    est = TriHybridBeamformer(n_waveguides=2, elements_per_waveguide=3, delta_c=0.3)
    params = est.get_params()
    assert params["delta_c"] == 0.3 and params["n_waveguides"] == 2
    twin = clone(est).set_params(delta_c=0.9)
    assert twin.delta_c == 0.9 and est.delta_c == 0.3


def test_fit_sets_state():
    X = _pair(8)
    est = TriHybridBeamformer(n_waveguides=2, elements_per_waveguide=4).fit(X)
    assert est.psi_.shape == (8,) and est.f_.shape == (2,)
    assert est.converged_ and est.n_iter_ >= 1
    assert np.vdot(est.beam_, est.beam_).real == pytest.approx(10.0, rel=1e-9)
    assert est.trace_.is_monotone()


def test_transform_gives_beam_gains():
    X = _pair(8)
    est = TriHybridBeamformer(n_waveguides=2, elements_per_waveguide=4).fit(X)
    gains = est.transform(X)
    assert gains.shape == (2,)
    assert gains[0] == pytest.approx(np.vdot(X[0], est.beam_))


def test_score_is_weighted_objective():
    X = _pair(8)
    est = TriHybridBeamformer(n_waveguides=2, elements_per_waveguide=4, delta_c=0.25).fit(X)
    g = est.transform(X)
    assert est.score(X) == pytest.approx(0.25 * abs(g[0]) ** 2 + 0.75 * abs(g[1]) ** 2)
    met = est.metrics(X)
    assert met.tx_power_mw == pytest.approx(10.0, rel=1e-9) and met.ee > 0


def test_manifold_solver_option():
    X = _pair(8, seed=1)
    mm = TriHybridBeamformer(n_waveguides=2, elements_per_waveguide=4).fit(X)
    man = TriHybridBeamformer(n_waveguides=2, elements_per_waveguide=4, solver="manifold").fit(X)
    assert man.ratio_ == pytest.approx(mm.ratio_, rel=0.1)
    with pytest.raises(InvalidConfigError):
        TriHybridBeamformer(solver="other").fit(_pair(128))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        TriHybridBeamformer().transform(_pair(128))


def test_shape_checks():
    with pytest.raises(DimensionError):
        TriHybridBeamformer(n_waveguides=2, elements_per_waveguide=4).fit(_pair(6))
    with pytest.raises(DimensionError):
        FullyDigitalBeamformer().fit(np.ones((3, 4)))


def test_baseline_ordering_on_same_pair():
    X = _pair(16, seed=3)
    fd = FullyDigitalBeamformer(delta_c=0.5).fit(X)
    hbf = HybridBeamformer(delta_c=0.5).fit(X)
    assert fd.score(X) >= hbf.score(X)
    assert hbf.converged_
    assert np.allclose(np.abs(hbf.f_), 1.0)
