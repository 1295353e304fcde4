import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from coded_allpay import AllPayEquilibrium


def test_params_round_trip():
    est = AllPayEquilibrium(n_workers=7, structure="arithmetic:0.05", n_rewards=4)
    params = est.get_params()
    assert params["n_workers"] == 7 and params["structure"] == "arithmetic:0.05"
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(sigma=2.0)
    assert est.sigma == 2.0


def test_fit_transform_single_prize():
    est = AllPayEquilibrium(n_workers=5).fit()
    v = np.array([0.0, 0.5, 1.0])
    out = est.transform(v)
    assert out.shape == (3,)
    assert np.allclose(out, np.sqrt(0.8 * v**5), atol=1e-9)
    assert np.array_equal(est.predict(v), out)
    assert est.fit_transform(v).shape == (3,)


def test_column_input():
    est = AllPayEquilibrium().fit()
    assert est.transform(np.full((4, 1), 0.3)).shape == (4, 1)
    with pytest.raises(ValueError, match="single valuation column"):
        est.transform(np.full((4, 5), 0.3))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        AllPayEquilibrium().transform([0.5])


def test_out_of_support_rejected():
    est = AllPayEquilibrium().fit()
    with pytest.raises(ValueError):
        est.transform([1.5])
    with pytest.raises(ValueError):
        est.transform([np.nan])


def test_bad_params_fail_at_fit():
    with pytest.raises(ValueError):
        AllPayEquilibrium(n_workers=0).fit()
    with pytest.raises(ValueError):
        AllPayEquilibrium(cost_mode="fast").fit()
    with pytest.raises(ValueError):
        AllPayEquilibrium(n_workers=3, structure="homogeneous", n_rewards=4).fit()


def test_derived_quantities():
    est = AllPayEquilibrium(n_workers=5).fit()
    assert est.expected_utility(0.0) == 0.0
    assert est.master_utility(simplified=True) == pytest.approx(math.sqrt(0.8) / 3.5, abs=1e-9)
    assert est.top_bid_bound() == pytest.approx(est.bid_function_.max_bid, rel=1e-9)
    mean, se = est.simulate_master_utility(rounds=20_000, seed=1)
    assert abs(mean - est.master_utility()) <= 3 * se


def test_table1_scaling():
    est = AllPayEquilibrium(cost_mode="table1").fit()
    assert est.transform([1.0])[0] == pytest.approx(1.264911e6, rel=1e-6)
