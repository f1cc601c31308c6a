import numpy as np
import pytest
from scipy.special import expit, logit

from cdlab import extrapolation as ex
from cdlab.acceptance import _pl_data, demeaned_oracle_data
from cdlab.errors import ConfigError, NonUnique
from cdlab.population import market_rng
from cdlab.transforms import LogitInverse
from cdlab.types import validate_shares


class TestTestFunctionSet:
    def test_mean_independence_is_identity_column(self):
        h = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(ex.MEAN_INDEPENDENCE.apply(h), h[:, None])

    def test_indicator_grid_columns_are_centered(self):
        t = ex.TestFunctionSet("indicator-grid", grid=(0.0, 1.0))
        M = t.apply(np.array([-1.0, 0.5, 2.0]))
        assert M.shape == (3, 2)
        np.testing.assert_allclose(M.mean(axis=0), 0.0, atol=1e-15)

    def test_validation(self):
        with pytest.raises(ConfigError):
            ex.TestFunctionSet("characteristic-function")
        with pytest.raises(ConfigError):
            ex.TestFunctionSet("indicator-grid", grid=(1.0, 0.0))


def test_rule_family_validation():
    with pytest.raises(ConfigError):
        ex.RuleFamily("spline")
    with pytest.raises(ConfigError):
        ex.demeaned_family("sqrt")


def test_demeaned_fit_equals_per_cell_means():
    """With dummy instruments on a balanced design, the fitted mu are the
    per-level means of f(Y)."""
    data, _, _ = demeaned_oracle_data(seed=11, n=400)
    fam, rep = ex.solve_orthogonality(ex.demeaned_family("logit"),
                                      ex.MEAN_INDEPENDENCE, data)
    ly = np.array([logit(float(o.y)) for o in data])
    lev = np.array([o.a for o in data])
    for k, level in enumerate(fam.levels):
        np.testing.assert_allclose(fam.theta[k], ly[lev == level].mean(),
                                   atol=1e-8)
    assert rep.unique


def test_demeaned_oracle_recovers_counterfactuals_exactly():
    data, shocks, mu = demeaned_oracle_data(seed=3, n=800)
    fam, _ = ex.solve_orthogonality(ex.demeaned_family("logit"),
                                    ex.MEAN_INDEPENDENCE, data)
    worst = 0.0
    for o, xi in zip(data[:200], shocks[:200]):
        for t in range(len(mu)):
            pred = ex.extrapolate(fam, o.y, o.a, t)
            worst = max(worst, abs(pred - float(expit(mu[t] + xi))))
    assert worst <= 1e-8


def test_extrapolate_requires_fit_and_known_level():
    with pytest.raises(ConfigError):
        ex.extrapolate(ex.demeaned_family("logit"), 0.4, 0, 1)
    data, _, _ = demeaned_oracle_data(seed=1, n=80)
    fam, _ = ex.solve_orthogonality(ex.demeaned_family("logit"),
                                    ex.MEAN_INDEPENDENCE, data)
    with pytest.raises(ConfigError):
        ex.extrapolate(fam, 0.4, 0, 99)


def test_extrapolate_returns_y_at_same_treatment():
    data, _, _ = demeaned_oracle_data(seed=2, n=80)
    for fam_proto in (ex.demeaned_family("logit"), ex.quantile_family()):
        fam, _ = ex.solve_orthogonality(fam_proto, ex.MEAN_INDEPENDENCE, data)
        o = data[7]
        assert ex.extrapolate(fam, o.y, o.a, o.a) == o.y


def test_quantile_family_rank_round_trip():
    data, _, _ = demeaned_oracle_data(seed=4, n=400)
    fam, _ = ex.solve_orthogonality(ex.quantile_family(),
                                    ex.MEAN_INDEPENDENCE, data)
    o = data[10]
    u = fam.H(float(o.y), o.a)
    np.testing.assert_allclose(fam.H_inverse(u, o.a), float(o.y), atol=1e-10)
    # ranks transport monotonically across levels
    lo = ex.extrapolate(fam, float(o.y), o.a, fam.levels[0])
    hi = ex.extrapolate(fam, float(o.y) + 1e-3, o.a, fam.levels[0])
    assert hi > lo


def test_partially_linear_recovers_price_and_x2_coefficients():
    data = _pl_data(seed=6, n=1000)
    fam, rep = ex.solve_orthogonality(ex.partially_linear_family(n_params=2),
                                      ex.MEAN_INDEPENDENCE, data, starts=6,
                                      seed=0)
    alpha, gamma = fam.theta
    assert abs(alpha - 1.3) < 0.1
    assert abs(gamma - 0.6) < 0.1
    assert rep.unique


def test_partially_linear_nonunique_with_redundant_param_map():
    data = _pl_data(seed=7, n=200, x2=False)
    fam = ex.partially_linear_family(param_map=((1.0, 1.0),))
    with pytest.raises(NonUnique) as err:
        ex.solve_orthogonality(fam, ex.MEAN_INDEPENDENCE, data, starts=8,
                               seed=0)
    assert len(err.value.candidates) >= 2


def test_sample_size_guard():
    data = _pl_data(seed=8, n=12)
    with pytest.raises(ConfigError):
        ex.solve_orthogonality(ex.partially_linear_family(n_params=2),
                               ex.MEAN_INDEPENDENCE, data)


def test_instrument_basis_dummies_vs_polynomials():
    few = [ex.observe(0.5, 0, [float(k % 3)]) for k in range(30)]
    B = ex.instrument_basis(few)
    assert B.shape == (30, 3)
    rng = market_rng(0, 0)
    many = [ex.observe(0.5, 0, rng.normal(size=2)) for _ in range(30)]
    B2 = ex.instrument_basis(many, degree=2)
    assert B2.shape == (30, 6)  # 1, z1, z2, z1^2, z1 z2, z2^2


def test_check_prop32_demeaned_and_partially_linear():
    data, _, mu = demeaned_oracle_data(seed=9, n=200)
    dfam, _ = ex.solve_orthogonality(ex.demeaned_family("logit"),
                                     ex.MEAN_INDEPENDENCE, data)
    rep = ex.check_prop32(dfam, data[:20], targets=list(range(len(mu))))
    assert rep.passed and rep.max_gap <= 1e-10

    pl_data = _pl_data(seed=9, n=400)
    pfam, _ = ex.solve_orthogonality(ex.partially_linear_family(n_params=2),
                                     ex.MEAN_INDEPENDENCE, pl_data, starts=4,
                                     seed=0)
    targets = [o.a.replace(p=np.array([pp]))
               for o, pp in zip(pl_data[:5], np.linspace(0.6, 2.8, 5))]
    rep2 = ex.check_prop32(pfam, pl_data[:20], targets=targets)
    assert rep2.passed and rep2.max_gap <= 1e-10


def test_price_ccs_check_contrast():
    from cdlab.dgps import ScaledX1Spec, sample_scaled_x1_population

    spec = ScaledX1Spec(market_count=60, seed=5)
    pop = sample_scaled_x1_population(spec)
    h = LogitInverse(alpha=spec.alpha, gamma=())
    rep = ex.price_ccs_check(h, pop, spec.truth,
                             price_grid=np.linspace(0.6, 2.8, 5))
    assert rep.price_correct
    assert rep.max_price_error <= 1e-8
    assert max(rep.x1_error_by_type.values()) > 0.01
