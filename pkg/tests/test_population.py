import numpy as np
import pytest

from cdlab import laws
from cdlab.demand import shares
from cdlab.errors import ConfigError
from cdlab.population import (
    PopulationSpec,
    market_rng,
    sample_market,
    sample_population,
    true_counterfactual,
)
from cdlab.types import bundle, lognormal_mixing, normal_mixing


def two_type_spec(n=50, seed=0, **kwargs):
    return PopulationSpec(
        J=1, market_count=n,
        mixing_by_type=(lognormal_mixing(0.0, 0.5), lognormal_mixing(-0.5, 2.0)),
        type_probabilities=(0.5, 0.5), seed=seed, **kwargs)


def test_spec_validation():
    with pytest.raises(ConfigError):
        two_type_spec().__class__(J=0, market_count=1,
                                  mixing_by_type=(lognormal_mixing(0, 1),),
                                  type_probabilities=(1.0,))
    with pytest.raises(ConfigError):
        PopulationSpec(J=1, market_count=1,
                       mixing_by_type=(lognormal_mixing(0, 1),),
                       type_probabilities=(0.4, 0.6))
    with pytest.raises(ConfigError):
        PopulationSpec(J=1, market_count=1,
                       mixing_by_type=(lognormal_mixing(0, 1),),
                       type_probabilities=(0.9,))


def test_sampling_is_bit_identical_across_calls():
    spec = two_type_spec(n=20, seed=5)
    a = sample_population(spec)
    b = sample_population(spec)
    for da, db in zip(a, b):
        assert da.zeta == db.zeta
        np.testing.assert_array_equal(da.xi, db.xi)
        np.testing.assert_array_equal(da.a.p, db.a.p)
        np.testing.assert_array_equal(da.y.values, db.y.values)


def test_market_draw_depends_only_on_seed_and_index():
    """Market i is the same regardless of how many other markets exist."""
    small = two_type_spec(n=5, seed=9)
    large = two_type_spec(n=50, seed=9)
    for i in range(5):
        da = sample_market(small, i)
        db = sample_market(large, i)
        np.testing.assert_array_equal(da.y.values, db.y.values)


def test_market_rng_streams_are_distinct():
    a = market_rng(0, 1).standard_normal(4)
    b = market_rng(0, 2).standard_normal(4)
    c = market_rng(1, 1).standard_normal(4)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_observed_shares_reconstruct_from_latent_state():
    spec = two_type_spec(n=10, seed=2)
    for d in sample_population(spec):
        y = shares(spec.share_map(d.zeta), d.a.x1 + d.xi, d.a)
        np.testing.assert_array_equal(y.values, d.y.values)


def test_instruments_default_to_prices():
    spec = two_type_spec(n=5)
    for d in sample_population(spec):
        np.testing.assert_array_equal(d.z, d.a.p)


def test_instrument_law_overrides_prices():
    spec = two_type_spec(n=5, instrument_law=laws.constant(7.0))
    for d in sample_population(spec):
        np.testing.assert_array_equal(d.z, [7.0])


def test_price_law_is_config_not_hard_coded():
    spec = two_type_spec(n=20, price_law=laws.uniform(10.0, 11.0))
    prices = [float(d.a.p[0]) for d in sample_population(spec)]
    assert min(prices) >= 10.0 and max(prices) <= 11.0


def test_true_counterfactual_at_observed_bundle_is_observed_outcome():
    spec = two_type_spec(n=8, seed=3)
    for d in sample_population(spec):
        y = true_counterfactual(spec, d, d.a)
        np.testing.assert_array_equal(y.values, d.y.values)


def test_true_counterfactual_responds_to_price():
    spec = PopulationSpec(J=1, market_count=4,
                          mixing_by_type=(normal_mixing((1.0,), (0.1,)),),
                          type_probabilities=(1.0,), seed=0)
    for d in sample_population(spec):
        lo = true_counterfactual(spec, d, bundle(d.a.x1, [0.5]))
        hi = true_counterfactual(spec, d, bundle(d.a.x1, [3.0]))
        assert lo.values[0] > hi.values[0]  # demand slopes down
