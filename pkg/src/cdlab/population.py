"""Simulable market populations with a deterministic seeded sampling contract.

Draw i depends only on (seed, i): each market gets its own counter-based
substream, so serial and parallel generation produce bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import laws
from .demand import Integration, ShareMap, gauss_hermite, mixed_logit, shares
from .errors import ConfigError
from .types import Bundle, MarketDraw, MixingSpec, SharesVector


@dataclass(frozen=True)
class PopulationSpec:
    """Declarative description of a population of markets.

    Types are indexed 0..K-1; each type has its own mixing distribution for
    the random price coefficient. Treatment is randomized by default, in
    which case the instruments equal the prices.
    """

    J: int
    market_count: int
    mixing_by_type: tuple  # tuple of MixingSpec, indexed by type tag
    type_probabilities: tuple
    price_law: laws.Law = field(default_factory=lambda: laws.uniform(0.5, 3.0))
    x1_law: laws.Law = field(default_factory=lambda: laws.constant(0.0))
    x2_dim: int = 0
    x2_law: laws.Law = field(default_factory=lambda: laws.constant(0.0))
    xi_law: laws.Law = field(default_factory=lambda: laws.normal(0.0, 1.0))
    instrument_law: laws.Law | None = None  # None: instruments equal prices
    gamma: tuple = ()
    integration: Integration = field(default_factory=gauss_hermite)
    seed: int = 0

    def __post_init__(self):
        if self.J < 1 or self.market_count < 0:
            raise ConfigError("require J >= 1 and market_count >= 0")
        probs = np.asarray(self.type_probabilities, dtype=float)
        if len(probs) != len(self.mixing_by_type):
            raise ConfigError("type_probabilities must match mixing_by_type")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-10:
            raise ConfigError("type_probabilities must sum to 1")
        object.__setattr__(self, "mixing_by_type", tuple(self.mixing_by_type))
        object.__setattr__(self, "type_probabilities", tuple(float(p) for p in probs))

    @property
    def n_types(self) -> int:
        return len(self.mixing_by_type)

    def share_map(self, zeta: int) -> ShareMap:
        return mixed_logit(self.mixing_by_type[zeta], gamma=self.gamma,
                           integration=self.integration)


def market_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based substream: pure function of (seed, key)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def sample_market(spec: PopulationSpec, index: int) -> MarketDraw:
    rng = market_rng(spec.seed, index)
    zeta = int(rng.choice(spec.n_types, p=spec.type_probabilities))
    xi = spec.xi_law.sample(rng, spec.J)
    x1 = spec.x1_law.sample(rng, spec.J)
    p = spec.price_law.sample(rng, spec.J)
    x2 = spec.x2_law.sample(rng, spec.J * spec.x2_dim).reshape(spec.J, spec.x2_dim)
    if spec.instrument_law is None:
        z = p.copy()
    else:
        z = spec.instrument_law.sample(rng, spec.J)
    a = Bundle(x1, p, x2)
    y = shares(spec.share_map(zeta), x1 + xi, a)
    return MarketDraw(xi=xi, zeta=zeta, y=y, a=a, z=z)


def sample_population(spec: PopulationSpec) -> list[MarketDraw]:
    """market_count i.i.d. draws; bit-identical across repeated calls."""
    return [sample_market(spec, i) for i in range(spec.market_count)]


def true_counterfactual(spec: PopulationSpec, draw: MarketDraw, a: Bundle) -> SharesVector:
    """The market's potential outcome at bundle a, from its stored latent state."""
    return shares(spec.share_map(draw.zeta), a.x1 + draw.xi, a)
