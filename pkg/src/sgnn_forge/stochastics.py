"""Seeded random streams and the sampling distributions the simulators draw from.

Every simulation record owns a substream keyed by (master_seed, record_id).
Philox is counter-based, so a substream is a pure function of its key: the
same key gives the same draw sequence no matter which worker runs it or in
what order records are generated.  That makes whole corpora reproducible
byte-for-byte under any level of parallelism.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


def substream(master_seed: int, stream_id: int) -> np.random.Generator:
    """Independent generator for one record, keyed by (master_seed, stream_id)."""
    key = np.array([master_seed, stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ParameterError(f"Uniform needs lo <= hi, got ({self.lo}, {self.hi})")

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)


@dataclass(frozen=True)
class LogUniform:
    """Uniform in log space: exp(U(log lo, log hi)). Requires lo > 0."""

    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo <= self.hi:
            raise ParameterError(f"LogUniform needs 0 < lo <= hi, got ({self.lo}, {self.hi})")

    def sample(self, rng, size=None):
        return np.exp(rng.uniform(np.log(self.lo), np.log(self.hi), size))


@dataclass(frozen=True)
class Normal:
    mean: float
    sd: float

    def __post_init__(self):
        if self.sd < 0:
            raise ParameterError(f"Normal needs sd >= 0, got {self.sd}")

    def sample(self, rng, size=None):
        return rng.normal(self.mean, self.sd, size)


@dataclass(frozen=True)
class NonnegNormal:
    """Normal draw clipped up to zero; negatives become exactly 0."""

    mean: float
    sd: float

    def __post_init__(self):
        if self.sd < 0:
            raise ParameterError(f"NonnegNormal needs sd >= 0, got {self.sd}")

    def sample(self, rng, size=None):
        return np.maximum(0.0, rng.normal(self.mean, self.sd, size))


@dataclass(frozen=True)
class Gamma:
    shape: float
    scale: float

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ParameterError(f"Gamma needs shape, scale > 0, got ({self.shape}, {self.scale})")

    @classmethod
    def from_mean(cls, mean: float, shape: float = 4.0) -> "Gamma":
        """Delay kernel with a stated mean: shape k (default 4), scale mean/k."""
        if mean <= 0:
            raise ParameterError(f"Gamma.from_mean needs mean > 0, got {mean}")
        return cls(shape, mean / shape)

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size)


@dataclass(frozen=True)
class LogNormal:
    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ParameterError(f"LogNormal needs sigma >= 0, got {self.sigma}")

    def sample(self, rng, size=None):
        return rng.lognormal(self.mu, self.sigma, size)


@dataclass(frozen=True)
class GeometricShifted:
    """Geometric kernel shifted so its mode sits at `shift` instead of 0.

    Support {shift, shift+1, ...} with pmf p * (1-p)^(x - shift); the mass is
    maximal at the shift for any success probability.
    """

    shift: int
    success_prob: float = 0.5

    def __post_init__(self):
        if not 0 < self.success_prob <= 1:
            raise ParameterError(f"GeometricShifted needs success_prob in (0, 1], got {self.success_prob}")
        if self.shift < 0:
            raise ParameterError(f"GeometricShifted needs shift >= 0, got {self.shift}")

    def sample(self, rng, size=None):
        return self.shift + rng.geometric(self.success_prob, size) - 1

    def pmf(self, x):
        x = np.asarray(x)
        k = x - self.shift
        out = np.where(k >= 0, self.success_prob * (1 - self.success_prob) ** np.maximum(k, 0), 0.0)
        return out


@dataclass(frozen=True)
class NegBinomial:
    """Negative binomial by mean and overdispersion: var = mean + mean^2/overdispersion."""

    mean: float
    overdispersion: float

    def __post_init__(self):
        if self.mean < 0:
            raise ParameterError(f"NegBinomial needs mean >= 0, got {self.mean}")
        if self.overdispersion <= 0:
            raise ParameterError(f"NegBinomial needs overdispersion > 0, got {self.overdispersion}")

    def sample(self, rng, size=None):
        # numpy's (n, p) parameterization: n = k, p = k / (k + mu)
        k = self.overdispersion
        p = k / (k + self.mean)
        return rng.negative_binomial(k, p, size)


@dataclass(frozen=True)
class Binomial:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError(f"Binomial needs n >= 0, got {self.n}")
        if not 0 <= self.p <= 1:
            raise ParameterError(f"Binomial needs p in [0, 1], got {self.p}")

    def sample(self, rng, size=None):
        return rng.binomial(self.n, self.p, size)


@dataclass(frozen=True)
class Poisson:
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ParameterError(f"Poisson needs rate >= 0, got {self.rate}")

    def sample(self, rng, size=None):
        return rng.poisson(self.rate, size)


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ParameterError(f"Bernoulli needs p in [0, 1], got {self.p}")

    def sample(self, rng, size=None):
        return (rng.random(size) < self.p).astype(np.int64) if size is not None else int(rng.random() < self.p)


DistributionSpec = (
    Uniform | LogUniform | Normal | NonnegNormal | Gamma | LogNormal
    | GeometricShifted | NegBinomial | Binomial | Poisson | Bernoulli
)


def sample(spec: DistributionSpec, rng: np.random.Generator, size=None):
    """Draw from a distribution spec with the given stream."""
    return spec.sample(rng, size)
