"""Synthetic data generation for the simulation studies.

Observations follow X = F B^T + U with standard Gaussian factors F and
idiosyncratic parts U, loadings B drawn once from Unif(-1,1) and held
fixed across replicates, and the response Y = F gamma* + U beta* + eps
with Gaussian or Student-t noise.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import DimensionError
from ..factor_model import DataMatrix
from ..rng import stream

# Stream purpose tags.
_LOADINGS = 0
_FACTORS = 1
_IDIO = 2
_NOISE = 3


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family: gaussian(sd) or t(df)."""

    family: str
    param: float

    def __post_init__(self):
        if self.family not in ("gaussian", "t"):
            raise DimensionError("noise family must be 'gaussian' or 't'")
        if not self.param > 0:
            raise DimensionError("noise parameter (sd or df) must be positive")

    @classmethod
    def gaussian(cls, sd=0.5):
        return cls("gaussian", float(sd))

    @classmethod
    def student_t(cls, df):
        return cls("t", float(df))

    def draw(self, gen, n):
        if self.family == "gaussian":
            return gen.normal(0.0, self.param, n)
        return gen.standard_t(self.param, n)


@dataclass(frozen=True)
class DgpSpec:
    """One synthetic-data configuration."""

    n: int
    d: int
    beta_star: np.ndarray
    gamma_star: np.ndarray
    m: int = 2
    noise: NoiseSpec = NoiseSpec("gaussian", 0.5)
    loading_seed: int = 20240
    replicate_seed: int = 0

    def __post_init__(self):
        beta = np.asarray(self.beta_star, dtype=float).ravel()
        gamma = np.asarray(self.gamma_star, dtype=float).ravel()
        if self.n < 2 or self.d < 1 or self.m < 1:
            raise DimensionError("need n >= 2, d >= 1, m >= 1")
        if beta.shape[0] != self.d:
            raise DimensionError(f"beta_star must have length d={self.d}")
        if gamma.shape[0] != self.m:
            raise DimensionError(f"gamma_star must have length m={self.m}")
        beta.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "gamma_star", gamma)

    def for_replicate(self, seed):
        return replace(self, replicate_seed=int(seed))


@dataclass(frozen=True)
class DgpTruth:
    """Ground truth backing one generated data set."""

    beta_star: np.ndarray
    gamma_star: np.ndarray
    f: np.ndarray
    u: np.ndarray
    b: np.ndarray

    @property
    def support(self):
        return frozenset(int(j) for j in np.nonzero(self.beta_star)[0])


def sparse_signal_spec(
    n,
    d,
    noise=None,
    signal=(1.8, 1.6, -1.2),
    gamma=(0.5, 0.5),
    loading_seed=20240,
    replicate_seed=0,
):
    """Benchmark configuration: a short strong signal, two dense factors."""
    signal = np.asarray(signal, dtype=float)
    if signal.shape[0] > d:
        raise DimensionError("signal longer than d")
    beta = np.zeros(d)
    beta[: signal.shape[0]] = signal
    return DgpSpec(
        n=n,
        d=d,
        m=len(gamma),
        beta_star=beta,
        gamma_star=np.asarray(gamma, dtype=float),
        noise=noise or NoiseSpec.gaussian(0.5),
        loading_seed=loading_seed,
        replicate_seed=replicate_seed,
    )


def generate_dgp(spec):
    """Generate one data set; deterministic given the spec's two seeds."""
    b = stream(spec.loading_seed, _LOADINGS).uniform(-1.0, 1.0, (spec.d, spec.m))
    f = stream(spec.replicate_seed, _FACTORS).standard_normal((spec.n, spec.m))
    u = stream(spec.replicate_seed, _IDIO).standard_normal((spec.n, spec.d))
    eps = spec.noise.draw(stream(spec.replicate_seed, _NOISE), spec.n)
    x = f @ b.T + u
    y = f @ spec.gamma_star + u @ spec.beta_star + eps
    data = DataMatrix(x=x, y=y)
    truth = DgpTruth(
        beta_star=spec.beta_star, gamma_star=spec.gamma_star, f=f, u=u, b=b
    )
    return data, truth
