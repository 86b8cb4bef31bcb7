"""Regularly varying uncertainty distributions.

Four light-tailed families are supported, each with a seeded sampler, a
normalized log-density and its tail data (tail index ``alpha``, limiting
shape ``lambda`` and scale ``q(u) = u**alpha``).  Affine images of a family
can be sampled but carry no tail data of their own.

Sampling is chunked: rows ``[k*CHUNK, (k+1)*CHUNK)`` always come from
substreams keyed by ``(seed, k)``, so output does not depend on how many
workers draw the chunks, and a shorter draw is a prefix of a longer one.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence, TypeVar, Union

import numpy as np
from scipy.special import gammaln, logsumexp

CHUNK = 1 << 17

T = TypeVar("T")


class DistributionError(ValueError):
    pass


def _spd(cov, name="cov") -> tuple[np.ndarray, np.ndarray]:
    cov = np.array(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DistributionError(f"{name} must be a square matrix, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14):
        raise DistributionError(f"{name} is not symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise DistributionError(f"{name} is not positive definite") from None
    return cov, chol


def _mahalanobis_sq(chol: np.ndarray, z: np.ndarray) -> np.ndarray:
    # z has shape (..., d); solve L w = z^T
    w = np.linalg.solve(chol, np.moveaxis(z, -1, 0).reshape(chol.shape[0], -1))
    return np.sum(w * w, axis=0).reshape(z.shape[:-1])


def _apply(g: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``g @ M.T`` accumulated column by column.

    BLAS results can depend on the batch size in the last bit; elementwise
    accumulation keeps every row independent of how many rows are drawn.
    """
    out = np.zeros((g.shape[0], M.shape[0]))
    for k in range(M.shape[1]):
        out += g[:, k, None] * M[:, k]
    return out


def _logdet(chol: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


@dataclass(frozen=True, eq=False)
class MultivariateNormal:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        cov, chol = _spd(self.cov)
        mean = np.array(self.mean, dtype=float).reshape(-1)
        if mean.shape[0] != cov.shape[0]:
            raise DistributionError("mean and covariance dimensions differ")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", chol)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def _draw(self, rng_for, count):
        g = rng_for(0).standard_normal((count, self.dim))
        return self.mean + _apply(g, self.chol)

    def log_density(self, z):
        z = np.asarray(z, dtype=float)
        r2 = _mahalanobis_sq(self.chol, z - self.mean)
        return -0.5 * r2 - 0.5 * self.dim * math.log(2 * math.pi) - 0.5 * _logdet(self.chol)


@dataclass(frozen=True, eq=False)
class Elliptical:
    """Density proportional to ``exp(-(z' cov^-1 z)**(shape/2))``."""

    cov: np.ndarray
    shape: float

    def __post_init__(self):
        cov, chol = _spd(self.cov)
        if not self.shape > 0:
            raise DistributionError("elliptical shape must be positive")
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "shape", float(self.shape))

    @property
    def dim(self) -> int:
        return self.cov.shape[0]

    def _draw(self, rng_for, count):
        d, k = self.dim, self.shape
        g = rng_for(0).standard_normal((count, d))
        norm = np.sqrt(_apply(g * g, np.ones((1, d))))
        radius = rng_for(1).gamma(d / k, 1.0, size=count) ** (1.0 / k)
        return (radius[:, None] / norm) * _apply(g, self.chol)

    def _log_norm(self) -> float:
        d, k = self.dim, self.shape
        # integral of exp(-|w|^k) over R^d
        return (math.log(2.0) + 0.5 * d * math.log(math.pi) - gammaln(d / 2)
                + gammaln(d / k) - math.log(k))

    def log_density(self, z):
        z = np.asarray(z, dtype=float)
        r2 = _mahalanobis_sq(self.chol, z)
        return -(r2 ** (0.5 * self.shape)) - self._log_norm() - 0.5 * _logdet(self.chol)


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    covs: Sequence[np.ndarray]

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DistributionError("mixture weights must be nonnegative and sum to 1")
        means = np.atleast_2d(np.array(self.means, dtype=float))
        if len(self.covs) != w.shape[0] or means.shape[0] != w.shape[0]:
            raise DistributionError("mixture needs one mean and covariance per weight")
        pairs = [_spd(c, f"covs[{i}]") for i, c in enumerate(self.covs)]
        d = means.shape[1]
        if any(c.shape[0] != d for c, _ in pairs):
            raise DistributionError("mixture component dimensions differ")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", tuple(c for c, _ in pairs))
        object.__setattr__(self, "chols", tuple(l for _, l in pairs))

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def _draw(self, rng_for, count):
        comp = rng_for(1).choice(self.weights.shape[0], p=self.weights, size=count)
        g = rng_for(0).standard_normal((count, self.dim))
        out = np.empty_like(g)
        for k, chol in enumerate(self.chols):
            mask = comp == k
            out[mask] = self.means[k] + _apply(g[mask], chol)
        return out

    def log_density(self, z):
        z = np.asarray(z, dtype=float)
        d = self.dim
        terms = []
        for w, mu, chol in zip(self.weights, self.means, self.chols):
            r2 = _mahalanobis_sq(chol, z - mu)
            terms.append(np.log(w) - 0.5 * r2 - 0.5 * d * math.log(2 * math.pi) - 0.5 * _logdet(chol))
        return logsumexp(np.stack(terms), axis=0)


@dataclass(frozen=True, eq=False)
class WeibullIndependent:
    shape: float
    scales: np.ndarray

    def __post_init__(self):
        scales = np.array(self.scales, dtype=float).reshape(-1)
        if not self.shape > 0 or scales.size == 0 or np.any(scales <= 0):
            raise DistributionError("Weibull shape and scales must be strictly positive")
        object.__setattr__(self, "shape", float(self.shape))
        object.__setattr__(self, "scales", scales)

    @property
    def dim(self) -> int:
        return self.scales.shape[0]

    def _draw(self, rng_for, count):
        return rng_for(0).weibull(self.shape, size=(count, self.dim)) * self.scales

    def log_density(self, z):
        z = np.asarray(z, dtype=float)
        k = self.shape
        r = z / self.scales
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.log(k / self.scales) + (k - 1.0) * np.log(r) - r ** k
            if k == 1.0:
                terms = np.log(1.0 / self.scales) - r
        out = np.sum(terms, axis=-1)
        return np.where(np.all(z >= 0, axis=-1), out, -np.inf)


Distribution = Union[MultivariateNormal, Elliptical, GaussianMixture, WeibullIndependent]


@dataclass(frozen=True, eq=False)
class AffinePushforward:
    """Law of ``T @ xi + t`` for ``xi`` drawn from ``base``."""

    base: "Distribution | AffinePushforward"
    transform: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        T = np.atleast_2d(np.array(self.transform, dtype=float))
        t = np.array(self.offset, dtype=float).reshape(-1)
        if T.shape[0] != t.shape[0]:
            raise DistributionError("transform rows and offset length differ")
        if T.shape[1] != self.base.dim:
            raise DistributionError(
                f"transform has {T.shape[1]} columns, base dimension is {self.base.dim}")
        object.__setattr__(self, "transform", T)
        object.__setattr__(self, "offset", t)

    @property
    def dim(self) -> int:
        return self.offset.shape[0]

    def _draw(self, rng_for, count):
        return _apply(self.base._draw(rng_for, count), self.transform) + self.offset

    @property
    def root(self) -> Distribution:
        base = self.base
        while isinstance(base, AffinePushforward):
            base = base.base
        return base


# -- sampling ---------------------------------------------------------------

def derive_seed(*parts) -> int:
    """Stable 63-bit seed from a tuple of ints, floats and strings."""
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def _chunk_rngs(seed: int, chunk: int) -> Callable[[int], np.random.Generator]:
    cache: dict[int, np.random.Generator] = {}

    def rng_for(role: int) -> np.random.Generator:
        if role not in cache:
            ss = np.random.SeedSequence(entropy=seed, spawn_key=(chunk, role))
            cache[role] = np.random.Generator(np.random.PCG64(ss))
        return cache[role]

    return rng_for


def _chunk_sizes(count: int) -> list[int]:
    full, rest = divmod(count, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def draw_chunk(dist, seed: int, chunk: int, size: int) -> np.ndarray:
    """Rows ``chunk*CHUNK .. chunk*CHUNK + size`` of the seeded sample stream."""
    return dist._draw(_chunk_rngs(seed, chunk), size)


def map_chunks(dist, count: int, seed: int, fn: Callable[[np.ndarray], T],
               workers: int = 1) -> list[T]:
    """Apply ``fn`` to each sample chunk; results come back in chunk order."""
    sizes = _chunk_sizes(count)

    def job(k):
        return fn(draw_chunk(dist, seed, k, sizes[k]))

    if workers <= 1 or len(sizes) <= 1:
        return [job(k) for k in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(len(sizes))))


def iter_chunks(dist, count: int, seed: int) -> Iterator[np.ndarray]:
    for k, size in enumerate(_chunk_sizes(count)):
        yield draw_chunk(dist, seed, k, size)


def sample(dist, count: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draw ``count`` i.i.d. rows from ``dist``; reproducible in ``seed``."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return np.empty((0, dist.dim))
    return np.concatenate(map_chunks(dist, count, seed, lambda a: a, workers), axis=0)


def log_density(dist: Distribution, z) -> np.ndarray | float:
    if isinstance(dist, AffinePushforward):
        raise NotImplementedError("log-density of an affine pushforward is not available")
    out = dist.log_density(z)
    return float(out) if np.ndim(out) == 0 else out


# -- tail data --------------------------------------------------------------

@dataclass(frozen=True)
class LdpData:
    alpha: float
    lam: Callable[[np.ndarray], float]
    q: Callable[[float], float]


def _power_q(alpha):
    return lambda u: float(u) ** alpha


def _quad_form(cov):
    prec = np.linalg.inv(cov)
    return lambda z: float(np.asarray(z, float) @ prec @ np.asarray(z, float))


def ldp_data(dist: Distribution) -> LdpData:
    """Tail index and limiting shape, exactly as tabulated for each family.

    For the elliptical and Gaussian-mixture families the tabulated ``lambda``
    is not the one implied by the density; see :func:`density_ldp_data`.
    """
    if isinstance(dist, AffinePushforward):
        raise NotImplementedError("tail data of an affine pushforward is not derived")
    if isinstance(dist, MultivariateNormal):
        qf = _quad_form(dist.cov)
        return LdpData(2.0, lambda z: 0.5 * qf(z), _power_q(2.0))
    if isinstance(dist, Elliptical):
        qf, k = _quad_form(dist.cov), dist.shape
        return LdpData(k, lambda z: qf(z) ** k, _power_q(k))
    if isinstance(dist, GaussianMixture):
        forms = [_quad_form(c) for c in dist.covs]
        return LdpData(2.0, lambda z: 0.5 * sum(f(z) ** 2 for f in forms), _power_q(2.0))
    if isinstance(dist, WeibullIndependent):
        k, sc = dist.shape, dist.scales
        return LdpData(k, lambda z: float(np.sum((np.asarray(z, float) / sc) ** k)), _power_q(k))
    raise TypeError(f"unknown distribution {type(dist).__name__}")


def density_ldp_data(dist: Distribution) -> LdpData:
    """Tail data derived from the log-density itself.

    Differs from :func:`ldp_data` only for the elliptical family, where
    ``lambda(z) = (z' cov^-1 z)**(k/2)``, and the mixture, where the
    lightest-tailed component is dominated: ``lambda(z) = min_k z' cov_k^-1 z / 2``.
    """
    if isinstance(dist, Elliptical):
        qf, k = _quad_form(dist.cov), dist.shape
        return LdpData(k, lambda z: qf(z) ** (0.5 * k), _power_q(k))
    if isinstance(dist, GaussianMixture):
        forms = [_quad_form(c) for c in dist.covs]
        return LdpData(2.0, lambda z: 0.5 * min(f(z) for f in forms), _power_q(2.0))
    return ldp_data(dist)


def tail_index(dist) -> float:
    """Tail index ``alpha``; affine images inherit the index of their root."""
    if isinstance(dist, AffinePushforward):
        dist = dist.root
    return ldp_data(dist).alpha


# -- JSON -------------------------------------------------------------------

def from_json(obj: dict):
    if "affine" in obj:
        a = obj["affine"]
        return AffinePushforward(from_json(a["base"]), a["T"], a["t"])
    family = obj.get("family")
    if family == "normal":
        cov = np.array(obj["cov"], dtype=float)
        return MultivariateNormal(obj.get("mean", np.zeros(cov.shape[0])), cov)
    if family == "elliptical":
        return Elliptical(obj["cov"], obj["shape"])
    if family == "mixture":
        return GaussianMixture(obj["weights"], obj["means"], obj["covs"])
    if family == "weibull":
        return WeibullIndependent(obj["shape"], obj["scales"])
    raise DistributionError(f"unknown distribution family {family!r}")


def to_json(dist) -> dict:
    if isinstance(dist, AffinePushforward):
        return {"affine": {"T": dist.transform.tolist(), "t": dist.offset.tolist(),
                           "base": to_json(dist.base)}}
    if isinstance(dist, MultivariateNormal):
        return {"family": "normal", "mean": dist.mean.tolist(), "cov": dist.cov.tolist()}
    if isinstance(dist, Elliptical):
        return {"family": "elliptical", "shape": dist.shape, "cov": dist.cov.tolist()}
    if isinstance(dist, GaussianMixture):
        return {"family": "mixture", "weights": dist.weights.tolist(),
                "means": dist.means.tolist(), "covs": [c.tolist() for c in dist.covs]}
    if isinstance(dist, WeibullIndependent):
        return {"family": "weibull", "shape": dist.shape, "scales": dist.scales.tolist()}
    raise TypeError(f"unknown distribution {type(dist).__name__}")
