"""Random-clock distributions and integration of their joint density over regions."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

from .geometry import EPS_MEM, Region

_STD = NormalDist()
CHUNK = 1 << 16


@dataclass(frozen=True)
class DistributionSpec:
    """One-dimensional distribution on ``[0, inf)``.

    ``kind`` is ``uniform`` (params a, b), ``normal`` (folded normal, params mu,
    sigma) or ``exponential`` (param rate).
    """

    kind: str
    params: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        p = self.params
        if self.kind == "uniform":
            if len(p) != 2 or not p[0] < p[1] or p[0] < 0:
                raise ValueError(f"uniform needs 0 <= a < b, got {p}")
        elif self.kind == "normal":
            if len(p) != 2 or p[1] <= 0:
                raise ValueError(f"normal needs sigma > 0, got {p}")
        elif self.kind == "exponential":
            if len(p) != 1 or p[0] <= 0:
                raise ValueError(f"exponential needs rate > 0, got {p}")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @property
    def _fp(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.params)

    def support(self) -> tuple[float, float]:
        if self.kind == "uniform":
            a, b = self._fp
            return a, b
        return 0.0, math.inf

    def pdf(self, x: float) -> float:
        if x < 0:
            return 0.0
        if self.kind == "uniform":
            a, b = self._fp
            return 1.0 / (b - a) if a <= x <= b else 0.0
        if self.kind == "normal":
            mu, s = self._fp
            return (_STD.pdf((x - mu) / s) + _STD.pdf((x + mu) / s)) / s
        (lam,) = self._fp
        return lam * math.exp(-lam * x)

    def cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        if math.isinf(x):
            return 1.0
        if self.kind == "uniform":
            a, b = self._fp
            return min(1.0, max(0.0, (x - a) / (b - a)))
        if self.kind == "normal":
            mu, s = self._fp
            return _STD.cdf((x - mu) / s) - _STD.cdf((-x - mu) / s)
        (lam,) = self._fp
        return -math.expm1(-lam * x)

    def mass(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        return max(0.0, self.cdf(hi) - self.cdf(lo))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "uniform":
            a, b = self._fp
            return rng.uniform(a, b, n)
        if self.kind == "normal":
            mu, s = self._fp
            return np.abs(rng.normal(mu, s, n))
        (lam,) = self._fp
        return rng.exponential(1.0 / lam, n)


@dataclass(frozen=True)
class ProbabilityResult:
    value: float
    stat_error: float
    samples_used: int
    method: str  # "exact" or "monte_carlo"


def density(distrs: Sequence[DistributionSpec], point: Sequence[float]) -> float:
    """Joint density: product of the marginals."""
    out = 1.0
    for d, x in zip(distrs, point, strict=True):
        out *= d.pdf(float(x))
    return out


def _workers() -> int:
    raw = os.environ.get("RACV_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def _chunk(distrs: Sequence[DistributionSpec], seed: int, index: int, size: int) -> np.ndarray:
    # every chunk has its own key, so results do not depend on how chunks are scheduled
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), index])))
    cols = [d.draw(rng, size) for d in distrs]
    return np.column_stack(cols) if cols else np.zeros((size, 0))


def sample(distrs: Sequence[DistributionSpec], seed: int, n: int) -> np.ndarray:
    """``n`` joint samples, shape ``(n, len(distrs))``; deterministic given ``seed``."""
    if n < 1:
        raise ValueError("n must be positive")
    blocks = []
    for index, start in enumerate(range(0, n, CHUNK)):
        blocks.append(_chunk(distrs, seed, index, min(CHUNK, n - start)))
    return np.vstack(blocks)


def _count_hits(region: Region, distrs: Sequence[DistributionSpec], seed: int, n: int) -> int:
    def work(index: int) -> int:
        start = index * CHUNK
        pts = _chunk(distrs, seed, index, min(CHUNK, n - start))
        return int(np.count_nonzero(region.contains_many(pts, EPS_MEM)))

    n_chunks = (n + CHUNK - 1) // CHUNK
    workers = min(_workers(), n_chunks)
    if workers <= 1:
        return sum(work(i) for i in range(n_chunks))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(work, range(n_chunks)))


def exact_mass_1d(region: Region, distr: DistributionSpec) -> float:
    return sum(distr.mass(lo, hi) for lo, hi in region.drop_null().as_intervals())


def integrate(region: Region, distrs: Sequence[DistributionSpec], samples: int = 100_000,
              seed: int = 0) -> ProbabilityResult:
    """Probability mass of ``region`` under the product distribution."""
    if region.dim != len(distrs):
        raise ValueError(f"region has dimension {region.dim}, expected {len(distrs)}")
    if region.dim == 0:
        return ProbabilityResult(0.0 if region.is_empty() else 1.0, 0.0, 0, "exact")
    if region.dim == 1:
        value = float(min(1.0, exact_mass_1d(region, distrs[0])))
        return ProbabilityResult(value, 0.0, 0, "exact")
    live = region.drop_null()
    if not live.parts:
        return ProbabilityResult(0.0, 0.0, samples, "monte_carlo")
    hits = _count_hits(live, distrs, seed, samples)
    p = hits / samples
    return ProbabilityResult(p, math.sqrt(p * (1.0 - p) / samples), samples, "monte_carlo")


def full_space_check(distrs: Sequence[DistributionSpec], n: int = 100_000, seed: int = 0) -> ProbabilityResult:
    return integrate(Region.orthant(len(distrs)), distrs, n, seed)


def distributions_in_order(distributions: Mapping[str, DistributionSpec],
                           names: Sequence[str]) -> list[DistributionSpec]:
    return [distributions[n] for n in names]
