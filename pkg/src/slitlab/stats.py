"""Position sampling on the backstop and goodness-of-fit machinery.

Individual electrons arrive as discrete counts; the screen density only
emerges from many of them.  Samples are drawn by inverting the
piecewise-linear CDF of a gridded density, so positions are continuous
and the expected bin masses used by the chi-square test follow the exact
same convention as the sampler.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import stats as sps

from .optics import RealDensity, SlitGeometry

if TYPE_CHECKING:
    from .measurement import IlluminationConfig

__all__ = [
    "ChiSquareResult",
    "GriddedCdf",
    "Histogram",
    "KsResult",
    "PositionSample",
    "chi_square_gof",
    "filter_positions",
    "fringe_visibility_from_positions",
    "histogram",
    "ks_exponential",
    "sample_positions",
]

NORMALIZATION_TOL = 1e-9
MIN_EXPECTED_PER_BIN = 5.0


class GriddedCdf:
    """Piecewise-linear CDF of a gridded density (trapezoid cell masses).

    Linear interpolation between the cumulative node values makes the CDF
    continuous and strictly tractable in both directions; the implied
    sampling density is piecewise constant over grid cells.
    """

    def __init__(self, density: RealDensity):
        x = density.x
        v = density.values
        cell_mass = 0.5 * (v[1:] + v[:-1]) * np.diff(x)
        cumulative = np.concatenate(([0.0], np.cumsum(cell_mass)))
        self.x = x
        self.cumulative = cumulative
        self.total = float(cumulative[-1])

    def cdf(self, q) -> np.ndarray:
        return np.interp(q, self.x, self.cumulative)

    def ppf(self, u) -> np.ndarray:
        return np.interp(u, self.cumulative, self.x)

    def interval_masses(self, edges: np.ndarray) -> np.ndarray:
        return np.diff(self.cdf(edges))


@dataclass(frozen=True, eq=False)
class PositionSample:
    """Backstop arrival positions plus provenance (illumination and seed)."""

    positions: np.ndarray
    geometry: SlitGeometry
    source_config: "IlluminationConfig | None" = None
    seed: int | None = None

    def __post_init__(self) -> None:
        positions = np.asarray(self.positions, dtype=float)
        positions.flags.writeable = False
        object.__setattr__(self, "positions", positions)
        if positions.size and (
            positions.min() < self.geometry.grid_min or positions.max() > self.geometry.grid_max
        ):
            raise ValueError("positions fall outside the geometry grid")

    def __len__(self) -> int:
        return int(self.positions.size)


@dataclass(frozen=True, eq=False)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    n_total: int

    def __post_init__(self) -> None:
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or edges.size != counts.size + 1:
            raise ValueError("need exactly one more edge than bins")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if int(counts.sum()) != self.n_total:
            raise ValueError("counts must sum to n_total")
        edges.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float


def sample_positions(
    density: RealDensity,
    n: int,
    rng: np.random.Generator,
    source_config: "IlluminationConfig | None" = None,
    seed: int | None = None,
) -> PositionSample:
    """Draw ``n`` independent arrival positions from a unit-total density."""
    if abs(density.total - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"density is not normalized: total = {density.total!r}")
    if n < 1:
        raise ValueError("need at least one sample")
    cdf = GriddedCdf(density)
    u = rng.random(n)
    positions = cdf.ppf(u)
    return PositionSample(positions, density.geometry, source_config, seed)


def filter_positions(sample: PositionSample, lo: float, hi: float) -> PositionSample:
    """Keep only positions inside [lo, hi] (an explicit conditioning step)."""
    mask = (sample.positions >= lo) & (sample.positions <= hi)
    return PositionSample(
        sample.positions[mask], sample.geometry, sample.source_config, sample.seed
    )


def histogram(sample: PositionSample, n_bins: int, range_: tuple[float, float]) -> Histogram:
    """Equal-width histogram; positions outside the range are an error."""
    if n_bins < 1:
        raise ValueError("need at least one bin")
    lo, hi = float(range_[0]), float(range_[1])
    if not lo < hi:
        raise ValueError("histogram range must be an increasing interval")
    positions = sample.positions
    if positions.size and (positions.min() < lo or positions.max() > hi):
        raise ValueError("positions fall outside the histogram range")
    counts, edges = np.histogram(positions, bins=n_bins, range=(lo, hi))
    return Histogram(edges, counts, int(positions.size))


def _merge_edges_inward(observed: np.ndarray, expected: np.ndarray):
    """Pool leading/trailing bins until the outermost expected counts reach 5."""
    obs = list(observed.astype(float))
    exp = list(expected.astype(float))
    while len(exp) > 1 and exp[0] < MIN_EXPECTED_PER_BIN:
        exp[1] += exp[0]
        obs[1] += obs[0]
        del exp[0], obs[0]
    while len(exp) > 1 and exp[-1] < MIN_EXPECTED_PER_BIN:
        exp[-2] += exp[-1]
        obs[-2] += obs[-1]
        del exp[-1], obs[-1]
    return np.array(obs), np.array(exp)


def chi_square_gof(h: Histogram, expected: RealDensity) -> ChiSquareResult:
    """Pearson chi-square of a histogram against a gridded density.

    Expected bin masses are integrated from the density's piecewise-linear
    CDF (the sampler's convention).  The density must be normalized over
    the histogram range; low-expectation bins are pooled inward from the
    edges, and any interior bin still under 5 expected counts is an error
    rather than a silently miscalibrated test.
    """
    cdf = GriddedCdf(expected)
    lo, hi = h.bin_edges[0], h.bin_edges[-1]
    coverage = float(cdf.cdf(hi) - cdf.cdf(lo))
    if abs(coverage - 1.0) > 1e-6:
        raise ValueError(
            f"expected density is not normalized over the histogram range (mass {coverage!r})"
        )
    expected_counts = cdf.interval_masses(h.bin_edges) * h.n_total
    observed, expected_counts = _merge_edges_inward(h.counts, expected_counts)
    if np.any(expected_counts < MIN_EXPECTED_PER_BIN):
        raise ValueError(
            "expected counts below 5 remain away from the edges; "
            "use wider bins, a larger sample, or a narrower window"
        )
    statistic = float(np.sum((observed - expected_counts) ** 2 / expected_counts))
    dof = observed.size - 1
    p_value = float(sps.chi2.sf(statistic, dof))
    return ChiSquareResult(statistic, dof, p_value)


def ks_exponential(durations, rate: float) -> KsResult:
    """One-sample Kolmogorov-Smirnov test against Exponential(rate).

    Uses the asymptotic p-value, adequate for the sample sizes (>= 10,
    in practice hundreds) this suite runs at.
    """
    durations = np.asarray(durations, dtype=float)
    if durations.size < 10:
        raise ValueError("need at least 10 durations")
    if rate <= 0:
        raise ValueError("rate must be positive")
    if np.any(durations <= 0):
        raise ValueError("durations must be positive")
    result = sps.kstest(durations, "expon", args=(0.0, 1.0 / rate), method="asymp")
    return KsResult(float(result.statistic), float(result.pvalue))


def fringe_visibility_from_positions(
    sample: PositionSample, half_periods: int = 3
) -> float:
    """Fringe contrast of sampled arrivals from their first harmonic.

    Restricted to the central window of ±``half_periods`` fringe periods
    (a whole number of periods keeps the harmonic orthogonal to the
    envelope), the modulus of the empirical first Fourier coefficient at
    the fringe frequency, times two, estimates (P_max-P_min)/(P_max+P_min)
    of the underlying pattern.  Unlike histogram extrema it is unbiased
    under Poisson counting noise at these sample sizes.
    """
    if half_periods < 1:
        raise ValueError("need at least one fringe period per side")
    period = sample.geometry.fringe_period
    half = half_periods * period
    positions = sample.positions
    selected = positions[np.abs(positions) <= half]
    if selected.size == 0:
        raise ValueError("no positions inside the central fringe window")
    phases = 2 * np.pi * selected / period
    return float(2 * np.abs(np.mean(np.exp(1j * phases))))
