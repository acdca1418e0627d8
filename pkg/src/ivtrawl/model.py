"""Model and data containers shared by every estimator and forecaster."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["IvtModel", "CountSeries"]


@dataclass(frozen=True)
class IvtModel:
    """A seed, a trawl shape, and the observation grid step."""

    seed: object
    trawl: object
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def mean(self):
        return self.seed.cumulant(1) * self.trawl.leb_full()

    def variance(self):
        return self.seed.cumulant(2) * self.trawl.leb_full()

    def acf(self, lags):
        """Autocorrelation at integer grid lags."""
        lags = np.asarray(lags)
        return self.trawl.acf(lags * self.delta)


@dataclass(frozen=True, eq=False)
class CountSeries:
    """Equidistant integer observations with grid step ``delta``."""

    values: np.ndarray
    delta: float
    start: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("values must be a nonempty 1-d sequence")
        if not np.issubdtype(vals.dtype, np.integer):
            as_int = np.rint(vals).astype(np.int64)
            if np.max(np.abs(vals - as_int)) > 0:
                raise ValueError("values must be integers")
            vals = as_int
        object.__setattr__(self, "values", vals.astype(np.int64))
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def n(self):
        return self.values.size

    @property
    def times(self):
        return self.start + self.delta * np.arange(self.n)
