"""Parametric trawl shapes with closed-form set measures and gradients.

Each trawl is described by a monotone height function ``d`` on (-inf, 0].
The region under the curve is the base set; sliding it along the time
axis and intersecting copies yields the overlap measures that drive both
the autocorrelation of the process and the pairwise likelihood. All four
shapes below admit closed forms for the full measure, the overlap at a
given time separation, and their parameter derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ExpTrawl", "SupExpTrawl", "IGTrawl", "GammaTrawl"]


def _check_lag(h):
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValueError("time separation must be nonnegative")
    return h


def _bisect_increasing(fn, lo, hi, target, iters=80):
    """Vectorized bisection for fn increasing in its argument."""
    lo = np.broadcast_to(np.asarray(lo, dtype=float), np.shape(target)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), np.shape(target)).copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        go_right = fn(mid) < target
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ExpTrawl:
    """Exponential height ``d(s) = exp(rate * s)``."""

    rate: float

    param_names = ("rate",)

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def height(self, s):
        return np.exp(self.rate * np.asarray(s, dtype=float))

    def height_inverse(self, x):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(x, dtype=float)) / self.rate

    def leb_full(self):
        return 1.0 / self.rate

    def leb_intersection(self, h):
        h = _check_lag(h)
        return np.exp(-self.rate * h) / self.rate

    def leb_difference(self, h):
        return self.leb_full() - self.leb_intersection(h)

    def acf(self, h):
        h = _check_lag(h)
        return np.exp(-self.rate * h)

    def leb_full_gradient(self):
        return np.array([-1.0 / self.rate**2])

    def leb_gradients(self, h):
        h = float(_check_lag(h))
        lam = self.rate
        d_inter = np.array([-np.exp(-lam * h) / lam * (1.0 / lam + h)])
        d_diff = self.leb_full_gradient() - d_inter
        return d_inter, d_diff

    def overlap_tail_depth(self, eps):
        return -np.log(eps) / self.rate


@dataclass(frozen=True, eq=False)
class SupExpTrawl:
    """Superposition of exponentials ``d(s) = sum_i w_i exp(rate_i * s)``.

    Weights are free positives and need not sum to one.
    """

    weights: tuple
    rates: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in np.atleast_1d(self.weights))
        r = tuple(float(v) for v in np.atleast_1d(self.rates))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", r)
        if len(w) != len(r) or len(w) == 0:
            raise ValueError("weights and rates must be equally sized and nonempty")
        if any(v <= 0 for v in w) or any(v <= 0 for v in r):
            raise ValueError("weights and rates must be positive")
        if len(set(r)) != len(r):
            raise ValueError("rates must be distinct")

    @property
    def param_names(self):
        q = len(self.weights)
        return tuple(f"w{i + 1}" for i in range(q)) + tuple(f"rate{i + 1}" for i in range(q))

    def _arrays(self):
        return np.asarray(self.weights), np.asarray(self.rates)

    def height(self, s):
        w, r = self._arrays()
        s = np.asarray(s, dtype=float)
        return np.exp(r * s[..., None]) @ w

    def height_inverse(self, x):
        x = np.asarray(x, dtype=float)
        top = float(np.sum(self.weights))
        lo = -1.0
        while np.any(self.height(np.asarray(lo)) > np.min(x)):
            lo *= 2.0
        s = _bisect_increasing(self.height, lo, 0.0, np.minimum(x, top))
        return s

    def leb_full(self):
        w, r = self._arrays()
        return float(np.sum(w / r))

    def leb_intersection(self, h):
        h = _check_lag(h)
        w, r = self._arrays()
        return np.exp(-r * h[..., None]) @ (w / r)

    def leb_difference(self, h):
        return self.leb_full() - self.leb_intersection(h)

    def acf(self, h):
        return self.leb_intersection(h) / self.leb_full()

    def leb_full_gradient(self):
        w, r = self._arrays()
        return np.concatenate([1.0 / r, -w / r**2])

    def leb_gradients(self, h):
        h = float(_check_lag(h))
        w, r = self._arrays()
        e = np.exp(-r * h)
        d_inter = np.concatenate([e / r, -w * e / r * (1.0 / r + h)])
        d_diff = self.leb_full_gradient() - d_inter
        return d_inter, d_diff

    def overlap_tail_depth(self, eps):
        target = eps * self.leb_full()
        hi = 1.0
        while float(self.leb_intersection(np.asarray(hi))) >= target:
            hi *= 2.0
        fn = lambda t: -self.leb_intersection(t)
        return float(_bisect_increasing(fn, 0.0, hi, np.asarray(-target)))


@dataclass(frozen=True)
class IGTrawl:
    """Inverse Gaussian shape.

    ``d(s) = (1 - 2s/gamma^2)^(-1/2) exp(delta*gamma*(1 - sqrt(1 - 2s/gamma^2)))``
    with autocorrelation ``exp(-delta*gamma*(sqrt(1 + 2h/gamma^2) - 1))``.
    """

    delta: float
    gamma: float

    param_names = ("delta", "gamma")

    def __post_init__(self):
        if not (self.delta > 0 and self.gamma > 0):
            raise ValueError("delta and gamma must be positive")

    def height(self, s):
        s = np.asarray(s, dtype=float)
        y = np.sqrt(1.0 - 2.0 * s / self.gamma**2)
        return np.exp(self.delta * self.gamma * (1.0 - y)) / y

    def height_inverse(self, x):
        x = np.asarray(x, dtype=float)
        dg = self.delta * self.gamma

        def neg_log_height(y):
            return np.log(y) + dg * (y - 1.0)

        target = -np.log(np.clip(x, 1e-300, 1.0))
        hi = np.full(np.shape(x), 2.0)
        while np.any(neg_log_height(hi) < target):
            hi = np.where(neg_log_height(hi) < target, hi * 2.0, hi)
        y = _bisect_increasing(neg_log_height, 1.0, hi, target)
        return self.gamma**2 * (1.0 - y * y) / 2.0

    def _alpha(self, h):
        return np.sqrt(1.0 + 2.0 * h / self.gamma**2)

    def leb_full(self):
        return self.gamma / self.delta

    def leb_intersection(self, h):
        h = _check_lag(h)
        a = self._alpha(h)
        return (self.gamma / self.delta) * np.exp(self.delta * self.gamma * (1.0 - a))

    def leb_difference(self, h):
        return self.leb_full() - self.leb_intersection(h)

    def acf(self, h):
        h = _check_lag(h)
        return np.exp(-self.delta * self.gamma * (self._alpha(h) - 1.0))

    def leb_full_gradient(self):
        return np.array([-self.gamma / self.delta**2, 1.0 / self.delta])

    def leb_gradients(self, h):
        h = float(_check_lag(h))
        delta, gamma = self.delta, self.gamma
        a = float(self._alpha(h))
        inter = float(self.leb_intersection(h))
        d_delta = inter * (gamma * (1.0 - a) - 1.0 / delta)
        d_gamma = inter * (1.0 / gamma + delta * (1.0 - a) + 2.0 * delta * h / (gamma**2 * a))
        d_inter = np.array([d_delta, d_gamma])
        d_diff = self.leb_full_gradient() - d_inter
        return d_inter, d_diff

    def overlap_tail_depth(self, eps):
        # exp(delta*gamma*(1 - alpha)) = eps  =>  alpha = 1 - log(eps)/(delta*gamma)
        a = 1.0 - np.log(eps) / (self.delta * self.gamma)
        return self.gamma**2 * (a * a - 1.0) / 2.0


@dataclass(frozen=True)
class GammaTrawl:
    """Polynomially decaying shape ``d(s) = (1 - s/scale)^(-(shape+1))``.

    The autocorrelation is ``(1 + h/scale)^(-shape)``; values of ``shape``
    at or below one give a non-integrable tail (long memory) while the
    full set measure ``scale/shape`` stays finite.
    """

    shape: float
    scale: float

    param_names = ("shape", "scale")

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("shape and scale must be positive")

    def height(self, s):
        s = np.asarray(s, dtype=float)
        return (1.0 - s / self.scale) ** (-(self.shape + 1.0))

    def height_inverse(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 1e-300)
        return self.scale * (1.0 - x ** (-1.0 / (self.shape + 1.0)))

    def leb_full(self):
        return self.scale / self.shape

    def leb_intersection(self, h):
        h = _check_lag(h)
        return (self.scale / self.shape) * (1.0 + h / self.scale) ** (-self.shape)

    def leb_difference(self, h):
        return self.leb_full() - self.leb_intersection(h)

    def acf(self, h):
        h = _check_lag(h)
        return (1.0 + h / self.scale) ** (-self.shape)

    def leb_full_gradient(self):
        return np.array([-self.scale / self.shape**2, 1.0 / self.shape])

    def leb_gradients(self, h):
        h = float(_check_lag(h))
        shape, scale = self.shape, self.scale
        base = 1.0 + h / scale
        inter = float(self.leb_intersection(h))
        d_shape = -inter * (1.0 / shape + np.log(base))
        d_scale = base ** (-(shape + 1.0)) * (base / shape + h / scale)
        d_inter = np.array([d_shape, d_scale])
        d_diff = self.leb_full_gradient() - d_inter
        return d_inter, d_diff

    def overlap_tail_depth(self, eps):
        return self.scale * (eps ** (-1.0 / self.shape) - 1.0)
