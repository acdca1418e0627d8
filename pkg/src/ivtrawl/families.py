"""Model families: named seed/trawl pairings with a flat parameter vector.

A family fixes the order in which seed and trawl parameters are packed
into one vector (seed first, then trawl, each in declaration order) and
the bijection onto unconstrained coordinates used by the optimizers:
positive parameters move to log scale, unit-interval parameters to logit
scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import IvtModel
from .seeds import NegBinSeed, PoissonSeed, SkellamSeed
from .trawls import ExpTrawl, GammaTrawl, IGTrawl, SupExpTrawl

__all__ = ["ParamTransform", "ModelFamily", "family", "family_of", "CORE_FAMILIES"]

SEED_TAGS = ("poisson", "nb", "skellam")
TRAWL_TAGS = ("exp", "supexp", "ig", "gamma")

# The six families used throughout the reference experiments.
CORE_FAMILIES = (
    "poisson-exp",
    "poisson-ig",
    "poisson-gamma",
    "nb-exp",
    "nb-ig",
    "nb-gamma",
)


@dataclass(frozen=True)
class ParamTransform:
    """Componentwise bijection between natural and unconstrained scale."""

    kinds: tuple

    def to_internal(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.empty_like(theta)
        for i, kind in enumerate(self.kinds):
            if kind == "log":
                out[i] = np.log(theta[i])
            elif kind == "logit":
                out[i] = np.log(theta[i]) - np.log1p(-theta[i])
            else:
                raise ValueError(f"unknown transform kind {kind!r}")
        return out

    def to_natural(self, z):
        z = np.asarray(z, dtype=float)
        out = np.empty_like(z)
        with np.errstate(over="ignore"):
            for i, kind in enumerate(self.kinds):
                if kind == "log":
                    out[i] = np.exp(z[i])
                else:
                    out[i] = 1.0 / (1.0 + np.exp(-z[i]))
        return out

    def jacobian(self, theta):
        """Diagonal of d(natural)/d(internal) at natural value ``theta``."""
        theta = np.asarray(theta, dtype=float)
        out = np.empty_like(theta)
        for i, kind in enumerate(self.kinds):
            out[i] = theta[i] if kind == "log" else theta[i] * (1.0 - theta[i])
        return out


_SEEDS = {
    "poisson": (PoissonSeed, ("intensity",), ("log",)),
    "nb": (NegBinSeed, ("m", "p"), ("log", "logit")),
    "skellam": (SkellamSeed, ("up_rate", "down_rate"), ("log", "log")),
}

_TRAWLS = {
    "exp": (ExpTrawl, ("rate",), ("log",)),
    "ig": (IGTrawl, ("delta", "gamma"), ("log", "log")),
    "gamma": (GammaTrawl, ("shape", "scale"), ("log", "log")),
}


@dataclass(frozen=True)
class ModelFamily:
    name: str
    seed_tag: str
    trawl_tag: str
    seed_names: tuple
    trawl_names: tuple
    kinds: tuple
    supexp_terms: int = 0

    @property
    def param_names(self):
        return self.seed_names + self.trawl_names

    @property
    def dim(self):
        return len(self.param_names)

    @property
    def dim_seed(self):
        return len(self.seed_names)

    @property
    def dim_trawl(self):
        return len(self.trawl_names)

    @property
    def transform(self):
        return ParamTransform(self.kinds)

    @property
    def default_lags(self):
        """Number of pairwise lags used by default when estimating."""
        return 1 if self.trawl_tag == "exp" else 10

    def build_seed(self, theta_seed):
        cls = _SEEDS[self.seed_tag][0]
        return cls(*[float(v) for v in theta_seed])

    def build_trawl(self, theta_trawl):
        if self.trawl_tag == "supexp":
            q = self.supexp_terms
            return SupExpTrawl(tuple(theta_trawl[:q]), tuple(theta_trawl[q:]))
        cls = _TRAWLS[self.trawl_tag][0]
        return cls(*[float(v) for v in theta_trawl])

    def build(self, theta, delta):
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.dim:
            raise ValueError(f"{self.name} expects {self.dim} parameters, got {theta.size}")
        seed = self.build_seed(theta[: self.dim_seed])
        trawl = self.build_trawl(theta[self.dim_seed :])
        return IvtModel(seed, trawl, delta)

    def theta_of(self, model):
        seed, trawl = model.seed, model.trawl
        vals = [getattr(seed, name) for name in self.seed_names]
        if self.trawl_tag == "supexp":
            vals += list(trawl.weights) + list(trawl.rates)
        else:
            vals += [getattr(trawl, name) for name in self.trawl_names]
        return np.asarray(vals, dtype=float)


def family(tag, supexp_terms=2):
    """Look up a family by its ``<seed>-<trawl>`` tag."""
    if isinstance(tag, ModelFamily):
        return tag
    parts = tag.split("-")
    if len(parts) != 2 or parts[0] not in SEED_TAGS or parts[1] not in TRAWL_TAGS:
        raise ValueError(
            f"unknown family {tag!r}; expected <poisson|nb|skellam>-<exp|supexp|ig|gamma>"
        )
    seed_tag, trawl_tag = parts
    _, seed_names, seed_kinds = _SEEDS[seed_tag]
    if trawl_tag == "supexp":
        q = int(supexp_terms)
        if q < 1:
            raise ValueError("supexp needs at least one component")
        trawl_names = tuple(f"w{i + 1}" for i in range(q)) + tuple(
            f"rate{i + 1}" for i in range(q)
        )
        trawl_kinds = ("log",) * (2 * q)
    else:
        q = 0
        _, trawl_names, trawl_kinds = _TRAWLS[trawl_tag]
    return ModelFamily(
        name=tag,
        seed_tag=seed_tag,
        trawl_tag=trawl_tag,
        seed_names=tuple(seed_names),
        trawl_names=tuple(trawl_names),
        kinds=tuple(seed_kinds) + tuple(trawl_kinds),
        supexp_terms=q,
    )


_SEED_CLS_TO_TAG = {PoissonSeed: "poisson", NegBinSeed: "nb", SkellamSeed: "skellam"}
_TRAWL_CLS_TO_TAG = {ExpTrawl: "exp", SupExpTrawl: "supexp", IGTrawl: "ig", GammaTrawl: "gamma"}


def family_of(model):
    """Recover the family of an assembled model."""
    seed_tag = _SEED_CLS_TO_TAG[type(model.seed)]
    trawl_tag = _TRAWL_CLS_TO_TAG[type(model.trawl)]
    terms = len(model.trawl.weights) if trawl_tag == "supexp" else 0
    return family(f"{seed_tag}-{trawl_tag}", supexp_terms=max(terms, 1) if terms else 2)
