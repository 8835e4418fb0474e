"""Jump kernels and model configuration.

The model has two species on the integer lattice: a cloud of background
"red" particles (independent rate-1 simple random walks, product-Poisson
initial counts) and one tracked "green" walker (rate-1 jumps).  At each
jump the green walker uses the occupied kernel if its decision site holds
at least one red particle and the vacant kernel otherwise.

Kernels are finite-support probability distributions on Z^d.  The classic
one-dimensional nearest-neighbour pair (occupied kernel drifting right with
probability p, vacant kernel its mirror) is provided by
:func:`solomon_kernels`; frozen-environment runs with that pair reproduce
the Solomon random-walk-in-random-environment phase diagram, whose critical
densities are :func:`solomon_critical_densities`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

PROB_TOL = 1e-12

DYNAMIC = "dynamic"
FROZEN = "frozen"


class ConfigError(ValueError):
    """Invalid model or experiment configuration."""


@dataclass(frozen=True, eq=False)
class Kernel:
    """Finite-support jump distribution p(0, .) on Z^d.

    offsets: (K, d) int64 array of distinct displacement vectors.
    probs:   (K,) float64 array, nonnegative, summing to 1 within PROB_TOL.
    """

    offsets: np.ndarray
    probs: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return (np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash((self.offsets.tobytes(), self.probs.tobytes(),
                     self.offsets.shape))

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.int64)
        if offsets.ndim == 1:
            offsets = offsets[:, None]
        probs = np.asarray(self.probs, dtype=np.float64)
        if offsets.ndim != 2 or probs.ndim != 1 or offsets.shape[0] != probs.shape[0]:
            raise ConfigError("kernel offsets/probs shape mismatch")
        if offsets.shape[0] == 0:
            raise ConfigError("kernel support is empty")
        if np.any(probs < 0):
            raise ConfigError("kernel has a negative probability")
        s = float(probs.sum())
        if abs(s - 1.0) > PROB_TOL:
            raise ConfigError(f"kernel probabilities sum to {s!r}, not 1")
        seen = {tuple(row) for row in offsets.tolist()}
        if len(seen) != offsets.shape[0]:
            raise ConfigError("kernel support has duplicate offsets")
        offsets.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "probs", probs)

    @property
    def d(self) -> int:
        return self.offsets.shape[1]

    @property
    def max_range(self) -> int:
        return int(np.abs(self.offsets).max())

    def mean(self) -> np.ndarray:
        return kernel_mean(self)

    def to_dict(self) -> dict:
        return {"offsets": self.offsets.tolist(), "probs": self.probs.tolist()}

    @staticmethod
    def from_dict(obj: dict) -> "Kernel":
        return Kernel(np.asarray(obj["offsets"]), np.asarray(obj["probs"]))


def kernel_mean(kernel: Kernel) -> np.ndarray:
    """Mean displacement (drift) of a kernel, a length-d float vector."""
    return kernel.probs @ kernel.offsets.astype(np.float64)


def solomon_kernels(p: float) -> tuple[Kernel, Kernel]:
    """Mirrored nearest-neighbour pair on Z for p in (1/2, 1).

    The occupied kernel jumps +1 with probability p, -1 with 1-p; the
    vacant kernel is the mirror image.  Drifts are +(2p-1) and -(2p-1).
    """
    if not (0.5 < p < 1.0):
        raise ConfigError(f"p must lie in (1/2, 1), got {p!r}")
    occ = Kernel(np.array([[1], [-1]]), np.array([p, 1.0 - p]))
    vac = Kernel(np.array([[1], [-1]]), np.array([1.0 - p, p]))
    return occ, vac


def solomon_critical_densities(p: float) -> tuple[float, float]:
    """Critical Poisson densities of the frozen-environment phase diagram.

    For the mirrored pair with parameter p, the static walk has zero speed
    exactly for densities in [log(1/p), log(1/(1-p))]; below the interval
    the speed is negative, above it positive.
    """
    if not (0.5 < p < 1.0):
        raise ConfigError(f"p must lie in (1/2, 1), got {p!r}")
    return math.log(1.0 / p), math.log(1.0 / (1.0 - p))


def build_alias(kernel: Kernel) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table for O(1) sampling of a kernel's support index.

    Returns (accept, alias): accept[i] is the probability, given slot i was
    drawn uniformly, of keeping outcome i; otherwise outcome alias[i] is
    returned.  Reconstruction identity, tested exactly:
    probs[j] == sum_i (accept[i]*[i==j] + (1-accept[i])*[alias[i]==j]) / K.
    """
    probs = kernel.probs
    k = probs.shape[0]
    accept = np.zeros(k, dtype=np.float64)
    alias = np.zeros(k, dtype=np.int64)
    scaled = probs * k
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    scaled = scaled.copy()
    while small and large:
        s = small.pop()
        l = large.pop()
        accept[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        (small if scaled[l] < 1.0 else large).append(l)
    for rest in (large, small):
        while rest:
            i = rest.pop()
            accept[i] = 1.0
            alias[i] = i
    return accept, alias


@dataclass(frozen=True)
class ModelConfig:
    """Full model specification for one run.

    mode is "dynamic" (red particles move) or "frozen" (red particles are
    sampled at time 0 and never move; time still advances).
    """

    d: int
    occupied: Kernel
    vacant: Kernel
    mu: float
    mode: str = DYNAMIC
    decide_at_destination: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.d}")
        if self.occupied.d != self.d or self.vacant.d != self.d:
            raise ConfigError("kernel dimension does not match model dimension")
        if not (self.mu >= 0.0) or not math.isfinite(self.mu):
            raise ConfigError(f"density mu must be finite and >= 0, got {self.mu!r}")
        if self.mode not in (DYNAMIC, FROZEN):
            raise ConfigError(f"mode must be 'dynamic' or 'frozen', got {self.mode!r}")

    @property
    def drift_occupied(self) -> np.ndarray:
        return kernel_mean(self.occupied)

    @property
    def drift_vacant(self) -> np.ndarray:
        return kernel_mean(self.vacant)

    @property
    def max_jump_range(self) -> int:
        return max(self.occupied.max_range, self.vacant.max_range)

    @staticmethod
    def solomon(p: float, mu: float, mode: str = DYNAMIC, **kw) -> "ModelConfig":
        occ, vac = solomon_kernels(p)
        return ModelConfig(d=1, occupied=occ, vacant=vac, mu=mu, mode=mode, **kw)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "occupied": self.occupied.to_dict(),
            "vacant": self.vacant.to_dict(),
            "mu": self.mu,
            "mode": self.mode,
            "decide_at_destination": self.decide_at_destination,
        }

    @staticmethod
    def from_dict(obj: dict) -> "ModelConfig":
        try:
            if "p" in obj and "occupied" not in obj:
                cfg = ModelConfig.solomon(
                    float(obj["p"]),
                    float(obj["mu"]),
                    obj.get("mode", DYNAMIC),
                    decide_at_destination=bool(obj.get("decide_at_destination", False)),
                )
                if int(obj.get("d", 1)) != 1:
                    raise ConfigError("the p shorthand implies d=1")
                return cfg
            return ModelConfig(
                d=int(obj["d"]),
                occupied=Kernel.from_dict(obj["occupied"]),
                vacant=Kernel.from_dict(obj["vacant"]),
                mu=float(obj["mu"]),
                mode=obj.get("mode", DYNAMIC),
                decide_at_destination=bool(obj.get("decide_at_destination", False)),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key: {exc.args[0]}") from exc


def load_config(path: str | Path) -> dict:
    """Read a JSON config file, reporting offending keys on failure."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(obj, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return obj
