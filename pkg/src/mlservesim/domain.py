"""Core value types shared across the package.

All durations are real-valued milliseconds. Every type validates itself at
construction and is immutable afterwards.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

MASK64 = (1 << 64) - 1


class ModelError(ValueError):
    """Base class for invalid-domain errors."""


class NegativeParameter(ModelError):
    pass


class NonPositiveSigmaOrdering(ModelError):
    """The centralized deployment must be noisier than the local one."""


class DimensionMismatch(ModelError):
    pass


class UnknownUser(KeyError):
    pass


class Architecture(str, enum.Enum):
    MONOLITH = "monolith"
    MICROSERVICE = "microservice"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LatencyModelParams:
    """Parameters of the two latency models.

    ``t_comp`` is the fixed compute time, ``alpha`` the per-user
    network/contention cost of the centralized store, ``t_local`` the
    local-access cost of a co-located store and ``sigma_mono`` /
    ``sigma_micro`` the standard deviations of the additive Gaussian noise.

    Both sigmas may be zero together (the noiseless model); otherwise
    ``sigma_mono > sigma_micro >= 0`` is required.
    """

    t_comp: float = 5.0
    alpha: float = 0.02
    t_local: float = 2.0
    sigma_mono: float = 3.0
    sigma_micro: float = 1.0

    def __post_init__(self) -> None:
        for name in ("t_comp", "alpha", "t_local", "sigma_mono", "sigma_micro"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise NegativeParameter(f"{name} must be finite, got {value!r}")
            if value < 0:
                raise NegativeParameter(f"{name} must be >= 0, got {value!r}")
        if self.is_noiseless:
            return
        if not self.sigma_mono > self.sigma_micro:
            raise NonPositiveSigmaOrdering(
                f"sigma_mono ({self.sigma_mono}) must exceed sigma_micro ({self.sigma_micro})"
            )

    @property
    def is_noiseless(self) -> bool:
        return self.sigma_mono == 0 and self.sigma_micro == 0

    def noiseless(self) -> LatencyModelParams:
        return LatencyModelParams(self.t_comp, self.alpha, self.t_local, 0.0, 0.0)

    def noise_for(self, arch: Architecture) -> NoiseSpec:
        sigma = self.sigma_mono if arch is Architecture.MONOLITH else self.sigma_micro
        return NoiseSpec(sigma)


def validate_params(p: LatencyModelParams) -> LatencyModelParams:
    """Re-check ``p`` and return it unchanged.

    Construction already validates, so this only matters for instances built
    by bypassing ``__init__`` (``object.__new__``, unpickling old data).
    """
    LatencyModelParams.__post_init__(p)
    return p


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian noise with standard deviation ``sigma``."""

    sigma: float = 0.0

    def __post_init__(self) -> None:
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise NegativeParameter(f"sigma must be finite and >= 0, got {self.sigma!r}")


@dataclass(frozen=True)
class UserCount:
    n: int

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, int):
            raise TypeError(f"user count must be an int, got {type(self.n).__name__}")
        if self.n < 1:
            raise ModelError(f"user count must be >= 1, got {self.n}")

    def __int__(self) -> int:
        return self.n


def as_user_count(n: int | UserCount) -> int:
    return UserCount(n).n if not isinstance(n, UserCount) else n.n


def _as_vector(components: Iterable[float]) -> tuple[float, ...]:
    vec = tuple(float(c) for c in components)
    if not vec:
        raise DimensionMismatch("vectors need dimension >= 1")
    if not all(math.isfinite(c) for c in vec):
        raise ModelError("vector components must be finite")
    return vec


@dataclass(frozen=True)
class PreferenceVector:
    user_id: int
    components: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", _as_vector(self.components))

    @property
    def dim(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class ItemVector:
    components: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", _as_vector(self.components))

    @property
    def dim(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class LatencySample:
    """One simulated response time; negative noise tails are clamped to 0."""

    architecture: Architecture
    n: int
    trial: int
    latency: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        as_user_count(self.n)
        if not math.isfinite(self.latency):
            raise ModelError(f"latency must be finite, got {self.latency!r}")
        if self.latency < 0:
            object.__setattr__(self, "latency", 0.0)


# -- random streams ---------------------------------------------------------

_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """The splitmix64 finalizer applied to ``x + golden gamma``."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _key_to_int(key: int | str | enum.Enum) -> int:
    if isinstance(key, enum.Enum):
        key = key.value
    if isinstance(key, str):
        return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")
    if isinstance(key, bool) or not isinstance(key, int):
        raise TypeError(f"stream keys must be int, str or enum, got {key!r}")
    return key & MASK64


def key_hash(*keys: int | str | enum.Enum) -> int:
    h = 0
    for key in keys:
        h = splitmix64(h ^ _key_to_int(key))
    return h


def derive_seed(seed: int, *keys: int | str | enum.Enum) -> int:
    """Seed of the substream addressed by ``keys`` under a master ``seed``.

    Independent of how many other substreams exist or the order they are
    drawn in.
    """
    return splitmix64((seed & MASK64) ^ key_hash(*keys))


class RngStream:
    """splitmix64 generator: a 64-bit counter advanced by the golden gamma."""

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int) -> None:
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit int, got {seed!r}")
        self.seed = seed
        self._state = seed

    @classmethod
    def substream(cls, seed: int, *keys: int | str | enum.Enum) -> RngStream:
        return cls(derive_seed(seed, *keys))

    def next_u64(self) -> int:
        out = splitmix64(self._state)
        self._state = (self._state + _GOLDEN) & MASK64
        return out

    def uniform(self) -> float:
        """Uniform on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_open_low(self) -> float:
        """Uniform on (0, 1]; safe to take the log of."""
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def getstate(self) -> int:
        return self._state

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed:#x}, state={self._state:#x})"


def check_unique_dims(vectors: Mapping[int, PreferenceVector]) -> int:
    dims = {v.dim for v in vectors.values()}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed vector dimensions {sorted(dims)}")
    return dims.pop() if dims else 0
