"""Inner-product scoring over centralized or sharded preference stores."""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterator, Mapping, Sequence

from .domain import (
    DimensionMismatch,
    ItemVector,
    ModelError,
    PreferenceVector,
    RngStream,
    UnknownUser,
    as_user_count,
    check_unique_dims,
)

DEFAULT_DIM = 16


class KTooLarge(ModelError):
    pass


def score(u: PreferenceVector | ItemVector, v: PreferenceVector | ItemVector) -> float:
    a, b = u.components, v.components
    if len(a) != len(b):
        raise DimensionMismatch(f"dimension {len(a)} vs {len(b)}")
    s = 0.0
    for x, y in zip(a, b):
        s += x * y
    if not math.isfinite(s):
        raise ModelError("score overflowed")
    return s


class PreferenceStore(Mapping[int, PreferenceVector]):
    """Immutable user_id -> vector map with a single shared dimension."""

    def __init__(self, vectors: Mapping[int, PreferenceVector] | Sequence[PreferenceVector], dim: int | None = None):
        if not isinstance(vectors, Mapping):
            by_id: dict[int, PreferenceVector] = {}
            for vec in vectors:
                if vec.user_id in by_id:
                    raise ModelError(f"duplicate user_id {vec.user_id}")
                by_id[vec.user_id] = vec
            vectors = by_id
        for uid, vec in vectors.items():
            if uid != vec.user_id:
                raise ModelError(f"key {uid} holds vector of user {vec.user_id}")
        found = check_unique_dims(vectors)
        if dim is None:
            if not found:
                raise DimensionMismatch("an empty store needs an explicit dim")
            dim = found
        elif found and found != dim:
            raise DimensionMismatch(f"store dim {dim} but vectors have dim {found}")
        self._vectors = MappingProxyType(dict(sorted(vectors.items())))
        self.dim = dim

    @classmethod
    def from_rows(cls, rows: Mapping[int, Sequence[float]]) -> PreferenceStore:
        return cls({uid: PreferenceVector(uid, tuple(r)) for uid, r in rows.items()})

    def __getitem__(self, user_id: int) -> PreferenceVector:
        try:
            return self._vectors[user_id]
        except KeyError:
            raise UnknownUser(user_id) from None

    def __iter__(self) -> Iterator[int]:
        return iter(self._vectors)

    def __len__(self) -> int:
        return len(self._vectors)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PreferenceStore):
            return NotImplemented
        return self.dim == other.dim and dict(self._vectors) == dict(other._vectors)

    def __hash__(self) -> int:
        return hash((self.dim, tuple(self._vectors.items())))

    def __repr__(self) -> str:
        return f"PreferenceStore(users={len(self)}, dim={self.dim})"

    def replace(self, vec: PreferenceVector) -> PreferenceStore:
        """Copy of the store with one user's vector swapped out."""
        if vec.user_id not in self._vectors:
            raise UnknownUser(vec.user_id)
        if vec.dim != self.dim:
            raise DimensionMismatch(f"store dim {self.dim}, update dim {vec.dim}")
        updated = dict(self._vectors)
        updated[vec.user_id] = vec
        return PreferenceStore(updated, self.dim)

    def score(self, user_id: int, v: ItemVector) -> float:
        return score(self[user_id], v)


@dataclass(frozen=True)
class ShardMap:
    num_shards: int
    assignment: Mapping[int, int]

    def __post_init__(self) -> None:
        if self.num_shards < 1:
            raise ModelError(f"num_shards must be >= 1, got {self.num_shards}")
        bad = {u: s for u, s in self.assignment.items() if not 0 <= s < self.num_shards}
        if bad:
            raise ModelError(f"shard ids out of range: {bad}")
        object.__setattr__(self, "assignment", MappingProxyType(dict(self.assignment)))

    def shard_of(self, user_id: int) -> int:
        try:
            return self.assignment[user_id]
        except KeyError:
            raise UnknownUser(user_id) from None

    def sizes(self) -> list[int]:
        counts = [0] * self.num_shards
        for s in self.assignment.values():
            counts[s] += 1
        return counts


def assign_shards(n: int, num_shards: int) -> ShardMap:
    n = as_user_count(n)
    if num_shards < 1:
        raise ModelError(f"num_shards must be >= 1, got {num_shards}")
    return ShardMap(num_shards, {i: i % num_shards for i in range(n)})


class ShardedStore:
    """A preference store partitioned into per-shard local stores."""

    def __init__(self, store: PreferenceStore, shard_map: ShardMap):
        parts: list[dict[int, PreferenceVector]] = [{} for _ in range(shard_map.num_shards)]
        for uid, vec in store.items():
            parts[shard_map.shard_of(uid)][uid] = vec
        self.shard_map = shard_map
        self.dim = store.dim
        self.shards = tuple(PreferenceStore(p, store.dim) for p in parts)

    def local_store(self, user_id: int) -> PreferenceStore:
        return self.shards[self.shard_map.shard_of(user_id)]

    def score(self, user_id: int, v: ItemVector) -> float:
        return self.local_store(user_id).score(user_id, v)


RankedList = list[tuple[int, float]]


def top_k(store: PreferenceStore, v: ItemVector, k: int) -> RankedList:
    """The ``k`` best users for item ``v``; ties go to the lower user_id."""
    if v.dim != store.dim:
        raise DimensionMismatch(f"store dim {store.dim}, item dim {v.dim}")
    if not 1 <= k <= len(store):
        raise KTooLarge(f"k={k} outside [1, {len(store)}]")
    scored = [(uid, score(vec, v)) for uid, vec in store.items()]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def generate_store(n: int, d: int = DEFAULT_DIM, rng: RngStream | None = None, seed: int = 0) -> PreferenceStore:
    """``n`` users (ids 0..n-1) with components uniform on [-1, 1)."""
    n = as_user_count(n)
    if d < 1:
        raise DimensionMismatch(f"d must be >= 1, got {d}")
    rng = rng if rng is not None else RngStream(seed)
    return PreferenceStore(
        {uid: PreferenceVector(uid, tuple(2.0 * rng.uniform() - 1.0 for _ in range(d))) for uid in range(n)},
        d,
    )


def generate_item(d: int, rng: RngStream) -> ItemVector:
    return ItemVector(tuple(2.0 * rng.uniform() - 1.0 for _ in range(d)))
