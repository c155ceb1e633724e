"""Model registry with rollback, and an in-memory FIFO event bus."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping

from .domain import DimensionMismatch, ItemVector, ModelError, PreferenceVector
from .recsys import PreferenceStore

PREFERENCE_TOPIC = "preferences"
MODEL_TOPIC = "models"


class UnknownVersion(ModelError):
    pass


def _frozen(mapping: Mapping[str, Any] | None) -> Mapping[str, Any]:
    return MappingProxyType(dict(mapping or {}))


@dataclass(frozen=True)
class ModelVersion:
    version_id: int
    metadata: Mapping[str, Any]
    training_config: Mapping[str, Any]
    performance_score: float
    created_at: float = 0.0


class Registry:
    """Append-only catalogue of model versions with one active version.

    Single writer; readers get the immutable ``ModelVersion`` objects.
    """

    def __init__(self) -> None:
        self._versions: list[ModelVersion] = []
        self._active: int | None = None

    @property
    def versions(self) -> tuple[ModelVersion, ...]:
        return tuple(self._versions)

    @property
    def version_ids(self) -> list[int]:
        return [v.version_id for v in self._versions]

    @property
    def active(self) -> int | None:
        return self._active

    def active_version(self) -> ModelVersion | None:
        return None if self._active is None else self.get(self._active)

    def get(self, version_id: int) -> ModelVersion:
        # ids are 1..k with no gaps
        if isinstance(version_id, int) and 1 <= version_id <= len(self._versions):
            return self._versions[version_id - 1]
        raise UnknownVersion(version_id)

    def register(self, metadata=None, training_config=None, performance_score: float = 0.0, created_at: float = 0.0) -> int:
        version = ModelVersion(
            version_id=len(self._versions) + 1,
            metadata=_frozen(metadata),
            training_config=_frozen(training_config),
            performance_score=float(performance_score),
            created_at=created_at,
        )
        self._versions.append(version)
        self._active = version.version_id
        return version.version_id

    def rollback(self, target: int) -> None:
        self.get(target)
        self._active = target


def register_model(reg: Registry, meta=None, config=None, score: float = 0.0) -> int:
    return reg.register(meta, config, score)


def rollback(reg: Registry, target: int) -> None:
    reg.rollback(target)


class EventKind(str, enum.Enum):
    PREFERENCE_UPDATE = "preference_update"
    MODEL_PUBLISHED = "model_published"


@dataclass(frozen=True)
class ControlEvent:
    kind: EventKind
    publish_time: float = 0.0
    user_id: int | None = None
    vector: tuple[float, ...] | None = None
    version_id: int | None = None

    @classmethod
    def preference_update(cls, user_id: int, vector, publish_time: float = 0.0) -> ControlEvent:
        return cls(EventKind.PREFERENCE_UPDATE, publish_time, user_id=user_id, vector=tuple(float(x) for x in vector))

    @classmethod
    def model_published(cls, version_id: int, publish_time: float = 0.0) -> ControlEvent:
        return cls(EventKind.MODEL_PUBLISHED, publish_time, version_id=version_id)


Handler = Callable[[Any], None]


@dataclass
class EventBus:
    """Per-topic FIFO queues. Delivery happens only inside ``drain``."""

    topics: dict[str, deque] = field(default_factory=dict)
    subscribers: dict[str, list[Handler]] = field(default_factory=dict)

    def subscribe(self, topic: str, handler: Handler) -> None:
        self.subscribers.setdefault(topic, []).append(handler)

    def publish(self, topic: str, event: Any) -> None:
        self.topics.setdefault(topic, deque()).append(event)

    def pending(self, topic: str) -> int:
        return len(self.topics.get(topic, ()))

    def drain(self, topic: str, handler: Handler | None = None) -> int:
        """Deliver the events queued on ``topic`` at call time, in publish order.

        With no ``handler`` every subscriber receives every event. Events
        published while draining wait for the next drain.
        """
        queue = self.topics.get(topic)
        if not queue:
            return 0
        batch = list(queue)
        queue.clear()
        handlers = [handler] if handler is not None else list(self.subscribers.get(topic, ()))
        for event in batch:
            for h in handlers:
                h(event)
        return len(batch)


def publish(bus: EventBus, topic: str, event: Any) -> None:
    bus.publish(topic, event)


def drain(bus: EventBus, topic: str, handler: Handler | None = None) -> int:
    return bus.drain(topic, handler)


def apply_preference_update(store: PreferenceStore, ev: ControlEvent) -> PreferenceStore:
    if ev.kind is not EventKind.PREFERENCE_UPDATE:
        raise ModelError(f"not a preference update: {ev.kind}")
    if len(ev.vector) != store.dim:
        raise DimensionMismatch(f"store dim {store.dim}, update dim {len(ev.vector)}")
    return store.replace(PreferenceVector(ev.user_id, ev.vector))


class NearlineProcessor:
    """Holds the current preference-store version and swaps it on updates."""

    def __init__(self, store: PreferenceStore):
        self.store = store
        self.applied = 0

    def __call__(self, ev: ControlEvent) -> None:
        self.store = apply_preference_update(self.store, ev)
        self.applied += 1

    def score(self, user_id: int, v: ItemVector) -> float:
        return self.store.score(user_id, v)
