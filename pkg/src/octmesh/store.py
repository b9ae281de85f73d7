"""Leaf containers: an ordered (Z-order preserving) map and a hash map."""
from __future__ import annotations

from typing import Any, Iterable, Iterator

from sortedcontainers import SortedDict

from .errors import KeyNotFound, UnsupportedBackend

BACKENDS = ("ordered", "hashed")


class OrderedStore:
    """Balanced search tree keyed by Morton bits; iterates in Z-order."""

    backend = "ordered"

    def __init__(self):
        self._map = SortedDict()

    def insert(self, key: int, payload: Any = None) -> None:
        self._map[key] = payload

    def remove(self, key: int) -> Any:
        try:
            return self._map.pop(key)
        except KeyError:
            raise KeyNotFound(key) from None

    def __contains__(self, key: int) -> bool:
        return key in self._map

    def lookup(self, key: int) -> Any:
        try:
            return self._map[key]
        except KeyError:
            raise KeyNotFound(key) from None

    def __len__(self) -> int:
        return len(self._map)

    def __iter__(self) -> Iterator[int]:
        return iter(self._map)

    def items(self) -> Iterable[tuple[int, Any]]:
        return self._map.items()

    def sorted_keys(self) -> list[int]:
        return list(self._map.keys())


class HashedStore:
    """Hash map keyed by Morton bits; no iteration order is promised."""

    backend = "hashed"

    def __init__(self):
        self._map: dict[int, Any] = {}

    def insert(self, key: int, payload: Any = None) -> None:
        self._map[key] = payload

    def remove(self, key: int) -> Any:
        try:
            return self._map.pop(key)
        except KeyError:
            raise KeyNotFound(key) from None

    def __contains__(self, key: int) -> bool:
        return key in self._map

    def lookup(self, key: int) -> Any:
        try:
            return self._map[key]
        except KeyError:
            raise KeyNotFound(key) from None

    def __len__(self) -> int:
        return len(self._map)

    def __iter__(self) -> Iterator[int]:
        return iter(self._map)

    def items(self) -> Iterable[tuple[int, Any]]:
        return self._map.items()

    def sorted_keys(self) -> list[int]:
        return sorted(self._map)


LeafStore = OrderedStore | HashedStore


def make_store(backend: str) -> LeafStore:
    if backend == "ordered":
        return OrderedStore()
    if backend == "hashed":
        return HashedStore()
    raise UnsupportedBackend(f"unknown backend {backend!r}; choose from {BACKENDS}")


def remainder_slots(values: Iterable[int], table_size: int) -> dict[int, list[int]]:
    """Bucket integer keys with the remainder hash ``v % table_size``."""
    slots: dict[int, list[int]] = {}
    for v in values:
        slots.setdefault(v % table_size, []).append(v)
    return slots


def collisions(values: Iterable[int], table_size: int) -> dict[int, list[int]]:
    return {s: vs for s, vs in remainder_slots(values, table_size).items() if len(vs) > 1}


def min_collision_free_size(values: Iterable[int]) -> int:
    """Smallest remainder-hash table that is collision free and keeps integer order."""
    return max(values) + 1
