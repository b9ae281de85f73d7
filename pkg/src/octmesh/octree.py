"""Linear octree over a leaf store, with neighbour resolution across levels.

Only the padded Morton bits of each leaf are stored.  Levels are recovered on
demand with :meth:`Octree.infer_level`, which probes the store for sibling
keys instead of keeping a level field per leaf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Sequence

from . import morton as mk
from .errors import (
    ChildrenNotLeaves,
    InconsistentPartition,
    KeyNotFound,
    LevelOutOfRange,
    NotALeaf,
    UnbalancedTree,
    UnsupportedBackend,
    WouldViolateBalance,
)
from .morton import DomainBox, FaceDirection, MeshConfig
from .store import LeafStore, make_store

SplitFn = Callable[[Any, int], Sequence[Any]]
MergeFn = Callable[[Sequence[Any]], Any]


@dataclass(frozen=True)
class Boundary:
    pass


@dataclass(frozen=True)
class Same:
    key: int
    level: int


@dataclass(frozen=True)
class Coarser:
    key: int
    level: int


@dataclass(frozen=True)
class Finer:
    keys: tuple[int, ...]
    level: int


NeighborResult = Boundary | Same | Coarser | Finer
BOUNDARY = Boundary()


def _default_split(payload: Any, n: int) -> list[Any]:
    return [payload] * n


def _default_merge(payloads: Sequence[Any]) -> Any:
    return payloads[0]


class Octree:
    def __init__(
        self, config: MeshConfig, domain: DomainBox, backend: str = "ordered", payload: Any = None
    ):
        if domain.dim != config.dim:
            raise ValueError(f"domain is {domain.dim}D but config is {config.dim}D")
        self.config = config
        self.domain = domain
        self.store: LeafStore = make_store(backend)
        for key in mk.child_keys(config, 0, 0):
            self.store.insert(key, payload)

    @property
    def backend(self) -> str:
        return self.store.backend

    def __len__(self) -> int:
        return len(self.store)

    def __contains__(self, key: int) -> bool:
        return key in self.store

    def infer_level(self, key: int) -> int:
        """Exact level of the stored leaf whose padded bits are ``key``.

        Probe each level finer than the last nonzero group, from the finest
        down: flipping the axis-0 bit at level L yields a stored key exactly
        when the leaf sits at level L (the probe is then the padded key of the
        sibling region's zero-corner leaf).  Probes below the true level fall
        strictly inside the leaf and can never be stored.
        """
        store = self.store
        if key not in store:
            raise KeyNotFound(f"no leaf with key {mk.format_key(self.config, key)}")
        cfg = self.config
        lowest = mk.scan_level(cfg, key)
        for L in range(cfg.max_level, lowest, -1):
            if key ^ (1 << cfg.shift(L, 0)) in store:
                return L
        return max(lowest, 1)

    def is_leaf(self, key: int, level: int) -> bool:
        return key in self.store and self.infer_level(key) == level

    def leaves(self) -> Iterator[tuple[int, int, Any]]:
        """All leaves in store order (Z-order for the ordered backend)."""
        for key, payload in self.store.items():
            yield key, self.infer_level(key), payload

    def iterate_zorder(self) -> Iterator[tuple[int, int, Any]]:
        if self.backend != "ordered":
            raise UnsupportedBackend("Z-order iteration requires the ordered backend; use sorted_leaves()")
        return self.leaves()

    def sorted_leaves(self) -> list[tuple[int, int, Any]]:
        return [(k, self.infer_level(k), self.store.lookup(k)) for k in self.store.sorted_keys()]

    def level_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for key in self.store:
            L = self.infer_level(key)
            counts[L] = counts.get(L, 0) + 1
        return counts

    def refine_leaf(self, key: int, level: int, split: SplitFn | None = None) -> list[int]:
        """Replace a leaf by its 2**dim children and return their keys."""
        if not self.is_leaf(key, level):
            raise NotALeaf(f"({mk.format_key(self.config, key, level)})@{level} is not a leaf")
        children = mk.child_keys(self.config, key, level)
        payload = self.store.remove(key)
        parts = (split or _default_split)(payload, len(children))
        if len(parts) != len(children):
            raise ValueError(f"split returned {len(parts)} payloads, expected {len(children)}")
        for child, part in zip(children, parts):
            self.store.insert(child, part)
        return children

    def coarsen_family(self, parent_key: int, parent_level: int, merge: MergeFn | None = None) -> None:
        cfg = self.config
        if parent_level < 1:
            raise LevelOutOfRange("the level-1 elements cannot be merged")
        parent_key = mk.truncate_to_level(cfg, parent_key, parent_level)
        children = mk.child_keys(cfg, parent_key, parent_level)
        if not all(self.is_leaf(c, parent_level + 1) for c in children):
            raise ChildrenNotLeaves(
                f"children of ({mk.format_key(cfg, parent_key, parent_level)}) are not all leaves"
            )
        for c in children:
            for direction in mk.face_directions(cfg.dim):
                # only faces on the parent's boundary matter
                axis, sign = direction
                if mk.get_bit(cfg, c, parent_level + 1, axis) != (sign > 0):
                    continue
                if isinstance(self.resolve_neighbor(c, parent_level + 1, direction), Finer):
                    raise WouldViolateBalance(
                        f"neighbor of ({mk.format_key(cfg, c, parent_level + 1)}) on {direction} "
                        f"is at level {parent_level + 2}"
                    )
        payloads = [self.store.remove(c) for c in children]
        self.store.insert(parent_key, (merge or _default_merge)(payloads))

    def resolve_neighbor(self, key: int, level: int, direction: FaceDirection) -> NeighborResult:
        """Leaves across one face of a leaf of a 2:1 balanced tree."""
        cfg = self.config
        store = self.store
        nb = mk.same_level_neighbor_key(cfg, key, level, direction)
        if nb is None:
            return BOUNDARY
        if nb in store:
            L = self.infer_level(nb)
            if L == level:
                return Same(nb, level)
            if L > level:
                # The region is subdivided; its zero-corner leaf may sit deeper than
                # level + 1 without touching this face, so check the facing children.
                axis, sign = direction
                facing = 0 if sign > 0 else 1
                kids = tuple(
                    c
                    for c in mk.child_keys(cfg, nb, level)
                    if mk.get_bit(cfg, c, level + 1, axis) == facing
                )
                for c in kids:
                    if c not in store:
                        raise InconsistentPartition(f"missing leaf ({mk.format_key(cfg, c, level + 1)})")
                    Lc = self.infer_level(c)
                    if Lc != level + 1:
                        raise UnbalancedTree(self._jump_message(key, level, direction, Lc))
                return Finer(kids, level + 1)
            if L == level - 1:
                return Coarser(mk.truncate_to_level(cfg, nb, L), L)
            raise UnbalancedTree(self._jump_message(key, level, direction, L))
        parent = mk.truncate_to_level(cfg, nb, level - 1)
        if parent in store:
            L = self.infer_level(parent)
            if L == level - 1:
                return Coarser(parent, L)
            raise UnbalancedTree(self._jump_message(key, level, direction, L))
        for L in range(level - 2, 0, -1):
            anc = mk.truncate_to_level(cfg, nb, L)
            if anc in store and self.infer_level(anc) == L:
                raise UnbalancedTree(self._jump_message(key, level, direction, L))
        raise InconsistentPartition(
            f"no leaf covers the {direction} neighbor of ({mk.format_key(cfg, key, level)})"
        )

    def _jump_message(self, key: int, level: int, direction: FaceDirection, other: int) -> str:
        return (
            f"({mk.format_key(self.config, key, level)})@{level} has a level-{other} "
            f"neighbor on {direction}"
        )

    def locate(self, point: Sequence[float]) -> tuple[int, int]:
        """(key, level) of the leaf whose half-open box contains ``point``."""
        cfg = self.config
        full = mk.encode_point(cfg, point, self.domain, cfg.max_level)
        for L in range(cfg.max_level, 0, -1):
            t = mk.truncate_to_level(cfg, full, L)
            if t in self.store:
                return t, self.infer_level(t)
        raise InconsistentPartition(f"no leaf contains {tuple(point)}")

    def validate_balance(self) -> bool:
        """True iff every pair of face-adjacent leaves differs by at most one level."""
        dirs = mk.face_directions(self.config.dim)
        try:
            for key in list(self.store):
                level = self.infer_level(key)
                for direction in dirs:
                    self.resolve_neighbor(key, level, direction)
        except (UnbalancedTree, InconsistentPartition):
            return False
        return True

    def validate_partition(self, rel_tol: float = 1e-9) -> bool:
        """True iff the leaf boxes tile the domain: full volume and no overlaps."""
        cfg = self.config
        leaves = [(k, self.infer_level(k)) for k in self.store.sorted_keys()]
        volume = sum(math.ldexp(self.domain.volume, -cfg.dim * L) for _, L in leaves)
        if not math.isclose(volume, self.domain.volume, rel_tol=rel_tol):
            return False
        # A leaf's descendants occupy a contiguous key interval starting at its own
        # key; in sorted order no interval may reach into the next leaf.
        for (k, L), (nxt, _) in zip(leaves, leaves[1:]):
            span_end = k | ~cfg.prefix_masks[L] & ((1 << cfg.key_bits) - 1)
            if nxt <= span_end:
                return False
        return True


def init_octree(
    config: MeshConfig, domain: DomainBox, backend: str = "ordered", payload: Any = None
) -> Octree:
    return Octree(config, domain, backend, payload)
