"""2:1 balanced refinement lists.

The closure sweeps the queue in segments: every element appended during one
sweep is examined in the next, so ripples propagate without rescanning the
elements that were already processed.
"""
from __future__ import annotations

from typing import Iterable, Iterator

from . import morton as mk
from .octree import Coarser, Octree, SplitFn

Entry = tuple[int, int]  # (key, level)


class RefineQueue:
    """Insertion-ordered refinement list with a membership index.

    ``membership="hashed"`` keeps a set next to the list; ``"linear"`` answers
    membership by scanning the list, which is the slow baseline.
    """

    def __init__(self, entries: Iterable[Entry] = (), membership: str = "hashed"):
        if membership not in ("hashed", "linear"):
            raise ValueError(f"unknown membership mode {membership!r}")
        self.membership = membership
        self.order: list[Entry] = []
        self.members: set[int] = set()
        for key, level in entries:
            self.append(key, level)

    def __contains__(self, key: int) -> bool:
        if self.membership == "hashed":
            return key in self.members
        return any(k == key for k, _ in self.order)

    def append(self, key: int, level: int) -> bool:
        if key in self:
            return False
        self.order.append((key, level))
        self.members.add(key)
        return True

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self) -> Iterator[Entry]:
        return iter(self.order)

    def __getitem__(self, i: int) -> Entry:
        return self.order[i]

    def as_set(self) -> set[Entry]:
        return set(self.order)


def balance_closure(tree: Octree, queue: RefineQueue | Iterable[Entry]) -> RefineQueue:
    """Extend ``queue`` until refining every entry once keeps ``tree`` 2:1 balanced.

    Entries are leaves of ``tree``; ``queue`` is extended in place when it is a
    RefineQueue.
    """
    q = queue if isinstance(queue, RefineQueue) else RefineQueue(queue)
    dirs = mk.face_directions(tree.config.dim)
    start, end = 0, len(q)
    grew = True
    while grew:
        grew = False
        for i in range(start, end):
            key, level = q[i]
            for direction in dirs:
                nb = tree.resolve_neighbor(key, level, direction)
                if isinstance(nb, Coarser) and nb.key not in q:
                    q.append(nb.key, nb.level)
                    grew = True
        start, end = end, len(q)
    return q


def apply_refinement(tree: Octree, queue: Iterable[Entry], split: SplitFn | None = None) -> None:
    for key, level in queue:
        tree.refine_leaf(key, level, split)
