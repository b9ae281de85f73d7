"""Dense-grid reference for whole-mesh checks.

Every leaf is painted into an integer array at the finest level, so face
adjacency, balance and tiling become array comparisons.  Leaf positions come
from :func:`oracles.indices_from_key` and levels from the shadow payloads.
"""
from __future__ import annotations

import numpy as np

from .oracles import indices_from_key


class LeafGrid:
    def __init__(self, cfg, shadow: dict[int, int]):
        self.cfg = cfg
        self.F = F = cfg.max_level
        d = cfg.dim
        n = len(shadow)
        self.keys = np.empty(n, dtype=object)
        self.levels = np.empty(n, dtype=np.int16)
        self.lo = np.empty((n, d), dtype=np.int64)
        self.size = np.empty(n, dtype=np.int64)
        self.ids = np.full((1 << F,) * d, -1, dtype=np.int32)
        count = np.zeros((1 << F,) * d, dtype=np.uint8)
        self.index: dict[tuple[int, int], int] = {}
        for i, (key, L) in enumerate(shadow.items()):
            s = 1 << (F - L)
            lo = tuple(v * s for v in indices_from_key(cfg, key, L))
            self.keys[i], self.levels[i], self.lo[i], self.size[i] = key, L, lo, s
            self.index[(key, L)] = i
            sl = tuple(slice(a, a + s) for a in lo)
            self.ids[sl] = i
            count[sl] += 1
        self.tiles = bool((count == 1).all())
        self._lev = None

    def level_grid(self) -> np.ndarray:
        if self._lev is None:
            self._lev = self.levels[self.ids]
        return self._lev

    def balanced(self) -> bool:
        lev = self.level_grid()
        for axis in range(self.cfg.dim):
            a = np.diff(lev, axis=axis)
            if a.size and np.abs(a).max() > 1:
                return False
        return True

    def face_neighbors(self, i: int, axis: int, sign: int) -> set[int] | None:
        """Leaf ids whose boxes share the given face of leaf ``i``; None on the domain boundary."""
        lo, s = self.lo[i], int(self.size[i])
        across = lo[axis] + s if sign > 0 else lo[axis] - 1
        if not 0 <= across < (1 << self.F):
            return None
        sl = [slice(a, a + s) for a in lo]
        sl[axis] = slice(across, across + 1)
        return set(np.unique(self.ids[tuple(sl)]).tolist())

    def region_max_level_outside(self, lo, s) -> int:
        """Finest level among leaves touching the faces of the box ``[lo, lo + s)``."""
        best = 0
        lev = self.level_grid()
        for axis in range(self.cfg.dim):
            for sign in (-1, 1):
                across = lo[axis] + s if sign > 0 else lo[axis] - 1
                if not 0 <= across < (1 << self.F):
                    continue
                sl = [slice(a, a + s) for a in lo]
                sl[axis] = slice(across, across + 1)
                best = max(best, int(lev[tuple(sl)].max()))
        return best

    def closure(self, seeds) -> set[tuple[int, int]]:
        """Naive fixpoint: grow by coarser face neighbours, re-examining every member each sweep."""
        members = {self.index[s] for s in seeds}
        while True:
            added = set()
            for i in members:
                for axis in range(self.cfg.dim):
                    for sign in (-1, 1):
                        for j in self.face_neighbors(i, axis, sign) or ():
                            if self.levels[j] < self.levels[i] and j not in members:
                                added.add(j)
            if not added:
                return {(self.keys[i], int(self.levels[i])) for i in members}
            members |= added
