"""Morton key algebra on arbitrary-width bit strings.

A key is a plain Python ``int`` holding ``key_bits`` bits.  Logical bit
position ``p = dim * j + k`` (level ``j + 1``, axis ``k``) counts from the
most significant end, so position 0 is the leftmost character of the written
form ``"001,000,101"``.  A set bit selects the upper half of the parent
interval along that axis.  The root (level 0) owns no bits.

Because Python integers are unbounded, integer order of two keys of the same
width is exactly the lexicographic order of their bit strings, which is the
Z-order of the elements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

from .errors import (
    InvalidConfig,
    KeyOverflow,
    LevelOutOfRange,
    MaxDepthExceeded,
    PointOutsideDomain,
)

DEFAULT_KEY_BITS = 128


@dataclass(frozen=True)
class MeshConfig:
    dim: int = 3
    key_bits: int = DEFAULT_KEY_BITS
    max_level: int = 0  # 0 means "as deep as key_bits allows"

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidConfig(f"dim must be 2 or 3, got {self.dim}")
        if self.key_bits < self.dim:
            raise InvalidConfig(f"key_bits={self.key_bits} too small for dim={self.dim}")
        if self.max_level == 0:
            object.__setattr__(self, "max_level", self.key_bits // self.dim)
        if self.max_level < 1:
            raise InvalidConfig("max_level must be >= 1")
        if self.dim * self.max_level > self.key_bits:
            raise InvalidConfig(
                f"dim*max_level = {self.dim * self.max_level} exceeds key_bits = {self.key_bits}"
            )

    @property
    def n_children(self) -> int:
        return 1 << self.dim

    def shift(self, level: int, axis: int) -> int:
        """Integer bit index of the axis bit owned by ``level``."""
        return self.key_bits - 1 - (self.dim * (level - 1) + axis)

    @cached_property
    def prefix_masks(self) -> tuple[int, ...]:
        # prefix_masks[L] selects the bits of levels 1..L
        W, d = self.key_bits, self.dim
        return tuple(((1 << (d * L)) - 1) << (W - d * L) for L in range(self.max_level + 1))

    @cached_property
    def axis_masks(self) -> tuple[int, ...]:
        # axis_masks[k] selects the axis-k bit of every level up to max_level
        masks = []
        for k in range(self.dim):
            m = 0
            for L in range(1, self.max_level + 1):
                m |= 1 << self.shift(L, k)
            masks.append(m)
        return tuple(masks)

    def level_of_shift(self, s: int) -> int:
        return (self.key_bits - 1 - s) // self.dim + 1


@dataclass(frozen=True)
class DomainBox:
    """Root element: centre and edge length per axis."""

    center: tuple[float, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        if len(self.center) != len(self.lengths):
            raise InvalidConfig("center and lengths must have the same dimension")
        if not all(v > 0 and math.isfinite(v) for v in self.lengths):
            raise InvalidConfig(f"domain lengths must be positive, got {self.lengths}")

    @classmethod
    def from_bounds(cls, lower: Sequence[float], upper: Sequence[float]) -> "DomainBox":
        return cls(
            tuple(0.5 * (a + b) for a, b in zip(lower, upper)),
            tuple(b - a for a, b in zip(lower, upper)),
        )

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def lower(self) -> tuple[float, ...]:
        return tuple(c - 0.5 * v for c, v in zip(self.center, self.lengths))

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(c + 0.5 * v for c, v in zip(self.center, self.lengths))

    @property
    def volume(self) -> float:
        return math.prod(self.lengths)


class FaceDirection(NamedTuple):
    axis: int
    sign: int  # +1 or -1

    def __str__(self):
        return ("+" if self.sign > 0 else "-") + "xyz"[self.axis]


def face_directions(dim: int) -> list[FaceDirection]:
    return [FaceDirection(k, s) for k in range(dim) for s in (-1, 1)]


def _check_level(cfg: MeshConfig, level: int, lowest: int = 1) -> None:
    if not lowest <= level <= cfg.max_level:
        raise LevelOutOfRange(f"level {level} outside [{lowest}, {cfg.max_level}]")


def get_bit(cfg: MeshConfig, key: int, level: int, axis: int) -> int:
    return (key >> cfg.shift(level, axis)) & 1


def encode_point(cfg: MeshConfig, point: Sequence[float], domain: DomainBox, level: int) -> int:
    """Key of the level-``level`` element containing ``point``.

    Each axis is bisected ``level`` times; a coordinate below the midpoint
    goes to the lower half, anything else (ties included) to the upper half.
    """
    _check_level(cfg, level)
    d = cfg.dim
    if len(point) != d or domain.dim != d:
        raise InvalidConfig(f"expected {d} coordinates")
    key = 0
    for k in range(d):
        xp = float(point[k])
        lo = domain.center[k] - 0.5 * domain.lengths[k]
        hi = domain.center[k] + 0.5 * domain.lengths[k]
        if not lo <= xp <= hi:
            raise PointOutsideDomain(f"coordinate {xp} outside [{lo}, {hi}] on axis {k}")
        for i in range(level):
            xc = 0.5 * (lo + hi)
            if xp < xc:
                hi = xc
            else:
                key |= 1 << cfg.shift(i + 1, k)
                lo = xc
    return key


def truncate_to_level(cfg: MeshConfig, key: int, level: int) -> int:
    return key & cfg.prefix_masks[level]


def scan_level(cfg: MeshConfig, key: int) -> int:
    """Level of the finest nonzero bit group; 0 for the all-zero key.

    Only a lower bound on an element's level: trailing zero groups are
    indistinguishable from padding without looking at the leaf set.
    """
    if key == 0:
        return 0
    lowest = (key & -key).bit_length() - 1
    return cfg.level_of_shift(lowest)


def sibling_key(cfg: MeshConfig, key: int, level: int, axis: int) -> int:
    _check_level(cfg, level)
    return key ^ (1 << cfg.shift(level, axis))


def flip_level(cfg: MeshConfig, key: int, level: int, axis: int) -> int | None:
    """Finest level above ``level`` whose axis bit differs from the one at ``level``.

    ``None`` means the axis bits are uniform all the way to the root, i.e. the
    element touches the domain boundary on that side.
    """
    if level <= 1:
        return None
    mask = cfg.axis_masks[axis] & cfg.prefix_masks[level - 1]
    bits = key & mask
    diff = (mask ^ bits) if get_bit(cfg, key, level, axis) else bits
    if not diff:
        return None
    return cfg.level_of_shift((diff & -diff).bit_length() - 1)


def same_level_neighbor_key(
    cfg: MeshConfig, key: int, level: int, direction: FaceDirection
) -> int | None:
    """Key of the same-level region across a face, or ``None`` at the boundary."""
    axis, sign = direction
    b = get_bit(cfg, key, level, axis)
    if (sign > 0) != bool(b):
        return key ^ (1 << cfg.shift(level, axis))
    f = flip_level(cfg, key, level, axis)
    if f is None:
        return None
    flips = cfg.axis_masks[axis] & cfg.prefix_masks[level] & ~cfg.prefix_masks[f - 1]
    return key ^ flips


def is_boundary(cfg: MeshConfig, key: int, level: int, direction: FaceDirection) -> bool:
    axis, sign = direction
    mask = cfg.axis_masks[axis] & cfg.prefix_masks[level]
    return (key & mask) == (mask if sign > 0 else 0)


def edge_length(cfg: MeshConfig, level: int, domain: DomainBox) -> tuple[float, ...]:
    _check_level(cfg, level, lowest=0)
    return tuple(math.ldexp(v, -level) for v in domain.lengths)


def centroid(cfg: MeshConfig, key: int, level: int, domain: DomainBox) -> tuple[float, ...]:
    """Element centre as the root centre plus signed dyadic offsets per level."""
    _check_level(cfg, level)
    out = []
    for k in range(cfg.dim):
        s = 0.0
        for j in range(level):
            term = math.ldexp(1.0, -(j + 2))
            s += term if (key >> cfg.shift(j + 1, k)) & 1 else -term
        out.append(domain.center[k] + domain.lengths[k] * s)
    return tuple(out)


def vertices(cfg: MeshConfig, key: int, level: int, domain: DomainBox) -> list[tuple[float, ...]]:
    """The 2**dim corners; corner ``c`` takes the upper side of axis k iff bit k of c is set."""
    c = centroid(cfg, key, level, domain)
    half = [0.5 * h for h in edge_length(cfg, level, domain)]
    return [
        tuple(c[k] + (half[k] if (corner >> k) & 1 else -half[k]) for k in range(cfg.dim))
        for corner in range(cfg.n_children)
    ]


def cell_indices(cfg: MeshConfig, key: int, level: int) -> tuple[int, ...]:
    """Integer position of the element on the uniform level-``level`` grid, per axis."""
    idx = []
    for k in range(cfg.dim):
        v = 0
        for j in range(1, level + 1):
            v = (v << 1) | ((key >> cfg.shift(j, k)) & 1)
        idx.append(v)
    return tuple(idx)


def to_integer(cfg: MeshConfig, key: int, level: int, target_width: int = 64) -> int:
    """First ``dim*level`` bits read as a big-endian unsigned integer.

    Raises KeyOverflow when those bits do not fit ``target_width``: this is the
    depth ceiling of any scheme that must turn keys into machine integers.
    """
    nbits = cfg.dim * level
    if nbits > target_width:
        raise KeyOverflow(f"{nbits} bits needed, {target_width} available")
    return key >> (cfg.key_bits - nbits)


def compare_keys(a: int, b: int) -> int:
    """Three-way comparison by the most significant differing bit."""
    x = a ^ b
    if not x:
        return 0
    top = x.bit_length() - 1
    return 1 if (a >> top) & 1 else -1


def child_keys(cfg: MeshConfig, key: int, level: int) -> list[int]:
    """Keys of the 2**dim children, in Z-order; the first one equals ``key``."""
    if level >= cfg.max_level:
        raise MaxDepthExceeded(f"cannot refine past level {cfg.max_level}")
    base = cfg.key_bits - cfg.dim * (level + 1)
    return [key | (g << base) for g in range(cfg.n_children)]


def format_key(cfg: MeshConfig, key: int, level: int | None = None) -> str:
    if level is None:
        level = max(scan_level(cfg, key), 1)
    d = cfg.dim
    groups = []
    for L in range(1, level + 1):
        g = (key >> (cfg.key_bits - d * L)) & ((1 << d) - 1)
        groups.append(format(g, f"0{d}b"))
    return ",".join(groups)


def parse_key(cfg: MeshConfig, text: str) -> int:
    """Parse ``"001,000,101"``-style notation; trailing zero padding is accepted."""
    cleaned = text.strip().strip("()[]").replace(" ", "")
    if not cleaned:
        raise ValueError("empty key")
    groups = cleaned.split(",") if "," in cleaned else [cleaned]
    bits = "".join(groups)
    if set(bits) - {"0", "1"}:
        raise ValueError(f"invalid characters in key {text!r}")
    if "," in cleaned:
        for i, g in enumerate(groups):
            last = i == len(groups) - 1
            if len(g) != cfg.dim and not (last and len(g) < cfg.dim and "1" not in g):
                raise ValueError(f"bad group {g!r} in key {text!r}")
    elif len(bits) % cfg.dim and "1" in bits[len(bits) - len(bits) % cfg.dim:]:
        raise ValueError(f"key {text!r} has a partial nonzero group")
    if len(bits) > cfg.key_bits:
        raise ValueError(f"key {text!r} longer than {cfg.key_bits} bits")
    if "1" in bits[cfg.dim * cfg.max_level:]:
        raise ValueError(f"key {text!r} sets bits beyond level {cfg.max_level}")
    return int(bits, 2) << (cfg.key_bits - len(bits))
