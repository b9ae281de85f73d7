"""Immersed geometry: STL input, point encoding for tagging, coarse voxels."""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import morton as mk
from .errors import EmptyGeometry, LevelOutOfRange, MalformedStl, PointOutsideDomain
from .morton import DomainBox, MeshConfig

_HEADER = 80
_RECORD = np.dtype([("normal", "<f4", 3), ("vertices", "<f4", (3, 3)), ("attr", "<u2")])
assert _RECORD.itemsize == 50

POINT_MODES = ("centroids", "all")


class Triangle(NamedTuple):
    v0: tuple[float, float, float]
    v1: tuple[float, float, float]
    v2: tuple[float, float, float]
    normal: tuple[float, float, float]


@dataclass
class TriangleSoup:
    """Triangles as arrays: ``vertices`` (n, 3, 3), ``normals`` (n, 3), ``attributes`` (n,)."""

    vertices: np.ndarray
    normals: np.ndarray
    attributes: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if self.attributes is None:
            self.attributes = np.zeros(len(self.vertices), dtype=np.uint16)
        self.attributes = np.asarray(self.attributes, dtype=np.uint16)
        if not (len(self.vertices) == len(self.normals) == len(self.attributes)):
            raise ValueError("vertices, normals and attributes disagree in length")
        if not np.isfinite(self.vertices).all():
            raise ValueError("non-finite vertex coordinates")

    def __len__(self) -> int:
        return len(self.vertices)

    def __getitem__(self, i: int) -> Triangle:
        v = self.vertices[i]
        return Triangle(tuple(v[0]), tuple(v[1]), tuple(v[2]), tuple(self.normals[i]))

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if not len(self):
            raise EmptyGeometry("no triangles")
        pts = self.vertices.reshape(-1, 3)
        return pts.min(axis=0), pts.max(axis=0)

    def centroids(self) -> np.ndarray:
        return self.vertices.mean(axis=1)

    def points(self, mode: str = "centroids") -> np.ndarray:
        if mode == "centroids":
            return self.centroids()
        if mode == "all":
            return np.concatenate([self.centroids(), self.vertices.reshape(-1, 3)])
        raise ValueError(f"unknown point mode {mode!r}; choose from {POINT_MODES}")


def _parse_ascii(text: str) -> TriangleSoup:
    tokens = text.split()
    normals, verts = [], []
    i, n = 1, len(tokens)
    # tokens[0] is "solid"; the name may span several tokens
    while i < n and tokens[i] not in ("facet", "endsolid"):
        i += 1
    try:
        while i < n and tokens[i] == "facet":
            if tokens[i + 1] != "normal":
                raise MalformedStl(f"expected 'normal' after 'facet', got {tokens[i + 1]!r}")
            normals.append([float(t) for t in tokens[i + 2 : i + 5]])
            i += 5
            if tokens[i : i + 2] != ["outer", "loop"]:
                raise MalformedStl("expected 'outer loop'")
            i += 2
            tri = []
            for _ in range(3):
                if tokens[i] != "vertex":
                    raise MalformedStl(f"expected 'vertex', got {tokens[i]!r}")
                tri.append([float(t) for t in tokens[i + 1 : i + 4]])
                i += 4
            if tokens[i : i + 2] != ["endloop", "endfacet"]:
                raise MalformedStl("expected 'endloop endfacet'")
            i += 2
            verts.append(tri)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MalformedStl):
            raise
        raise MalformedStl(f"bad ASCII STL near token {i}: {exc}") from exc
    if i >= n or tokens[i] != "endsolid":
        raise MalformedStl("missing 'endsolid'")
    return TriangleSoup(np.array(verts, dtype=np.float64).reshape(-1, 3, 3), np.array(normals).reshape(-1, 3))


def _parse_binary(data: bytes) -> TriangleSoup:
    if len(data) < _HEADER + 4:
        raise MalformedStl(f"binary STL shorter than its {_HEADER + 4}-byte header")
    (count,) = struct.unpack_from("<I", data, _HEADER)
    expected = _HEADER + 4 + _RECORD.itemsize * count
    if len(data) != expected:
        raise MalformedStl(f"triangle count {count} implies {expected} bytes, file has {len(data)}")
    rec = np.frombuffer(data, dtype=_RECORD, count=count, offset=_HEADER + 4)
    return TriangleSoup(
        rec["vertices"].astype(np.float64), rec["normal"].astype(np.float64), rec["attr"].copy()
    )


def parse_stl(data: bytes) -> TriangleSoup:
    """Parse STL bytes; ASCII iff it starts with ``solid`` and its size does not fit the binary layout."""
    binary_fits = False
    if len(data) >= _HEADER + 4:
        (count,) = struct.unpack_from("<I", data, _HEADER)
        binary_fits = len(data) == _HEADER + 4 + _RECORD.itemsize * count
    if data[:5] == b"solid" and not binary_fits:
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise MalformedStl("file starts with 'solid' but is not ASCII") from exc
        soup = _parse_ascii(text)
    else:
        soup = _parse_binary(data)
    if not len(soup):
        raise EmptyGeometry("STL contains no triangles")
    return soup


def load_stl(path: str | os.PathLike) -> TriangleSoup:
    with open(path, "rb") as f:
        return parse_stl(f.read())


def write_stl(soup: TriangleSoup, path: str | os.PathLike, ascii: bool = False, name: str = "octmesh") -> None:
    if ascii:
        lines = [f"solid {name}"]
        for v, nrm in zip(soup.vertices, soup.normals):
            lines.append("  facet normal {:.9e} {:.9e} {:.9e}".format(*nrm))
            lines.append("    outer loop")
            for p in v:
                lines.append("      vertex {:.17g} {:.17g} {:.17g}".format(*p))
            lines.append("    endloop")
            lines.append("  endfacet")
        lines.append(f"endsolid {name}")
        with open(path, "w", encoding="ascii") as f:
            f.write("\n".join(lines) + "\n")
        return
    rec = np.zeros(len(soup), dtype=_RECORD)
    rec["normal"] = soup.normals
    rec["vertices"] = soup.vertices
    rec["attr"] = soup.attributes
    header = name.encode("ascii")[:_HEADER].ljust(_HEADER, b"\0")
    if header.startswith(b"solid"):
        header = b"binary" + header[6:]
    with open(path, "wb") as f:
        f.write(header)
        f.write(struct.pack("<I", len(soup)))
        f.write(rec.tobytes())


def load_points(path: str | os.PathLike, dim: int = 2) -> np.ndarray:
    """Whitespace-separated coordinates, one point per line, ``#`` comments allowed."""
    pts = np.loadtxt(path, comments="#", ndmin=2, dtype=np.float64)
    if pts.size == 0:
        raise EmptyGeometry(f"{path} contains no points")
    if pts.shape[1] != dim:
        raise ValueError(f"{path}: expected {dim} columns, found {pts.shape[1]}")
    return pts


def make_icosphere(subdivisions: int = 2, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleSoup:
    """Geodesic sphere with ``20 * 4**subdivisions`` outward-facing triangles."""
    t = (1.0 + 5.0**0.5) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    pts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            edge = (min(a, b), max(a, b))
            if edge not in cache:
                m = pts[a] + pts[b]
                pts.append(m / np.linalg.norm(m))
                cache[edge] = len(pts) - 1
            return cache[edge]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    P = np.array(pts) * radius + np.asarray(center, dtype=np.float64)
    tris = P[np.array(faces)]
    n = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    # float32 round trip keeps the soup identical to what an STL file would hold
    return TriangleSoup(tris.astype(np.float32).astype(np.float64), n.astype(np.float32).astype(np.float64))


def fit_domain(geometry: TriangleSoup | np.ndarray, pad_factor: float = 1.5) -> DomainBox:
    """Cube centred on the bounding box with edge ``pad_factor * max extent``."""
    if pad_factor < 1:
        raise ValueError("pad_factor must be >= 1")
    if isinstance(geometry, TriangleSoup):
        lo, hi = geometry.bbox
    else:
        pts = np.asarray(geometry, dtype=np.float64)
        if pts.size == 0:
            raise EmptyGeometry("no points")
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = float((hi - lo).max())
    if extent == 0.0:
        extent = max(1.0, float(np.abs(lo).max()))  # a single point still needs a box
    edge = pad_factor * extent
    return DomainBox(tuple(0.5 * (lo + hi)), (edge,) * len(lo))


class TagSets:
    """Geometry points encoded at the finest level, with per-level truncations built on demand."""

    def __init__(self, config: MeshConfig, fullres: set[int], n_points: int = 0):
        self.config = config
        self.fullres = frozenset(fullres)
        self.n_points = n_points
        self._per_level: dict[int, frozenset[int]] = {config.max_level: self.fullres}

    def per_level(self, level: int) -> frozenset[int]:
        keys = self._per_level.get(level)
        if keys is None:
            mask = self.config.prefix_masks[level]
            keys = frozenset(k & mask for k in self.fullres)
            self._per_level[level] = keys
        return keys

    def is_tagged(self, key: int, level: int) -> bool:
        return key in self.per_level(level)

    def __eq__(self, other) -> bool:
        return isinstance(other, TagSets) and self.config == other.config and self.fullres == other.fullres


def encode_points(points: np.ndarray, domain: DomainBox, config: MeshConfig) -> TagSets:
    pts = np.asarray(points, dtype=np.float64)
    keys = {mk.encode_point(config, p, domain, config.max_level) for p in pts.tolist()}
    return TagSets(config, keys, len(pts))


def encode_geometry(
    soup: TriangleSoup, domain: DomainBox, config: MeshConfig, mode: str = "centroids"
) -> TagSets:
    return encode_points(soup.points(mode), domain, config)


def is_tagged(tags: TagSets, key: int, level: int) -> bool:
    return tags.is_tagged(key, level)


@dataclass
class VoxelIndex:
    config: MeshConfig
    voxel_level: int
    index: dict[int, list[int]]

    def query(self, key: int, level: int) -> list[int]:
        """Triangles whose centroid lies in the element ``(key, level)``."""
        V = self.voxel_level
        if level >= V:
            return list(self.index.get(mk.truncate_to_level(self.config, key, V), ()))
        prefix = mk.truncate_to_level(self.config, key, level)
        mask = self.config.prefix_masks[level]
        out: list[int] = []
        for vkey in sorted(self.index):
            if vkey & mask == prefix:
                out.extend(self.index[vkey])
        return out

    def __len__(self) -> int:
        return len(self.index)


def voxelize(soup: TriangleSoup, domain: DomainBox, config: MeshConfig, voxel_level: int) -> VoxelIndex:
    if not 1 <= voxel_level <= config.max_level:
        raise LevelOutOfRange(f"voxel level {voxel_level} outside [1, {config.max_level}]")
    index: dict[int, list[int]] = {}
    for i, c in enumerate(soup.centroids().tolist()):
        try:
            key = mk.encode_point(config, c, domain, voxel_level)
        except PointOutsideDomain:
            raise PointOutsideDomain(f"centroid of triangle {i} lies outside the domain") from None
        index.setdefault(key, []).append(i)
    return VoxelIndex(config, voxel_level, index)


def query_voxel(index: VoxelIndex, key: int, level: int) -> list[int]:
    return index.query(key, level)
