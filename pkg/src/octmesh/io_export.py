"""Writers: legacy VTK meshes, JSON run statistics, Z-order key dumps."""
from __future__ import annotations

import json
import os
from typing import TYPE_CHECKING

from . import morton as mk
from .errors import UnsupportedBackend
from .octree import Octree

if TYPE_CHECKING:
    from .pipeline import GenerateConfig, RunStats

SCHEMA_VERSION = 1
VTK_QUAD = 9
VTK_HEXAHEDRON = 12

# corner indices (bit k set = upper side on axis k) in VTK connectivity order
_VTK_CORNERS = {
    2: (0b00, 0b01, 0b11, 0b10),
    3: (0b000, 0b001, 0b011, 0b010, 0b100, 0b101, 0b111, 0b110),
}


def _fmt(x: float) -> str:
    return repr(float(x))


def write_vtk(tree: Octree, path: str | os.PathLike, merge_points: bool = False, title: str = "octmesh") -> None:
    """Leaves as an ASCII legacy VTK unstructured grid with a per-cell ``level`` scalar.

    Cells are written in Z-order for both backends, so output is reproducible.
    """
    cfg, domain = tree.config, tree.domain
    d = cfg.dim
    order = _VTK_CORNERS[d]
    leaves = tree.sorted_leaves()
    points: list[tuple[float, ...]] = []
    cells: list[list[int]] = []
    seen: dict[tuple[int, ...], int] = {}
    quantum = 1e-12 * max(domain.lengths)
    for key, level, _ in leaves:
        corners = mk.vertices(cfg, key, level, domain)
        ids = []
        for c in order:
            p = corners[c]
            if merge_points:
                q = tuple(round(x / quantum) for x in p)
                idx = seen.get(q)
                if idx is None:
                    idx = seen[q] = len(points)
                    points.append(p)
            else:
                idx = len(points)
                points.append(p)
            ids.append(idx)
        cells.append(ids)

    npc = len(order)
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(points)} double",
    ]
    pad = () if d == 3 else (0.0,)
    lines += [" ".join(_fmt(x) for x in (*p, *pad)) for p in points]
    lines.append(f"CELLS {len(cells)} {len(cells) * (npc + 1)}")
    lines += [f"{npc} " + " ".join(map(str, ids)) for ids in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    ctype = str(VTK_HEXAHEDRON if d == 3 else VTK_QUAD)
    lines += [ctype] * len(cells)
    lines += [f"CELL_DATA {len(cells)}", "SCALARS level int 1", "LOOKUP_TABLE default"]
    lines += [str(level) for _, level, _ in leaves]
    with open(path, "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")


def read_vtk_cells(path: str | os.PathLike) -> tuple[list[tuple[float, ...]], list[list[int]], list[int], list[int]]:
    """Minimal reader for files produced by :func:`write_vtk`: points, cells, types, levels."""
    with open(path, encoding="ascii") as f:
        lines = f.read().splitlines()
    i = lines.index(next(l for l in lines if l.startswith("POINTS")))
    n = int(lines[i].split()[1])
    points = [tuple(float(t) for t in lines[i + 1 + j].split()) for j in range(n)]
    i += 1 + n
    nc = int(lines[i].split()[1])
    cells = [[int(t) for t in lines[i + 1 + j].split()[1:]] for j in range(nc)]
    i += 1 + nc
    types = [int(lines[i + 1 + j]) for j in range(nc)]
    i += 1 + nc + 3
    levels = [int(lines[i + j]) for j in range(nc)]
    return points, cells, types, levels


def stats_document(stats: "RunStats", config: "GenerateConfig | None" = None) -> dict:
    """Self-describing stats record; keys are stable across versions of the same schema."""
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config.echo() if config is not None else None,
        "phases_ms": dict(stats.phases_ms),
        "per_level_counts": list(stats.per_level_counts),
        "total_leaves": stats.total_leaves,
        "backend": stats.backend,
        "key_bits": stats.key_bits,
        "max_level": stats.max_level,
        "estimated_bytes": stats.estimated_bytes,
        "passes": stats.passes,
        "n_points": stats.n_points,
        "n_encoded_keys": stats.n_encoded_keys,
        "n_voxels": stats.n_voxels,
        "peak_rss_kb": stats.peak_rss_kb,
    }


def write_stats_json(document: dict, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")


def read_stats_json(path: str | os.PathLike) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def dump_zorder(tree: Octree, path: str | os.PathLike) -> None:
    """One key per line, each written to its own level, in Z-order."""
    if tree.backend != "ordered":
        raise UnsupportedBackend("Z-order dumps need the ordered backend")
    cfg = tree.config
    with open(path, "w", encoding="ascii") as f:
        for key, level, _ in tree.iterate_zorder():
            f.write(mk.format_key(cfg, key, level) + "\n")
