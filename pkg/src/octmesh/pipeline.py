"""Mesh generation driver and backend benchmark."""
from __future__ import annotations

import logging
import resource
import statistics
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

from . import morton as mk
from .balance import RefineQueue, apply_refinement, balance_closure
from .errors import InvalidConfig, NonTermination
from .geometry import TagSets, encode_points, fit_domain, load_points, load_stl, voxelize
from .morton import DomainBox, MeshConfig
from .octree import Octree, SplitFn

log = logging.getLogger(__name__)

PAYLOAD_BYTES = 8  # one pointer per leaf, as for a solution-vector handle
TAGGING_MODES = ("encoded", "search")


@dataclass
class GenerateConfig:
    stl: str | None = None
    points: str | None = None
    dim: int = 3
    key_bits: int = mk.DEFAULT_KEY_BITS
    max_level: int = 6
    backend: str = "ordered"
    pad_factor: float = 1.5
    domain: DomainBox | None = None
    point_mode: str = "centroids"
    voxel_level: int | None = None
    tagging: str = "encoded"
    out: str | None = None
    stats: str | None = None
    zorder: str | None = None
    merge_points: bool = False

    def mesh_config(self) -> MeshConfig:
        return MeshConfig(self.dim, self.key_bits, self.max_level)

    def echo(self) -> dict:
        d = asdict(self)
        if self.domain is not None:
            d["domain"] = {"center": list(self.domain.center), "lengths": list(self.domain.lengths)}
        return d


@dataclass
class RunStats:
    backend: str
    key_bits: int
    max_level: int
    phases_ms: dict[str, float] = field(default_factory=dict)
    per_level_counts: list[int] = field(default_factory=list)
    total_leaves: int = 0
    estimated_bytes: int = 0
    passes: int = 0
    n_points: int = 0
    n_encoded_keys: int = 0
    n_voxels: int | None = None
    peak_rss_kb: int | None = None

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.phases_ms[name] = self.phases_ms.get(name, 0.0) + 1e3 * (time.perf_counter() - t0)

    def record_mesh(self, tree: Octree) -> None:
        counts = tree.level_counts()
        self.per_level_counts = [counts.get(L, 0) for L in range(1, tree.config.max_level + 1)]
        self.total_leaves = len(tree)
        self.estimated_bytes = len(tree) * (tree.config.key_bits // 8 + PAYLOAD_BYTES)


def tagged_leaves(tree: Octree, tags: TagSets) -> list[tuple[int, int]]:
    """Leaves below the finest level that hold an encoded point, found by key lookup alone."""
    store = tree.store
    out = []
    for L in range(1, tree.config.max_level):
        for key in tags.per_level(L):
            if key in store and tree.infer_level(key) == L:
                out.append((key, L))
    out.sort()
    return out


def tagged_leaves_by_search(tree: Octree, points: np.ndarray) -> list[tuple[int, int]]:
    """Same result as :func:`tagged_leaves`, by testing every point against every leaf box."""
    cfg, domain = tree.config, tree.domain
    out = []
    for key, L, _ in tree.leaves():
        if L >= cfg.max_level:
            continue
        c = np.asarray(mk.centroid(cfg, key, L, domain))
        half = 0.5 * np.asarray(mk.edge_length(cfg, L, domain))
        inside = np.all((points >= c - half) & (points < c + half), axis=1)
        if inside.any():
            out.append((key, L))
    out.sort()
    return out


def refine_to_geometry(
    tree: Octree,
    tags: TagSets,
    points: np.ndarray | None = None,
    tagging: str = "encoded",
    stats: RunStats | None = None,
    split: SplitFn | None = None,
) -> int:
    """Refine every tagged leaf one level per pass, balancing each pass, until none is left."""
    if tagging not in TAGGING_MODES:
        raise InvalidConfig(f"unknown tagging mode {tagging!r}")
    stats = stats or RunStats(tree.backend, tree.config.key_bits, tree.config.max_level)
    passes = 0
    while True:
        with stats.phase("tag"):
            if tagging == "encoded":
                q = tagged_leaves(tree, tags)
            else:
                q = tagged_leaves_by_search(tree, points)
        if not q:
            break
        passes += 1
        if passes > tree.config.max_level:
            raise NonTermination(f"refinement did not settle after {passes - 1} passes")
        with stats.phase("balance"):
            queue = balance_closure(tree, RefineQueue(q))
        with stats.phase("refine"):
            apply_refinement(tree, queue, split)
        log.debug("pass %d: %d tagged, %d refined, %d leaves", passes, len(q), len(queue), len(tree))
    stats.passes = passes
    return passes


def build_mesh(
    points: np.ndarray,
    config: MeshConfig,
    domain: DomainBox,
    backend: str = "ordered",
    tagging: str = "encoded",
    stats: RunStats | None = None,
    payload: Any = None,
    split: SplitFn | None = None,
) -> tuple[Octree, RunStats]:
    stats = stats or RunStats(backend, config.key_bits, config.max_level)
    with stats.phase("encode"):
        tags = encode_points(points, domain, config)
    stats.n_points = len(points)
    stats.n_encoded_keys = len(tags.fullres)
    tree = Octree(config, domain, backend, payload)
    refine_to_geometry(tree, tags, np.asarray(points, dtype=np.float64), tagging, stats, split)
    return tree, stats


def generate(config: GenerateConfig) -> tuple[Octree, RunStats]:
    from . import io_export

    mesh_cfg = config.mesh_config()
    stats = RunStats(config.backend, mesh_cfg.key_bits, mesh_cfg.max_level)
    soup = None
    with stats.phase("load"):
        if config.stl:
            if config.dim != 3:
                raise InvalidConfig("STL input requires dim=3")
            soup = load_stl(config.stl)
            points = soup.points(config.point_mode)
            geom = soup
        elif config.points:
            points = load_points(config.points, config.dim)
            geom = points
        else:
            raise InvalidConfig("either an STL file or a point file is required")
        domain = config.domain or fit_domain(geom, config.pad_factor)
    if config.voxel_level is not None:
        if soup is None:
            raise InvalidConfig("voxelization needs an STL geometry")
        with stats.phase("voxelize"):
            stats.n_voxels = len(voxelize(soup, domain, mesh_cfg, config.voxel_level))
    tree, stats = build_mesh(points, mesh_cfg, domain, config.backend, config.tagging, stats)
    with stats.phase("export"):
        if config.out:
            io_export.write_vtk(tree, config.out, merge_points=config.merge_points)
        if config.zorder:
            io_export.dump_zorder(tree, config.zorder)
    stats.record_mesh(tree)
    stats.peak_rss_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    if config.stats:
        io_export.write_stats_json(io_export.stats_document(stats, config), config.stats)
    return tree, stats


def _queue_comparison(tree: Octree, tags: TagSets) -> dict:
    """Closure of the finest tagged leaves with hashed vs. linear-scan membership."""
    L = tree.config.max_level
    seeds = sorted((k, L) for k in tags.per_level(L) if tree.is_leaf(k, L))
    timings = {}
    results = {}
    for mode in ("hashed", "linear"):
        t0 = time.perf_counter()
        results[mode] = balance_closure(tree, RefineQueue(seeds, membership=mode)).as_set()
        timings[mode] = 1e3 * (time.perf_counter() - t0)
    return {
        "seeds": len(seeds),
        "closure_size": len(results["hashed"]),
        "hashed_ms": timings["hashed"],
        "linear_ms": timings["linear"],
        "sets_equal": results["hashed"] == results["linear"],
    }


def bench(
    config: GenerateConfig,
    levels: Sequence[int],
    backends: Sequence[str] = ("ordered", "hashed"),
    repeat: int = 3,
) -> dict:
    """Run :func:`generate` for every (level, backend) pair ``repeat`` times."""
    if repeat < 1:
        raise InvalidConfig("repeat must be >= 1")
    rows = []
    for level in levels:
        for backend in backends:
            cfg = GenerateConfig(**{
                **config.__dict__, "max_level": level, "backend": backend,
                "out": None, "stats": None, "zorder": None,
            })
            samples = []
            tree = None
            for _ in range(repeat):
                tree, st = generate(cfg)
                samples.append(st)
            phases = sorted({p for s in samples for p in s.phases_ms})
            median = {p: statistics.median(s.phases_ms.get(p, 0.0) for s in samples) for p in phases}
            total = [sum(s.phases_ms.values()) for s in samples]
            last = samples[-1]
            tags = _bench_tags(cfg, tree)
            rows.append({
                "level": level,
                "backend": backend,
                "samples_total_ms": total,
                "median_total_ms": statistics.median(total),
                "samples_phases_ms": [s.phases_ms for s in samples],
                "median_phases_ms": median,
                "per_level_counts": last.per_level_counts,
                "total_leaves": last.total_leaves,
                "estimated_bytes": last.estimated_bytes,
                "queue_comparison": _queue_comparison(tree, tags),
            })
    by_level: dict[int, set[int]] = {}
    equal = True
    for row in rows:
        seen = by_level.setdefault(row["level"], {row["total_leaves"]})
        equal &= row["total_leaves"] in seen
    return {"repeat": repeat, "levels": list(levels), "backends": list(backends),
            "rows": rows, "leaf_counts_agree": equal}


def _bench_tags(cfg: GenerateConfig, tree: Octree) -> TagSets:
    if cfg.stl:
        points = load_stl(cfg.stl).points(cfg.point_mode)
    else:
        points = load_points(cfg.points, cfg.dim)
    return encode_points(points, tree.domain, tree.config)
