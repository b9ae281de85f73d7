import numpy as np
import pytest

from octmesh import DomainBox, GenerateConfig, MeshConfig, Octree, apply_refinement, balance_closure, bench, build_mesh, generate
from octmesh.errors import InvalidConfig
from octmesh.geometry import encode_points, make_icosphere, write_stl
from octmesh.pipeline import tagged_leaves, tagged_leaves_by_search

from .oracles import box_contains, check_balanced_by_geometry, shadow_levels, shadow_mesh


@pytest.fixture(scope="module")
def sphere_stl(tmp_path_factory):
    p = tmp_path_factory.mktemp("geo") / "sphere.stl"
    write_stl(make_icosphere(2), p)
    return str(p)


def test_single_point_2d():
    cfg = MeshConfig(2, 32, 3)
    dom = DomainBox((0.5, 0.5), (1.0, 1.0))
    pts = np.array([[0.3, 0.7]])
    tree = shadow_mesh(pts, cfg, dom)
    key, L = tree.locate(pts[0])
    assert L == 3
    assert tree.validate_balance() and tree.validate_partition()
    assert check_balanced_by_geometry(cfg, shadow_levels(tree))


def test_icosphere_level6(sphere_stl):
    tree, stats = generate(GenerateConfig(stl=sphere_stl, max_level=6))
    assert tree.validate_balance() and tree.validate_partition()
    assert stats.passes <= 6
    assert sum(stats.per_level_counts) == stats.total_leaves == len(tree)
    # every leaf holding an encoded point is at the finest level
    pts = make_icosphere(2).centroids()
    for p in pts:
        assert tree.locate(p)[1] == 6


def test_backends_agree(sphere_stl):
    a, _ = generate(GenerateConfig(stl=sphere_stl, max_level=5, backend="ordered"))
    b, _ = generate(GenerateConfig(stl=sphere_stl, max_level=5, backend="hashed"))
    assert set(a.store) == set(b.store)


def test_search_tagging_agrees_with_encoded():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.5, 0.5, size=(60, 3))
    cfg = MeshConfig(3, 64, 5)
    dom = DomainBox((0, 0, 0), (1.0, 1.0, 1.0))
    a, _ = build_mesh(pts, cfg, dom, tagging="encoded")
    b, _ = build_mesh(pts, cfg, dom, tagging="search")
    assert set(a.store) == set(b.store)
    tags = encode_points(pts, dom, cfg)
    assert tagged_leaves(a, tags) == tagged_leaves_by_search(a, pts) == []
    with pytest.raises(InvalidConfig):
        build_mesh(pts, cfg, dom, tagging="magic")


def test_tagged_leaves_match_box_oracle_on_partial_mesh():
    rng = np.random.default_rng(4)
    pts = rng.uniform(-0.5, 0.5, size=(30, 2))
    cfg = MeshConfig(2, 32, 6)
    dom = DomainBox((0, 0), (1.0, 1.0))
    tree = Octree(cfg, dom)
    for _ in range(40):
        key, L, _ = list(tree.leaves())[int(rng.integers(len(tree)))]
        if L < 5:
            apply_refinement(tree, balance_closure(tree, [(key, L)]))
    tags = encode_points(pts, dom, cfg)
    expected = sorted(
        (k, L) for k, L, _ in tree.leaves() if L < cfg.max_level and box_contains(cfg, dom, k, L, pts).any()
    )
    assert expected
    assert tagged_leaves(tree, tags) == expected
    assert tagged_leaves_by_search(tree, pts) == expected


def test_invalid_inputs(tmp_path, sphere_stl):
    with pytest.raises(InvalidConfig):
        generate(GenerateConfig())
    with pytest.raises(InvalidConfig):
        generate(GenerateConfig(stl=sphere_stl, dim=2))
    pts = tmp_path / "p.txt"
    pts.write_text("0 0\n1 1\n")
    with pytest.raises(InvalidConfig):
        generate(GenerateConfig(points=str(pts), dim=2, voxel_level=2))


def test_generate_2d_points_and_voxels(tmp_path, sphere_stl):
    pts = tmp_path / "p.txt"
    pts.write_text("0.1 0.2\n0.8 0.9\n0.5 0.5\n")
    tree, stats = generate(GenerateConfig(points=str(pts), dim=2, max_level=5))
    assert tree.validate_balance() and stats.n_points == 3
    _, stats = generate(GenerateConfig(stl=sphere_stl, max_level=4, voxel_level=1))
    assert stats.n_voxels == 8
    assert {"load", "voxelize", "encode", "tag", "balance", "refine", "export"} <= set(stats.phases_ms)


def test_bench_report(sphere_stl):
    report = bench(GenerateConfig(stl=sphere_stl), levels=[3, 4], repeat=3)
    assert report["leaf_counts_agree"]
    assert len(report["rows"]) == 4
    for row in report["rows"]:
        assert len(row["samples_total_ms"]) == 3
        assert row["median_total_ms"] == sorted(row["samples_total_ms"])[1]
        assert row["queue_comparison"]["sets_equal"]
    by_level = {}
    for row in report["rows"]:
        by_level.setdefault(row["level"], set()).add(row["total_leaves"])
    assert all(len(v) == 1 for v in by_level.values())
    with pytest.raises(InvalidConfig):
        bench(GenerateConfig(stl=sphere_stl), [3], repeat=0)
