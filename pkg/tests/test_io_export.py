import pytest

from octmesh import DomainBox, GenerateConfig, MeshConfig, Octree, generate
from octmesh import morton as mk
from octmesh.errors import UnsupportedBackend
from octmesh.geometry import make_icosphere, write_stl
from octmesh.io_export import (
    VTK_HEXAHEDRON,
    VTK_QUAD,
    dump_zorder,
    read_stats_json,
    read_vtk_cells,
    stats_document,
    write_stats_json,
    write_vtk,
)

UNIT2 = DomainBox((0.5, 0.5), (1.0, 1.0))


def test_init_2d_vtk(tmp_path):
    tree = Octree(MeshConfig(2, 32), UNIT2)
    p = tmp_path / "a.vtk"
    write_vtk(tree, p)
    points, cells, types, levels = read_vtk_cells(p)
    assert len(cells) == 4 and len(points) == 16
    assert types == [VTK_QUAD] * 4 and levels == [1] * 4
    assert all(pt[2] == 0.0 for pt in points)
    write_vtk(tree, p, merge_points=True)
    points, cells, _, _ = read_vtk_cells(p)
    assert len(points) == 9
    assert sorted(points) == sorted((x, y, 0.0) for x in (0, 0.5, 1) for y in (0, 0.5, 1))


def test_quad_corner_order_is_counterclockwise(tmp_path):
    tree = Octree(MeshConfig(2, 32), UNIT2)
    p = tmp_path / "a.vtk"
    write_vtk(tree, p)
    points, cells, _, _ = read_vtk_cells(p)
    quad = [points[i][:2] for i in cells[0]]
    area2 = sum(quad[i][0] * quad[(i + 1) % 4][1] - quad[(i + 1) % 4][0] * quad[i][1] for i in range(4))
    assert area2 > 0


def test_hexahedron_corner_order(tmp_path):
    cfg = MeshConfig(3, 128, 4)
    tree = Octree(cfg, DomainBox((0, 0, 0), (1.0, 1.0, 1.0)))
    p = tmp_path / "h.vtk"
    write_vtk(tree, p)
    points, cells, types, _ = read_vtk_cells(p)
    assert types == [VTK_HEXAHEDRON] * 8
    hexa = [points[i] for i in cells[0]]
    # bottom face then top face, both counterclockwise seen from +z
    assert [v[2] for v in hexa] == [-0.5] * 4 + [0.0] * 4
    assert hexa[:4] == [(-0.5, -0.5, -0.5), (0.0, -0.5, -0.5), (0.0, 0.0, -0.5), (-0.5, 0.0, -0.5)]


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    stl = d / "s.stl"
    write_stl(make_icosphere(2), stl)
    cfg = GenerateConfig(stl=str(stl), max_level=5, out=str(d / "m.vtk"), stats=str(d / "s.json"), zorder=str(d / "z.txt"))
    tree, stats = generate(cfg)
    return d, cfg, tree, stats


def test_vtk_matches_tree(run):
    d, _, tree, _ = run
    _, cells, _, levels = read_vtk_cells(d / "m.vtk")
    assert len(cells) == len(tree)
    assert levels == [L for _, L, _ in tree.sorted_leaves()]


def test_stats_document(run, tmp_path):
    d, cfg, tree, stats = run
    doc = read_stats_json(d / "s.json")
    assert doc["schema_version"] == 1
    assert len(doc["per_level_counts"]) == cfg.max_level
    assert doc["total_leaves"] == len(read_vtk_cells(d / "m.vtk")[1]) == len(tree)
    assert doc["config"]["max_level"] == 5
    again = tmp_path / "again.json"
    write_stats_json(stats_document(stats, cfg), again)
    assert read_stats_json(again) == stats_document(stats, cfg) == doc


def test_zorder_dump(run):
    d, _, tree, _ = run
    lines = (d / "z.txt").read_text().splitlines()
    assert len(lines) == len(tree)
    cfg = tree.config
    ints = [mk.parse_key(cfg, line) for line in lines]
    assert ints == sorted(ints)


def test_zorder_seven_leaves(tmp_path):
    cfg = MeshConfig(2, 4, 2)
    tree = Octree(cfg, UNIT2)
    tree.refine_leaf(mk.parse_key(cfg, "10"), 1)
    p = tmp_path / "z.txt"
    dump_zorder(tree, p)
    lines = p.read_text().splitlines()
    assert lines == ["00", "01", "10,00", "10,01", "10,10", "10,11", "11"]
    assert [mk.to_integer(cfg, mk.parse_key(cfg, t), 2) for t in lines] == [0, 4, 8, 9, 10, 11, 12]
    with pytest.raises(UnsupportedBackend):
        dump_zorder(Octree(cfg, UNIT2, "hashed"), p)
