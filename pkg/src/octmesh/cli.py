"""``octmesh`` command line: generate, bench, inspect."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from . import morton as mk
from .errors import OctmeshError
from .io_export import write_stats_json
from .morton import DomainBox, FaceDirection, MeshConfig
from .pipeline import GenerateConfig, bench, generate

log = logging.getLogger("octmesh")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _domain(values: list[float] | None, dim: int) -> DomainBox | None:
    if values is None:
        return None
    if len(values) != 2 * dim:
        raise UsageError(f"--domain needs {2 * dim} numbers (centre then lengths), got {len(values)}")
    return DomainBox(tuple(values[:dim]), tuple(values[dim:]))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="octmesh", description="2:1 balanced Cartesian octree meshes from Morton keys")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="mesh a geometry")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--stl", help="STL surface (3D)")
    src.add_argument("--points", help="point list, one point per line")
    g.add_argument("--dim", type=int, choices=(2, 3), default=3)
    g.add_argument("--max-level", type=int, default=6)
    g.add_argument("--key-bits", type=int, default=mk.DEFAULT_KEY_BITS)
    g.add_argument("--backend", choices=("ordered", "hashed"), default="ordered")
    g.add_argument("--domain", type=_floats, help="cx,cy[,cz],lx,ly[,lz]; default: fit to geometry")
    g.add_argument("--padding", type=float, default=1.5)
    g.add_argument("--geometry-points", choices=("centroids", "all"), default="centroids")
    g.add_argument("--voxel-level", type=int)
    g.add_argument("--out", help="VTK output")
    g.add_argument("--stats", help="JSON stats output")
    g.add_argument("--merge-points", action="store_true")
    g.add_argument("--zorder", help="Z-order key dump (ordered backend)")

    b = sub.add_parser("bench", help="time both leaf stores over several levels")
    bsrc = b.add_mutually_exclusive_group(required=True)
    bsrc.add_argument("--stl")
    bsrc.add_argument("--points")
    b.add_argument("--dim", type=int, choices=(2, 3), default=3)
    b.add_argument("--levels", type=_ints, required=True)
    b.add_argument("--backends", default="ordered,hashed")
    b.add_argument("--repeat", type=int, default=3)
    b.add_argument("--key-bits", type=int, default=mk.DEFAULT_KEY_BITS)
    b.add_argument("--padding", type=float, default=1.5)
    b.add_argument("--domain", type=_floats)
    b.add_argument("--stats", help="JSON report output")

    i = sub.add_parser("inspect", help="decode a Morton key")
    i.add_argument("--dim", type=int, choices=(2, 3), default=3)
    i.add_argument("--key", required=True, help='e.g. "001,000,101"')
    i.add_argument("--domain", type=_floats, help="cx,cy[,cz],lx,ly[,lz]; default unit box at origin")
    i.add_argument("--key-bits", type=int, default=mk.DEFAULT_KEY_BITS)
    i.add_argument("--level", type=int, help="element level (default: last nonzero group)")
    i.add_argument("--axis", choices=("x", "y", "z"))
    i.add_argument("--sign", choices=("+", "-"))
    return parser


def _cmd_generate(args) -> int:
    cfg = GenerateConfig(
        stl=args.stl, points=args.points, dim=args.dim, key_bits=args.key_bits,
        max_level=args.max_level, backend=args.backend, pad_factor=args.padding,
        domain=_domain(args.domain, args.dim), point_mode=args.geometry_points,
        voxel_level=args.voxel_level, out=args.out, stats=args.stats,
        zorder=args.zorder, merge_points=args.merge_points,
    )
    tree, stats = generate(cfg)
    print(f"leaves: {stats.total_leaves}  passes: {stats.passes}  backend: {stats.backend}")
    for L, n in enumerate(stats.per_level_counts, start=1):
        if n:
            print(f"  level {L:3d}: {n}")
    print("phases [ms]: " + ", ".join(f"{k}={v:.1f}" for k, v in stats.phases_ms.items()))
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = GenerateConfig(
        stl=args.stl, points=args.points, dim=args.dim, key_bits=args.key_bits,
        pad_factor=args.padding, domain=_domain(args.domain, args.dim),
    )
    backends = [s.strip() for s in args.backends.split(",") if s.strip()]
    for be in backends:
        if be not in ("ordered", "hashed"):
            raise UsageError(f"unknown backend {be!r}")
    report = bench(cfg, args.levels, backends, args.repeat)
    print(f"{'level':>5} {'backend':>8} {'leaves':>9} {'median ms':>10} {'bytes':>10}  closure hashed/linear ms")
    for row in report["rows"]:
        qc = row["queue_comparison"]
        print(
            f"{row['level']:>5} {row['backend']:>8} {row['total_leaves']:>9} "
            f"{row['median_total_ms']:>10.1f} {row['estimated_bytes']:>10}  "
            f"{qc['hashed_ms']:.1f}/{qc['linear_ms']:.1f} equal={qc['sets_equal']}"
        )
    if args.stats:
        write_stats_json(report, args.stats)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    cfg = MeshConfig(args.dim, args.key_bits)
    try:
        key = mk.parse_key(cfg, args.key)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    domain = _domain(args.domain, args.dim) or DomainBox((0.0,) * args.dim, (1.0,) * args.dim)
    level = args.level if args.level is not None else max(mk.scan_level(cfg, key), 1)
    fmt = lambda k: mk.format_key(cfg, k, level)  # noqa: E731
    print(f"key:      {fmt(key)}")
    print(f"level:    {level}")
    print(f"centroid: ({', '.join(repr(x) for x in mk.centroid(cfg, key, level, domain))})")
    print(f"edge:     ({', '.join(repr(x) for x in mk.edge_length(cfg, level, domain))})")
    for k in range(cfg.dim):
        print(f"sibling {'xyz'[k]}: {fmt(mk.sibling_key(cfg, key, level, k))}")
    for direction in mk.face_directions(cfg.dim):
        print(f"boundary {direction}: {str(mk.is_boundary(cfg, key, level, direction)).lower()}")
    if (args.axis is None) != (args.sign is None):
        raise UsageError("--axis and --sign go together")
    if args.axis is not None:
        direction = FaceDirection("xyz".index(args.axis), 1 if args.sign == "+" else -1)
        if direction.axis >= cfg.dim:
            raise UsageError(f"axis {args.axis} does not exist in {cfg.dim}D")
        nb = mk.same_level_neighbor_key(cfg, key, level, direction)
        print(f"neighbor {direction}: {'boundary' if nb is None else fmt(nb)}")
    return EXIT_OK


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
        handler = {"generate": _cmd_generate, "bench": _cmd_bench, "inspect": _cmd_inspect}[args.command]
        return handler(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (OctmeshError, OSError, ValueError) as exc:
        print(f"octmesh: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
