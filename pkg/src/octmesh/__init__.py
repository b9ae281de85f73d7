"""Balanced Cartesian octree meshes built on arbitrary-width Morton keys."""
from .balance import RefineQueue, apply_refinement, balance_closure
from .errors import *  # noqa: F401,F403
from .morton import DomainBox, FaceDirection, MeshConfig
from .octree import Boundary, Coarser, Finer, Octree, Same, init_octree
from .pipeline import GenerateConfig, RunStats, bench, build_mesh, generate

__version__ = "0.1.0"
