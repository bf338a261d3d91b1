"""Scene geometry: analytic primitives, STL meshes, BVH and ray queries."""
from .bvh import BVH, build_bvh_arrays
from .scene import (
    Hit,
    Ray,
    Scene,
    Surface,
    build_bvh,
    intersect,
    make_duct,
    make_plate,
    make_sphere,
    reflect,
)
from .shapes import Cylinder, Disc, Plate, Sphere, TriMesh
from .stl import StlParseError, load_stl, write_ascii_stl, write_stl

__all__ = [
    "BVH", "build_bvh_arrays", "Hit", "Ray", "Scene", "Surface", "build_bvh", "intersect",
    "make_duct", "make_plate", "make_sphere", "reflect", "Cylinder", "Disc", "Plate", "Sphere",
    "TriMesh", "StlParseError", "load_stl", "write_ascii_stl", "write_stl",
]
