"""Tree of shapes of n-dimensional integer images.

The image is interpolated into a well-composed set-valued map on the
Khalimsky grid, its faces are sorted by front propagation from the exterior,
and a union-find pass turns that order into the tree.
"""
from .interpolate import immerse, max_interpolation, min_interpolation
from .sorting import sort
from .tree import (
    ShapeTree,
    area_attribute,
    build_tree,
    compute_tree_of_shapes,
    grain_filter,
    reconstruct,
)

__all__ = [
    "ShapeTree",
    "area_attribute",
    "build_tree",
    "compute_tree_of_shapes",
    "grain_filter",
    "immerse",
    "max_interpolation",
    "min_interpolation",
    "reconstruct",
    "sort",
]
__version__ = "0.1.0"
