"""Shared test utilities."""
import functools

from wgelastic.polymesh import GENERATORS


@functools.lru_cache(maxsize=None)
def cached_mesh(family, level):
    return GENERATORS[family](level)


# small meshes used throughout: one per family
SMALL = [("tri", 2), ("ncpoly2d", 2), ("tet3d", 1)]
