"""Topology of the n-dimensional Khalimsky grid.

Faces are stored in doubled integer coordinates: along each axis an even
coordinate ``c`` stands for the point ``{c/2}`` and an odd one for the unit
interval ``{(c-1)/2, (c+1)/2}``.  A domain is the full hyper-rectangle of
faces ``0 <= coords[i] < shape[i]`` and a set of faces is a boolean array of
that shape (row-major face indices are the flat positions of that array).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

Face = tuple


@dataclass(frozen=True)
class Domain:
    """Hyper-rectangle of faces with origin at zero."""

    shape: tuple

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if not shape or any(s < 1 for s in shape):
            raise ValueError(f"invalid domain shape {self.shape!r}")
        object.__setattr__(self, "shape", shape)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def __contains__(self, f) -> bool:
        return len(f) == self.ndim and all(0 <= c < s for c, s in zip(f, self.shape))

    def index(self, f: Sequence[int]) -> int:
        """Row-major index of face ``f``."""
        return int(np.ravel_multi_index(tuple(f), self.shape))

    def face(self, index: int) -> Face:
        return tuple(int(c) for c in np.unravel_index(index, self.shape))

    def empty(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=bool)

    def full(self) -> np.ndarray:
        return np.ones(self.shape, dtype=bool)

    def faces(self, E: np.ndarray) -> list:
        """List the faces of a face set, in row-major order."""
        return [tuple(int(c) for c in f) for f in np.argwhere(E)]

    def from_faces(self, faces: Iterable[Sequence[int]]) -> np.ndarray:
        E = self.empty()
        for f in faces:
            self._check(f)
            E[tuple(f)] = True
        return E

    def n_faces(self) -> np.ndarray:
        """Mask of the n-faces (all coordinates odd)."""
        mask = self.full()
        for axis, s in enumerate(self.shape):
            odd = (np.arange(s) % 2 == 1).reshape([-1 if a == axis else 1 for a in range(self.ndim)])
            mask &= odd
        return mask

    def dimension_map(self) -> np.ndarray:
        """Dimension of every face of the domain."""
        dims = np.zeros(self.shape, dtype=np.int8)
        for axis, s in enumerate(self.shape):
            dims += (np.arange(s) % 2).reshape([-1 if a == axis else 1 for a in range(self.ndim)]).astype(np.int8)
        return dims

    def _check(self, f):
        if f not in self:
            raise ValueError(f"face {tuple(f)} is outside the domain {self.shape}")


def face_dim(f: Sequence[int]) -> int:
    """Number of odd coordinates, i.e. the dimension of the face."""
    return sum(int(c) & 1 for c in f)


def includes(f: Sequence[int], g: Sequence[int]) -> bool:
    """True when face ``f`` is a subset of face ``g``."""
    return all(a == b or (not a & 1 and abs(a - b) == 1) for a, b in zip(f, g))


def comparable(f: Sequence[int], g: Sequence[int]) -> bool:
    return includes(f, g) or includes(g, f)


def _local(f, d: Domain, open_side: bool) -> np.ndarray:
    d._check(f)
    ranges = []
    for c, s in zip(f, d.shape):
        grow = (c % 2 == 0) if open_side else (c % 2 == 1)
        ranges.append([x for x in ((c - 1, c, c + 1) if grow else (c,)) if 0 <= x < s])
    return d.from_faces(product(*ranges))


def star(f: Sequence[int], d: Domain) -> np.ndarray:
    """Faces of ``d`` that contain ``f``."""
    return _local(f, d, open_side=True)


def closure(f: Sequence[int], d: Domain) -> np.ndarray:
    """Faces of ``d`` contained in ``f``."""
    return _local(f, d, open_side=False)


def _dilate(E: np.ndarray, targets_odd: bool) -> np.ndarray:
    # One axis at a time: both relations are products of 1-D relations.
    out = np.array(E, dtype=bool, copy=True)
    for axis in range(out.ndim):
        a = np.moveaxis(out, axis, 0)
        src = a.copy()
        if targets_odd:
            dst = a[1::2]
            m = dst.shape[0]
            dst |= src[0::2][:m]
            right = src[2::2]
            dst[: right.shape[0]] |= right
        else:
            odd = src[1::2]
            a[0::2][: odd.shape[0]] |= odd
            a[2::2] |= odd[: a[2::2].shape[0]]
    return out


def set_star(E: np.ndarray, d: Domain | None = None) -> np.ndarray:
    """Smallest open set containing ``E``."""
    return _dilate(E, targets_odd=True)


def set_closure(E: np.ndarray, d: Domain | None = None) -> np.ndarray:
    """Smallest closed set containing ``E``."""
    return _dilate(E, targets_odd=False)


def is_open(E: np.ndarray) -> bool:
    return bool(np.array_equal(set_star(E), E))


def is_closed(E: np.ndarray) -> bool:
    return bool(np.array_equal(set_closure(E), E))


def interior(E: np.ndarray, d: Domain | None = None) -> np.ndarray:
    """Largest open subset of ``E``."""
    return ~set_closure(~np.asarray(E, dtype=bool))


def boundary(E: np.ndarray, d: Domain | None = None) -> np.ndarray:
    """Combinatorial boundary ``cl(E) & cl(d - E)``."""
    E = np.asarray(E, dtype=bool)
    return set_closure(E) & set_closure(~E)


def interior_boundary(F: np.ndarray, d: Domain | None = None, method: str = "definition") -> np.ndarray:
    """Interior boundary of an open set.

    ``method="definition"`` computes ``st(boundary(F)) & F``;
    ``method="stars"`` computes ``st(F) & st(d - F)``.  Both agree on open sets.
    """
    F = np.asarray(F, dtype=bool)
    if not is_open(F):
        raise ValueError("interior boundary requires an open set")
    if method == "definition":
        return set_star(boundary(F)) & F
    if method == "stars":
        return set_star(F) & set_star(~F)
    raise ValueError(f"unknown method {method!r}")


@lru_cache(maxsize=None)
def _structure(ndim: int, rank: int) -> np.ndarray:
    return ndimage.generate_binary_structure(ndim, rank)


def label(E: np.ndarray, rank: int = 1) -> tuple:
    """Label connected components; ``rank=1`` is the 2n-adjacency."""
    E = np.asarray(E, dtype=bool)
    return ndimage.label(E, structure=_structure(E.ndim, rank))


def connected_components(E: np.ndarray, d: Domain | None = None) -> list:
    """Components of ``E`` under the 2n-adjacency, in scan order of first face."""
    labels, count = label(E)
    return [labels == k for k in range(1, count + 1)]


def is_connected(E: np.ndarray) -> bool:
    return label(E)[1] == 1


def saturation(E: np.ndarray, d: Domain | None, p_inf: Sequence[int]) -> np.ndarray:
    """Fill the cavities of ``E``: everything but the complement component of ``p_inf``."""
    E = np.asarray(E, dtype=bool)
    p = tuple(p_inf)
    if E[p]:
        raise ValueError(f"exterior face {p} belongs to the set")
    labels, _ = label(~E)
    return labels != labels[p]


def is_discrete_surface(E, k: int) -> bool:
    """Recursive discrete-surface test with star/closure taken inside ``E``.

    ``E`` is either a face set (boolean array) or an iterable of faces.
    """
    if k < -1:
        raise ValueError("k must be >= -1")
    if isinstance(E, np.ndarray) and E.dtype == bool:
        faces = [tuple(int(c) for c in f) for f in np.argwhere(E)]
    else:
        faces = [tuple(int(c) for c in f) for f in E]
    return _surface(frozenset(faces), k)


def _surface(faces: frozenset, k: int) -> bool:
    if k == -1:
        return not faces
    if k == 0:
        if len(faces) != 2:
            return False
        a, b = faces
        return not comparable(a, b)
    if len(faces) < 2 or not _poset_connected(faces):
        return False
    for h in faces:
        if not _surface(_punctured(h, faces), k - 1):
            return False
    return True


def _neighbors_in(h, faces) -> list:
    out = []
    for delta in product((-1, 0, 1), repeat=len(h)):
        g = tuple(c + e for c, e in zip(h, delta))
        if g != h and g in faces and comparable(h, g):
            out.append(g)
    return out


def _punctured(h, faces) -> frozenset:
    return frozenset(_neighbors_in(h, faces))


def _poset_connected(faces: frozenset) -> bool:
    start = next(iter(faces))
    seen = {start}
    stack = [start]
    while stack:
        h = stack.pop()
        for g in _neighbors_in(h, faces):
            if g not in seen:
                seen.add(g)
                stack.append(g)
    return len(seen) == len(faces)


def is_separated_union(parts: Sequence[np.ndarray]) -> bool:
    for i, Xi in enumerate(parts):
        reach = set_star(Xi) | set_closure(Xi)
        for j, Xj in enumerate(parts):
            if i != j and np.any(reach & Xj):
                return False
    return True


def is_well_composed_set(E: np.ndarray, d: Domain | None = None) -> bool:
    """True iff the boundary of ``E`` is a separated union of (n-1)-surfaces.

    ``E`` is judged as a subset of the unbounded grid: faces outside the
    domain count as complement, so a set touching the domain edge is closed
    off there rather than cut open.
    """
    # A margin of two keeps the parity of every coordinate.
    E = np.pad(np.asarray(E, dtype=bool), 2)
    B = boundary(E)
    if not B.any():
        return True
    n = E.ndim
    if n == 1:
        # 0-surfaces are pairs of isolated points; boundaries hold no 1-face.
        return int(B.sum()) % 2 == 0
    parts = connected_components(B)
    if not is_separated_union(parts):
        return False
    # Components come from a closed set, so 2n-connectivity equals poset
    # connectivity; each face's neighbourhood only sees its own component.
    return _all_neighbourhoods_are_surfaces(B, n - 2)


def _all_neighbourhoods_are_surfaces(B: np.ndarray, k: int) -> bool:
    # The punctured neighbourhood of h inside B depends only on the parity of h
    # and on the membership pattern of its 3^n box; verdicts are cached per
    # pattern.
    n = B.ndim
    padded = np.pad(B, 1)
    coords = np.argwhere(B)
    offsets = list(product((-1, 0, 1), repeat=n))
    bits = np.zeros(len(coords), dtype=np.int64)
    for bit, delta in enumerate(offsets):
        idx = tuple(coords[:, a] + 1 + delta[a] for a in range(n))
        bits |= padded[idx].astype(np.int64) << bit
    parity = coords % 2
    keys = np.unique(np.column_stack([parity, bits]), axis=0)
    return all(_pattern_is_surface(tuple(int(v) for v in key[:n]), int(key[n]), k) for key in keys)


@lru_cache(maxsize=1 << 16)
def _pattern_is_surface(par: tuple, pattern: int, k: int) -> bool:
    # Place h at a coordinate of the right parity, away from zero.
    h = tuple(2 + p for p in par)
    offsets = product((-1, 0, 1), repeat=len(par))
    members = frozenset(
        tuple(c + e for c, e in zip(h, delta))
        for bit, delta in enumerate(offsets)
        if pattern >> bit & 1
    )
    return _surface(_punctured(h, members), k)


def is_regular(T: np.ndarray) -> bool:
    """``Int(Cl(T)) == T``."""
    return bool(np.array_equal(interior(set_closure(T)), np.asarray(T, dtype=bool)))
