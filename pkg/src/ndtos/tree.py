"""Tree construction over the propagation order, emersion and attributes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .interpolate import IntervalImage, immerse
from .sorting import SortResult, sort


@dataclass
class ShapeTree:
    """Parent function over flat face indices of the enlarged domain.

    ``R`` is root-first; after emersion it holds only primary faces, preceded
    by the exterior face when the root level has no pixel (see
    :func:`emerge`).  ``pixel_shape`` is the shape of the original image.
    """

    parent: np.ndarray
    R: np.ndarray
    u_flat: np.ndarray
    primary: np.ndarray
    shape: tuple
    pixel_shape: tuple
    emerged: bool = False
    pre_emersion: "ShapeTree | None" = None

    @property
    def root(self) -> int:
        return int(self.R[0])

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def is_canonical(self, p) -> bool:
        q = self.parent[p]
        return q == p or self.u_flat[q] != self.u_flat[p]

    def canonical_elements(self) -> np.ndarray:
        """Node representatives in ``R`` order."""
        R = self.R
        par = self.parent[R]
        mask = (par == R) | (self.u_flat[par] != self.u_flat[R])
        return R[mask]

    @property
    def node_count(self) -> int:
        return int(self.canonical_elements().shape[0])

    def node_of(self) -> np.ndarray:
        """Canonical element of each face listed in ``R`` (aligned with ``R``)."""
        R = self.R
        par = self.parent[R]
        canon = (par == R) | (self.u_flat[par] != self.u_flat[R])
        return np.where(canon, R, par)

    def pixel_index(self, faces) -> np.ndarray:
        """Flat pixel index of primary faces (coords ``4*q + 3``)."""
        coords = np.unravel_index(np.asarray(faces), self.shape)
        q = tuple((c - 3) // 4 for c in coords)
        return np.ravel_multi_index(q, self.pixel_shape)


@njit(cache=True)
def find_root(zpar, x):
    """Root of ``x`` in ``zpar``, compressing the whole path onto it."""
    if zpar[x] < 0:
        raise ValueError("find_root on an undefined element")
    r = x
    while zpar[r] != r:
        r = zpar[r]
    while zpar[x] != r:
        nx = zpar[x]
        zpar[x] = r
        x = nx
    return r


@njit(cache=True)
def _union_find_kernel(R, shape, parent, zpar, rank, last):
    # find_root and union by rank are inlined by hand; numba calls passing
    # several arrays cost more than the work they do here.
    n = R.shape[0]
    ndim = shape.shape[0]
    strides = np.empty(ndim, dtype=np.int64)
    s = 1
    for k in range(ndim - 1, -1, -1):
        strides[k] = s
        s *= shape[k]
    for i in range(n - 1, -1, -1):
        p = R[i]
        parent[p] = p
        zpar[p] = p
        last[p] = i
        pr = p  # root of p's set, updated after each union
        rem = p
        for k in range(ndim):
            c = rem // strides[k]
            rem -= c * strides[k]
            for side in range(2):
                if side == 0:
                    if c == 0:
                        continue
                    nb = p - strides[k]
                else:
                    if c == shape[k] - 1:
                        continue
                    nb = p + strides[k]
                if zpar[nb] < 0:
                    continue
                rr = nb
                while zpar[rr] != rr:
                    rr = zpar[rr]
                x = nb
                while zpar[x] != rr:
                    nx = zpar[x]
                    zpar[x] = rr
                    x = nx
                if rr == pr:
                    continue
                parent[R[last[rr]]] = p
                if rank[pr] > rank[rr]:
                    zpar[rr] = pr
                    if last[rr] < last[pr]:
                        last[pr] = last[rr]
                else:
                    zpar[pr] = rr
                    if last[pr] < last[rr]:
                        last[rr] = last[pr]
                    if rank[pr] == rank[rr]:
                        rank[rr] += 1
                    pr = rr
    return parent


def union_find(R: np.ndarray, shape: tuple) -> np.ndarray:
    """Parent function built from the ancestor order ``R`` (leaves to root)."""
    R = np.ascontiguousarray(R, dtype=np.int32)
    n = R.shape[0]
    # numpy-allocated work arrays get huge pages (see sorting.sort)
    return _union_find_kernel(R, np.asarray(shape, dtype=np.int64), np.empty(n, dtype=np.int32),
                              np.full(n, -1, dtype=np.int32), np.zeros(n, dtype=np.uint8),
                              np.empty(n, dtype=np.int32))


@njit(cache=True)
def _canonicalize_kernel(parent, R, u_flat):
    for i in range(R.shape[0]):
        p = R[i]
        q = parent[p]
        if u_flat[parent[q]] == u_flat[q]:
            parent[p] = parent[q]


def canonicalize(parent: np.ndarray, R: np.ndarray, u_flat: np.ndarray) -> None:
    """Point every parent at a canonical element, in place."""
    _canonicalize_kernel(parent, np.ascontiguousarray(R, dtype=np.int32), u_flat)


@njit(cache=True)
def _emerge_kernel(parent, R, u_flat, primary):
    n = R.shape[0]
    # Rearrange: a primary face becomes the representative of its node.
    for i in range(n):
        p = R[i]
        if not primary[p]:
            continue
        q = p
        while parent[q] != q and u_flat[parent[q]] == u_flat[q]:
            q = parent[q]
        if q == p:
            continue
        if not primary[q]:
            if parent[q] == q:
                parent[p] = p
            else:
                parent[p] = parent[q]
            parent[q] = p

    root = R[0]
    while parent[root] != root:
        root = parent[root]

    out = np.empty(n, dtype=np.int32)
    j = 0
    if not primary[root]:
        # No pixel at the root level: keep the exterior face as a virtual root.
        out[0] = root
        j = 1
    for i in range(n):
        p = R[i]
        if primary[p]:
            out[j] = p
            j += 1
            x = p
            while True:
                x = parent[x]
                if primary[x] or parent[x] == x:
                    break
            parent[p] = x
    out = out[:j].copy()
    _canonicalize_kernel(parent, out, u_flat)
    return out


def emerge(parent: np.ndarray, R: np.ndarray, u_flat: np.ndarray, primary: np.ndarray) -> tuple:
    """Restrict a canonical tree on the enlarged domain to the primary faces.

    Works on a copy of ``parent``.  Returns ``(parent', R')``; ``R'`` lists
    the primary faces root first.  When the root node holds no primary face
    (a border level no pixel reaches, or in 1-D an enclosed end of the
    border), the exterior face is kept as ``R'[0]``.
    """
    parent = parent.copy()
    R_out = _emerge_kernel(parent, np.ascontiguousarray(R, dtype=np.int32), u_flat,
                           np.ascontiguousarray(primary).ravel())
    return parent, R_out


def build_tree(U: IntervalImage, policy="down", keep_pre_emersion: bool = False) -> ShapeTree:
    """Sort, union-find, canonicalize and emerge an immersion."""
    s = sort(U, policy)
    return tree_from_sort(U, s, keep_pre_emersion=keep_pre_emersion)


def tree_from_sort(U: IntervalImage, s: SortResult, keep_pre_emersion: bool = False) -> ShapeTree:
    primary = U.primary.ravel() if U.primary is not None else np.zeros(U.lo.size, dtype=bool)
    pixel_shape = U.pixel_shape() if U.primary is not None else ()
    parent = union_find(s.R, U.lo.shape)
    canonicalize(parent, s.R, s.u_flat)
    pre = ShapeTree(parent, s.R, s.u_flat, primary, tuple(U.lo.shape), pixel_shape)
    parent2, R2 = emerge(parent, s.R, s.u_flat, primary)
    t = ShapeTree(parent2, R2, s.u_flat, primary, tuple(U.lo.shape), pixel_shape, emerged=True)
    if keep_pre_emersion:
        t.pre_emersion = pre
    return t


def compute_tree_of_shapes(u, interpolation: str = "max", l_inf="median", policy="down",
                           keep_pre_emersion: bool = False) -> ShapeTree:
    """Tree of shapes of an n-D integer image.

    Parameters
    ----------
    u : integer ndarray
    interpolation : {"max", "min"}
    l_inf : int or "median"
        Border level (default: lower median of the border pixels).
    policy : {"down", "up"}
        Tie rule of the hierarchical queue.
    keep_pre_emersion : bool
        Also keep the tree over the whole enlarged domain in ``pre_emersion``.
    """
    U = immerse(u, interpolation=interpolation, l_inf=l_inf)
    return build_tree(U, policy=policy, keep_pre_emersion=keep_pre_emersion)


@dataclass
class NodeAttributes:
    """Per-node table; node ``i`` is ``nodes[i]`` and nodes follow ``R`` order."""

    nodes: np.ndarray
    parent: np.ndarray
    level: np.ndarray
    area: np.ndarray
    depth: np.ndarray

    def __len__(self) -> int:
        return int(self.nodes.shape[0])


@njit(cache=True)
def _depths(parent):
    depth = np.zeros(parent.shape[0], dtype=np.int64)
    for i in range(1, parent.shape[0]):
        depth[i] = depth[parent[i]] + 1
    return depth


@njit(cache=True)
def _accumulate(values, parent):
    # Children come after their parent, so a reverse sweep sums subtrees.
    out = values.copy()
    for i in range(parent.shape[0] - 1, 0, -1):
        out[parent[i]] += out[i]
    return out


@njit(cache=True)
def _survivors(keep, parent):
    target = np.arange(parent.shape[0])
    for i in range(1, parent.shape[0]):
        if not keep[i]:
            target[i] = target[parent[i]]
    return target


def _node_ids(t: ShapeTree, nodes: np.ndarray) -> np.ndarray:
    ids = np.full(t.parent.shape[0], -1, dtype=np.int64)
    ids[nodes] = np.arange(len(nodes))
    return ids


def node_table(t: ShapeTree) -> NodeAttributes:
    nodes = t.canonical_elements()
    ids = _node_ids(t, nodes)
    parent = ids[t.parent[nodes]]
    level = t.u_flat[nodes].astype(np.int64)
    return NodeAttributes(nodes, parent, level, np.zeros(len(nodes), dtype=np.int64), _depths(parent))


def area_attribute(t: ShapeTree) -> NodeAttributes:
    """Number of primary faces (pixels) in each node's shape."""
    attrs = node_table(t)
    ids = _node_ids(t, attrs.nodes)
    own = np.bincount(ids[t.node_of()], weights=t.primary[t.R], minlength=len(attrs)).astype(np.int64)
    attrs.area = _accumulate(own, attrs.parent)
    return attrs


def reconstruct(t: ShapeTree) -> np.ndarray:
    """Image rebuilt from the canonical representation: each face gets its node level."""
    out = np.zeros_like(t.u_flat)
    out[t.R] = t.u_flat[t.node_of()]
    return out


def grain_filter(t: ShapeTree, u, k: int) -> np.ndarray:
    """Give each pixel the level of its nearest ancestor node of area >= ``k``."""
    if k < 0:
        raise ValueError("grain size must be >= 0")
    if not t.emerged:
        raise ValueError("grain filter needs an emerged tree")
    u = np.asarray(u)
    attrs = area_attribute(t)
    keep = attrs.area >= k
    keep[0] |= not keep.any()
    target = _survivors(keep, attrs.parent)
    node_ids = _node_ids(t, attrs.nodes)[t.node_of()]
    levels = attrs.level[target[node_ids]]
    out = np.array(u, copy=True)
    is_pixel = t.primary[t.R]
    flat = out.reshape(-1)
    flat[t.pixel_index(t.R[is_pixel])] = levels[is_pixel]
    return out


def canonical_order(t: ShapeTree, attrs: NodeAttributes | None = None) -> NodeAttributes:
    """Renumber nodes by (depth, smallest pixel of the proper part).

    The result does not depend on the queue policy, and parents still come
    before children.  Only the root can lack own pixels, and it is alone at depth 0.
    """
    attrs = area_attribute(t) if attrs is None else attrs
    is_pixel = t.primary[t.R]
    ids = _node_ids(t, attrs.nodes)[t.node_of()[is_pixel]]
    first = np.full(len(attrs), np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first, ids, t.pixel_index(t.R[is_pixel]))
    perm = np.lexsort((first, attrs.depth))
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return NodeAttributes(attrs.nodes[perm], inv[attrs.parent[perm]], attrs.level[perm],
                          attrs.area[perm], attrs.depth[perm])
