"""Brute-force tree of shapes from threshold sets and saturation.

Slow on purpose: every cut is labelled and every component saturated.  Used
to check the propagation-based construction on small inputs.

Thresholds are half-integers ``t + 1/2`` given by the integer ``t``, which is
exact for integer-valued images.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import grid
from .interpolate import IntervalImage, border_median
from .tree import ShapeTree

UPPER = "upper"
LOWER = "lower"
ROOT = "root"


class TreeViolation(ValueError):
    """Two shapes overlap without being nested."""


class OracleError(AssertionError):
    """A topological property expected during enumeration failed."""


@dataclass
class Shape:
    mask: np.ndarray
    polarity: str
    level: int

    @property
    def size(self) -> int:
        return int(self.mask.sum())


@dataclass
class ShapeSet:
    """Shapes of an image; ``shapes[0]`` is the whole domain."""

    shapes: list
    p_inf: tuple
    parent: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.shapes)

    def keys(self) -> list:
        return [_key(s.mask) for s in self.shapes]


def _key(mask: np.ndarray) -> bytes:
    return np.packbits(mask.ravel()).tobytes()


def strict_threshold_set(U: IntervalImage, t: int, polarity: str) -> np.ndarray:
    """Faces whose whole interval lies above (``upper``) or below (``lower``) ``t + 1/2``."""
    if polarity == UPPER:
        return U.lo > t
    if polarity == LOWER:
        return U.hi <= t
    raise ValueError(f"unknown polarity {polarity!r}")


class _Collector:
    def __init__(self, shape, p_inf, root_level):
        self.p_inf = tuple(p_inf)
        self.root = np.ones(shape, dtype=bool)
        self.found = {_key(self.root): Shape(self.root, ROOT, root_level)}

    def add(self, mask, polarity, level):
        k = _key(mask)
        s = self.found.get(k)
        if s is None:
            self.found[k] = Shape(mask, polarity, level)
        elif s.polarity == polarity:
            # Upper shapes keep their highest generating level, lower the lowest.
            s.level = max(s.level, level) if polarity == UPPER else min(s.level, level)

    def result(self) -> ShapeSet:
        shapes = list(self.found.values())
        shapes.sort(key=lambda s: (-s.size, _key(s.mask)))
        ss = ShapeSet(shapes, self.p_inf)
        ss.parent = inclusion_tree(ss)
        return ss


def shapes_bruteforce(U: IntervalImage, check: bool = True) -> ShapeSet:
    """All saturated components of all strict threshold sets of ``U``."""
    p = tuple(U.p_inf)
    col = _Collector(U.lo.shape, p, int(U.l_inf))
    for t in range(int(U.lo.min()) - 1, int(U.hi.max()) + 1):
        for polarity in (UPPER, LOWER):
            cut = strict_threshold_set(U, t, polarity)
            if check and not grid.is_open(cut):
                raise OracleError(f"{polarity} cut at {t}+1/2 is not open")
            labels, count = grid.label(cut)
            for lab in range(1, count + 1):
                comp = labels == lab
                if comp[p]:
                    continue
                sat = grid.saturation(comp, None, p)
                if check and not (grid.is_open(sat) and grid.is_connected(sat)):
                    raise OracleError(f"saturated {polarity} component at {t}+1/2 is not open and connected")
                col.add(sat, polarity, t + 1 if polarity == UPPER else t)
    return col.result()


def inclusion_tree(s: ShapeSet) -> list:
    """Parent index of every shape (smallest strict superset); the root is its own parent."""
    if not s.shapes:
        return []
    M = np.stack([sh.mask.ravel() for sh in s.shapes]).astype(np.int64)
    inter = M @ M.T
    size = np.diag(inter)
    k = len(s.shapes)
    sub = inter == size[:, None]  # sub[i, j]: shape i inside shape j
    bad = (inter > 0) & ~sub & ~sub.T
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise TreeViolation(f"shapes {i} and {j} overlap without nesting")
    root = int(np.argmax(size))
    parent = []
    for i in range(k):
        if i == root:
            parent.append(i)
            continue
        cands = [j for j in range(k) if j != i and sub[i, j] and size[j] > size[i]]
        if not cands:
            raise TreeViolation(f"shape {i} has no strict superset")
        parent.append(min(cands, key=lambda j: size[j]))
    return parent


def _rank(ndim: int, neighbours: int) -> int:
    if neighbours == 2 * ndim:
        return 1
    if neighbours == 3 ** ndim - 1:
        return ndim
    raise ValueError(f"unsupported connectivity {neighbours} in {ndim}-D")


def shapes_bruteforce_pixels(u, l_inf="median", c_lower: int | None = None, c_upper: int | None = None,
                             interpolation: str = "max") -> ShapeSet:
    """Tree of shapes on the pixel grid with dual connectivities.

    The image is framed by one pixel at ``l_inf``; ``p_inf`` is the origin of
    the framed grid.  Defaults follow the interpolation: max gives 2n-connected
    lower cuts and (3^n - 1)-connected upper cuts, min the reverse.
    """
    u = np.asarray(u)
    n = u.ndim
    small, large = 2 * n, 3 ** n - 1
    if interpolation == "min":
        small, large = large, small
    c_lower = small if c_lower is None else c_lower
    c_upper = large if c_upper is None else c_upper
    if l_inf == "median":
        l_inf = border_median(u)
    w = np.pad(u.astype(np.int64), 1, constant_values=int(l_inf))
    p = (0,) * n
    col = _Collector(w.shape, p, int(l_inf))
    s_low = ndimage.generate_binary_structure(n, _rank(n, c_lower))
    s_up = ndimage.generate_binary_structure(n, _rank(n, c_upper))
    inner = tuple(slice(1, -1) for _ in range(n))
    for lam in range(int(w.min()), int(w.max()) + 2):
        for polarity, cut, s_cut, s_comp in ((LOWER, w < lam, s_low, s_up), (UPPER, w >= lam, s_up, s_low)):
            labels, count = ndimage.label(cut, structure=s_cut)
            for lab in range(1, count + 1):
                comp = labels == lab
                if comp[p]:
                    continue
                ext, _ = ndimage.label(~comp, structure=s_comp)
                sat = ext != ext[p]
                if not sat[inner].any():
                    continue  # frame pixels only (1-D: the frame is two pieces)
                col.add(sat, polarity, lam if polarity == UPPER else lam - 1)
    return col.result()


def fast_shapes(t: ShapeTree) -> tuple:
    """Materialize the nodes of a computed tree as ``(masks, levels, parents)``.

    Before emersion the masks live on the enlarged face domain; after it on
    the pixel grid framed by one border pixel, the root also owning the frame.
    """
    nodes = t.canonical_elements()
    ids = np.full(t.parent.shape[0], -1, dtype=np.int64)
    ids[nodes] = np.arange(len(nodes))
    parents = ids[t.parent[nodes]]
    node_ids = ids[t.node_of()]
    if t.emerged:
        shape = tuple(s + 2 for s in t.pixel_shape)
        is_pixel = t.primary[t.R]
        coords = np.unravel_index(t.R[is_pixel], t.shape)
        flat = np.ravel_multi_index(tuple((c - 3) // 4 + 1 for c in coords), shape)
        members = node_ids[is_pixel]
        size = int(np.prod(shape))
    else:
        shape = t.shape
        flat = t.R
        members = node_ids
        size = t.parent.shape[0]
    masks = np.zeros((len(nodes), size), dtype=bool)
    masks[members, flat] = True
    for i in range(len(nodes) - 1, 0, -1):
        masks[parents[i]] |= masks[i]
    masks = [m.reshape(shape) for m in masks]
    if t.emerged:
        frame = np.ones(shape, dtype=bool)
        frame[tuple(slice(1, -1) for _ in shape)] = False
        masks[0] |= frame
        # A frame pixel belongs to a shape when the shape encloses it, which
        # only happens in 1-D where the frame is not connected.
        origin = (0,) * len(shape)
        for m in masks[1:]:
            labels, _ = grid.label(~m)
            m |= frame & (labels != labels[origin])
    levels = t.u_flat[nodes].astype(np.int64)
    return masks, levels, parents


def tree_equiv(fast: ShapeTree, slow: ShapeSet, compare_levels: bool = True) -> tuple:
    """Compare a computed tree with brute-force shapes.

    Returns ``(equal, report)``; the report names the first mismatch.
    """
    masks, levels, parents = fast_shapes(fast)
    if masks[0].shape != slow.shapes[0].mask.shape:
        return False, f"domain mismatch: {masks[0].shape} vs {slow.shapes[0].mask.shape}"
    fkeys = [_key(m) for m in masks]
    skeys = slow.keys()
    fidx = {k: i for i, k in enumerate(fkeys)}
    sidx = {k: i for i, k in enumerate(skeys)}
    if len(fidx) != len(fkeys):
        return False, "computed tree has two nodes with the same shape"
    for k, j in sidx.items():
        if k not in fidx:
            sh = slow.shapes[j]
            return False, (f"missing shape: {sh.polarity} level {sh.level}, {sh.size} elements, "
                           f"first at {tuple(int(c) for c in np.argwhere(sh.mask)[0])}")
    for k, i in fidx.items():
        if k not in sidx:
            return False, (f"extra node {i}: level {levels[i]}, {int(masks[i].sum())} elements, "
                           f"first at {tuple(int(c) for c in np.argwhere(masks[i])[0])}")
    for k, i in fidx.items():
        j = sidx[k]
        if fkeys[parents[i]] != skeys[slow.parent[j]]:
            return False, f"node {i} (level {levels[i]}) has a different parent"
        if compare_levels and int(levels[i]) != slow.shapes[j].level:
            return False, f"node {i}: level {levels[i]} vs shape level {slow.shapes[j].level}"
    return True, f"{len(fkeys)} shapes equal"


def level_set(U: IntervalImage, level: int) -> np.ndarray:
    """Faces whose interval contains ``level``."""
    return (U.lo <= level) & (level <= U.hi)


def proper_part(s: ShapeSet, i: int) -> np.ndarray:
    """Shape ``i`` minus the union of its children."""
    out = s.shapes[i].mask.copy()
    for j, pj in enumerate(s.parent):
        if pj == i and j != i:
            out &= ~s.shapes[j].mask
    return out


def proper_part_formula(U: IntervalImage, s: ShapeSet, i: int) -> np.ndarray:
    """Proper part rebuilt from level components touching the interior boundary."""
    sh = s.shapes[i]
    if i == s.parent[i]:
        seeds = _border(U)
        level, region = U.l_inf, None
    else:
        seeds = grid.interior_boundary(sh.mask)
        level, region = sh.level, sh.mask
    labels, _ = grid.label(level_set(U, level))
    hit = np.unique(labels[seeds & (labels > 0)])
    out = np.isin(labels, hit[hit > 0])
    return out if region is None else out & region


def _border(U: IntervalImage) -> np.ndarray:
    # Faces of the enlarged domain outside the closed immersion of the pixels.
    inner = np.zeros(U.lo.shape, dtype=bool)
    inner[tuple(slice(2, -2) for _ in U.lo.shape)] = True
    return ~inner
