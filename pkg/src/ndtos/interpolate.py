"""Interval-valued immersion of an integer image into the Khalimsky grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Domain


def level_dtype(vmin: int, vmax: int) -> np.dtype:
    """Narrowest dtype holding ``[vmin, vmax]`` (small arrays keep the kernels in cache)."""
    for dt in (np.uint8, np.uint16, np.int32):
        info = np.iinfo(dt)
        if info.min <= vmin and vmax <= info.max:
            return np.dtype(dt)
    raise OverflowError(f"levels {vmin}..{vmax} do not fit in 32 bits")


@dataclass(frozen=True)
class Interval:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def __contains__(self, level) -> bool:
        return self.lo <= level <= self.hi


@dataclass
class IntervalImage:
    """Span-based immersion ``U``: one closed integer interval per face.

    ``lo``/``hi`` hold the interval bounds over the whole face domain,
    ``primary`` marks the n-faces that stand for pixels of the input image.
    """

    lo: np.ndarray
    hi: np.ndarray
    p_inf: tuple | None = None
    l_inf: int | None = None
    primary: np.ndarray | None = None
    pixels: tuple | None = None  # shape of the original image, when known

    @property
    def domain(self) -> Domain:
        return Domain(self.lo.shape)

    @property
    def ndim(self) -> int:
        return self.lo.ndim

    def __getitem__(self, face) -> Interval:
        f = tuple(face)
        return Interval(int(self.lo[f]), int(self.hi[f]))

    def pixel_shape(self) -> tuple:
        """Shape of the original image (from the primary marks)."""
        if self.pixels is not None:
            return self.pixels
        if self.primary is None:
            raise ValueError("immersion carries no primary mask")
        return tuple(len(np.unique(ix)) for ix in np.nonzero(self.primary))


def _as_image(u) -> np.ndarray:
    u = np.asarray(u)
    if u.size == 0 or u.ndim == 0:
        raise ValueError("empty image")
    if not np.issubdtype(u.dtype, np.integer):
        raise TypeError(f"integer image expected, got {u.dtype}")
    return u


def _along(axis: int, ndim: int, sl: slice) -> tuple:
    return (slice(None),) * axis + (sl,)


def max_interpolation(u) -> np.ndarray:
    """Subdivide ``u`` once, new pixels taking the max of the incident originals.

    Output has ``2*N - 1`` pixels per axis; originals sit at even positions.
    """
    u = _as_image(u)
    out = u
    for axis in range(u.ndim):
        m = out.shape[axis]
        shape = out.shape[:axis] + (2 * m - 1,) + out.shape[axis + 1:]
        res = np.empty(shape, dtype=u.dtype)
        res[_along(axis, u.ndim, slice(0, None, 2))] = out
        np.maximum(out[_along(axis, u.ndim, slice(None, -1))], out[_along(axis, u.ndim, slice(1, None))],
                   out=res[_along(axis, u.ndim, slice(1, None, 2))])
        out = res
    return out


def min_interpolation(u) -> np.ndarray:
    """Mirror of :func:`max_interpolation` (min over the incident originals)."""
    u = _as_image(u)
    return (-max_interpolation(-u.astype(np.int64))).astype(u.dtype, copy=False)


def _span(values: np.ndarray) -> tuple:
    # values holds one level per n-face; faces of the closed domain get the
    # span over the n-faces of their star, computed one axis at a time.
    lo = values.astype(level_dtype(int(values.min()), int(values.max())))
    hi = lo.copy()
    for axis in range(values.ndim):
        lo = _span_axis(lo, axis, np.minimum)
        hi = _span_axis(hi, axis, np.maximum)
    return lo, hi


def _span_axis(a: np.ndarray, axis: int, op) -> np.ndarray:
    nd = a.ndim
    m = a.shape[axis]
    res = np.empty(a.shape[:axis] + (2 * m + 1,) + a.shape[axis + 1:], dtype=a.dtype)
    res[_along(axis, nd, slice(1, None, 2))] = a
    res[_along(axis, nd, slice(0, 1))] = a[_along(axis, nd, slice(0, 1))]
    res[_along(axis, nd, slice(-1, None))] = a[_along(axis, nd, slice(-1, None))]
    op(a[_along(axis, nd, slice(None, -1))], a[_along(axis, nd, slice(1, None))],
       out=res[_along(axis, nd, slice(2, -1, 2))])
    return res


def span_immersion(u_s) -> IntervalImage:
    """Immerse a (well-composed) image into the closed Khalimsky domain.

    Pixel ``z`` becomes the n-face ``2*z + 1`` with value ``{u_s(z)}``; every
    other face gets the span of the n-faces containing it.  Domain shape is
    ``2*M + 1`` per axis.
    """
    u_s = _as_image(u_s)
    lo, hi = _span(u_s)
    return IntervalImage(lo, hi)


def extend_with_border(U: IntervalImage, l_inf: int) -> IntervalImage:
    """Add a ring of n-faces valued ``{l_inf}`` around ``U`` and recompute spans.

    The domain grows by two doubled units on every side; the exterior face
    ``p_inf`` is the smallest border n-face, ``(1, ..., 1)``.
    """
    odd = tuple(slice(1, None, 2) for _ in range(U.ndim))
    values = U.lo[odd]
    if not np.array_equal(values, U.hi[odd]):
        raise ValueError("n-faces must carry singleton intervals")
    dt = level_dtype(min(int(values.min()), int(l_inf)), max(int(values.max()), int(l_inf)))
    padded = np.pad(values.astype(dt), 1, constant_values=int(l_inf))
    lo, hi = _span(padded)
    primary = None
    if U.primary is not None:
        primary = np.pad(U.primary, 2, constant_values=False)
    return IntervalImage(lo, hi, p_inf=(1,) * U.ndim, l_inf=int(l_inf), primary=primary)


def border_median(u) -> int:
    """Lower median of the border pixel values of ``u``."""
    u = _as_image(u)
    inner = tuple(slice(1, -1) for _ in range(u.ndim))
    mask = np.ones(u.shape, dtype=bool)
    mask[inner] = False
    vals = np.sort(u[mask].astype(np.int64))
    return int(vals[(len(vals) - 1) // 2])


def primary_mask(pixel_shape: tuple) -> np.ndarray:
    """Faces of the enlarged domain standing for original pixels (coords 4*q + 3)."""
    shape = tuple(4 * s + 3 for s in pixel_shape)
    mask = np.zeros(shape, dtype=bool)
    mask[tuple(slice(3, 4 * s, 4) for s in pixel_shape)] = True
    return mask


def immerse(u, interpolation: str = "max", l_inf="median") -> IntervalImage:
    """Interpolate, immerse and add the exterior border.

    Parameters
    ----------
    u : integer ndarray
        Input image, any dimension.
    interpolation : {"max", "min"}
        Well-composed interpolation used on the subdivided grid.
    l_inf : int or "median"
        Border level; ``"median"`` takes the lower median of the border pixels.
    """
    u = _as_image(u)
    if interpolation == "max":
        u_s = max_interpolation(u)
    elif interpolation == "min":
        u_s = min_interpolation(u)
    else:
        raise ValueError(f"unknown interpolation {interpolation!r}")
    if isinstance(l_inf, str):
        if l_inf != "median":
            raise ValueError(f"unknown border level {l_inf!r}")
        l_inf = border_median(u)
    U = extend_with_border(span_immersion(u_s), int(l_inf))
    U.primary = primary_mask(u.shape)
    U.pixels = tuple(u.shape)
    return U
