"""Command-line front end: ``ndtos compute|filter|check|bench``."""
from __future__ import annotations

import argparse
import itertools
import math
import sys
import time

import numpy as np

from . import oracle
from .imageio import RasterFile, read_raster, tree_dot, tree_text, write_raster
from .interpolate import immerse
from .tree import build_tree, canonical_order, compute_tree_of_shapes, grain_filter

MAX_CHECK_FACES = 10_000
MAX_EXHAUSTIVE_IMAGES = 1_000_000


class CliError(Exception):
    pass


def _linfty(text: str):
    if text == "median":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'median', got {text!r}") from None


def _pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--interp", choices=("max", "min"), default="max", help="interpolation (default: max)")
    p.add_argument("--linfty", type=_linfty, default="median", metavar="V|median",
                   help="border level (default: lower median of the border pixels)")
    p.add_argument("--policy", choices=("down", "up"), default="down", help="queue tie rule (default: down)")


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)


def cmd_compute(args) -> int:
    r = read_raster(args.input)
    t = compute_tree_of_shapes(r.data, args.interp, args.linfty, args.policy)
    attrs = canonical_order(t)
    _write_text(args.out_tree, tree_text(t, attrs))
    if args.out_dot:
        _write_text(args.out_dot, tree_dot(t, attrs))
    return 0


def cmd_filter(args) -> int:
    if args.grain < 0:
        raise CliError("grain size must be >= 0")
    r = read_raster(args.input)
    t = compute_tree_of_shapes(r.data, args.interp, args.linfty, args.policy)
    out = grain_filter(t, r.data.astype(np.int64), args.grain)
    top = int(out.max())
    if int(out.min()) < 0 or top > 65535:
        raise CliError("filtered levels do not fit in 16 bits")
    dtype = r.data.dtype if top <= np.iinfo(r.data.dtype).max else np.uint16
    maxval = None if r.maxval is None else max(r.maxval, top)
    write_raster(args.out, RasterFile(out.astype(dtype), r.format, maxval, r.binary))
    return 0


def _faces(shape) -> int:
    return math.prod(4 * s + 3 for s in shape)


def _inject_fault(t) -> bool:
    # Merge the last node in R order (a leaf) into its parent.
    nodes = t.canonical_elements()
    if len(nodes) < 2:
        return False
    leaf = nodes[-1]
    t.u_flat = t.u_flat.copy()
    t.u_flat[t.R[t.node_of() == leaf]] = t.u_flat[t.parent[leaf]]
    return True


def check_image(u, interp="max", l_inf="median", policy="down", fault=False) -> tuple:
    """Fast pipeline against both oracles; returns ``(equal, report)``."""
    U = immerse(u, interpolation=interp, l_inf=l_inf)
    t = build_tree(U, policy=policy, keep_pre_emersion=True)
    pre = t.pre_emersion
    if fault and not _inject_fault(pre):
        return False, "no node to remove for fault injection"
    ok, report = oracle.tree_equiv(pre, oracle.shapes_bruteforce(U))
    if not ok:
        return False, "face domain: " + report
    pix = oracle.shapes_bruteforce_pixels(u, l_inf=U.l_inf, interpolation=interp)
    ok, report2 = oracle.tree_equiv(t, pix)
    if not ok:
        return False, "pixel domain: " + report2
    return True, report


def _parse_exhaustive(text: str) -> tuple:
    try:
        size, v = text.lower().split(":")
        w, h = (int(x) for x in size.split("x"))
        v = int(v)
    except ValueError:
        raise CliError(f"bad --exhaustive value {text!r}, expected WxH:V") from None
    if w < 1 or h < 1 or v < 1:
        raise CliError("--exhaustive needs positive sizes and level count")
    return w, h, v


def cmd_check(args) -> int:
    opts = dict(interp=args.interp, l_inf=args.linfty, policy=args.policy, fault=args.inject_fault)
    if args.exhaustive:
        w, h, v = _parse_exhaustive(args.exhaustive)
        total = v ** (w * h)
        if total > MAX_EXHAUSTIVE_IMAGES:
            raise CliError(f"refusing to enumerate {total} images (limit {MAX_EXHAUSTIVE_IMAGES})")
        if _faces((h, w)) > MAX_CHECK_FACES:
            raise CliError(f"{w}x{h} images have {_faces((h, w))} faces (limit {MAX_CHECK_FACES})")
        dtype = np.uint8 if v <= 256 else np.uint16
        equal, first = 0, None
        for vals in itertools.product(range(v), repeat=w * h):
            u = np.array(vals, dtype=dtype).reshape(h, w)
            ok, report = check_image(u, **opts)
            if ok:
                equal += 1
            elif first is None:
                first = (u, report)
        print(f"{equal}/{total} EQUAL")
        if first is not None:
            print(f"first DIFF on {first[0].tolist()}: {first[1]}")
        return 0 if equal == total else 1
    if args.input is None:
        raise CliError("check needs an input file or --exhaustive")
    u = read_raster(args.input).data
    if _faces(u.shape) > MAX_CHECK_FACES:
        raise CliError(f"image has {_faces(u.shape)} faces, --single is limited to {MAX_CHECK_FACES}")
    ok, report = check_image(u, **opts)
    print("EQUAL" if ok else "DIFF")
    print(report)
    return 0 if ok else 1


def bench_shape(pixels: int) -> tuple:
    """Most square 2-D shape with exactly ``pixels`` pixels."""
    h = math.isqrt(pixels)
    while pixels % h:
        h -= 1
    return h, pixels // h


def bench_image(pixels: int, levels: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dtype = np.uint8 if levels <= 256 else np.uint16
    return rng.integers(0, levels, size=bench_shape(pixels)).astype(dtype)


def time_pipeline(u, repeat: int = 1) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        compute_tree_of_shapes(u)
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
    except ValueError:
        raise CliError(f"bad --sizes {args.sizes!r}") from None
    if not sizes or min(sizes) < 1 or args.levels < 1 or args.levels > 65536:
        raise CliError("sizes must be positive and levels in 1..65536")
    compute_tree_of_shapes(bench_image(64, args.levels, args.seed))  # compile kernels
    print("pixels,seconds")
    prev = None
    for n in sizes:
        sec = time_pipeline(bench_image(n, args.levels, args.seed), args.repeat)
        print(f"{n},{sec:.6f}", flush=True)
        if prev is not None:
            print(f"# t({n})/t({prev[0]}) = {sec / prev[1]:.3f}", file=sys.stderr)
        prev = (n, sec)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ndtos", description="Tree of shapes of n-D images.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="compute the tree and export it")
    p.add_argument("input")
    _pipeline_args(p)
    p.add_argument("--out-tree", default="-", help="tree text file (default: stdout)")
    p.add_argument("--out-dot", default=None, help="Graphviz dot file")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("filter", help="grain filter (remove shapes smaller than k pixels)")
    p.add_argument("input")
    p.add_argument("--grain", type=int, required=True, metavar="K")
    p.add_argument("--out", required=True)
    _pipeline_args(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("check", help="compare with the brute-force oracles")
    p.add_argument("input", nargs="?")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--single", action="store_true", help="check one input file (default)")
    mode.add_argument("--exhaustive", metavar="WxH:V", help="all WxH images over V levels")
    _pipeline_args(p)
    p.add_argument("--inject-fault", action="store_true",
                   help="drop a leaf node before comparing (checks the checker)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="time the pipeline on random 2-D images")
    p.add_argument("--sizes", default="65536,262144,1048576", help="comma-separated pixel counts")
    p.add_argument("--levels", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=int, default=1, help="report the best of this many runs")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, OSError, ValueError) as exc:
        print(f"ndtos: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, CliError) else 1


if __name__ == "__main__":
    sys.exit(main())
