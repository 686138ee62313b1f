import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ndtos import compute_tree_of_shapes
from ndtos.imageio import (
    ImageFormatError,
    RasterFile,
    encode,
    parse_tree_text,
    read_image,
    read_raster,
    tree_dot,
    tree_text,
    write_image,
    write_raster,
)


def put(tmp_path, data: bytes, name="img"):
    p = tmp_path / name
    p.write_bytes(data)
    return p


class TestPgm:
    def test_ascii_single_pixel(self, tmp_path):
        assert read_image(put(tmp_path, b"P2 1 1 255 7")).tolist() == [[7]]

    def test_comments_and_layout(self, tmp_path):
        data = b"P2\n# made by hand\n3 2\n# max\n9\n1 2 3\n4 5 6\n"
        r = read_raster(put(tmp_path, data))
        assert r.data.tolist() == [[1, 2, 3], [4, 5, 6]]
        assert r.maxval == 9 and not r.binary

    def test_binary_16_bit_is_big_endian(self, tmp_path):
        u = read_image(put(tmp_path, b"P5\n2 1\n1000\n" + bytes([0x01, 0x02, 0x03, 0xE8])))
        assert u.dtype == np.uint16 and u.tolist() == [[258, 1000]]

    def test_truncated_binary(self, tmp_path):
        with pytest.raises(ImageFormatError, match="expected 4 bytes, got 3"):
            read_image(put(tmp_path, b"P5\n2 2\n255\n" + b"abc"))

    def test_bad_headers(self, tmp_path):
        with pytest.raises(ImageFormatError, match="maxval"):
            read_image(put(tmp_path, b"P2 1 1 70000 1"))
        with pytest.raises(ImageFormatError, match="exceeds maxval"):
            read_image(put(tmp_path, b"P2 1 1 5 6"))
        with pytest.raises(ImageFormatError, match="expected 2 samples"):
            read_image(put(tmp_path, b"P2 2 1 5 1"))
        with pytest.raises(ImageFormatError, match="width"):
            read_image(put(tmp_path, b"P2 x 1 5 1"))
        with pytest.raises(ImageFormatError, match="unrecognized"):
            read_image(put(tmp_path, b"GIF89a"))


class TestNdraw:
    def test_volume(self, tmp_path):
        u = read_image(put(tmp_path, b"NDRAW 3 2 2 2 u8\n" + bytes(range(8))))
        assert u.shape == (2, 2, 2) and u[1, 1, 1] == 7

    def test_truncated_payload(self, tmp_path):
        with pytest.raises(ImageFormatError, match="expected 8 bytes, got 5"):
            read_image(put(tmp_path, b"NDRAW 3 2 2 2 u8\n" + bytes(5)))

    def test_trailing_data(self, tmp_path):
        with pytest.raises(ImageFormatError, match="trailing data"):
            read_image(put(tmp_path, b"NDRAW 1 2 u8\n" + bytes(3)))

    def test_bad_headers(self, tmp_path):
        with pytest.raises(ImageFormatError, match="sample type"):
            read_image(put(tmp_path, b"NDRAW 1 2 f32\n" + bytes(8)))
        with pytest.raises(ImageFormatError, match="extents"):
            read_image(put(tmp_path, b"NDRAW 2 2 u8\n" + bytes(2)))
        with pytest.raises(ImageFormatError, match="newline"):
            read_image(put(tmp_path, b"NDRAW 1 2 u8"))
        with pytest.raises(ImageFormatError, match="positive"):
            read_image(put(tmp_path, b"NDRAW 1 0 u8\n"))

    def test_explicit_format(self, tmp_path):
        p = put(tmp_path, b"NDRAW 1 2 u16\n" + bytes([1, 0, 0, 1]))
        assert read_image(p, format="nd-raw").tolist() == [1, 256]
        with pytest.raises(ValueError):
            read_image(p, format="tiff")


class TestRoundTrip:
    @given(st.lists(st.integers(1, 4), min_size=1, max_size=4).flatmap(
        lambda s: arrays(st.sampled_from([np.uint8, np.uint16]), tuple(s))))
    def test_ndraw(self, u):
        back = RasterFile(u, "ndraw")
        assert encode(back)  # smoke
        import tempfile, pathlib
        with tempfile.TemporaryDirectory() as d:
            p = pathlib.Path(d) / "x.ndraw"
            write_image(p, u)
            v = read_image(p)
        assert v.dtype == u.dtype and np.array_equal(u, v)

    @given(st.tuples(st.integers(1, 5), st.integers(1, 5)).flatmap(
        lambda s: arrays(st.sampled_from([np.uint8, np.uint16]), s)), st.booleans())
    def test_pgm(self, u, binary):
        import tempfile, pathlib
        maxval = 255 if u.dtype == np.uint8 else 65535
        with tempfile.TemporaryDirectory() as d:
            p = pathlib.Path(d) / "x.pgm"
            write_image(p, u, format="pgm", maxval=maxval, binary=binary)
            r = read_raster(p)
        assert r.data.dtype == u.dtype and np.array_equal(u, r.data)
        assert r.maxval == maxval and r.binary == binary

    def test_write_errors(self, tmp_path):
        with pytest.raises(ValueError):
            write_image(tmp_path / "a", np.zeros((2, 2, 2), dtype=np.uint8), format="pgm")
        with pytest.raises(ValueError):
            write_image(tmp_path / "a", np.array([[70000]]))
        with pytest.raises(ValueError):
            write_image(tmp_path / "a", np.array([[9]]), format="pgm", maxval=5)
        with pytest.raises(ValueError):
            write_raster(tmp_path / "a", RasterFile(np.zeros(2, dtype=np.uint8), "bmp"))


class TestTreeText:
    def test_bump(self):
        text = tree_text(compute_tree_of_shapes(np.array([[0, 2, 0]]), l_inf=0))
        assert text == "TOS n=2 nodes=2\n0 0 0 3\n1 0 2 1\n"

    def test_parse_round_trip(self):
        u = np.array([[0, 2, 2, 0], [1, 3, 0, 2]])
        ndims, rows = parse_tree_text(tree_text(compute_tree_of_shapes(u)))
        assert ndims == 2 and rows[0][:2] == (0, 0)
        assert all(parent < i for i, parent, _, _ in rows[1:])
        with pytest.raises(ValueError):
            parse_tree_text("TREE\n")
        with pytest.raises(ValueError):
            parse_tree_text("TOS n=2 nodes=3\n0 0 0 1\n")

    @given(st.lists(st.integers(1, 4), min_size=1, max_size=3).flatmap(
        lambda s: arrays(np.uint8, tuple(s), elements=st.integers(0, 4))))
    def test_topological_order(self, u):
        _, rows = parse_tree_text(tree_text(compute_tree_of_shapes(u)))
        assert rows[0][1] == 0 and rows[0][3] == u.size
        assert [r[0] for r in rows] == list(range(len(rows)))
        assert all(p < i for i, p, _, _ in rows[1:])

    def test_dot(self):
        dot = tree_dot(compute_tree_of_shapes(np.array([[0, 2, 0]]), l_inf=0))
        assert dot.startswith("digraph tos {")
        assert 'n1 [label="1:2:1"];' in dot and "n0 -> n1;" in dot
