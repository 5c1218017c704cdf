"""PGM format: round trips at both bit depths and malformed-input handling."""

import numpy as np
import numpy.testing as npt
import pytest

from wellqc.errors import FormatError
from wellqc.data.pgm import read_pgm, write_pgm


def quantized_image(rng, shape, maxval):
    """Random image already on the stored grid, so round trips are exact."""
    levels = rng.integers(0, maxval + 1, size=shape)
    return (levels.astype(np.float32) / np.float32(maxval)), levels


class TestRoundTrip:
    @pytest.mark.parametrize("maxval", [255, 65535])
    def test_write_read_is_bit_identical(self, tmp_path, maxval):
        rng = np.random.default_rng(maxval)
        image, _ = quantized_image(rng, (13, 17), maxval)
        path = tmp_path / "img.pgm"
        write_pgm(image, path, maxval=maxval)
        back, back_maxval = read_pgm(path)
        assert back_maxval == maxval
        npt.assert_array_equal(back, image)

    def test_read_write_preserves_file_bytes(self, tmp_path):
        rng = np.random.default_rng(7)
        image, _ = quantized_image(rng, (9, 9), 255)
        first = tmp_path / "a.pgm"
        second = tmp_path / "b.pgm"
        write_pgm(image, first, maxval=255)
        pixels, maxval = read_pgm(first)
        write_pgm(pixels, second, maxval=maxval)
        assert first.read_bytes() == second.read_bytes()

    def test_full_scale_pixel_normalizes_to_one(self, tmp_path):
        path = tmp_path / "one.pgm"
        path.write_bytes(b"P5\n1 1\n255\n\xff")
        pixels, _ = read_pgm(path)
        assert pixels[0, 0] == 1.0

    def test_16bit_samples_are_big_endian(self, tmp_path):
        path = tmp_path / "be.pgm"
        path.write_bytes(b"P5\n1 1\n65535\n\x01\x00")  # 256, not 1
        pixels, _ = read_pgm(path)
        assert pixels[0, 0] == pytest.approx(256 / 65535)

    def test_trailing_channel_axis_accepted_on_write(self, tmp_path):
        image = np.zeros((5, 5, 1), dtype=np.float32)
        write_pgm(image, tmp_path / "c.pgm")
        pixels, _ = read_pgm(tmp_path / "c.pgm")
        assert pixels.shape == (5, 5)


class TestMalformedInputs:
    def test_truncated_raster_reports_offset(self, tmp_path):
        path = tmp_path / "trunc.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + b"\x00" * 7)  # 16 expected
        with pytest.raises(FormatError) as excinfo:
            read_pgm(path)
        assert excinfo.value.offset == len(b"P5\n4 4\n255\n") + 7

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "p2.pgm"
        path.write_bytes(b"P2\n1 1\n255\n0")
        with pytest.raises(FormatError, match="magic"):
            read_pgm(path)

    def test_missing_header_fields_rejected(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n4\n")
        with pytest.raises(FormatError):
            read_pgm(path)

    def test_non_integer_dimension_rejected(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\nfour 4\n255\n")
        with pytest.raises(FormatError, match="integer"):
            read_pgm(path)

    def test_comments_in_header_are_skipped(self, tmp_path):
        path = tmp_path / "comment.pgm"
        path.write_bytes(b"P5\n# scanner lane 3\n2 1\n255\n\x10\x20")
        pixels, maxval = read_pgm(path)
        assert pixels.shape == (1, 2)
        assert maxval == 255

    def test_oversized_maxval_rejected(self, tmp_path):
        path = tmp_path / "big.pgm"
        path.write_bytes(b"P5\n1 1\n70000\n\x00\x00")
        with pytest.raises(FormatError, match="maxval"):
            read_pgm(path)

    def test_write_rejects_non_2d(self, tmp_path):
        with pytest.raises(FormatError):
            write_pgm(np.zeros((3, 3, 2)), tmp_path / "x.pgm")
