import struct

import numpy as np
import pytest

from locsketch.errors import ValidationError
from locsketch.io import read_fmx, read_matrix, read_text, write_fmx, write_text
from locsketch.rng import RandomSource, _splitmix64, as_source


class TestRandomSource:
    def test_pinned_stream(self):
        # Golden draws: changing the generator breaks reproducibility of records.
        np.testing.assert_array_equal(
            RandomSource(0).generator().standard_normal(3),
            [-0.8025458906390128, 0.45751928097784245, -0.31455873558038694],
        )
        np.testing.assert_array_equal(
            RandomSource(42, 7).generator().standard_normal(3),
            [-0.2738967256930907, 0.28607542151858195, 0.5222172004684814],
        )

    def test_splitmix_reference(self):
        # First two outputs of splitmix64 seeded with 0.
        assert _splitmix64(0) == 0xE220A8397B1DCDAF
        assert _splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4

    def test_substream(self):
        src = RandomSource(0)
        assert src.substream(1) == RandomSource(0, _splitmix64(0 ^ _splitmix64(1)))
        assert src.substream(1) != src.substream(2)
        assert src.substream(1).substream(2) != src.substream(2).substream(1)

    def test_bounds(self):
        with pytest.raises(ValueError):
            RandomSource(-1)
        with pytest.raises(ValueError):
            RandomSource(0, 1 << 64)

    def test_dict_roundtrip(self):
        src = RandomSource(3, 99)
        assert RandomSource.from_dict(src.to_dict()) == src
        assert as_source(src.to_dict()) == src
        assert as_source(5) == RandomSource(5)


class TestFmx:
    def test_roundtrip(self, tmp_path):
        a = np.random.default_rng(0).standard_normal((7, 3))
        write_fmx(tmp_path / "a.fmx", a)
        np.testing.assert_array_equal(read_fmx(tmp_path / "a.fmx"), a)
        np.testing.assert_array_equal(read_matrix(tmp_path / "a.fmx"), a)

    def test_layout(self, tmp_path):
        write_fmx(tmp_path / "a.fmx", np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]))
        raw = (tmp_path / "a.fmx").read_bytes()
        assert raw[:16] == b"FMX1" + struct.pack("<II", 3, 2) + bytes(4)
        assert struct.unpack("<6d", raw[16:]) == (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)

    def test_vector_is_column(self, tmp_path):
        write_fmx(tmp_path / "b.fmx", np.arange(4.0))
        assert read_fmx(tmp_path / "b.fmx").shape == (4, 1)

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x.fmx").write_bytes(b"NOPE" + struct.pack("<II", 1, 1) + bytes(12))
        with pytest.raises(ValidationError, match="magic"):
            read_fmx(tmp_path / "x.fmx")

    def test_truncated(self, tmp_path):
        (tmp_path / "x.fmx").write_bytes(b"FMX1" + struct.pack("<II", 2, 2) + bytes(12))
        with pytest.raises(ValidationError, match="expected 48 bytes"):
            read_fmx(tmp_path / "x.fmx")


class TestText:
    def test_comma_and_whitespace(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("1,2,3\n4 5\t6\n\n# note\n7, 8 ,9\n")
        np.testing.assert_array_equal(read_text(p), [[1, 2, 3], [4, 5, 6], [7, 8, 9]])

    def test_ragged_reports_line(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1,2\n3,4\n5\n")
        with pytest.raises(ValidationError, match=r"t\.csv:3"):
            read_text(p)

    def test_non_numeric_reports_line(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("1,2\nx,4\n")
        with pytest.raises(ValidationError, match=r"t\.csv:2"):
            read_text(p)

    def test_header_skip(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("y,a\n1,2\n")
        np.testing.assert_array_equal(read_text(p, skip_header=True), [[1, 2]])

    def test_roundtrip(self, tmp_path):
        a = np.random.default_rng(1).standard_normal((4, 2))
        write_text(tmp_path / "a.csv", a)
        np.testing.assert_array_equal(read_matrix(tmp_path / "a.csv"), a)
