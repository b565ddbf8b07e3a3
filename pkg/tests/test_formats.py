import json

import numpy as np
import pytest

from sonocaustics.camera import Homography, oblique_view
from sonocaustics.formats import (
    read_homography,
    read_pgm,
    read_plan,
    read_scf,
    sha256_of,
    write_homography,
    write_loss_csv,
    write_manifest,
    write_pgm,
    write_plan,
    write_scf,
    write_twin_csv,
)
from sonocaustics.optimize import PhasePlan


class TestScf:
    def test_amplitude_roundtrip_exact(self, tmp_path):
        values = np.random.default_rng(0).uniform(0, 100, (7, 5))
        path = tmp_path / "field.scf"
        write_scf(path, values)
        assert np.array_equal(read_scf(path), values)

    def test_complex_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        values = rng.normal(size=(4, 6)) + 1j * rng.normal(size=(4, 6))
        path = tmp_path / "field.scf"
        write_scf(path, values)
        assert np.array_equal(read_scf(path), values)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "field.scf"
        write_scf(path, np.zeros((3, 2)))
        blob = path.read_bytes()
        assert blob[:4] == b"SCF1"
        assert blob[4:16] == (2).to_bytes(4, "little") + (3).to_bytes(4, "little") + (1).to_bytes(4, "little")
        assert len(blob) == 16 + 6 * 8

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "junk.scf"
        path.write_bytes(b"NOPE" + bytes(12))
        with pytest.raises(ValueError):
            read_scf(path)

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValueError):
            write_scf(tmp_path / "x.scf", np.zeros(5))


class TestPgm:
    @pytest.mark.parametrize("bits", [8, 16])
    def test_roundtrip_within_quantization(self, tmp_path, bits):
        rng = np.random.default_rng(2)
        values = rng.uniform(0, 1, (9, 11))
        values.flat[0] = 1.0  # pin the peak so scaling is identity
        path = tmp_path / "img.pgm"
        write_pgm(path, values, bits=bits)
        back = read_pgm(path)
        assert np.abs(back - values).max() <= 0.5 / ((1 << bits) - 1)

    def test_16bit_is_big_endian_p5(self, tmp_path):
        path = tmp_path / "img.pgm"
        write_pgm(path, np.array([[0.0, 1.0]]), bits=16)
        blob = path.read_bytes()
        assert blob.startswith(b"P5\n2 1\n65535\n")
        assert blob[-4:] == b"\x00\x00\xff\xff"

    def test_all_zero_image(self, tmp_path):
        path = tmp_path / "img.pgm"
        write_pgm(path, np.zeros((3, 3)))
        assert np.all(read_pgm(path) == 0.0)

    def test_comment_lines_skipped(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes([0, 85, 170, 255]))
        back = read_pgm(path)
        np.testing.assert_allclose(back, [[0, 85 / 255], [170 / 255, 1.0]])

    def test_rejects_other_formats(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(ValueError):
            read_pgm(path)

    def test_rejects_odd_bit_depth(self, tmp_path):
        with pytest.raises(ValueError):
            write_pgm(tmp_path / "img.pgm", np.zeros((2, 2)), bits=12)


class TestPlan:
    def test_continuous_roundtrip_exact(self, tmp_path):
        phases = np.random.default_rng(3).uniform(0, 2 * np.pi, (3, 8))
        path = tmp_path / "plan.txt"
        write_plan(path, PhasePlan(phases))
        back, levels = read_plan(path)
        assert levels is None
        assert np.array_equal(back.phases, phases)

    def test_header_text(self, tmp_path):
        path = tmp_path / "plan.txt"
        write_plan(path, PhasePlan(np.zeros((2, 4))))
        assert path.read_text().splitlines()[0] == "frames 2 transducers 4"

    def test_discretized_roundtrip(self, tmp_path):
        codes = np.random.default_rng(4).integers(0, 32, (2, 6))
        path = tmp_path / "device.txt"
        write_plan(path, None, levels=32, discretized=codes)
        back, levels = read_plan(path)
        assert levels == 32
        assert np.array_equal(back, codes)
        assert path.read_text().splitlines()[0] == "frames 2 transducers 6 levels 32"

    def test_discretized_requires_levels(self, tmp_path):
        with pytest.raises(ValueError):
            write_plan(tmp_path / "x.txt", None, discretized=np.zeros((1, 2), int))

    def test_rejects_truncated_body(self, tmp_path):
        path = tmp_path / "plan.txt"
        path.write_text("frames 2 transducers 3\n0.0 0.1 0.2\n")
        with pytest.raises(ValueError):
            read_plan(path)


class TestHomography:
    def test_roundtrip_exact(self, tmp_path):
        h = oblique_view((48, 48), skew=0.05)
        path = tmp_path / "h.txt"
        write_homography(path, h)
        back = read_homography(path)
        assert np.array_equal(back.matrix, h.matrix)

    def test_nine_values_single_line(self, tmp_path):
        path = tmp_path / "h.txt"
        write_homography(path, Homography.identity())
        assert len(path.read_text().split()) == 9

    def test_rejects_wrong_count(self, tmp_path):
        path = tmp_path / "h.txt"
        path.write_text("1 0 0 0 1 0\n")
        with pytest.raises(ValueError):
            read_homography(path)


class TestCsv:
    def test_loss_csv(self, tmp_path):
        path = tmp_path / "loss.csv"
        write_loss_csv(path, [1.5, 0.25])
        lines = path.read_text().splitlines()
        assert lines[0] == "step,loss"
        assert lines[1] == "0,1.5"
        assert lines[2] == "1,0.25"

    def test_twin_csv_with_contrast(self, tmp_path):
        path = tmp_path / "twin.csv"
        write_twin_csv(path, [0.5], [0.33])
        lines = path.read_text().splitlines()
        assert lines[0] == "step,L_dt,weber_contrast"
        assert lines[1] == "0,0.5,0.33"

    def test_twin_csv_without_contrast(self, tmp_path):
        path = tmp_path / "twin.csv"
        write_twin_csv(path, [0.5])
        assert path.read_text().splitlines()[1] == "0,0.5,"


class TestManifest:
    def test_hashes_listed_files(self, tmp_path):
        a = tmp_path / "a.txt"
        a.write_text("hello")
        manifest = tmp_path / "manifest.json"
        write_manifest(manifest, [a])
        entries = json.loads(manifest.read_text())
        assert entries == {"a.txt": sha256_of(a)}

    def test_hash_is_content_hash(self, tmp_path):
        a = tmp_path / "a.txt"
        a.write_text("hello")
        assert (
            sha256_of(a)
            == "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        )
