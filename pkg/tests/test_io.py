import os

import numpy as np
import pytest

from polymot import io as pio
from polymot.errors import InvalidInputError, ParseError
from polymot.metrics import MetricsReport
from polymot.simulator import IDENTITY_NOISE, build_scenario, generate, perturb
from polymot.tracker import TrackerConfig, run_sequence


def sample_detections(n_frames=6):
    sc = build_scenario("linear", 2, n_frames, 256, 160, 3)
    return perturb(sc, generate(sc), IDENTITY_NOISE, 4)


class TestDetectionFiles:
    def test_round_trip_within_format_precision(self, tmp_path):
        dets = sample_detections()
        path = str(tmp_path / "dets.txt")
        pio.write_detections(dets, path)
        parsed = pio.parse_detections(path)
        assert sorted(parsed) == [f for f, dd in enumerate(dets) if dd]
        for f, frame_dets in enumerate(dets):
            if not frame_dets:
                continue
            assert len(parsed[f]) == len(frame_dets)
            for a, b in zip(frame_dets, parsed[f]):
                assert b.frame == a.frame and b.class_id == a.class_id
                assert abs(b.center.x - a.center.x) <= 1e-4
                assert abs(b.center.y - a.center.y) <= 1e-4
                assert abs(b.score - a.score) <= 1e-4
                assert np.abs(b.polygon.vertices - a.polygon.vertices).max() <= 1e-4

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("# just a comment\n\n")
        assert pio.parse_detections(str(path)) == {}

    def test_malformed_line_names_line_number(self, tmp_path):
        dets = sample_detections(n_frames=12)  # 24 record lines
        path = tmp_path / "dets.txt"
        pio.write_detections(dets, str(path))
        lines = path.read_text().splitlines()
        lines[16] = "0 0 bad line"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError, match=r":17:"):
            pio.parse_detections(str(path))

    def test_decreasing_frames_rejected(self, tmp_path):
        dets = sample_detections()
        path = tmp_path / "dets.txt"
        pio.write_detections(dets, str(path))
        lines = path.read_text().splitlines()
        lines.append(lines[0])  # frame 0 after later frames
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError):
            pio.parse_detections(str(path))

    def test_comments_stripped(self, tmp_path):
        dets = sample_detections()
        path = tmp_path / "dets.txt"
        pio.write_detections(dets, str(path))
        text = "# header\n" + path.read_text().replace("\n", " # tail\n", 1)
        path.write_text(text)
        assert pio.parse_detections(str(path))


class TestResultFiles:
    def test_write_results_reparses(self, tmp_path):
        dets = sample_detections()
        tracks = run_sequence(dets, TrackerConfig())
        path = str(tmp_path / "results.txt")
        pio.write_results(tracks, 256, 160, path)
        frames, classes, dims = pio.parse_mask_records(path)
        assert dims == (160, 256)
        assert frames and classes
        for masks in frames.values():
            total = np.zeros((160, 256), np.int64)
            for m in masks.values():
                total += m
            assert total.max() <= 1  # emitted masks stay disjoint

    def test_duplicate_id_in_frame_rejected(self, tmp_path):
        path = tmp_path / "r.txt"
        path.write_text("0 1 0 4 4 ?1\n0 1 0 4 4 ?1\n")
        with pytest.raises(ParseError, match="duplicate"):
            pio.parse_mask_records(str(path))

    def test_dimension_change_rejected(self, tmp_path):
        path = tmp_path / "r.txt"
        path.write_text("0 1 0 4 4 ?1\n1 1 0 5 4 d0\n")
        with pytest.raises(ParseError, match="dimensions"):
            pio.parse_mask_records(str(path))


class TestPgm:
    def test_ascii_round_trip(self, tmp_path):
        arr = (np.arange(24).reshape(4, 6) * 10 % 256).astype(np.uint8)
        path = str(tmp_path / "img.pgm")
        pio.write_pgm(arr, path)
        back = pio.read_pgm(path)
        assert (back == arr).all()

    def test_bool_mask_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        mask = rng.random((9, 7)) < 0.5
        path = str(tmp_path / "mask.pgm")
        pio.write_pgm(mask, path)
        assert ((pio.read_pgm(path) > 0) == mask).all()

    def test_binary_p5(self, tmp_path):
        data = b"P5\n# comment\n3 2\n255\n" + bytes([0, 255, 7, 8, 0, 1])
        path = tmp_path / "b.pgm"
        path.write_bytes(data)
        arr = pio.read_pgm(str(path))
        assert arr.shape == (2, 3)
        assert arr[0, 1] == 255 and arr[1, 2] == 1

    def test_rejects_other_formats(self, tmp_path):
        path = tmp_path / "x.pgm"
        path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
        with pytest.raises(ParseError):
            pio.read_pgm(str(path))


class TestConfig:
    def test_defaults_without_file(self):
        cfg = pio.load_config(None)
        assert cfg.tracker.max_age == 32
        assert cfg.tracker.use_ukf is True
        assert cfg.noise.drop_prob == 0.4
        assert cfg.scenario is None

    def test_full_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "[scenario]\nkind = occlusion\nn_objects = 1\nn_frames = 40\n"
            "width = 288\nheight = 160\nseed = 9\n"
            "[tracker]\nmax_age = 16\nmatch_kappa = 1.5\nuse_ukf = false\n"
            "[ukf]\nq_accel = 0.01\n"
            "[noise]\ndrop_prob = 0.0\nfp_prob = 0.0\n")
        cfg = pio.load_config(str(path))
        assert cfg.scenario.kind == "occlusion" and cfg.scenario.seed == 9
        assert cfg.tracker.max_age == 16
        assert cfg.tracker.match_kappa == 1.5
        assert cfg.tracker.use_ukf is False
        assert cfg.tracker.ukf.q_accel == 0.01
        assert cfg.noise.drop_prob == 0.0
        assert (cfg.width, cfg.height) == (288, 160)

    def test_image_section_overrides_dims(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("[image]\nwidth = 640\nheight = 480\n")
        cfg = pio.load_config(str(path))
        assert (cfg.width, cfg.height) == (640, 480)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("[tracker]\nmaximum_age = 10\n")
        with pytest.raises(InvalidInputError):
            pio.load_config(str(path))

    def test_missing_file_is_os_error(self, tmp_path):
        with pytest.raises(OSError):
            pio.load_config(str(tmp_path / "nope.cfg"))


class TestReports:
    def test_write_and_parse_kv(self, tmp_path):
        report = MetricsReport.from_counts(tp=8, fp=2, fn=2, idsw=1, soft_tp=6.5)
        path = str(tmp_path / "report.txt")
        kv = str(tmp_path / "report.kv")
        pio.write_report(report, path, kv)
        parsed = pio.parse_report_kv(kv)
        assert parsed["tp"] == 8 and parsed["idsw"] == 1
        assert parsed["motsa"] == pytest.approx(report.motsa, abs=1e-6)
        text = open(path).read()
        assert "MOTSA" in text and "%" in text

    def test_atomic_write_replaces(self, tmp_path):
        path = str(tmp_path / "f.txt")
        pio.atomic_write_text(path, "one")
        pio.atomic_write_text(path, "two")
        assert open(path).read() == "two"
        assert [p for p in os.listdir(tmp_path)] == ["f.txt"]
