"""File formats: detection text files, mask result records, PGM images,
INI-style run configuration, and metric reports.

Detection files carry one record per line, space separated:

    frame class_id score cx cy depth off_x off_y x0 y0 ... x31 y31

(72 numeric fields; '#' starts a comment).  Result files use the MOTS
submission layout:

    frame track_id class_id img_height img_width rle

with the compressed run-length string from :mod:`polymot.rle`.  All writes
go through a temp file and an atomic rename.
"""

from __future__ import annotations

import configparser
import os
import tempfile
from dataclasses import dataclass, fields, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, ParseError
from .geometry import DEFAULT_VERTEX_COUNT, Point2, Polygon
from .metrics import MetricsReport, flatten_frame
from .rle import decode_rle, encode_rle
from .simulator import NoiseParams
from .tracker import Detection, Track, TrackerConfig, emitted_instances
from .ukf import UkfParams

DETECTION_FIELDS = 8 + 2 * DEFAULT_VERTEX_COUNT


def atomic_write_text(path: str, text: str) -> None:
    """Write whole-file atomically: temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _strip_comment(line: str) -> str:
    hash_pos = line.find("#")
    return line if hash_pos < 0 else line[:hash_pos]


def parse_detections(path: str) -> dict[int, list[Detection]]:
    """Strict parse of a detection file into per-frame lists (keyed by frame)."""
    frames: dict[int, list[Detection]] = {}
    last_frame: Optional[int] = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = _strip_comment(raw).split()
            if not parts:
                continue
            if len(parts) != DETECTION_FIELDS:
                raise ParseError(
                    f"{path}:{lineno}: expected {DETECTION_FIELDS} fields, "
                    f"got {len(parts)}")
            try:
                frame = int(parts[0])
                class_id = int(parts[1])
                nums = [float(x) for x in parts[2:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if last_frame is not None and frame < last_frame:
                raise ParseError(
                    f"{path}:{lineno}: frame {frame} after frame {last_frame}")
            last_frame = frame
            score, cx, cy, depth, off_x, off_y = nums[:6]
            ring = np.array(nums[6:], dtype=np.float64).reshape(-1, 2)
            try:
                det = Detection(frame=frame, class_id=class_id, score=score,
                                center=Point2(cx, cy), polygon=Polygon(ring),
                                depth=depth, offset=(off_x, off_y))
            except InvalidInputError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            frames.setdefault(frame, []).append(det)
    return frames


def format_detection(d: Detection) -> str:
    coords = " ".join(f"{v:.4f}" for v in d.polygon.vertices.ravel())
    return (f"{d.frame} {d.class_id} {d.score:.4f} {d.center.x:.4f} "
            f"{d.center.y:.4f} {d.depth:.4f} {d.offset[0]:.4f} "
            f"{d.offset[1]:.4f} {coords}")


def write_detections(frames: Sequence[Sequence[Detection]], path: str) -> None:
    lines = [format_detection(d) for dets in frames for d in dets]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


# (track id, class id, polygon, depth) per frame
InstanceRecord = tuple[int, int, "Polygon", float]


def write_instance_records(per_frame: Mapping[int, Sequence[InstanceRecord]],
                           width: int, height: int, path: str) -> None:
    """Flatten each frame's instances to disjoint masks and write RLE lines."""
    lines = []
    for frame in sorted(per_frame):
        records = per_frame[frame]
        classes = {iid: cls for iid, cls, _, _ in records}
        masks = flatten_frame([(iid, poly, depth) for iid, _, poly, depth in records],
                              width, height)
        for iid in sorted(masks):
            lines.append(f"{frame} {iid} {classes[iid]} {height} {width} "
                         f"{encode_rle(masks[iid])}")
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def write_results(tracks: Sequence[Track], width: int, height: int,
                  path: str) -> None:
    """Write a tracker run in the MOTS submission layout (active frames only)."""
    write_instance_records(emitted_instances(tracks), width, height, path)


def parse_mask_records(path: str) -> tuple[dict[int, dict[int, np.ndarray]],
                                           dict[int, int], tuple[int, int]]:
    """Read result-format lines: per-frame id->mask dicts, id->class, (h, w)."""
    frames: dict[int, dict[int, np.ndarray]] = {}
    classes: dict[int, int] = {}
    dims: Optional[tuple[int, int]] = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = _strip_comment(raw).split()
            if not parts:
                continue
            if len(parts) != 6:
                raise ParseError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            try:
                frame, tid, cls, h, w = (int(x) for x in parts[:5])
                mask = decode_rle(parts[5], h, w)
            except (ValueError, ParseError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if dims is None:
                dims = (h, w)
            elif dims != (h, w):
                raise ParseError(
                    f"{path}:{lineno}: dimensions {h}x{w} differ from {dims[0]}x{dims[1]}")
            if tid in frames.setdefault(frame, {}):
                raise ParseError(f"{path}:{lineno}: duplicate id {tid} in frame {frame}")
            frames[frame][tid] = mask
            classes[tid] = cls
    if dims is None:
        dims = (0, 0)
    return frames, classes, dims


def read_pgm(path: str) -> np.ndarray:
    """Read a P2 (ascii) or P5 (binary) PGM image as a uint16 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if len(tokens) < 4 or tokens[0] not in (b"P2", b"P5"):
        raise ParseError(f"{path}: not a P2/P5 PGM file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ParseError(f"{path}: bad PGM header: {exc}") from exc
    if tokens[0] == b"P2":
        try:
            values = np.array(data[pos:].split(), dtype=np.uint16)
        except ValueError as exc:
            raise ParseError(f"{path}: bad PGM samples: {exc}") from exc
    else:
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        values = np.frombuffer(data[pos:], dtype=dtype, count=width * height)
        values = values.astype(np.uint16)
    if values.size != width * height:
        raise ParseError(f"{path}: expected {width * height} samples, got {values.size}")
    return values.reshape((height, width))


def write_pgm(values: np.ndarray, path: str) -> None:
    """Write a 2-D array as ascii PGM; floats in [0, 1] scale to 255."""
    arr = np.asarray(values)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    elif np.issubdtype(arr.dtype, np.floating):
        arr = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    body = "\n".join(" ".join(str(v) for v in row) for row in arr)
    atomic_write_text(path, f"P2\n{arr.shape[1]} {arr.shape[0]}\n255\n{body}\n")


_REPORT_KEYS = ("tp", "fp", "fn", "idsw", "soft_tp", "gt_total",
                "smotsa", "motsa", "motsp", "modsa", "recall", "precision")
_PERCENT_KEYS = {"smotsa", "motsa", "motsp", "modsa", "recall", "precision"}


def format_report(report: MetricsReport) -> str:
    rows = []
    for key in _REPORT_KEYS:
        value = getattr(report, key)
        if key in _PERCENT_KEYS:
            rows.append((key.upper(), f"{value * 100.0:.2f}%"))
        elif key == "soft_tp":
            rows.append((key.upper(), f"{value:.2f}"))
        else:
            rows.append((key.upper(), str(value)))
    pad = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(pad)}  {v}" for k, v in rows) + "\n"


def format_report_kv(report: MetricsReport) -> str:
    lines = []
    for key in _REPORT_KEYS:
        value = getattr(report, key)
        if isinstance(value, float):
            lines.append(f"{key}={value:.6f}")
        else:
            lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def write_report(report: MetricsReport, path: str, kv_path: Optional[str] = None) -> None:
    atomic_write_text(path, format_report(report))
    if kv_path is not None:
        atomic_write_text(kv_path, format_report_kv(report))


def parse_report_kv(path: str) -> dict[str, float]:
    out: dict[str, float] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key] = float(value)
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "linear"
    n_objects: int = 2
    n_frames: int = 30
    width: int = 256
    height: int = 160
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    tracker: TrackerConfig
    noise: NoiseParams
    scenario: Optional[ScenarioConfig]
    width: int
    height: int


def _coerce(value: str, target_type):
    if target_type is bool:
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise InvalidInputError(f"expected a boolean, got {value!r}")
    return target_type(value)


_SCALAR_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


def _fill_dataclass(cls, section, instance):
    """Override scalar dataclass fields from one config section; reject unknown keys."""
    known = {}
    for f in fields(cls):
        tname = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
        if tname in _SCALAR_TYPES:
            known[f.name] = _SCALAR_TYPES[tname]
    updates = {}
    for key, value in section.items():
        if key not in known:
            raise InvalidInputError(f"unknown {cls.__name__} option {key!r}")
        try:
            updates[key] = _coerce(value, known[key])
        except ValueError as exc:
            raise InvalidInputError(f"bad value for {key!r}: {exc}") from exc
    return replace(instance, **updates)


def load_config(path: Optional[str]) -> RunConfig:
    """Load the INI run configuration; missing file or sections use defaults.

    Sections: [tracker], [ukf], [noise], [scenario], [image].  The image
    dimensions fall back to the scenario's when [image] is absent.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if path is not None:
        read = parser.read(path)
        if not read:
            raise OSError(f"cannot read config file {path}")

    ukf_params = UkfParams()
    if parser.has_section("ukf"):
        ukf_params = _fill_dataclass(UkfParams, parser["ukf"], ukf_params)
    tracker = TrackerConfig(ukf=ukf_params)
    if parser.has_section("tracker"):
        tracker = _fill_dataclass(TrackerConfig, parser["tracker"], tracker)
    noise = NoiseParams()
    if parser.has_section("noise"):
        noise = _fill_dataclass(NoiseParams, parser["noise"], noise)
    scenario = None
    if parser.has_section("scenario"):
        scenario = _fill_dataclass(ScenarioConfig, parser["scenario"], ScenarioConfig())

    width = scenario.width if scenario else 256
    height = scenario.height if scenario else 160
    if parser.has_section("image"):
        img = dict(parser["image"])
        for key in img:
            if key not in ("width", "height"):
                raise InvalidInputError(f"unknown image option {key!r}")
        width = int(img.get("width", width))
        height = int(img.get("height", height))
    return RunConfig(tracker=tracker, noise=noise, scenario=scenario,
                     width=width, height=height)
