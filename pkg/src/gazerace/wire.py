"""Landmark wire protocol: newline-delimited JSON frames, plus recording
and replay of frame streams.

One frame per line: {"t_us": <int>, "pts": [[idx, x, y] or [idx, x, y, z],
...]}. z rides along on the wire but the geometry is 2-D and ignores it.
A connection opens with a one-time hello line {"proto": 1}.
"""

from __future__ import annotations

import json
import math
import time
from typing import Iterator

from .geometry import MAX_LANDMARK_INDEX, LandmarkFrame, Point2

PROTO_VERSION = 1
MAX_LINE_BYTES = 64 * 1024

HELLO_LINE = json.dumps({"proto": PROTO_VERSION})


class MalformedFrame(ValueError):
    """A wire line that does not parse into a valid landmark frame."""


class CorruptRecording(ValueError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"corrupt recording at line {line_number}: {reason}")
        self.line_number = line_number


class IoError(OSError):
    pass


def parse_wire_frame(line: str | bytes) -> LandmarkFrame:
    """Parse one wire line into a LandmarkFrame; raises MalformedFrame."""
    if isinstance(line, bytes):
        if len(line) > MAX_LINE_BYTES:
            raise MalformedFrame(f"line exceeds {MAX_LINE_BYTES} bytes")
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFrame(f"bad utf-8: {exc}") from None
    elif len(line.encode("utf-8", errors="replace")) > MAX_LINE_BYTES:
        raise MalformedFrame(f"line exceeds {MAX_LINE_BYTES} bytes")
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"bad json: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedFrame("frame must be a JSON object")
    t_us = doc.get("t_us")
    pts = doc.get("pts")
    if not isinstance(t_us, int) or isinstance(t_us, bool):
        raise MalformedFrame(f"t_us must be an integer: {t_us!r}")
    if not isinstance(pts, list) or not pts:
        raise MalformedFrame("pts must be a non-empty list")
    points: dict[int, Point2] = {}
    for entry in pts:
        if not isinstance(entry, list) or len(entry) not in (3, 4):
            raise MalformedFrame(f"point entry must be [idx, x, y(, z)]: {entry!r}")
        idx, x, y = entry[0], entry[1], entry[2]
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise MalformedFrame(f"landmark index must be an integer: {idx!r}")
        if not (0 <= idx <= MAX_LANDMARK_INDEX):
            raise MalformedFrame(f"landmark index out of range: {idx}")
        if idx in points:
            raise MalformedFrame(f"duplicate landmark index: {idx}")
        if not isinstance(x, (int, float)) or not isinstance(y, (int, float)):
            raise MalformedFrame(f"coordinates must be numbers: {entry!r}")
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MalformedFrame(f"coordinates must be finite: {entry!r}")
        points[idx] = Point2(float(x), float(y))
    return LandmarkFrame(timestamp_us=t_us, points=points)


def frame_to_line(frame: LandmarkFrame) -> str:
    pts = [[idx, p.x, p.y] for idx, p in sorted(frame.points.items())]
    return json.dumps({"t_us": frame.timestamp_us, "pts": pts})


def parse_hello(line: str | bytes) -> None:
    """Validate the protocol hello line; raises MalformedFrame."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFrame(f"bad utf-8 in hello: {exc}") from None
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"hello is not json: {exc}") from None
    if not isinstance(doc, dict) or doc.get("proto") != PROTO_VERSION:
        raise MalformedFrame(f"unsupported hello: {line.strip()!r}")


class LineSplitter:
    """Incremental newline splitter that survives arbitrary byte streams.

    Lines longer than MAX_LINE_BYTES are discarded (the overflow is counted
    once per oversized line); everything else comes out exactly as sent.
    """

    def __init__(self):
        self._buf = bytearray()
        self._discarding = False
        self.oversize_count = 0

    def feed(self, data: bytes) -> list[bytes]:
        lines: list[bytes] = []
        self._buf.extend(data)
        while True:
            nl = self._buf.find(b"\n")
            if nl == -1:
                if len(self._buf) > MAX_LINE_BYTES:
                    if not self._discarding:
                        self.oversize_count += 1
                        self._discarding = True
                    self._buf.clear()
                break
            line = bytes(self._buf[:nl])
            del self._buf[: nl + 1]
            if self._discarding:
                self._discarding = False  # tail of an oversized line
                continue
            if len(line) > MAX_LINE_BYTES:
                self.oversize_count += 1
                continue
            lines.append(line)
        return lines


def record(frames, path: str) -> int:
    """Persist an iterable of wire lines or LandmarkFrames verbatim.

    Returns the number of frames written; lines that do not parse as frames
    are skipped.
    """
    count = 0
    try:
        with open(path, "w", encoding="utf-8") as f:
            for item in frames:
                if isinstance(item, LandmarkFrame):
                    f.write(frame_to_line(item) + "\n")
                    count += 1
                    continue
                line = item.decode("utf-8", errors="replace") if isinstance(item, bytes) else item
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                try:
                    parse_wire_frame(line)
                except MalformedFrame:
                    continue
                f.write(line + "\n")
                count += 1
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return count


def replay(path: str, speed: float = 0.0) -> Iterator[LandmarkFrame]:
    """Re-emit a recording's frames with relative timing scaled by `speed`.

    speed 0 emits as fast as possible (the offline/test mode); speed 1
    reproduces the original pacing, 2 doubles every gap. Raises
    CorruptRecording at the first unparseable line, after yielding all
    frames before it.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    prev_t: int | None = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            frame = parse_wire_frame(line)
        except MalformedFrame as exc:
            raise CorruptRecording(lineno, str(exc)) from None
        if speed > 0 and prev_t is not None and frame.timestamp_us > prev_t:
            time.sleep((frame.timestamp_us - prev_t) / 1e6 * speed)
        prev_t = frame.timestamp_us
        yield frame
