"""Capture loop: video frames -> detector -> whitelisted landmarks ->
newline-delimited JSON frames on the gateway's landmark socket.

The client ships raw landmarks only; all geometry and classification stays
on the gateway side, so profiles remain detector-agnostic.
"""

from __future__ import annotations

import json
import socket
import time
from collections import deque
from dataclasses import dataclass, field

DEFAULT_WHITELIST = (362, 263, 386, 374, 385, 334)

HELLO = json.dumps({"proto": 1}) + "\n"

MAX_WIRE_INDEX = 467


class CameraUnavailable(RuntimeError):
    pass


class GatewayUnreachable(ConnectionError):
    pass


@dataclass
class CaptureSettings:
    camera: int | str = 0  # device index or video file path
    target_fps: float = 30.0
    host: str = "127.0.0.1"
    port: int = 8750
    whitelist: tuple[int, ...] = DEFAULT_WHITELIST
    detector: str = "auto"
    max_retries: int = 5
    backoff_s: float = 0.5
    send_buffer: int = 256
    max_frames: int | None = None  # stop after N emitted frames (tests/files)

    def __post_init__(self):
        if self.target_fps <= 0:
            raise ValueError("target_fps must be > 0")
        if not self.whitelist:
            raise ValueError("whitelist must be non-empty")
        bad = [i for i in self.whitelist if not (0 <= i <= MAX_WIRE_INDEX)]
        if bad:
            raise ValueError(f"whitelist indices out of wire range: {bad}")


class LineSender:
    """Non-blocking line writer with an oldest-drop buffer.

    A stale landmark frame is worse than a skipped one, so when the socket
    cannot keep up the oldest buffered line goes first.
    """

    def __init__(self, sock: socket.socket, depth: int):
        self.sock = sock
        self.sock.setblocking(False)
        self.buffer: deque[bytes] = deque()
        self.depth = depth
        self.dropped = 0
        self._partial = b""

    def send_line(self, line: str) -> None:
        if len(self.buffer) >= self.depth:
            self.buffer.popleft()
            self.dropped += 1
        self.buffer.append(line.encode() + b"\n")
        self.flush()

    def flush(self) -> None:
        while self._partial or self.buffer:
            data = self._partial or self.buffer.popleft()
            try:
                sent = self.sock.send(data)
            except (BlockingIOError, InterruptedError):
                self._partial = data
                return
            if sent < len(data):
                self._partial = data[sent:]
            else:
                self._partial = b""


def frame_line(t_us: int, landmarks: dict, whitelist) -> str | None:
    pts = []
    for idx in whitelist:
        p = landmarks.get(idx)
        if p is None:
            continue
        x, y = p[0], p[1]
        z = p[2] if len(p) > 2 else 0.0
        pts.append([idx, x, y, z])
    if not pts:
        return None
    return json.dumps({"t_us": t_us, "pts": pts})


def connect_with_backoff(settings: CaptureSettings) -> socket.socket:
    last_err = None
    for attempt in range(settings.max_retries):
        try:
            sock = socket.create_connection((settings.host, settings.port), timeout=5.0)
            sock.sendall(HELLO.encode())
            return sock
        except OSError as exc:
            last_err = exc
            time.sleep(settings.backoff_s * (2**attempt))
    raise GatewayUnreachable(
        f"gateway {settings.host}:{settings.port} unreachable after "
        f"{settings.max_retries} attempts: {last_err}"
    )


def open_capture(settings: CaptureSettings):
    import cv2

    cap = cv2.VideoCapture(settings.camera)
    if not cap.isOpened():
        raise CameraUnavailable(f"cannot open capture source {settings.camera!r}")
    return cap


def stream_landmarks(settings: CaptureSettings, detector=None, stats: dict | None = None) -> int:
    """Run the capture loop until the source ends or max_frames is reached.

    Returns the number of frames emitted. Frames with no detected face emit
    nothing (gaps are legitimate); a lost gateway connection is retried with
    backoff, re-sending the hello line.
    """
    from .detectors import make_detector

    if detector is None:
        detector = make_detector(settings.detector)
    stats = stats if stats is not None else {}
    stats.setdefault("captured", 0)
    stats.setdefault("emitted", 0)
    stats.setdefault("no_face", 0)
    stats.setdefault("reconnects", 0)

    cap = open_capture(settings)
    sock = connect_with_backoff(settings)
    sender = LineSender(sock, settings.send_buffer)
    period = 1.0 / settings.target_fps
    started = time.monotonic()
    next_deadline = started
    is_file = isinstance(settings.camera, str)
    try:
        while True:
            ok, frame = cap.read()
            if not ok:
                break  # camera gone or file exhausted
            stats["captured"] += 1
            landmarks = detector.detect(frame)
            if landmarks is None:
                stats["no_face"] += 1
                continue
            t_us = int((time.monotonic() - started) * 1e6)
            line = frame_line(t_us, landmarks, settings.whitelist)
            if line is None:
                stats["no_face"] += 1
                continue
            try:
                sender.send_line(line)
            except OSError:
                stats["reconnects"] += 1
                sock = connect_with_backoff(settings)
                sender = LineSender(sock, settings.send_buffer)
                sender.send_line(line)
            stats["emitted"] += 1
            if settings.max_frames is not None and stats["emitted"] >= settings.max_frames:
                break
            if not is_file:
                # pace live cameras to the target rate; files run flat out
                next_deadline += period
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
    finally:
        # drain whatever is still buffered before closing
        sock.setblocking(True)
        try:
            while sender.buffer or sender._partial:
                sender.flush()
        except OSError:
            pass
        sock.close()
        cap.release()
        detector.close()
    return stats["emitted"]
