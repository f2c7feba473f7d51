"""Landmark detector backends.

The client talks to any detector returning face-mesh points keyed by index.
MediaPipeDetector wraps the real face-mesh model when the mediapipe package
is installed; BlobDetector is a dependency-free stand-in that derives a
plausible eye-region layout from the brightest blob in the image, which is
enough to exercise the full wire path and throughput on fixture videos.
"""

from __future__ import annotations

import numpy as np

Landmarks = dict[int, tuple[float, float, float]]


class MediaPipeDetector:
    """Face-mesh landmarks from the mediapipe model (468 base points)."""

    def __init__(self):
        import mediapipe as mp  # deferred: heavy and optional

        self._mp = mp
        self._mesh = mp.solutions.face_mesh.FaceMesh(
            static_image_mode=False,
            max_num_faces=1,
            refine_landmarks=False,
            min_detection_confidence=0.5,
            min_tracking_confidence=0.5,
        )

    def detect(self, frame_bgr: np.ndarray) -> Landmarks | None:
        import cv2

        rgb = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2RGB)
        results = self._mesh.process(rgb)
        if not getattr(results, "multi_face_landmarks", None):
            return None
        landmarks = results.multi_face_landmarks[0].landmark
        return {
            i: (float(lm.x), float(lm.y), float(lm.z))
            for i, lm in enumerate(landmarks)
        }

    def close(self) -> None:
        self._mesh.close()


class BlobDetector:
    """Deterministic fallback: anchors an eye-region layout on the centroid
    of the brightest pixels. No face model, no extra dependencies."""

    # relative offsets (dx, dy) from the anchor, in image fractions
    LAYOUT = {
        362: (-0.05, 0.0),
        263: (0.05, 0.0),
        386: (0.0, -0.01),
        374: (0.0, 0.015),
        385: (0.0, 0.0),
        334: (0.0, -0.06),
    }

    def __init__(self, threshold: int = 200):
        self.threshold = threshold

    def detect(self, frame_bgr: np.ndarray) -> Landmarks | None:
        gray = frame_bgr.mean(axis=2)
        mask = gray >= self.threshold
        if not mask.any():
            return None
        ys, xs = np.nonzero(mask)
        h, w = gray.shape
        cx, cy = float(xs.mean()) / w, float(ys.mean()) / h
        return {
            idx: (min(max(cx + dx, 0.0), 1.0), min(max(cy + dy, 0.0), 1.0), 0.0)
            for idx, (dx, dy) in self.LAYOUT.items()
        }

    def close(self) -> None:
        pass


def make_detector(name: str = "auto"):
    if name == "mediapipe":
        return MediaPipeDetector()
    if name == "blob":
        return BlobDetector()
    if name == "auto":
        try:
            return MediaPipeDetector()
        except ImportError:
            return BlobDetector()
    raise ValueError(f"unknown detector: {name!r}")
