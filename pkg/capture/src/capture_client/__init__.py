from .client import CaptureSettings, stream_landmarks

__all__ = ["CaptureSettings", "stream_landmarks"]
