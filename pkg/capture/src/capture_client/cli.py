import argparse
import sys

from .client import DEFAULT_WHITELIST, CameraUnavailable, CaptureSettings, GatewayUnreachable, stream_landmarks


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gazerace-capture",
        description="Stream face-mesh landmarks from a camera or video file to a gazerace gateway.",
    )
    p.add_argument("--camera", default="0", help="device index or video file path")
    p.add_argument("--fps", type=float, default=30.0, help="target capture rate")
    p.add_argument("--gateway", default="127.0.0.1:8750", help="host:port of the landmark socket")
    p.add_argument(
        "--indices",
        default=",".join(str(i) for i in DEFAULT_WHITELIST),
        help="comma-separated landmark indices to emit",
    )
    p.add_argument("--detector", choices=["auto", "mediapipe", "blob"], default="auto")
    p.add_argument("--max-retries", type=int, default=5)
    p.add_argument("--max-frames", type=int, default=None, help="stop after N emitted frames")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    camera: int | str = args.camera
    if isinstance(camera, str) and camera.isdigit():
        camera = int(camera)
    host, _, port = args.gateway.rpartition(":")
    settings = CaptureSettings(
        camera=camera,
        target_fps=args.fps,
        host=host or "127.0.0.1",
        port=int(port),
        whitelist=tuple(int(i) for i in args.indices.split(",") if i.strip()),
        detector=args.detector,
        max_retries=args.max_retries,
        max_frames=args.max_frames,
    )
    stats: dict = {}
    try:
        emitted = stream_landmarks(settings, stats=stats)
    except (CameraUnavailable, GatewayUnreachable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"emitted {emitted} frames "
        f"(captured {stats.get('captured', 0)}, no-face {stats.get('no_face', 0)}, "
        f"reconnects {stats.get('reconnects', 0)})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
