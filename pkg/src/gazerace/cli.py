"""Command-line front end.

Subcommands: serve (run the gateway), record, replay (offline pipeline or
wire feeder), race (replay + result summary), analyze (metrics, comparisons,
signed-rank), calibrate (offline from labeled samples, or driving a running
gateway). Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
import time

from .analytics import (
    EmptyTrajectory,
    compare_report,
    metrics,
    read_paired_csv,
    render_report,
    wilcoxon_signed_rank,
)
from .classifier import Action, CalibrationProfile, CalibrationSample, calibrate
from .config import SessionConfig
from .geometry import extract_ratios, RatioVector
from .pipeline import build_pipeline
from .sim import load_track, TrajectoryLog
from .wire import HELLO_LINE, CorruptRecording, parse_wire_frame, record as record_frames, replay as replay_frames


def _load_config(args) -> SessionConfig:
    cfg = SessionConfig.load(getattr(args, "config", None))
    if getattr(args, "track", None):
        cfg = SessionConfig.from_dict({**cfg.to_dict(), "track": os.path.abspath(args.track)})
    if getattr(args, "profile", None):
        cfg = SessionConfig.from_dict({**cfg.to_dict(), "profile": os.path.abspath(args.profile)})
    return cfg


def _load_profile(cfg: SessionConfig) -> CalibrationProfile:
    if not cfg.profile_path or not os.path.exists(cfg.profile_path):
        raise FileNotFoundError(
            f"calibration profile not found: {cfg.profile_path or '(none configured)'}"
        )
    with open(cfg.profile_path, "r", encoding="utf-8") as f:
        return CalibrationProfile.from_json(f.read())


def _print_metrics_rows(m) -> None:
    # Row names and order mirror the standard results-table layout.
    print(f"Time, s: {m.time_s:.2f}")
    print(f"Path length, m: {m.path_length_m:.2f}")
    print(f"Average velocity, m/s: {m.avg_velocity_mps:.2f}")
    print(f"Maximal velocity, m/s: {m.max_velocity_mps:.2f}")


def _run_offline(cfg: SessionConfig, recording: str, out_dir: str | None):
    profile = _load_profile(cfg)
    track = load_track(cfg.track_path)
    pipeline = build_pipeline(cfg, profile, track)
    for frame in replay_frames(recording, speed=0.0):
        pipeline.process_frame(frame)
    result = pipeline.finalize()
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        pipeline.session.log.write(os.path.join(out_dir, "trajectory.jsonl"))
        with open(os.path.join(out_dir, "commands.jsonl"), "w", encoding="utf-8") as f:
            f.write(pipeline.command_log_jsonl())
    return pipeline, result


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = _load_config(args)
    app = create_app(cfg)
    uvicorn.run(app, host=cfg.network.host, port=cfg.network.http_port, log_level="info")
    return 0


def cmd_record(args) -> int:
    if args.stdin:
        count = record_frames(sys.stdin, args.out)
        print(f"recorded {count} frames to {args.out}")
        return 0
    host, _, port = args.listen.rpartition(":")
    host = host or "127.0.0.1"
    srv = socket.create_server((host, int(port)))
    print(f"waiting for one landmark connection on {host}:{int(port)} ...")
    conn, addr = srv.accept()
    print(f"recording from {addr[0]}:{addr[1]}")
    lines = []
    buf = b""
    with conn:
        while True:
            chunk = conn.recv(1 << 16)
            if not chunk:
                break
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                lines.append(line)
    # drop the transport hello; everything else is persisted verbatim
    if lines and b'"proto"' in lines[0]:
        lines = lines[1:]
    count = record_frames(lines, args.out)
    srv.close()
    print(f"recorded {count} frames to {args.out}")
    return 0


def feed_recording(host: str, port: int, path: str, speed: float = 0.0) -> int:
    """Send a recording to a running gateway over the landmark socket."""
    sent = 0
    with socket.create_connection((host, port)) as sock:
        sock.sendall((HELLO_LINE + "\n").encode())
        prev_t = None
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                frame = parse_wire_frame(line)
                if speed > 0 and prev_t is not None and frame.timestamp_us > prev_t:
                    time.sleep((frame.timestamp_us - prev_t) / 1e6 * speed)
                prev_t = frame.timestamp_us
                sock.sendall((line + "\n").encode())
                sent += 1
    return sent


def cmd_replay(args) -> int:
    cfg = _load_config(args)
    if args.connect:
        host, _, port = args.connect.rpartition(":")
        sent = feed_recording(host or "127.0.0.1", int(port), args.replay, speed=args.speed)
        print(f"fed {sent} frames to {args.connect}")
        return 0
    pipeline, result = _run_offline(cfg, args.replay, args.out)
    print(json.dumps(result.to_dict()))
    if args.out:
        print(f"logs written to {args.out}/")
    return 0


def cmd_race(args) -> int:
    cfg = _load_config(args)
    pipeline, result = _run_offline(cfg, args.replay, args.out)
    end = result.split_t_us[-1] if result.split_t_us else None
    try:
        m = metrics(pipeline.session.log, end_t_us=end)
        _print_metrics_rows(m)
    except EmptyTrajectory:
        print("no flying-phase samples; nothing to measure")
    print(
        f"gates: {result.gates_passed}/{result.gates_total}  "
        f"finished: {'yes' if result.finished else 'no'}"
        + ("  (stream exhausted)" if result.stream_exhausted else "")
    )
    if result.splits_s:
        print("splits, s: " + ", ".join(f"{s:.2f}" for s in result.splits_s))
    return 0


def cmd_analyze(args) -> int:
    did_something = False
    if args.trajectory:
        log = TrajectoryLog.read(args.trajectory)
        m = metrics(log, end_t_us=args.end_t_us)
        if args.json:
            print(json.dumps(m.to_dict()))
        else:
            _print_metrics_rows(m)
        did_something = True
    if args.paired:
        with open(args.paired, "r", encoding="utf-8") as f:
            pairs = read_paired_csv(f.read())
        r = wilcoxon_signed_rank(pairs, args.exact_threshold)
        if args.json:
            print(json.dumps(r.to_dict()))
        else:
            print(
                f"Wilcoxon signed-rank: V={r.V:g}, p={r.p_two_sided:g} "
                f"({r.method.value}, n={r.n_effective})"
            )
        did_something = True
    if args.compare_a or args.compare_b:
        if not (args.compare_a and args.compare_b):
            print("error: --compare-a and --compare-b must both be given", file=sys.stderr)
            return 2

        def load_runs(paths):
            runs = []
            for p in paths:
                log = TrajectoryLog.read(p)
                runs.append(metrics(log))
            return runs

        report = compare_report(
            load_runs(args.compare_a),
            load_runs(args.compare_b),
            labels_a=args.labels_a.split(",") if args.labels_a else None,
            labels_b=args.labels_b.split(",") if args.labels_b else None,
            condition_a=args.name_a,
            condition_b=args.name_b,
        )
        if args.json:
            print(json.dumps(report))
        else:
            print(render_report(report), end="")
        did_something = True
    if not did_something:
        print("error: nothing to analyze (see --trajectory/--paired/--compare-a)", file=sys.stderr)
        return 2
    return 0


def _calibrate_offline(args, cfg: SessionConfig) -> int:
    samples: list[CalibrationSample] = []
    with open(args.samples, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            doc = json.loads(line)
            action = Action(doc["action"])
            if "ratios" in doc:
                ratios = RatioVector.from_sequence(doc["ratios"])
            else:
                frame = parse_wire_frame(json.dumps(doc["frame"]))
                ratios = extract_ratios(frame, cfg.geometry)
            samples.append(CalibrationSample(action, ratios))
    profile = calibrate(samples, cfg.classifier)
    out = args.out or cfg.profile_path or "profile.json"
    with open(out, "w", encoding="utf-8") as f:
        f.write(profile.to_json() + "\n")
    print(f"profile written to {out}")
    return 0


def _calibrate_live(args, cfg: SessionConfig) -> int:
    import httpx

    base = args.server.rstrip("/")
    with httpx.Client(base_url=base, timeout=args.timeout + 10) as client:
        client.post("/api/calibration/start").raise_for_status()
        pending = list(Action)
        attempts = 0
        while pending and attempts < 3 * len(Action):
            action = pending.pop(0)
            attempts += 1
            print(f"hold the {action.value} gesture ...")
            r = client.post(
                "/api/calibration/collect",
                json={"action": action.value, "count": args.count, "timeout_s": args.timeout},
            )
            r.raise_for_status()
            body = r.json()
            if not body["complete"]:
                print(f"  only {body['collected']} samples arrived; retrying {action.value}")
                pending.append(action)
            else:
                print(f"  collected {body['collected']}")
        r = client.post("/api/calibration/finish")
        if r.status_code == 422:
            detail = r.json().get("detail", {})
            print(f"calibration rejected: {detail}", file=sys.stderr)
            return 1
        r.raise_for_status()
        print("profile computed and stored by the gateway")
        if args.out:
            with open(args.out, "w", encoding="utf-8") as f:
                json.dump(r.json(), f, indent=2)
            print(f"profile copy written to {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _load_config(args)
    if args.samples:
        return _calibrate_offline(args, cfg)
    if args.server:
        return _calibrate_live(args, cfg)
    print("error: provide --samples FILE or --server URL", file=sys.stderr)
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazerace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="session config JSON (or $GAZERACE_CONFIG)")
        p.add_argument("--track", help="track file overriding the config")
        p.add_argument("--profile", help="calibration profile overriding the config")
        p.add_argument("--out", help="output directory or file")

    p = sub.add_parser("serve", help="run the gateway service")
    common(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("record", help="capture a landmark stream to a file")
    common(p)
    p.add_argument("--listen", default="127.0.0.1:8750", help="host:port to accept one stream on")
    p.add_argument("--stdin", action="store_true", help="read frames from stdin instead")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("replay", help="offline pipeline from a recording, or feed a gateway")
    common(p)
    p.add_argument("--replay", required=True, metavar="RECORDING", help="recording file")
    p.add_argument("--connect", help="host:port of a running gateway to feed instead")
    p.add_argument("--speed", type=float, default=0.0, help="timing multiplier (0 = flat out)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("race", help="replay a recording and summarize the race")
    common(p)
    p.add_argument("--replay", required=True, metavar="RECORDING", help="recording file")
    p.set_defaults(func=cmd_race)

    p = sub.add_parser("analyze", help="trajectory metrics, comparisons and signed-rank tests")
    common(p)
    p.add_argument("--trajectory", help="trajectory JSONL to reduce to metrics")
    p.add_argument("--end-t-us", type=int, default=None, help="cut the trajectory at this time")
    p.add_argument("--paired", help="CSV of label,a,b pairs for the signed-rank test")
    p.add_argument("--exact-threshold", type=int, default=25)
    p.add_argument("--compare-a", nargs="+", help="trajectory files for condition A")
    p.add_argument("--compare-b", nargs="+", help="trajectory files for condition B")
    p.add_argument("--labels-a", help="comma-separated subject labels for condition A")
    p.add_argument("--labels-b", help="comma-separated subject labels for condition B")
    p.add_argument("--name-a", default="A")
    p.add_argument("--name-b", default="B")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="build a calibration profile")
    common(p)
    p.add_argument("--samples", help="labeled samples JSONL (offline)")
    p.add_argument("--server", help="gateway base URL to drive a live calibration")
    p.add_argument("--count", type=int, default=30, help="samples per action (live mode)")
    p.add_argument("--timeout", type=float, default=30.0, help="collect timeout per action, s")
    p.set_defaults(func=cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except CorruptRecording as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
