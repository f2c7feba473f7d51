#!/usr/bin/env python3
"""Regenerate the built-in default track and the demo-race fixtures.

The demo flight plan is built from exact tick counts at the default command
speeds (1.0 m/s lateral, 0.5 m/s vertical, 0.8 rad/s yaw, 50 Hz), and the
default track's gates sit at the midpoints of the plan's translation legs,
so the scripted recording threads all seven gates. The minimal flight path
is exactly 53 m of commanded motion.

Outputs (committed, not generated at test time):
  src/gazerace/data/default_track.json
  src/gazerace/data/default_config.json
  tests/data/demo_config.json
  tests/data/demo_profile.json
  tests/data/demo_recording.jsonl
  tests/data/demo_telemetry.jsonl
"""

import json
import math
import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from gazerace.classifier import Action, CalibrationSample, ClassifierParams, calibrate
from gazerace.config import SessionConfig
from gazerace.geometry import EyeGeometryConfig, LandmarkFrame, Point2, extract_ratios
from gazerace.pipeline import build_pipeline
from gazerace.sim import RaceTrack, load_track
from gazerace.wire import frame_to_line

DT = 0.02
V_XY = 1.0
V_Z = 0.5
OMEGA = 0.8
TAKEOFF_ALT = 1.5
FRAME_US = 20000  # one simulator tick per frame

# Per-action synthetic geometry targets (h, v, open, brow). Distinct enough
# that sigma_min-normalized nearest-centroid classification is unambiguous.
ACTION_TARGETS = {
    Action.Center: (0.50, 0.50, 0.40, 0.60),
    Action.Left: (0.30, 0.50, 0.40, 0.60),
    Action.FarLeft: (0.10, 0.50, 0.40, 0.60),
    Action.Right: (0.70, 0.50, 0.40, 0.60),
    Action.FarRight: (0.90, 0.50, 0.40, 0.60),
    Action.Up: (0.50, 0.25, 0.40, 0.60),
    Action.Down: (0.50, 0.75, 0.40, 0.60),
    Action.Wide: (0.50, 0.50, 0.70, 0.60),
    Action.Squint: (0.50, 0.50, 0.15, 0.60),
    Action.Raise: (0.50, 0.50, 0.55, 1.00),
}

# Default geometry indices (see EyeGeometryConfig).
IDX_C1, IDX_C2 = 362, 263
IDX_HC = 386  # horizontal "center", also openness top / vertical e1 / brow ref
IDX_LOW = 374  # vertical e2 / openness bottom
IDX_VC = 385  # vertical center
IDX_BROW = 334


def action_points(action):
    h, v, op, brow = ACTION_TARGETS[action]
    x0, y0 = 0.30, 0.50
    xc = x0 + 0.1 * h
    return {
        IDX_C1: (x0, y0),
        IDX_C2: (0.40, y0),
        IDX_HC: (xc, y0),
        IDX_LOW: (xc, y0 + 0.1 * op),
        IDX_VC: (xc, y0 + 0.1 * op * v),
        IDX_BROW: (xc, y0 - 0.1 * brow),
    }


def action_frame(action, t_us):
    pts = {i: Point2(x, y) for i, (x, y) in action_points(action).items()}
    return LandmarkFrame(timestamp_us=t_us, points=pts)


# The flight plan: (action, frames). Translation legs carry the gates.
TAKEOFF_TICKS = round(TAKEOFF_ALT / (V_Z * DT))  # 150
PLAN = [
    (Action.Raise, 1),
    (Action.Center, TAKEOFF_TICKS - 1),  # climb finishes on the last of these
    (Action.Center, 5),  # hover margin
    (Action.Wide, 450),  # leg 1: 9 m            -> gate 1 at its midpoint
    (Action.FarRight, 30),  # yaw +0.48 rad
    (Action.Wide, 400),  # leg 2: 8 m            -> gate 2
    (Action.Up, 150),  # +1.5 m
    (Action.Wide, 300),  # leg 3: 6 m            -> gate 3
    (Action.FarLeft, 60),  # yaw -0.96 rad
    (Action.Wide, 400),  # leg 4: 8 m            -> gate 4
    (Action.Down, 150),  # -1.5 m
    (Action.Right, 250),  # leg 5: 5 m sideways   -> gate 5
    (Action.FarLeft, 90),  # yaw -1.44 rad
    (Action.Wide, 500),  # leg 6: 10 m           -> gate 6
    (Action.Left, 200),  # leg 7: 4 m sideways   -> gate 7
    (Action.Raise, 1),
    (Action.Center, 160),  # descend 150 ticks, then a few ground frames
]

GATE_LEGS = {Action.Wide: True}  # plus the two lateral legs, handled below

MIN_FLIGHT_PATH_M = 9 + 8 + 1.5 + 6 + 8 + 1.5 + 5 + 10 + 4  # = 53.0


def build_track():
    """Walk the plan analytically and drop a gate at each leg midpoint."""
    x, y, z = 0.0, 0.0, TAKEOFF_ALT
    yaw = 0.0
    gates = []
    translation_legs = {Action.Wide, Action.Right, Action.Left}
    for action, frames in PLAN:
        if action in (Action.Raise, Action.Center):
            continue
        if action is Action.FarRight:
            yaw += OMEGA * DT * frames
            continue
        if action is Action.FarLeft:
            yaw -= OMEGA * DT * frames
            continue
        if action is Action.Up:
            z += V_Z * DT * frames
            continue
        if action is Action.Down:
            z -= V_Z * DT * frames
            continue
        assert action in translation_legs
        dist = V_XY * DT * frames
        if action is Action.Wide:
            dx, dy = math.cos(yaw), math.sin(yaw)
        elif action is Action.Right:
            dx, dy = math.sin(yaw), -math.cos(yaw)
        else:  # Left
            dx, dy = -math.sin(yaw), math.cos(yaw)
        mid = (x + dx * dist / 2, y + dy * dist / 2, z)
        gates.append({"center": [round(c, 6) for c in mid], "normal_yaw": round(math.atan2(dy, dx), 6), "size": 1.4})
        x += dx * dist
        y += dy * dist
    assert len(gates) == 7, len(gates)
    return {
        "start": {"x": 0.0, "y": 0.0, "z": 0.0, "yaw": 0.0},
        "gates": gates,
    }


def build_profile():
    params = ClassifierParams(n_min=30)
    samples = []
    for action in Action:
        frame = action_frame(action, 0)
        ratios = extract_ratios(frame, EyeGeometryConfig())
        samples.extend(CalibrationSample(action, ratios) for _ in range(30))
    return calibrate(samples, params)


def build_recording():
    lines = []
    t = 0
    for action, frames in PLAN:
        for _ in range(frames):
            lines.append(frame_to_line(action_frame(action, t)))
            t += FRAME_US
    return "\n".join(lines) + "\n"


def main():
    data_dir = os.path.join(ROOT, "src", "gazerace", "data")
    tests_dir = os.path.join(ROOT, "tests", "data")
    os.makedirs(data_dir, exist_ok=True)
    os.makedirs(tests_dir, exist_ok=True)

    track = build_track()
    with open(os.path.join(data_dir, "default_track.json"), "w") as f:
        json.dump(track, f, indent=2)
        f.write("\n")

    with open(os.path.join(data_dir, "default_config.json"), "w") as f:
        json.dump(SessionConfig().to_dict(), f, indent=2)
        f.write("\n")

    profile = build_profile()
    with open(os.path.join(tests_dir, "demo_profile.json"), "w") as f:
        f.write(profile.to_json() + "\n")

    with open(os.path.join(tests_dir, "demo_recording.jsonl"), "w") as f:
        f.write(build_recording())

    # Demo race config: smoothing and debounce disabled so the scripted
    # schedule maps one-to-one onto commands; tau_v = 0 keeps the kinematics
    # exact, which the analytic path-length oracle relies on.
    demo_config = {
        "classifier": {"alpha_ema": 1.0, "debounce": 1, "n_min": 30, "sigma_min": 0.01, "cv_max": 0.5},
        "controller": {"v_xy": V_XY, "v_z": V_Z, "omega": OMEGA, "takeoff_alt": TAKEOFF_ALT},
        "sim": {"dt": DT, "tau_v": 0.0, "v_max": 6.5, "landing_v": V_Z},
        "profile": "demo_profile.json",
    }
    with open(os.path.join(tests_dir, "demo_config.json"), "w") as f:
        json.dump(demo_config, f, indent=2)
        f.write("\n")

    # Telemetry fixture for the console: every 25th tick plus every
    # gate-crossing tick, straight from a real pipeline run.
    from gazerace.classifier import CalibrationProfile
    from gazerace.wire import replay

    config = SessionConfig.from_dict(demo_config, base_dir=tests_dir)
    rows = []
    last_gates = 0

    def on_tick(rec):
        nonlocal last_gates
        if rec["gates_passed"] != last_gates or rec["t_us"] % (25 * FRAME_US) == 0:
            rows.append(rec)
            last_gates = rec["gates_passed"]

    pipeline = build_pipeline(config, profile, load_track(), on_tick=on_tick)
    for frame in replay(os.path.join(tests_dir, "demo_recording.jsonl")):
        pipeline.process_frame(frame)
    result = pipeline.finalize()
    assert result.finished, result.to_dict()
    with open(os.path.join(tests_dir, "demo_telemetry.jsonl"), "w") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")

    from gazerace.analytics import metrics

    m = metrics(pipeline.session.log, end_t_us=result.split_t_us[-1])
    print(f"track gates: {len(track['gates'])}")
    print(f"race finished: {result.finished}, gates: {result.gates_passed}, "
          f"time to last gate: {result.total_time_s:.2f}s")
    print(f"flying path: {m.path_length_m:.6f} m (plan minimum {MIN_FLIGHT_PATH_M} m)")
    print(f"telemetry fixture rows: {len(rows)}")


if __name__ == "__main__":
    main()
