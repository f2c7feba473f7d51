"""Gateway runtime: landmark TCP ingestion, telemetry fan-out and the
calibration sample collector.

One landmark-stream connection at a time; each connection is one flight
session. Ingestion and the pipeline talk over a bounded queue that drops the
oldest frame on overload (a stale gaze command is worse than a skipped one);
telemetry subscribers each get their own bounded queue with the same policy.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os

from ..classifier import (
    ACTION_ORDER,
    Action,
    CalibrationError,
    CalibrationProfile,
    CalibrationSample,
    calibrate,
)
from ..config import SessionConfig
from ..geometry import DegenerateGeometry, MissingLandmark, RatioVector, extract_ratios
from ..pipeline import FramePipeline, build_pipeline
from ..sim import RaceResult, load_track
from ..wire import LineSplitter, MalformedFrame, parse_hello, parse_wire_frame

log = logging.getLogger("gazerace.gateway")

TELEMETRY_QUEUE_DEPTH = 256


class TelemetryHub:
    """Fan-out of telemetry messages to any number of subscribers."""

    def __init__(self):
        self._subs: dict[int, asyncio.Queue] = {}
        self._next_id = 0
        self.dropped = 0

    def subscribe(self) -> tuple[int, asyncio.Queue]:
        sub_id = self._next_id
        self._next_id += 1
        q: asyncio.Queue = asyncio.Queue(TELEMETRY_QUEUE_DEPTH)
        self._subs[sub_id] = q
        return sub_id, q

    def unsubscribe(self, sub_id: int) -> None:
        self._subs.pop(sub_id, None)

    def publish(self, message: dict) -> None:
        for q in self._subs.values():
            if q.full():
                try:
                    q.get_nowait()
                    self.dropped += 1
                except asyncio.QueueEmpty:
                    pass
            q.put_nowait(message)


class CalibrationManager:
    """Collects labeled ratio samples while the wizard walks the actions."""

    def __init__(self, hub: TelemetryHub):
        self.hub = hub
        self.active = False
        self.samples: dict[Action, list[RatioVector]] = {}
        self.current: Action | None = None
        self.needed = 0
        self._target_met = asyncio.Event()

    def start(self) -> None:
        self.active = True
        self.samples = {a: [] for a in ACTION_ORDER}
        self.current = None
        self.needed = 0
        self.hub.publish({"type": "calibration_started", "actions": [a.value for a in ACTION_ORDER]})

    def begin_collect(self, action: Action, count: int) -> None:
        if not self.active:
            raise CalibrationError("no calibration session is active")
        self.samples[action] = []
        self.current = action
        self.needed = count
        self._target_met = asyncio.Event()
        self.hub.publish(
            {
                "type": "prompt",
                "action": action.value,
                "needed": count,
                "index": ACTION_ORDER.index(action),
                "total": len(ACTION_ORDER),
            }
        )

    def add(self, ratios: RatioVector) -> None:
        if not (self.active and self.current is not None):
            return
        bucket = self.samples[self.current]
        if len(bucket) >= self.needed:
            return
        bucket.append(ratios)
        if len(bucket) % 10 == 0 or len(bucket) == self.needed:
            self.hub.publish(
                {
                    "type": "calibration_progress",
                    "action": self.current.value,
                    "collected": len(bucket),
                    "needed": self.needed,
                }
            )
        if len(bucket) >= self.needed:
            self.current = None
            self._target_met.set()

    async def wait_collected(self, timeout_s: float) -> bool:
        try:
            await asyncio.wait_for(self._target_met.wait(), timeout_s)
            return True
        except asyncio.TimeoutError:
            return False

    def counts(self) -> dict[str, int]:
        return {a.value: len(v) for a, v in self.samples.items()}

    def finish(self, config: SessionConfig) -> CalibrationProfile:
        """Compute and persist the profile; raises CalibrationError when a
        prompt must be re-run (missing/underfilled/noisy action)."""
        flat = [
            CalibrationSample(action, rv)
            for action in ACTION_ORDER
            for rv in self.samples[action]
        ]
        profile = calibrate(flat, config.classifier)
        if config.profile_path:
            with open(config.profile_path, "w", encoding="utf-8") as f:
                f.write(profile.to_json() + "\n")
        self.active = False
        self.hub.publish({"type": "calibration_finished"})
        return profile

    def abort(self) -> None:
        self.active = False
        self.current = None
        self.samples = {}
        self.hub.publish({"type": "calibration_aborted"})


_SENTINEL = None


class GatewayRuntime:
    """Owns the landmark TCP server and the per-connection flight pipeline."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.track = load_track(config.track_path)
        self.profile: CalibrationProfile | None = None
        if config.profile_path and os.path.exists(config.profile_path):
            with open(config.profile_path, "r", encoding="utf-8") as f:
                self.profile = CalibrationProfile.from_json(f.read())
        self.hub = TelemetryHub()
        self.calibration = CalibrationManager(self.hub)
        self.stats = {"frames": 0, "malformed": 0, "dropped": 0, "sessions": 0}
        self.pipeline: FramePipeline | None = None
        self.last_result: RaceResult | None = None
        self.last_log_paths: tuple[str, str] | None = None
        self._server: asyncio.AbstractServer | None = None
        self._conn_active = False
        self.landmark_port: int | None = None
        self.idle = asyncio.Event()
        self.idle.set()

    async def start(self) -> None:
        try:
            self._server = await asyncio.start_server(
                self._on_connection, self.config.network.host, self.config.network.landmark_port
            )
        except OSError as exc:
            raise OSError(f"cannot bind landmark port: {exc}") from exc
        self.landmark_port = self._server.sockets[0].getsockname()[1]
        log.info("landmark stream listening on %s:%d", self.config.network.host, self.landmark_port)

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def _on_connection(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        if self._conn_active:
            try:
                writer.write(b'{"error":"landmark stream already connected"}\n')
                await writer.drain()
            except OSError:
                pass
            writer.close()
            return
        self._conn_active = True
        self.idle.clear()
        self.stats["sessions"] += 1
        queue: asyncio.Queue = asyncio.Queue(self.config.pipeline.queue_depth)
        consumer = asyncio.create_task(self._consume(queue))
        splitter = LineSplitter()
        hello_seen = False
        try:
            while True:
                chunk = await reader.read(1 << 16)
                if not chunk:
                    break
                for raw in splitter.feed(chunk):
                    if not raw.strip():
                        continue
                    if not hello_seen:
                        # Lines before a valid hello are counted, not fatal.
                        try:
                            parse_hello(raw)
                            hello_seen = True
                        except MalformedFrame:
                            self.stats["malformed"] += 1
                        continue
                    try:
                        frame = parse_wire_frame(raw)
                    except MalformedFrame as exc:
                        self.stats["malformed"] += 1
                        log.debug("malformed frame skipped: %s", exc)
                        continue
                    self.stats["frames"] += 1
                    if queue.full():
                        try:
                            queue.get_nowait()
                            self.stats["dropped"] += 1
                        except asyncio.QueueEmpty:
                            pass
                    queue.put_nowait(frame)
        except (ConnectionResetError, asyncio.IncompleteReadError, OSError) as exc:
            log.info("landmark connection lost: %s", exc)
        finally:
            self.stats["malformed"] += splitter.oversize_count
            if queue.full():
                try:
                    queue.get_nowait()
                    self.stats["dropped"] += 1
                except asyncio.QueueEmpty:
                    pass
            queue.put_nowait(_SENTINEL)
            await consumer
            try:
                writer.close()
            except OSError:
                pass
            self._conn_active = False
            self.idle.set()

    async def _consume(self, queue: asyncio.Queue) -> None:
        pipeline: FramePipeline | None = None
        if self.profile is not None:
            pipeline = build_pipeline(self.config, self.profile, self.track, on_tick=self.hub.publish)
            self.pipeline = pipeline
        while True:
            frame = await queue.get()
            if frame is _SENTINEL:
                break
            if self.calibration.active:
                try:
                    self.calibration.add(extract_ratios(frame, self.config.geometry))
                except (MissingLandmark, DegenerateGeometry):
                    self.stats["malformed"] += 1
                continue
            if pipeline is not None:
                pipeline.process_frame(frame)
        if pipeline is not None and pipeline.frames_processed > 0:
            self.last_result = pipeline.finalize()
            self._write_logs(pipeline)
        self.pipeline = None

    def _write_logs(self, pipeline: FramePipeline) -> None:
        os.makedirs(self.config.out_dir, exist_ok=True)
        traj_path = os.path.join(self.config.out_dir, "trajectory.jsonl")
        cmd_path = os.path.join(self.config.out_dir, "commands.jsonl")
        pipeline.session.log.write(traj_path)
        with open(cmd_path, "w", encoding="utf-8") as f:
            f.write(pipeline.command_log_jsonl())
        self.last_log_paths = (traj_path, cmd_path)
        log.info(
            "session closed: %d frames, result %s",
            pipeline.frames_processed,
            json.dumps(self.last_result.to_dict()) if self.last_result else "n/a",
        )

    def adopt_profile(self, profile: CalibrationProfile) -> None:
        """Use a freshly calibrated profile for subsequent connections."""
        self.profile = profile

    def status(self) -> dict:
        pipeline = self.pipeline
        return {
            "connected": self._conn_active,
            "frames": self.stats["frames"],
            "malformed": self.stats["malformed"],
            "dropped": self.stats["dropped"],
            "sessions": self.stats["sessions"],
            "phase": pipeline.controller_state.phase.value if pipeline else None,
            "action": pipeline.current_action.value if pipeline else None,
            "gates_passed": pipeline.session.result.gates_passed if pipeline else 0,
            "profile_loaded": self.profile is not None,
            "calibration_active": self.calibration.active,
            "landmark_port": self.landmark_port,
        }
