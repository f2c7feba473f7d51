"""HTTP/WebSocket face of the gateway.

REST endpoints cover status, calibration wizard control and the analytics
operations; /ws/telemetry streams per-tick telemetry and accepts the same
wizard-control messages, which is all the browser console uses.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import os

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..analytics import (
    AllZeroDifferences,
    EmptyInput,
    EmptyTrajectory,
    PairedSample,
    TrajectoryMetrics,
    compare_report,
    metrics,
    render_report,
    wilcoxon_signed_rank,
)
from ..classifier import Action, CalibrationError
from ..config import SessionConfig
from ..pipeline import run_race
from ..sim import RaceTrack, TrajectoryLog
from ..wire import CorruptRecording, MalformedFrame, parse_wire_frame
from .runtime import GatewayRuntime

CONSOLE_DIST_ENV = "GAZERACE_CONSOLE_DIST"


class StatusResponse(BaseModel):
    connected: bool
    frames: int
    malformed: int
    dropped: int
    sessions: int
    phase: str | None
    action: str | None
    gates_passed: int
    profile_loaded: bool
    calibration_active: bool
    landmark_port: int | None


class CalibrationStartResponse(BaseModel):
    actions: list[str]


class CollectRequest(BaseModel):
    action: str
    count: int = Field(default=30, ge=1)
    timeout_s: float = Field(default=30.0, gt=0)


class CollectResponse(BaseModel):
    action: str
    collected: int
    complete: bool


class SamplesRequest(BaseModel):
    action: str
    frames_jsonl: str


class ProfileResponse(BaseModel):
    version: int
    actions: dict


class MetricsRequest(BaseModel):
    trajectory_jsonl: str
    end_t_us: int | None = None


class MetricsModel(BaseModel):
    time_s: float
    path_length_m: float
    avg_velocity_mps: float
    max_velocity_mps: float


class PairModel(BaseModel):
    label: str
    a: float
    b: float


class WilcoxonRequest(BaseModel):
    pairs: list[PairModel]
    exact_threshold: int = Field(default=25, ge=0)


class WilcoxonResponse(BaseModel):
    V: float
    p_two_sided: float
    n_effective: int
    method: str


class CompareRequest(BaseModel):
    runs_a: list[MetricsModel]
    runs_b: list[MetricsModel]
    labels_a: list[str] | None = None
    labels_b: list[str] | None = None
    condition_a: str = "A"
    condition_b: str = "B"


class CompareResponse(BaseModel):
    report: dict
    text: str


class RaceRequest(BaseModel):
    recording_jsonl: str


class RaceResponse(BaseModel):
    result: dict
    metrics: MetricsModel | None


def _parse_action(name: str) -> Action:
    try:
        return Action(name)
    except ValueError:
        raise HTTPException(status_code=422, detail=f"unknown action: {name!r}")


def _metrics_model(m: TrajectoryMetrics) -> MetricsModel:
    return MetricsModel(**m.to_dict())


def create_app(config: SessionConfig | None = None) -> FastAPI:
    config = config or SessionConfig()
    runtime = GatewayRuntime(config)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        await runtime.start()
        yield
        await runtime.stop()

    app = FastAPI(title="gazerace gateway", lifespan=lifespan)
    app.state.runtime = runtime

    @app.get("/api/status", response_model=StatusResponse)
    def status():
        return StatusResponse(**runtime.status())

    @app.get("/api/config")
    def get_config():
        return runtime.config.to_dict()

    @app.get("/api/track")
    def get_track():
        return json.loads(runtime.track.to_json())

    @app.get("/api/profile")
    def get_profile():
        if runtime.profile is None:
            raise HTTPException(status_code=404, detail="no calibration profile loaded")
        return json.loads(runtime.profile.to_json())

    @app.post("/api/calibration/start", response_model=CalibrationStartResponse)
    def calibration_start():
        runtime.calibration.start()
        return CalibrationStartResponse(actions=[a.value for a in Action])

    @app.post("/api/calibration/collect", response_model=CollectResponse)
    async def calibration_collect(req: CollectRequest):
        action = _parse_action(req.action)
        try:
            runtime.calibration.begin_collect(action, req.count)
        except CalibrationError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        complete = await runtime.calibration.wait_collected(req.timeout_s)
        collected = len(runtime.calibration.samples.get(action, []))
        return CollectResponse(action=action.value, collected=collected, complete=complete)

    @app.post("/api/calibration/samples", response_model=CollectResponse)
    def calibration_samples(req: SamplesRequest):
        """Direct sample injection from recorded wire frames (offline path)."""
        act = _parse_action(req.action)
        if not runtime.calibration.active:
            raise HTTPException(status_code=409, detail="no calibration session is active")
        from ..geometry import DegenerateGeometry, MissingLandmark, extract_ratios

        lines = [ln for ln in req.frames_jsonl.splitlines() if ln.strip()]
        runtime.calibration.begin_collect(act, len(lines))
        for line in lines:
            try:
                frame = parse_wire_frame(line)
                runtime.calibration.add(extract_ratios(frame, runtime.config.geometry))
            except (MalformedFrame, MissingLandmark, DegenerateGeometry):
                continue
        collected = len(runtime.calibration.samples.get(act, []))
        return CollectResponse(action=act.value, collected=collected, complete=True)

    @app.post("/api/calibration/finish", response_model=ProfileResponse)
    def calibration_finish():
        try:
            profile = runtime.calibration.finish(runtime.config)
        except CalibrationError as exc:
            detail = {"error": str(exc)}
            if getattr(exc, "action", None) is not None:
                detail["action"] = exc.action.value
            raise HTTPException(status_code=422, detail=detail)
        runtime.adopt_profile(profile)
        return ProfileResponse(**json.loads(profile.to_json()))

    @app.post("/api/calibration/abort")
    def calibration_abort():
        runtime.calibration.abort()
        return {"aborted": True}

    @app.post("/api/analytics/metrics", response_model=MetricsModel)
    def analytics_metrics(req: MetricsRequest):
        try:
            log = TrajectoryLog.from_jsonl(req.trajectory_jsonl)
            return _metrics_model(metrics(log, end_t_us=req.end_t_us))
        except (EmptyTrajectory, ValueError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/api/analytics/wilcoxon", response_model=WilcoxonResponse)
    def analytics_wilcoxon(req: WilcoxonRequest):
        pairs = [PairedSample(p.label, p.a, p.b) for p in req.pairs]
        try:
            result = wilcoxon_signed_rank(pairs, req.exact_threshold)
        except AllZeroDifferences as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return WilcoxonResponse(
            V=result.V,
            p_two_sided=result.p_two_sided,
            n_effective=result.n_effective,
            method=result.method.value,
        )

    @app.post("/api/analytics/compare", response_model=CompareResponse)
    def analytics_compare(req: CompareRequest):
        to_tm = lambda m: TrajectoryMetrics(**m.model_dump())
        try:
            report = compare_report(
                [to_tm(m) for m in req.runs_a],
                [to_tm(m) for m in req.runs_b],
                labels_a=req.labels_a,
                labels_b=req.labels_b,
                condition_a=req.condition_a,
                condition_b=req.condition_b,
            )
        except EmptyInput as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return CompareResponse(report=report, text=render_report(report))

    @app.post("/api/race/replay", response_model=RaceResponse)
    def race_replay(req: RaceRequest):
        """Service-side offline replay of a recording against the loaded track."""
        if runtime.profile is None:
            raise HTTPException(status_code=409, detail="no calibration profile loaded")
        frames = []
        for i, line in enumerate(req.recording_jsonl.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                frames.append(parse_wire_frame(line))
            except MalformedFrame as exc:
                raise HTTPException(status_code=422, detail=f"line {i}: {exc}")
        log, result, _ = run_race(
            runtime.track,
            frames=frames,
            profile=runtime.profile,
            geometry=runtime.config.geometry,
            classifier_params=runtime.config.classifier,
            controller_cfg=runtime.config.controller,
            sim_params=runtime.config.sim,
            max_substeps=runtime.config.pipeline.max_substeps,
        )
        m = None
        try:
            end = result.split_t_us[-1] if result.finished else None
            m = _metrics_model(metrics(log, end_t_us=end))
        except EmptyTrajectory:
            pass
        return RaceResponse(result=result.to_dict(), metrics=m)

    @app.get("/api/result", response_model=RaceResponse)
    def last_result():
        if runtime.last_result is None:
            raise HTTPException(status_code=404, detail="no finished session yet")
        m = None
        if runtime.last_log_paths:
            try:
                log = TrajectoryLog.read(runtime.last_log_paths[0])
                end = runtime.last_result.split_t_us[-1] if runtime.last_result.finished else None
                m = _metrics_model(metrics(log, end_t_us=end))
            except (OSError, EmptyTrajectory):
                pass
        return RaceResponse(result=runtime.last_result.to_dict(), metrics=m)

    async def _handle_ws_control(msg: dict) -> dict:
        kind = msg.get("type")
        if kind == "calibration_start":
            runtime.calibration.start()
            return {"type": "calibration_ack", "op": "start"}
        if kind == "calibration_collect":
            action = Action(msg["action"])
            count = int(msg.get("count", 30))
            runtime.calibration.begin_collect(action, count)
            complete = await runtime.calibration.wait_collected(float(msg.get("timeout_s", 30.0)))
            return {
                "type": "calibration_ack",
                "op": "collect",
                "action": action.value,
                "collected": len(runtime.calibration.samples.get(action, [])),
                "complete": complete,
            }
        if kind == "calibration_finish":
            try:
                profile = runtime.calibration.finish(runtime.config)
            except CalibrationError as exc:
                err = {"type": "calibration_error", "error": str(exc)}
                if getattr(exc, "action", None) is not None:
                    err["action"] = exc.action.value
                return err
            runtime.adopt_profile(profile)
            return {"type": "calibration_ack", "op": "finish", "profile": json.loads(profile.to_json())}
        if kind == "calibration_abort":
            runtime.calibration.abort()
            return {"type": "calibration_ack", "op": "abort"}
        return {"type": "error", "error": f"unknown message type: {kind!r}"}

    @app.websocket("/ws/telemetry")
    async def ws_telemetry(ws: WebSocket):
        await ws.accept()
        sub_id, queue = runtime.hub.subscribe()

        async def sender():
            while True:
                msg = await queue.get()
                await ws.send_text(json.dumps(msg))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps({"type": "error", "error": "bad json"}))
                    continue
                try:
                    reply = await _handle_ws_control(msg)
                except (CalibrationError, ValueError, KeyError) as exc:
                    reply = {"type": "error", "error": str(exc)}
                await ws.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task
            runtime.hub.unsubscribe(sub_id)

    console_dist = os.environ.get(CONSOLE_DIST_ENV)
    if console_dist is None and os.path.isdir(os.path.join("frontend", "dist")):
        console_dist = os.path.join("frontend", "dist")
    if console_dist and os.path.isdir(console_dist):
        app.mount("/console", StaticFiles(directory=console_dist, html=True), name="console")

    return app
