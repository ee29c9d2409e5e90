"""HTTP + event-stream API over the runtime.

The server owns one interactive session workcell (symbol browsing, command
panel operations) plus the plan store and the message bus. Plan runs execute
synchronously against freshly built workcells and publish node transitions,
symbol updates, and simulation snapshots onto the bus; /events streams the
merged bus log over a websocket with sequence-based reconnect replay.
"""

from __future__ import annotations

import asyncio
import math
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .btree import TickStatus, validate
from .bus import MessageBus
from .calibration import CalibrationError, calibrate_world
from .components import Workcell, build_workcell
from .plan_dsl import (
    PlanDocument,
    PlanSyntaxError,
    document_from_json,
    parse,
    serialize,
)
from .predicates import PredicateError, PredicateStatement
from .runner import (
    PlanStore,
    TICK_PERIOD,
    ValidationFailedError,
    override_noise,
    run_batch,
    run_plan,
)
from .world import Scene, load_scene


class RuntimeSession:
    """Server-side state: scene catalog, plan store, bus, session workcell."""

    def __init__(self, data_dir, scene_dir, default_scene: Optional[str] = None):
        self.scene_dir = Path(scene_dir)
        self.store = PlanStore(Path(data_dir) / "plans")
        self.bus = MessageBus()
        self.lock = threading.RLock()
        scenes = self.scene_names()
        name = default_scene or (scenes[0] if scenes else None)
        self.cell: Optional[Workcell] = None
        if name:
            self.load_session_scene(name)

    def scene_names(self) -> list[str]:
        if not self.scene_dir.exists():
            return []
        return sorted(p.stem for p in self.scene_dir.iterdir()
                      if p.suffix in (".yaml", ".yml", ".json"))

    def scene_path(self, ref: str) -> Path:
        direct = Path(ref)
        if direct.exists():
            return direct
        for suffix in (".yaml", ".yml", ".json"):
            candidate = self.scene_dir / f"{ref}{suffix}"
            if candidate.exists():
                return candidate
        raise FileNotFoundError(f"unknown scene {ref!r}")

    def load_scene(self, ref: str) -> Scene:
        return load_scene(self.scene_path(ref))

    def load_session_scene(self, ref: str):
        with self.lock:
            self.cell = build_workcell(self.load_scene(ref))

    def require_cell(self) -> Workcell:
        if self.cell is None:
            raise HTTPException(status_code=409, detail="no scene loaded")
        return self.cell


def create_app(data_dir="data", scene_dir="scenes",
               default_scene: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="costar runtime")
    session = RuntimeSession(data_dir, scene_dir, default_scene)
    app.state.session = session

    def _store_document(doc: PlanDocument) -> dict:
        plan_id = session.store.put(doc)
        return {"id": plan_id, "name": doc.name}

    def _get_document(plan_id: str) -> PlanDocument:
        try:
            return session.store.get(plan_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown plan {plan_id!r}")

    @app.get("/components")
    def components():
        cell = session.require_cell()
        return {"components": [d.to_json() for d in cell.registry.descriptors()]}

    @app.get("/symbols")
    def symbols():
        cell = session.require_cell()
        return {"symbols": [s.to_json() for s in cell.kb.symbols()]}

    @app.get("/predicates")
    def predicates():
        cell = session.require_cell()
        return {"predicates": [p.to_json() for p in cell.kb.list_true()]}

    @app.post("/query")
    def query(body: dict):
        cell = session.require_cell()
        templates = [PredicateStatement(t["name"], tuple(t["args"]))
                     for t in body.get("templates", [])]
        try:
            result = cell.kb.query_symbols(templates)
        except PredicateError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return {"symbols": result}

    @app.get("/scenes")
    def scenes():
        return {"scenes": session.scene_names()}

    @app.get("/plans")
    def plans():
        return {"plans": session.store.list()}

    @app.post("/plan")
    def post_plan(body: dict):
        try:
            if "text" in body:
                doc = parse(body["text"], name=body.get("name", "plan"))
            elif "tree" in body:
                doc = document_from_json(body)
            else:
                raise HTTPException(status_code=422, detail="expected 'text' or 'tree'")
            return _store_document(doc)
        except PlanSyntaxError as e:
            raise HTTPException(status_code=422, detail={
                "message": e.message, "line": e.line, "col": e.col})
        except ValueError as e:
            raise HTTPException(status_code=422, detail=str(e))

    @app.get("/plan/{plan_id}")
    def get_plan(plan_id: str):
        doc = _get_document(plan_id)
        return {"id": plan_id, "name": doc.name, "text": serialize(doc),
                "tree": doc.to_json()["tree"]}

    @app.post("/plan/{plan_id}/validate")
    def validate_plan(plan_id: str):
        doc = _get_document(plan_id)
        cell = session.require_cell()
        diagnostics = validate(doc.to_engine_tree(), cell.registry.known_operations())
        return {"diagnostics": [{"nodeId": d.node_id, "message": d.message}
                                for d in diagnostics]}

    def _run_request(plan_id: str, body: dict, batch: bool):
        doc = _get_document(plan_id)
        scene_ref = body.get("scene")
        if not scene_ref:
            raise HTTPException(status_code=422, detail="missing 'scene'")
        try:
            scene = session.load_scene(scene_ref)
        except FileNotFoundError as e:
            raise HTTPException(status_code=404, detail=str(e))
        noise = override_noise(scene,
                               body.get("noisePos"), body.get("noiseRot"),
                               body.get("dropout"))
        try:
            with session.lock:
                if batch:
                    report = run_batch(doc, scene, int(body.get("trials", 1)),
                                       seed_base=int(body.get("seedBase", 100)),
                                       bus=session.bus, noise=noise, plan_id=plan_id)
                else:
                    report = run_plan(doc, scene, seed=int(body.get("seed", 0)),
                                      bus=session.bus, noise=noise, plan_id=plan_id)
        except ValidationFailedError as e:
            raise HTTPException(status_code=422, detail={
                "error": "ValidationFailed",
                "diagnostics": [str(d) for d in e.diagnostics]})
        return report.to_json()

    @app.post("/plan/{plan_id}/run")
    def run(plan_id: str, body: dict):
        return _run_request(plan_id, body, batch=False)

    @app.post("/plan/{plan_id}/batch")
    def batch(plan_id: str, body: dict):
        return _run_request(plan_id, body, batch=True)

    @app.post("/components/{name}/ops/{op}")
    def invoke(name: str, op: str, body: Optional[dict] = None):
        """Command-panel invocation: run one operation to completion."""
        cell = session.require_cell()
        try:
            component = cell.registry.get(name)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown component {name!r}")
        with session.lock:
            try:
                handle = component.start(op, body or {})
            except Exception as e:
                raise HTTPException(status_code=422, detail=str(e))
            status = handle.poll()
            steps = 0
            while status is TickStatus.BUSY and steps < 100000:
                cell.world.step(TICK_PERIOD)
                cell.registry.update_symbols()
                status = handle.poll()
                steps += 1
            session.bus.publish("symbols",
                                {"symbols": [s.to_json() for s in cell.kb.symbols()]})
        return {"status": status.value, "error": getattr(handle, "error", None),
                "result": getattr(handle, "result", None)}

    @app.post("/calibrate")
    def calibrate(body: Optional[dict] = None):
        body = body or {}
        cell = session.require_cell()
        rot_noise = math.radians(float(body.get("noiseRotDeg", 0.0)))
        with session.lock:
            try:
                result = calibrate_world(cell.world,
                                         stations=int(body.get("stations", 11)),
                                         rot_noise=rot_noise,
                                         seed=int(body.get("seed", 0)))
            except CalibrationError as e:
                raise HTTPException(status_code=422, detail=str(e))
        return result.to_json()

    @app.websocket("/events")
    async def events(ws: WebSocket):
        await ws.accept()
        cursor = int(ws.query_params.get("from", 0))
        try:
            while True:
                pending = session.bus.stream(from_global=cursor)
                for msg in pending:
                    await ws.send_json(msg.to_json())
                    cursor = msg.global_seq + 1
                # Idle: wait briefly; client frames are ignored but a receive
                # call is what surfaces disconnects.
                try:
                    await asyncio.wait_for(ws.receive_text(), timeout=0.02)
                except asyncio.TimeoutError:
                    pass
        except WebSocketDisconnect:
            return

    return app
