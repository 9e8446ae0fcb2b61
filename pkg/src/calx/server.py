"""HTTP API over sessions, consumed by the web client.

Every mutating endpoint answers with the updated active-path view plus the
focused content render, so the client updates without a second round trip.
Errors: 400 for parse/validation problems, 404 for missing sessions or
nodes, 409 when another mutation is in flight, 422 when a tactic is
inapplicable or its side condition fails (details included).
"""

from __future__ import annotations

import json
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from calx.errors import (
    CalxError,
    FormatError,
    Inapplicable,
    NoSuchObligation,
    ParamValidation,
    ParseError,
    ReplayMismatch,
    SideConditionFailed,
    SortError,
    TacticError,
    UnknownIdentifier,
    UnknownNode,
    UnknownTactic,
)
from calx.oracle import format_model
from calx.render import obligation_json, state_layout
from calx.session import Session, SessionBusy, SessionStore
from calx.tactics import registry_metadata


def _error_payload(exc: Exception) -> dict:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SideConditionFailed):
        payload["obligation"] = exc.label
        v = exc.verdict
        payload["verdict"] = {
            "kind": v.kind,
            "reason": v.reason,
            "source": v.source,
            "model": format_model(v.model) if v.model else None,
        }
    return payload


def _status_for(exc: Exception) -> int:
    if isinstance(exc, (ParseError, ParamValidation, UnknownTactic, SortError,
                        UnknownIdentifier, FormatError, ReplayMismatch)):
        return 400
    if isinstance(exc, (UnknownNode, NoSuchObligation)):
        return 404
    if isinstance(exc, SessionBusy):
        return 409
    if isinstance(exc, (Inapplicable, SideConditionFailed, TacticError)):
        return 422
    return 500


def _view_of(session: Session, node_id: Optional[int] = None,
             view: str = "minimal", spans: bool = False) -> dict:
    tree = session.tree
    if tree is None:
        return {"activePath": [], "activeLeaf": None, "content": None}
    nid = tree.active_leaf if node_id is None else node_id
    return {
        "activePath": tree.active_path_view(),
        "activeLeaf": tree.active_leaf,
        "node": nid,
        "content": state_layout(tree.node(nid).state, view, spans),
    }


def create_app(store: Optional[SessionStore] = None) -> FastAPI:
    store = store or SessionStore()
    app = FastAPI(title="calx", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.exception_handler(CalxError)
    async def calx_error(request: Request, exc: CalxError):
        return JSONResponse(status_code=_status_for(exc), content=_error_payload(exc))

    @app.exception_handler(SessionBusy)
    async def busy(request: Request, exc: SessionBusy):
        return JSONResponse(status_code=409, content=_error_payload(exc))

    def _session(session_id: str) -> Session:
        s = store.get(session_id)
        if s is None:
            raise UnknownNode(f"no session {session_id}")
        return s

    @app.post("/sessions")
    async def create_session():
        s = store.create()
        return {"id": s.id}

    @app.get("/sessions/{sid}/tree")
    async def get_tree(sid: str):
        s = _session(sid)
        if s.tree is None:
            return {"nodes": [], "activeLeaf": None, "activePath": []}
        nodes = [
            {
                "id": n.id,
                "parent": n.parent,
                "children": list(n.children),
                "tactic": n.produced_by.name,
                "command": n.produced_by.render(),
                "mode": n.state.mode,
            }
            for _, n in sorted(s.tree.nodes.items())
        ]
        return {
            "nodes": nodes,
            "activeLeaf": s.tree.active_leaf,
            "activePath": s.tree.active_path_view(),
        }

    @app.get("/sessions/{sid}/node/{node_id}")
    async def get_node(sid: str, node_id: int, view: str = "minimal", spans: int = 0):
        s = _session(sid)
        if s.tree is None:
            raise UnknownNode("no derivation yet")
        if view not in ("minimal", "full"):
            raise ParamValidation("view must be minimal or full")
        return _view_of(s, node_id, view, bool(spans))

    @app.post("/sessions/{sid}/tactic")
    async def post_tactic(sid: str, request: Request):
        s = _session(sid)
        raw = (await request.body()).decode("utf-8")
        at: Optional[int] = None
        text = raw
        if request.headers.get("content-type", "").startswith("application/json"):
            data = json.loads(raw)
            text = data["text"]
            at = data.get("at")
        node_id, report = s.apply_text(text, at=at)
        out = _view_of(s)
        out["report"] = {
            "messages": list(report.messages),
            "obligations": [obligation_json(o) for o in report.obligations],
        }
        return out

    @app.post("/sessions/{sid}/navigate")
    async def post_navigate(sid: str, request: Request):
        s = _session(sid)
        data = json.loads((await request.body()).decode("utf-8"))
        s.navigate(int(data["node"]), descend=bool(data.get("descend", False)))
        return _view_of(s)

    @app.get("/sessions/{sid}/tactics")
    async def get_tactics(sid: str):
        _session(sid)
        return {"tactics": registry_metadata()}

    @app.get("/sessions/{sid}/obligations")
    async def get_obligations(sid: str, node: Optional[int] = None):
        s = _session(sid)
        return {"obligations": [obligation_json(o) for o in s.obligations(node)]}

    @app.get("/sessions/{sid}/obligations/{label:path}")
    async def get_obligation(sid: str, label: str, node: Optional[int] = None):
        s = _session(sid)
        for o in s.obligations(node):
            if o.label == label:
                return obligation_json(o)
        raise NoSuchObligation(f"no obligation '{label}'")

    @app.post("/sessions/{sid}/save")
    async def post_save(sid: str, request: Request):
        s = _session(sid)
        data = json.loads((await request.body()).decode("utf-8"))
        s.save(data["path"])
        return {"saved": data["path"]}

    @app.post("/sessions/{sid}/load")
    async def post_load(sid: str, request: Request):
        s = _session(sid)
        data = json.loads((await request.body()).decode("utf-8"))
        s.load(data["path"], trust_replay=data.get("trust"))
        return _view_of(s)

    return app
