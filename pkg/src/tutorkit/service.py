"""HTTP API over fragments, catalogs, planning, and sessions.

One process embeds the whole library; persistence is the file-backed
document store.  Fragments and catalogs are immutable per version;
sessions are single-writer with per-session mutual exclusion (a busy
session answers 409 CONCURRENT_SUBMISSION rather than queueing).
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import engine, gamification, planner, store
from .errors import CapabilityMismatch, SchemaViolation, TutorKitError
from .model import (
    AbstractConstraints,
    LearningFragment,
    canonical_json,
    fragment_from_dict,
    validate_fragment,
)
from .planner import FragmentCatalog, RefinementLimits

# every module error maps to exactly one HTTP status; codes are stable
ERROR_STATUS = {
    "MALFORMED_DOCUMENT": 400,
    "SCHEMA_VIOLATION": 422,
    "NOT_FOUND": 404,
    "UNKNOWN_NODE": 404,
    "VERSION_CONFLICT": 409,
    "SESSION_NOT_ACTIVE": 409,
    "CONCURRENT_SUBMISSION": 409,
    "KIND_MISMATCH": 422,
    "SHAPE_MISMATCH": 422,
    "CAPABILITY_MISMATCH": 422,
    "UNREFINED_FRAGMENT": 422,
    "VALIDATION_FAILED": 422,
    "CONDITION_SYNTAX": 422,
    "UNKNOWN_BUILTIN": 422,
    "UNKNOWN_VARIABLE": 422,
    "TYPE_MISMATCH": 422,
    "UNCOVERABLE_GOAL": 422,
    "PREREQUISITE_CYCLE": 422,
    "CHAIN_TOO_LONG": 422,
    "DEPTH_EXCEEDED": 422,
    "NOT_ABSORBING": 422,
    "UNAUTHORIZED": 401,
    "RESULT_INVALID": 500,
    "INTERNAL": 500,
}


@dataclass
class ServiceConfig:
    data_dir: str = "./data"
    step_cap: int = engine.DEFAULT_STEP_CAP
    limits: RefinementLimits = RefinementLimits()
    grader_plugin: str = "static"
    api_token: str | None = None
    static_dir: str | None = None  # optional built studio assets


class ConcurrentSubmission(TutorKitError):
    code = "CONCURRENT_SUBMISSION"


def _api_error(code: str, message: str, detail: dict | None = None) -> JSONResponse:
    status = ERROR_STATUS.get(code, 500)
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": message, "detail": detail or {}}},
    )


def negotiate(capabilities, fragment: LearningFragment) -> dict:
    """Per-node report of the satisfiable modality or the missing set."""
    capabilities = frozenset(capabilities)
    nodes = {}
    all_ok = True
    for node in fragment.nodes.values():
        modality = engine.choose_modality(node, capabilities)
        if modality is None:
            all_ok = False
            nodes[node.id] = {
                "satisfiable": False,
                "missing": sorted(set(node.representations) - capabilities),
            }
        else:
            nodes[node.id] = {"satisfiable": True, "modality": modality}
    return {"capabilities": sorted(capabilities), "satisfiable": all_ok, "nodes": nodes}


def _json_response(payload, status_code: int = 200) -> Response:
    return Response(
        content=canonical_json(payload),
        status_code=status_code,
        media_type="application/json",
    )


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="tutorkit", version="0.1.0")
    docs = store.DocumentStore(config.data_dir)
    session_locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def session_lock(session_id: str) -> threading.Lock:
        with locks_guard:
            return session_locks.setdefault(session_id, threading.Lock())

    @app.exception_handler(TutorKitError)
    async def handle_tutorkit_error(request: Request, exc: TutorKitError):
        detail = {}
        if isinstance(exc, CapabilityMismatch):
            detail = {"node": exc.node_id, "missing": sorted(exc.missing)}
        return _api_error(exc.code, str(exc), detail)

    if config.api_token:

        @app.middleware("http")
        async def check_token(request: Request, call_next):
            header = request.headers.get("authorization", "")
            if header != f"Bearer {config.api_token}":
                return _api_error("UNAUTHORIZED", "missing or invalid API token")
            return await call_next(request)

    # -- helpers -----------------------------------------------------------

    def load_stored_fragment(fragment_id: str, version: int | None = None) -> LearningFragment:
        doc = docs.fetch("fragments", fragment_id, version)
        return fragment_from_dict(json.loads(doc.body))

    def merged_catalog(catalog_id: str | None) -> FragmentCatalog:
        if catalog_id is not None:
            doc = docs.fetch("catalogs", catalog_id)
            return planner.catalog_from_dict(json.loads(doc.body))
        entries = []
        for cid in docs.list_ids("catalogs"):
            doc = docs.fetch("catalogs", cid)
            entries.extend(planner.catalog_from_dict(json.loads(doc.body)).entries)
        return FragmentCatalog(entries=tuple(entries))

    def all_rulepacks() -> list[gamification.RulePack]:
        packs = []
        for pid in docs.list_ids("rulepacks"):
            doc = docs.fetch("rulepacks", pid)
            packs.append(gamification.rulepack_from_dict(json.loads(doc.body)))
        return packs

    def parse_constraints(raw) -> AbstractConstraints | None:
        if not raw:
            return None
        allowed = raw.get("allowed_kinds")
        return AbstractConstraints(
            max_nodes=raw.get("max_nodes"),
            allowed_kinds=frozenset(allowed) if allowed is not None else None,
            required_modality=raw.get("required_modality"),
        )

    # -- fragments ---------------------------------------------------------

    @app.post("/fragments", status_code=201)
    def publish_fragment(body: dict = Body(...)):
        fragment = fragment_from_dict(body)
        report = validate_fragment(fragment)
        if not report.ok:
            return _api_error(
                "VALIDATION_FAILED",
                "fragment has validation errors",
                report.to_dict(),
            )
        # store the canonicalized raw document so side maps (e.g. editor
        # layout under "ui") survive round-trips
        docs.persist("fragments", fragment.id, fragment.version, canonical_json(body))
        return _json_response(
            {"id": fragment.id, "version": fragment.version, "report": report.to_dict()},
            status_code=201,
        )

    @app.get("/fragments")
    def list_fragments():
        return _json_response({"ids": docs.list_ids("fragments")})

    @app.get("/fragments/{fragment_id}")
    def get_fragment(fragment_id: str, version: int | None = None):
        doc = docs.fetch("fragments", fragment_id, version)
        return Response(content=doc.body, media_type="application/json")

    @app.post("/fragments/{fragment_id}/validate")
    def validate_fragment_endpoint(fragment_id: str, body: dict | None = Body(None)):
        if body:
            fragment = fragment_from_dict(body)
        else:
            fragment = load_stored_fragment(fragment_id)
        return _json_response(validate_fragment(fragment).to_dict())

    @app.post("/fragments/{fragment_id}/negotiate")
    def negotiate_endpoint(fragment_id: str, body: dict = Body(...)):
        fragment = load_stored_fragment(fragment_id, body.get("version"))
        return _json_response(negotiate(body.get("capabilities", []), fragment))

    # -- catalogs and rule packs --------------------------------------------

    @app.post("/catalogs", status_code=201)
    def publish_catalog(body: dict = Body(...)):
        catalog_id = body.get("id")
        if not isinstance(catalog_id, str):
            raise SchemaViolation("catalog document needs a string id")
        catalog = planner.catalog_from_dict(body)
        version = body.get("version", 1)
        docs.persist("catalogs", catalog_id, version, canonical_json(body))
        return _json_response(
            {"id": catalog_id, "version": version, "entries": len(catalog.entries)},
            status_code=201,
        )

    @app.get("/catalogs")
    def list_catalogs():
        return _json_response({"ids": docs.list_ids("catalogs")})

    @app.post("/rulepacks", status_code=201)
    def publish_rulepack(body: dict = Body(...)):
        pack = gamification.rulepack_from_dict(body)
        docs.persist("rulepacks", pack.id, body.get("version", 1), canonical_json(body))
        return _json_response({"id": pack.id, "rules": len(pack.rules)}, status_code=201)

    # -- planning (debug) ----------------------------------------------------

    @app.post("/plan")
    def plan_endpoint(body: dict = Body(...)):
        plan = planner.plan_goal(
            goal=body.get("goal", []),
            known=body.get("known", []),
            catalog=merged_catalog(body.get("catalog_id")),
            constraints=parse_constraints(body.get("constraints")),
            capabilities=body.get("capabilities"),
            max_length=config.limits.max_chain_length,
        )
        return _json_response(
            {
                "fragments": plan.fragment_ids,
                "covered": sorted(plan.covered),
                "total_cost": plan.total_cost,
            }
        )

    # -- sessions ------------------------------------------------------------

    def session_view(session: engine.Session, awards=()) -> dict:
        view = {
            "id": session.id,
            "fragment_id": session.fragment.id,
            "learner_id": session.learner_id,
            "status": session.status.value,
            "current": session.current,
            "steps": session.steps,
            "gamification": session.gamification.to_dict(),
        }
        if awards:
            view["awards"] = [a.to_dict() for a in awards]
        return view

    @app.post("/sessions", status_code=201)
    def create_session(body: dict = Body(...)):
        fragment_id = body.get("fragment_id")
        learner_id = body.get("learner_id", "")
        capabilities = body.get("capabilities", [])
        if not isinstance(fragment_id, str):
            raise SchemaViolation("session creation needs fragment_id")
        if not isinstance(capabilities, list) or not capabilities:
            raise SchemaViolation("session creation needs a non-empty capabilities list")
        fragment = load_stored_fragment(fragment_id, body.get("version"))
        catalog = merged_catalog(body.get("catalog_id"))

        def resolve(fid, version):
            return load_stored_fragment(fid, version)

        refined = planner.refine(
            fragment,
            catalog,
            capabilities=capabilities,
            limits=config.limits,
            resolve=resolve,
        )
        refined, packs = planner.attach_gamification(refined, all_rulepacks())
        rules, _warnings = gamification.merge_packs(packs)
        session = engine.start_session(
            refined,
            learner_id=learner_id,
            capabilities=capabilities,
            session_id=store.mint_id(),
            rules=rules,
            step_cap=config.step_cap,
            created_at=time.time(),
        )
        docs.persist(
            "sessions", session.id, 1,
            canonical_json(engine.session_to_dict(session)), overwrite=True,
        )
        view = session_view(session)
        view["activity"] = engine.current_activity(session).to_dict()
        return _json_response(view, status_code=201)

    def load_session(session_id: str) -> engine.Session:
        doc = docs.fetch("sessions", session_id)
        return engine.session_from_dict(json.loads(doc.body))

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = load_session(session_id)
        view = session_view(session)
        view["transcript"] = [entry.to_dict() for entry in session.transcript]
        return _json_response(view)

    @app.get("/sessions/{session_id}/current")
    def get_current(session_id: str):
        session = load_session(session_id)
        return _json_response(engine.current_activity(session).to_dict())

    @app.post("/sessions/{session_id}/submissions")
    def submit(session_id: str, body: dict = Body(...)):
        raw = body.get("submission", body)
        try:
            submission = engine.Submission.from_dict(raw)
        except (KeyError, ValueError) as exc:
            raise SchemaViolation(f"bad submission: {exc}") from exc
        lock = session_lock(session_id)
        if not lock.acquire(blocking=False):
            raise ConcurrentSubmission(f"session {session_id} has a submission in flight")
        try:
            session = load_session(session_id)
            result = engine.submit(session, submission, config.grader_plugin)
            docs.persist(
                "sessions", session_id, 1,
                canonical_json(engine.session_to_dict(result.session)), overwrite=True,
            )
            view = session_view(result.session, awards=result.awards)
            view["outcome"] = result.outcome.to_dict()
            view["next"] = result.assignment.to_dict()
            if result.session.status is engine.SessionStatus.ACTIVE:
                view["activity"] = engine.current_activity(result.session).to_dict()
            return _json_response(view)
        finally:
            lock.release()

    if config.static_dir:
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="studio")

    return app
