"""HTTP JSON API over labeling sessions.

Endpoints per session: points, bulk label, undo, export, stats.
Errors are returned as {code, message}.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .session import LabelSession


class BulkRequest(BaseModel):
    polygon: list[list[float]]
    label: str


def create_app(sessions: dict[str, LabelSession]) -> FastAPI:
    app = FastAPI(title="intentlab label service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ValueError)
    async def bad_request(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=400, content={"code": "bad_request", "message": str(exc)}
        )

    class _NotFound(Exception):
        def __init__(self, sid: str):
            self.sid = sid

    @app.exception_handler(_NotFound)
    async def not_found(request: Request, exc: _NotFound) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content={"code": "not_found", "message": f"unknown session {exc.sid!r}"},
        )

    def get_session(sid: str) -> LabelSession:
        session = sessions.get(sid)
        if session is None:
            raise _NotFound(sid)
        return session

    @app.get("/session/{sid}/points")
    def points(sid: str) -> list[dict]:
        session = get_session(sid)
        out = []
        for row, rec in enumerate(session.records):
            assigned = session.assignments.get(rec.id)
            out.append(
                {
                    "id": rec.id,
                    "x": float(session.coords.points[row, 0]),
                    "y": float(session.coords.points[row, 1]),
                    "text": rec.text,
                    "label": assigned[0] if assigned else None,
                    "provenance": assigned[1] if assigned else None,
                    "cluster": session.clusters.get(rec.id),
                }
            )
        return out

    @app.post("/session/{sid}/bulk")
    def bulk(sid: str, body: BulkRequest) -> dict:
        session = get_session(sid)
        affected = session.apply_bulk_label(body.polygon, body.label)
        return {"affected": affected}

    @app.post("/session/{sid}/undo")
    def undo(sid: str) -> dict:
        session = get_session(sid)
        reverted = session.undo()
        return {"reverted": reverted.to_obj()}

    @app.get("/session/{sid}/export")
    def export(sid: str) -> PlainTextResponse:
        session = get_session(sid)
        text, _ = session.export_lines()
        return PlainTextResponse(content=text, media_type="application/x-ndjson")

    @app.get("/session/{sid}/stats")
    def stats(sid: str) -> dict:
        return get_session(sid).stats()

    return app
