"""HTTP JSON API over campaign files, consumed by the dashboard UI and by
external objective drivers.

One campaign per JSON document under a root directory; writes are
serialised per campaign (in-process lock plus the campaign lock file) and
reads serve plain snapshots.  Errors come back as
{"error": {"code": ..., "message": ...}} with a 4xx/5xx status.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .campaign import Campaign, init, save_state, status as state_status
from .errors import ConfigError, DomainError, ProtocolError, StateError
from .optimizer import OptimizerConfig

DEFAULT_ADDR = "127.0.0.1:8700"


class NotFoundError(Exception):
    pass


def _error_response(status_code: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status_code, content={"error": {"code": code, "message": message}}
    )


_ERROR_MAP = [
    (NotFoundError, 404, "not_found"),
    (ProtocolError, 409, "protocol_error"),
    (ConfigError, 400, "config_error"),
    (DomainError, 400, "domain_error"),
    (StateError, 500, "state_error"),
]


def _to_response(exc: Exception) -> JSONResponse:
    for etype, status_code, code in _ERROR_MAP:
        if isinstance(exc, etype):
            return _error_response(status_code, code, str(exc))
    return _error_response(500, "internal_error", str(exc))


def create_app(root: str | os.PathLike) -> FastAPI:
    root_path = Path(root)
    root_path.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="bfosp campaign service")
    locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def campaign_path(campaign_id: str) -> Path:
        if not campaign_id.replace("-", "").replace("_", "").isalnum():
            raise ConfigError(f"invalid campaign id {campaign_id!r}")
        return root_path / f"{campaign_id}.json"

    def campaign_lock(campaign_id: str) -> threading.Lock:
        with locks_guard:
            return locks.setdefault(campaign_id, threading.Lock())

    def open_campaign(campaign_id: str) -> Campaign:
        path = campaign_path(campaign_id)
        if not path.exists():
            raise NotFoundError(f"unknown campaign {campaign_id!r}")
        return Campaign.open(path)

    @app.exception_handler(Exception)
    async def handle_any(request: Request, exc: Exception):  # pragma: no cover
        return _to_response(exc)

    @app.post("/campaigns", status_code=201)
    async def create_campaign(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return _error_response(400, "config_error", "body must be a JSON config")
        try:
            config = OptimizerConfig.from_json(payload)
            campaign_id = payload.get("campaign_id")
            seed = int(payload.get("seed", 0))
            if campaign_id is not None and campaign_path(campaign_id).exists():
                return _error_response(
                    409, "protocol_error", f"campaign {campaign_id!r} already exists"
                )
            state = init(config, campaign_id=campaign_id, seed=seed)
            save_state(state, campaign_path(state.campaign_id))
            return state_status(state)
        except Exception as exc:
            return _to_response(exc)

    @app.get("/campaigns/{campaign_id}")
    async def get_status(campaign_id: str):
        try:
            return open_campaign(campaign_id).status()
        except Exception as exc:
            return _to_response(exc)

    @app.get("/campaigns/{campaign_id}/history")
    async def get_history(campaign_id: str):
        try:
            campaign = open_campaign(campaign_id)
            return {"records": campaign.history()}
        except Exception as exc:
            return _to_response(exc)

    @app.post("/campaigns/{campaign_id}/ask")
    async def post_ask(campaign_id: str):
        try:
            with campaign_lock(campaign_id):
                campaign = open_campaign(campaign_id)
                return {"suggestions": campaign.ask()}
        except Exception as exc:
            return _to_response(exc)

    @app.post("/campaigns/{campaign_id}/tell")
    async def post_tell(campaign_id: str, request: Request):
        try:
            payload = await request.json()
        except Exception:
            return _error_response(400, "config_error", "body must be a JSON object of token: y")
        if not isinstance(payload, dict) or not payload:
            return _error_response(
                400, "config_error", "body must be a non-empty JSON object of token: y"
            )
        try:
            scores = {str(t): float(y) for t, y in payload.items()}
        except (TypeError, ValueError):
            return _error_response(400, "config_error", "scores must be numeric")
        try:
            with campaign_lock(campaign_id):
                campaign = open_campaign(campaign_id)
                return campaign.tell(scores)
        except Exception as exc:
            return _to_response(exc)

    @app.get("/campaigns/{campaign_id}/curve")
    async def get_curve(campaign_id: str, which: str = "incumbent", grid: int = 101, index: int = 0):
        try:
            campaign = open_campaign(campaign_id)
            return campaign.export_curve(which=which, grid_size=grid, index=index)
        except Exception as exc:
            return _to_response(exc)

    return app


def resolve_addr(addr: str | None = None) -> tuple[str, int]:
    """Bind address from the argument or the BFOSP_ADDR environment variable."""
    raw = addr or os.environ.get("BFOSP_ADDR", DEFAULT_ADDR)
    host, _, port = raw.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"invalid address {raw!r}; expected host:port")
    return host, int(port)


def serve(addr: str | None = None, root: str | os.PathLike | None = None) -> None:
    """Run the service until interrupted (blocking)."""
    import uvicorn

    host, port = resolve_addr(addr)
    root = root or os.environ.get("BFOSP_ROOT", "campaigns")
    app = create_app(root)
    uvicorn.run(app, host=host, port=port, log_level="warning")
