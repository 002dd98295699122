"""HTTP inference service.

POST /api/v1/transfer takes a multipart request (source, reference,
source_seg, reference_seg, components, global, removal) and answers with a
PNG. GET /api/v1/health reports the loaded checkpoint. The loaded model is
read-only and shared across requests; checkpoint hot-swap waits for
in-flight requests to drain before replacing the handle.
"""

from __future__ import annotations

import io
import threading
import uuid
from contextlib import contextmanager
from pathlib import Path

from fastapi import FastAPI, Request, Response, UploadFile
from fastapi.responses import JSONResponse
from PIL import Image
from starlette.concurrency import run_in_threadpool

from .checkpoint import (
    CHECKPOINT_VERSION,
    build_generator_from,
    checkpoint_digest,
    load_checkpoint,
)
from .config import DEFAULT_PAYLOAD_LIMIT
from .data import from_unit_range, load_image_bytes, load_parsing_bytes
from .generator import TransferRequest
from .labels import COMPONENTS


class _HttpProblem(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message


class ModelHolder:
    """Shared read-only model handle with quiescing hot-swap."""

    def __init__(self):
        self._lock = threading.Condition()
        self._readers = 0
        self._swapping = False
        self.net = None
        self.checkpoint_id = None
        self.image_size = 256

    def swap(self, checkpoint_path: str | Path) -> None:
        payload = load_checkpoint(checkpoint_path)
        net = build_generator_from(payload)
        size = int(payload.get("train_meta", {}).get("image_size", 256))
        digest = checkpoint_digest(checkpoint_path)
        with self._lock:
            self._swapping = True
            while self._readers > 0:
                self._lock.wait()
            self.net = net
            self.checkpoint_id = digest
            self.image_size = size
            self._swapping = False
            self._lock.notify_all()

    @contextmanager
    def acquire(self):
        with self._lock:
            while self._swapping:
                self._lock.wait()
            if self.net is None:
                yield None
                return
            self._readers += 1
            net, size = self.net, self.image_size
        try:
            yield net, size
        finally:
            with self._lock:
                self._readers -= 1
                if self._readers == 0:
                    self._lock.notify_all()

    @property
    def loaded(self) -> bool:
        return self.net is not None


def _error(status: int, message: str, request_id: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status,
                        headers={"X-Request-Id": request_id})


def create_app(checkpoint_path: str | Path | None = None,
               max_payload_bytes: int | None = None) -> FastAPI:
    app = FastAPI(title="makeupnet", version="0.1.0")
    holder = ModelHolder()
    limit = max_payload_bytes or DEFAULT_PAYLOAD_LIMIT
    if checkpoint_path is not None:
        holder.swap(checkpoint_path)
    app.state.holder = holder

    @app.get("/api/v1/health")
    def health(request: Request):
        request_id = request.headers.get("X-Request-Id") or str(uuid.uuid4())
        if not holder.loaded:
            return _error(503, "model not loaded", request_id)
        return JSONResponse(
            {
                "status": "ok",
                "checkpoint_id": holder.checkpoint_id,
                "model_version": CHECKPOINT_VERSION,
                "image_size": holder.image_size,
            },
            headers={"X-Request-Id": request_id},
        )

    async def _read_upload(upload: UploadFile | None, name: str) -> bytes:
        if upload is None:
            raise _HttpProblem(400, f"missing multipart field {name!r}")
        data = await upload.read()
        if not data:
            raise _HttpProblem(400, f"multipart field {name!r} is empty")
        if len(data) > limit:
            raise _HttpProblem(413, f"{name} exceeds the {limit} byte limit")
        return data

    @app.post("/api/v1/transfer")
    async def transfer(
        request: Request,
        source: UploadFile | None = None,
        reference: UploadFile | None = None,
        source_seg: UploadFile | None = None,
        reference_seg: UploadFile | None = None,
    ):
        request_id = request.headers.get("X-Request-Id") or str(uuid.uuid4())
        form = await request.form()
        components_raw = str(form.get("components", "lips,skin,eyes"))
        global_raw = str(form.get("global", "true")).lower()
        removal_raw = str(form.get("removal", "false")).lower()
        if global_raw not in ("true", "false", "1", "0"):
            return _error(400, "field 'global' must be a boolean", request_id)
        if removal_raw not in ("true", "false", "1", "0"):
            return _error(400, "field 'removal' must be a boolean", request_id)
        components = tuple(
            p.strip() for p in components_raw.split(",") if p.strip()
        )
        unknown = [c for c in components if c not in COMPONENTS]
        if unknown:
            return _error(400, f"unknown components: {', '.join(unknown)}",
                          request_id)

        with holder.acquire() as handle:
            if handle is None:
                return _error(503, "model not loaded", request_id)
            net, size = handle
            try:
                src_bytes = await _read_upload(source, "source")
                ref_bytes = await _read_upload(reference, "reference")
                sseg_bytes = await _read_upload(source_seg, "source_seg")
                rseg_bytes = await _read_upload(reference_seg, "reference_seg")
            except _HttpProblem as p:
                return _error(p.status, p.message, request_id)

            try:
                src = load_image_bytes(src_bytes, size)
                ref = load_image_bytes(ref_bytes, size)
            except ValueError as exc:
                return _error(400, str(exc), request_id)
            try:
                src_par = load_parsing_bytes(sseg_bytes, size)
                ref_par = load_parsing_bytes(rseg_bytes, size)
            except ValueError as exc:
                status = 422 if "labels" in str(exc) else 400
                return _error(status, str(exc), request_id)

            # inference runs off the event loop; the model handle is shared
            # read-only, so concurrent requests are safe
            result = await run_in_threadpool(net.transfer, TransferRequest(
                source=src, reference=ref,
                source_parsing=src_par, reference_parsing=ref_par,
                components=components,
                global_enabled=global_raw in ("true", "1"),
                swap_for_removal=removal_raw in ("true", "1"),
            ))

        buf = io.BytesIO()
        Image.fromarray(from_unit_range(result)).save(buf, format="PNG")
        return Response(
            content=buf.getvalue(),
            media_type="image/png",
            headers={"X-Request-Id": request_id},
        )

    return app
