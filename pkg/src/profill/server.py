"""HTTP completion service consumed by the studio UI.

Endpoints: POST /complete (multipart image + mask + attributes JSON ->
PNG), GET /model (stage, attribute names, version), GET /health. Errors
are JSON {code, message}; the consumed attribute vector is echoed in the
X-Attribute-Vector response header.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, File, Form, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .inference import CompletionModel, CompletionRequest, RequestError, complete

MAX_UPLOAD_BYTES = 32 * 1024 * 1024


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(model: CompletionModel, max_upload_bytes: int = MAX_UPLOAD_BYTES) -> FastAPI:
    app = FastAPI(title="profill completion service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Attribute-Vector"],
    )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/model")
    def model_info():
        return {
            "stage": model.stage,
            "attributes": list(model.attribute_names),
            "version": model.format_version,
        }

    @app.post("/complete")
    async def complete_endpoint(
        image: UploadFile = File(...),
        mask: UploadFile = File(...),
        attributes: str = Form("{}"),
        resolution: int | None = Form(None),
    ):
        image_bytes = await image.read()
        mask_bytes = await mask.read()
        if len(image_bytes) > max_upload_bytes or len(mask_bytes) > max_upload_bytes:
            return _error(413, "payload_too_large", f"uploads are capped at {max_upload_bytes} bytes")
        try:
            attr_map = json.loads(attributes) if attributes else {}
        except json.JSONDecodeError as exc:
            return _error(400, "bad_attributes_json", f"attributes must be a JSON object: {exc}")
        if not isinstance(attr_map, dict):
            return _error(400, "bad_attributes_json", "attributes must be a JSON object")
        request = CompletionRequest(
            image_png=image_bytes, mask_png=mask_bytes, attributes=attr_map, resolution=resolution
        )
        try:
            png, echo = complete(model, request)
        except RequestError as exc:
            return _error(400, exc.code, str(exc))
        except ValueError as exc:
            return _error(400, "bad_request", str(exc))
        return Response(
            content=png,
            media_type="image/png",
            headers={"X-Attribute-Vector": json.dumps(echo)},
        )

    return app


def serve(model: CompletionModel, host: str = "127.0.0.1", port: int = 8080) -> None:
    """Run the completion service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(model), host=host, port=port, log_level="info")
