"""Inference service: checkpoint loading, hallucination, manipulation, HTTP API.

Responses are pure functions of (checkpoint, request): weights are frozen at
load, every forward runs under no_grad in eval mode, and no state is shared
across requests. Images travel as base64 PNG inside JSON; lossy inputs are
rejected because recompression artifacts on a 16x16 image are not minor.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from pydantic import BaseModel

from facehall.attributes import ATTRIBUTE_NAMES, NUM_ATTRIBUTES, validate_attributes
from facehall.classifier import AttributeClassifier, classify
from facehall.critics import STAGE_RESOLUTIONS, Critic
from facehall.generator import Generator
from facehall.images import decode_png_base64, encode_png_base64, from_tensor, to_tensor

LR_RESOLUTION = 16


class ServiceError(RuntimeError):
    """Service-level failure with a machine-readable code."""

    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


@dataclass
class ServiceState:
    generator: Generator
    critics: list[Critic]
    classifier: AttributeClassifier
    checkpoint_path: str
    stage: int


def load_service(checkpoint: str | Path) -> ServiceState:
    """Load a stage-3 checkpoint read-only; anything earlier is refused."""
    from facehall.trainer import CheckpointError, load_checkpoint

    try:
        state = load_checkpoint(checkpoint)
    except CheckpointError as exc:
        raise ServiceError("bad_checkpoint", str(exc), status=500) from exc
    if state.active_stage != 3:
        raise ServiceError(
            "wrong_stage",
            f"service needs a stage-3 checkpoint (128x128 outputs); "
            f"{checkpoint} is at stage {state.active_stage}",
            status=500,
        )
    for module in [state.generator, state.classifier, *state.critics]:
        module.eval()
        for p in module.parameters():
            p.requires_grad_(False)
    return ServiceState(
        generator=state.generator,
        critics=state.critics,
        classifier=state.classifier,
        checkpoint_path=str(checkpoint),
        stage=state.active_stage,
    )


def _check_lr(lr: np.ndarray) -> None:
    if lr.shape != (LR_RESOLUTION, LR_RESOLUTION, 3):
        raise ServiceError(
            "bad_lr_shape",
            f"LR input must be {LR_RESOLUTION}x{LR_RESOLUTION} RGB, got {lr.shape[1]}x{lr.shape[0]}",
        )


def hallucinate(
    svc: ServiceState,
    lr: np.ndarray,
    attributes=None,
    return_stages: bool = False,
    return_attribute_predictions: bool = False,
) -> dict:
    """Run the full pipeline on one LR image.

    When ``attributes`` is None the classifier's predictions condition the
    generator. Returns arrays, not encodings; the HTTP layer handles the wire
    format. The 128 output is always present; 32/64 only with return_stages.
    """
    _check_lr(lr)
    lr_t = to_tensor(lr)
    with torch.no_grad():
        classifier_attrs = classify(svc.classifier, lr_t)[0]
        if attributes is None:
            used = classifier_attrs.clone()
        else:
            used = torch.from_numpy(validate_attributes(attributes))
        outputs = svc.generator(lr_t, used[None], 3)
        images = {res: from_tensor(out.clamp(0.0, 1.0)) for res, out in outputs.items()}
        response = {
            "outputs": images if return_stages else {128: images[128]},
            "used_attributes": used.numpy().copy(),
            "classifier_attributes": classifier_attrs.numpy().copy(),
        }
        if return_attribute_predictions:
            preds = {}
            for stage, critic in zip((1, 2, 3), svc.critics):
                res = STAGE_RESOLUTIONS[stage]
                _, attr_pred = critic(outputs[res].clamp(0.0, 1.0))
                preds[stage] = attr_pred[0].numpy().copy()
            response["critic_attribute_predictions"] = preds
    return response


def manipulate(
    svc: ServiceState,
    lr: np.ndarray,
    base_attributes,
    edits: dict[str, float],
    return_stages: bool = False,
    return_attribute_predictions: bool = False,
) -> dict:
    """Hallucinate with named attribute edits applied over a base vector."""
    base = validate_attributes(base_attributes).copy()
    for name, value in edits.items():
        if name not in ATTRIBUTE_NAMES:
            raise ServiceError(
                "unknown_attribute",
                f"unknown attribute {name!r}; schema: {', '.join(ATTRIBUTE_NAMES)}",
            )
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise ServiceError(
                "bad_attribute_value",
                f"edit {name!r}={value} outside [0, 1]",
            )
        base[ATTRIBUTE_NAMES.index(name)] = value
    response = hallucinate(
        svc,
        lr,
        attributes=base,
        return_stages=return_stages,
        return_attribute_predictions=return_attribute_predictions,
    )
    response["edits"] = dict(edits)
    return response


# --- HTTP layer ---


def _wire_response(result: dict) -> dict:
    body = {
        "outputs": {str(res): encode_png_base64(img) for res, img in result["outputs"].items()},
        "used_attributes": [float(v) for v in result["used_attributes"]],
        "classifier_attributes": [float(v) for v in result["classifier_attributes"]],
    }
    if "critic_attribute_predictions" in result:
        body["critic_attribute_predictions"] = {
            str(stage): [float(v) for v in vec]
            for stage, vec in result["critic_attribute_predictions"].items()
        }
    return body


def _decode_lr(payload) -> np.ndarray:
    if not isinstance(payload, str) or not payload:
        raise ServiceError("bad_request", "lr_image must be a base64 PNG string")
    try:
        lr = decode_png_base64(payload)
    except ValueError as exc:
        raise ServiceError("bad_image", str(exc)) from exc
    _check_lr(lr)
    return lr


def _parse_attributes(raw):
    if raw is None:
        return None
    try:
        return validate_attributes(raw)
    except (TypeError, ValueError) as exc:
        raise ServiceError("bad_attributes", str(exc)) from exc


# request bodies; at module level so FastAPI can resolve the (stringified)
# annotations of the endpoint functions against this module's globals
class HallucinateBody(BaseModel):
    lr_image: str
    attributes: list[float] | None = None
    return_stages: bool = False
    return_attribute_predictions: bool = False


class ClassifyBody(BaseModel):
    lr_image: str


def build_app(svc: ServiceState):
    """FastAPI app over a loaded service; all errors return {code, message}."""
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse

    app = FastAPI(title="facehall", docs_url=None, redoc_url=None)

    # the browser UI is served from a different origin (static file server
    # or dev server), so preflighted fetch() calls need these headers
    from starlette.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["content-type"],
    )

    @app.exception_handler(ServiceError)
    async def _service_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"code": "bad_request", "message": str(exc.errors())}
        )

    @app.exception_handler(Exception)
    async def _internal_error(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500, content={"code": "internal_error", "message": str(exc)}
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "checkpoint": svc.checkpoint_path, "stage": svc.stage}

    @app.get("/attributes")
    def attributes():
        return list(ATTRIBUTE_NAMES)

    @app.post("/classify")
    def classify_endpoint(body: ClassifyBody):
        lr = _decode_lr(body.lr_image)
        with torch.no_grad():
            attrs = classify(svc.classifier, to_tensor(lr))[0]
        return {"attributes": [float(v) for v in attrs]}

    @app.post("/hallucinate")
    def hallucinate_endpoint(body: HallucinateBody):
        lr = _decode_lr(body.lr_image)
        attrs = _parse_attributes(body.attributes)
        result = hallucinate(
            svc,
            lr,
            attributes=attrs,
            return_stages=body.return_stages,
            return_attribute_predictions=body.return_attribute_predictions,
        )
        return _wire_response(result)

    return app


def serve(checkpoint: str | Path, host: str = "127.0.0.1", port: int = 8421) -> None:
    import uvicorn

    svc = load_service(checkpoint)
    app = build_app(svc)
    uvicorn.run(app, host=host, port=port, log_level="warning")
