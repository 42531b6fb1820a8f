"""Inference service: library contracts and the HTTP wire format."""

import base64
import io

import numpy as np
import pytest
import torch
from PIL import Image

from facehall.attributes import ATTRIBUTE_NAMES, NUM_ATTRIBUTES
from facehall.classifier import classify
from facehall.images import (
    decode_png_base64,
    encode_png_base64,
    to_tensor,
    to_uint8,
)
from facehall.service import (
    ServiceError,
    build_app,
    hallucinate,
    load_service,
    manipulate,
)


@pytest.fixture(scope="module")
def svc(fixture_checkpoint):
    return load_service(fixture_checkpoint)


@pytest.fixture(scope="module")
def lr_image():
    rng = np.random.default_rng(17)
    # quantized values so PNG wire transport reproduces the array exactly
    return to_uint8(rng.random((16, 16, 3))).astype(np.float32) / 255.0


@pytest.fixture(scope="module")
def client(svc):
    from fastapi.testclient import TestClient

    return TestClient(build_app(svc), raise_server_exceptions=False)


# ---------------------------------------------------------------- loading


def test_load_refuses_missing_checkpoint(tmp_path):
    with pytest.raises(ServiceError) as err:
        load_service(tmp_path / "nope.pt")
    assert err.value.code == "bad_checkpoint"
    assert err.value.status == 500


def test_load_refuses_pre_final_stage(fixture_checkpoint):
    stage1 = fixture_checkpoint.parent / "stage1_end.pt"
    with pytest.raises(ServiceError) as err:
        load_service(stage1)
    assert err.value.code == "wrong_stage"


def test_loaded_networks_are_frozen(svc):
    assert svc.stage == 3
    for module in [svc.generator, svc.classifier, *svc.critics]:
        assert not module.training
        assert all(not p.requires_grad for p in module.parameters())


# ---------------------------------------------------------------- hallucinate


def test_hallucinate_default_returns_only_final_resolution(svc, lr_image):
    result = hallucinate(svc, lr_image)
    assert set(result["outputs"]) == {128}
    out = result["outputs"][128]
    assert out.shape == (128, 128, 3)
    assert out.dtype == np.float32
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_hallucinate_without_attributes_uses_the_classifier(svc, lr_image):
    result = hallucinate(svc, lr_image)
    direct = classify(svc.classifier, to_tensor(lr_image))[0].numpy()
    assert np.array_equal(result["used_attributes"], direct)
    assert np.array_equal(result["classifier_attributes"], direct)


def test_hallucinate_with_explicit_attributes(svc, lr_image):
    attrs = np.zeros(NUM_ATTRIBUTES, dtype=np.float32)
    attrs[3] = 1.0
    result = hallucinate(svc, lr_image, attributes=attrs)
    assert np.array_equal(result["used_attributes"], attrs)
    # classifier prediction still reported for reference
    assert result["classifier_attributes"].shape == (NUM_ATTRIBUTES,)


def test_hallucinate_return_stages(svc, lr_image):
    result = hallucinate(svc, lr_image, return_stages=True)
    assert set(result["outputs"]) == {32, 64, 128}
    assert result["outputs"][32].shape == (32, 32, 3)
    assert result["outputs"][64].shape == (64, 64, 3)


def test_hallucinate_critic_predictions(svc, lr_image):
    result = hallucinate(svc, lr_image, return_attribute_predictions=True)
    preds = result["critic_attribute_predictions"]
    assert set(preds) == {1, 2, 3}
    for vec in preds.values():
        assert vec.shape == (NUM_ATTRIBUTES,)
        assert np.all((vec > 0) & (vec < 1))


def test_hallucinate_is_deterministic(svc, lr_image):
    a = hallucinate(svc, lr_image, return_stages=True)
    b = hallucinate(svc, lr_image, return_stages=True)
    for res in (32, 64, 128):
        assert np.array_equal(a["outputs"][res], b["outputs"][res])


def test_hallucinate_rejects_wrong_lr_shape(svc):
    with pytest.raises(ServiceError) as err:
        hallucinate(svc, np.zeros((32, 32, 3), dtype=np.float32))
    assert err.value.code == "bad_lr_shape"


# ---------------------------------------------------------------- manipulate


def test_manipulate_applies_named_edits(svc, lr_image):
    base = np.zeros(NUM_ATTRIBUTES, dtype=np.float32)
    result = manipulate(svc, lr_image, base, {"Eyeglasses": 1.0, "Young": 0.25})
    used = result["used_attributes"]
    assert used[ATTRIBUTE_NAMES.index("Eyeglasses")] == 1.0
    assert used[ATTRIBUTE_NAMES.index("Young")] == 0.25
    assert used.sum() == 1.25
    assert result["edits"] == {"Eyeglasses": 1.0, "Young": 0.25}


def test_manipulate_matches_hallucinate_on_the_edited_vector(svc, lr_image):
    base = np.zeros(NUM_ATTRIBUTES, dtype=np.float32)
    edited = base.copy()
    edited[ATTRIBUTE_NAMES.index("Male")] = 1.0
    via_manipulate = manipulate(svc, lr_image, base, {"Male": 1.0})
    via_hallucinate = hallucinate(svc, lr_image, attributes=edited)
    assert np.array_equal(
        via_manipulate["outputs"][128], via_hallucinate["outputs"][128]
    )


def test_manipulate_rejects_unknown_attribute(svc, lr_image):
    base = np.zeros(NUM_ATTRIBUTES, dtype=np.float32)
    with pytest.raises(ServiceError) as err:
        manipulate(svc, lr_image, base, {"Smiling": 1.0})
    assert err.value.code == "unknown_attribute"
    # the message teaches the schema
    assert "Eyeglasses" in err.value.message


def test_manipulate_rejects_out_of_range_edit(svc, lr_image):
    base = np.zeros(NUM_ATTRIBUTES, dtype=np.float32)
    with pytest.raises(ServiceError) as err:
        manipulate(svc, lr_image, base, {"Young": 1.5})
    assert err.value.code == "bad_attribute_value"


# ---------------------------------------------------------------- HTTP wire


def test_health_endpoint(client, fixture_checkpoint):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["stage"] == 3
    assert body["checkpoint"] == str(fixture_checkpoint)


def test_attributes_endpoint_is_the_ordered_schema(client):
    resp = client.get("/attributes")
    assert resp.status_code == 200
    assert resp.json() == list(ATTRIBUTE_NAMES)


def test_classify_round_trip(client, svc, lr_image):
    resp = client.post("/classify", json={"lr_image": encode_png_base64(lr_image)})
    assert resp.status_code == 200
    wire = np.array(resp.json()["attributes"], dtype=np.float32)
    direct = classify(svc.classifier, to_tensor(lr_image))[0].numpy()
    assert np.allclose(wire, direct, atol=1e-6)


def test_hallucinate_round_trip_matches_library_output(client, svc, lr_image):
    resp = client.post(
        "/hallucinate",
        json={"lr_image": encode_png_base64(lr_image), "return_stages": True},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert set(body["outputs"]) == {"32", "64", "128"}
    direct = hallucinate(svc, lr_image, return_stages=True)
    for res in (32, 64, 128):
        wire_img = decode_png_base64(body["outputs"][str(res)])
        # wire format quantizes to 8-bit; compare at that precision
        assert np.array_equal(to_uint8(wire_img), to_uint8(direct["outputs"][res]))
    assert np.allclose(
        body["used_attributes"], direct["used_attributes"], atol=1e-6
    )


def test_hallucinate_with_attribute_vector_over_the_wire(client, lr_image):
    attrs = [0.0] * NUM_ATTRIBUTES
    attrs[5] = 1.0
    resp = client.post(
        "/hallucinate",
        json={"lr_image": encode_png_base64(lr_image), "attributes": attrs},
    )
    assert resp.status_code == 200
    assert resp.json()["used_attributes"] == attrs


def test_hallucinate_critic_predictions_over_the_wire(client, lr_image):
    resp = client.post(
        "/hallucinate",
        json={
            "lr_image": encode_png_base64(lr_image),
            "return_attribute_predictions": True,
        },
    )
    assert resp.status_code == 200
    preds = resp.json()["critic_attribute_predictions"]
    assert set(preds) == {"1", "2", "3"}
    assert all(len(v) == NUM_ATTRIBUTES for v in preds.values())


def test_http_error_responses_carry_code_and_message(client, lr_image):
    # undecodable payload
    resp = client.post("/hallucinate", json={"lr_image": "!!!not-base64!!!"})
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_image"

    # lossy container refused
    buf = io.BytesIO()
    Image.fromarray(to_uint8(lr_image)).save(buf, format="JPEG")
    jpeg_b64 = base64.b64encode(buf.getvalue()).decode("ascii")
    resp = client.post("/hallucinate", json={"lr_image": jpeg_b64})
    assert resp.status_code == 400
    body = resp.json()
    assert body["code"] == "bad_image"
    assert "PNG" in body["message"]

    # PNG of the wrong geometry
    wrong = encode_png_base64(np.zeros((32, 32, 3), dtype=np.float32))
    resp = client.post("/hallucinate", json={"lr_image": wrong})
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_lr_shape"

    # missing field entirely
    resp = client.post("/hallucinate", json={})
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_request"

    # malformed attribute vector
    resp = client.post(
        "/hallucinate",
        json={"lr_image": encode_png_base64(lr_image), "attributes": [0.5] * 7},
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_attributes"

    resp = client.post(
        "/hallucinate",
        json={"lr_image": encode_png_base64(lr_image), "attributes": [3.0] * 12},
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == "bad_attributes"


def test_requests_are_stateless(client, lr_image):
    payload = {"lr_image": encode_png_base64(lr_image)}
    first = client.post("/hallucinate", json=payload).json()
    # interleave unrelated traffic, including an error
    client.post("/classify", json={"lr_image": encode_png_base64(lr_image)})
    client.post("/hallucinate", json={"lr_image": "garbage"})
    second = client.post("/hallucinate", json=payload).json()
    assert first == second
