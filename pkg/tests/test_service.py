import hashlib
import io

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient
from PIL import Image

from makeupnet.checkpoint import save_checkpoint
from makeupnet.generator import GeneratorConfig, MakeupTransferNet
from makeupnet.service import create_app

from synthfaces import synthetic_face


def _png_bytes(arr, mode=None):
    buf = io.BytesIO()
    Image.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="module")
def assets(tmp_path_factory):
    root = tmp_path_factory.mktemp("service")
    torch.manual_seed(0)
    net = MakeupTransferNet(GeneratorConfig())
    ckpt = root / "model.pt"
    save_checkpoint(ckpt, net, step=0, train_meta={"image_size": 64})
    src_img, src_par = synthetic_face(31, 64)
    ref_img, ref_par = synthetic_face(32, 64)
    return {
        "ckpt": ckpt,
        "source": _png_bytes(((src_img + 1) * 127.5).astype(np.uint8)),
        "reference": _png_bytes(((ref_img + 1) * 127.5).astype(np.uint8)),
        "source_seg": _png_bytes(src_par, mode="L"),
        "reference_seg": _png_bytes(ref_par, mode="L"),
    }


@pytest.fixture(scope="module")
def client(assets):
    app = create_app(checkpoint_path=assets["ckpt"])
    with TestClient(app) as c:
        yield c


def _files(assets, **overrides):
    files = {
        "source": ("src.png", assets["source"], "image/png"),
        "reference": ("ref.png", assets["reference"], "image/png"),
        "source_seg": ("src_seg.png", assets["source_seg"], "image/png"),
        "reference_seg": ("ref_seg.png", assets["reference_seg"], "image/png"),
    }
    files.update(overrides)
    return files


def test_health_before_load_is_503():
    app = create_app(checkpoint_path=None)
    with TestClient(app) as c:
        r = c.get("/api/v1/health")
        assert r.status_code == 503
        r2 = c.post("/api/v1/transfer", files={})
        assert r2.status_code in (400, 503)


def test_health_reports_checkpoint(client):
    r = client.get("/api/v1/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["checkpoint_id"]
    assert body["model_version"] == 1
    assert "X-Request-Id" in r.headers


def test_transfer_returns_decodable_png(client, assets):
    r = client.post("/api/v1/transfer", files=_files(assets),
                    data={"components": "lips,skin,eyes", "global": "true"})
    assert r.status_code == 200, r.text
    assert r.headers["content-type"] == "image/png"
    with Image.open(io.BytesIO(r.content)) as im:
        assert im.size == (64, 64)


def test_identical_requests_byte_identical(client, assets):
    payload = dict(files=_files(assets),
                   data={"components": "lips", "global": "false"})
    r1 = client.post("/api/v1/transfer", **payload)
    r2 = client.post("/api/v1/transfer", **payload)
    assert r1.status_code == r2.status_code == 200
    assert hashlib.sha256(r1.content).digest() == hashlib.sha256(r2.content).digest()


def test_request_id_echoed(client, assets):
    r = client.post("/api/v1/transfer", files=_files(assets),
                    headers={"X-Request-Id": "req-42"})
    assert r.status_code == 200
    assert r.headers["X-Request-Id"] == "req-42"
    r2 = client.get("/api/v1/health", headers={"X-Request-Id": "req-43"})
    assert r2.headers["X-Request-Id"] == "req-43"


def test_missing_field_400(client, assets):
    files = _files(assets)
    del files["reference"]
    r = client.post("/api/v1/transfer", files=files)
    assert r.status_code == 400
    assert "reference" in r.json()["error"]


def test_undecodable_image_400(client, assets):
    r = client.post("/api/v1/transfer",
                    files=_files(assets, source=("s.png", b"junk", "image/png")))
    assert r.status_code == 400


def test_payload_limit_413(assets):
    app = create_app(checkpoint_path=assets["ckpt"], max_payload_bytes=2048)
    with TestClient(app) as c:
        big = assets["source"] + b"\x00" * 4096
        r = c.post("/api/v1/transfer",
                   files=_files(assets, source=("s.png", big, "image/png")))
        assert r.status_code == 413


def test_invalid_parsing_labels_422(client, assets):
    bad_par = np.full((64, 64), 200, dtype=np.uint8)
    r = client.post(
        "/api/v1/transfer",
        files=_files(assets, source_seg=("p.png", _png_bytes(bad_par, "L"),
                                         "image/png")),
    )
    assert r.status_code == 422
    assert "200" in r.json()["error"]


def test_unknown_component_400(client, assets):
    r = client.post("/api/v1/transfer", files=_files(assets),
                    data={"components": "lips,teeth"})
    assert r.status_code == 400


def test_inputs_resized_to_checkpoint_size(client, assets):
    # 128px uploads against a 64px checkpoint come back at 64px
    big_img, big_par = synthetic_face(40, 128)
    r = client.post("/api/v1/transfer", files=_files(
        assets,
        source=("s.png", _png_bytes(((big_img + 1) * 127.5).astype(np.uint8)),
                "image/png"),
        source_seg=("ss.png", _png_bytes(big_par, "L"), "image/png"),
    ))
    assert r.status_code == 200
    with Image.open(io.BytesIO(r.content)) as im:
        assert im.size == (64, 64)


def test_hot_swap_quiesces_readers(assets):
    import threading
    import time

    from makeupnet.service import ModelHolder

    holder = ModelHolder()
    holder.swap(assets["ckpt"])
    events = []

    def reader():
        with holder.acquire() as handle:
            events.append("reader-in")
            time.sleep(0.3)
            events.append("reader-out")
        assert handle is not None

    t = threading.Thread(target=reader)
    t.start()
    time.sleep(0.05)  # let the reader take the shared lock
    holder.swap(assets["ckpt"])  # must wait for the reader to drain
    events.append("swap-done")
    t.join()
    assert events == ["reader-in", "reader-out", "swap-done"]


def test_removal_field_swaps_roles(client, assets):
    direct = client.post("/api/v1/transfer", files={
        "source": ("a.png", assets["reference"], "image/png"),
        "reference": ("b.png", assets["source"], "image/png"),
        "source_seg": ("c.png", assets["reference_seg"], "image/png"),
        "reference_seg": ("d.png", assets["source_seg"], "image/png"),
    })
    removal = client.post("/api/v1/transfer", files=_files(assets),
                          data={"removal": "true"})
    assert direct.status_code == removal.status_code == 200
    assert direct.content == removal.content
