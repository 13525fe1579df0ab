import numpy as np
import pytest

from aurec.bundle import (FORMAT_VERSION, bundle_to_dict, dumps_bundle, load_bundle, loads_bundle,
                          save_bundle)
from aurec.errors import BundleError
from aurec.pipeline import predict_features


def _leaves(d, prefix=""):
    if isinstance(d, dict):
        for k, v in d.items():
            yield from _leaves(v, f"{prefix}/{k}")
    elif isinstance(d, list):
        for i, v in enumerate(d):
            yield from _leaves(v, f"{prefix}/{i}")
    else:
        yield prefix, d


def test_round_trip_exact(small_run, tmp_path):
    bundle, _, fte = small_run
    path = tmp_path / "m.bundle"
    save_bundle(bundle, path)
    back = load_bundle(path)
    assert dumps_bundle(back) == path.read_text()
    for (ka, va), (kb, vb) in zip(_leaves(bundle_to_dict(bundle)), _leaves(bundle_to_dict(back))):
        assert ka == kb
        assert va == vb or (isinstance(va, float) and np.isnan(va) and np.isnan(vb))
    assert np.array_equal(back.net.w1, bundle.net.w1)
    assert np.array_equal(back.geo_models[0].gmms[0].means, bundle.geo_models[0].gmms[0].means)
    for f in fte[:4]:
        a, b = predict_features(bundle, f), predict_features(back, f)
        assert a.aus == b.aus and np.array_equal(a.outputs, b.outputs) and np.array_equal(a.scores, b.scores)


def test_header(small_run):
    lines = dumps_bundle(small_run[0]).split("\n", 2)
    assert lines[0] == f"AUREC-BUNDLE {FORMAT_VERSION}"
    assert lines[1].startswith("sha256 ") and len(lines[1].split()[1]) == 64


def test_truncated(small_run):
    text = dumps_bundle(small_run[0])
    with pytest.raises(BundleError, match="corrupt"):
        loads_bundle(text[: len(text) // 2])
    with pytest.raises(BundleError, match="corrupt"):
        loads_bundle(text[:10])


def test_edited_body(small_run):
    text = dumps_bundle(small_run[0])
    i = text.index('"epochs":') + len('"epochs":')
    with pytest.raises(BundleError, match="checksum"):
        loads_bundle(text[:i] + "9" + text[i:])


def test_future_version(small_run):
    text = dumps_bundle(small_run[0]).replace(f"AUREC-BUNDLE {FORMAT_VERSION}", "AUREC-BUNDLE 7", 1)
    with pytest.raises(BundleError, match=f"version 7.*reads {FORMAT_VERSION}"):
        loads_bundle(text)


def test_not_a_bundle(tmp_path):
    p = tmp_path / "x"
    p.write_bytes(b"\xff\xfe\x00garbage")
    with pytest.raises(BundleError):
        load_bundle(p)
    with pytest.raises(BundleError, match="missing header"):
        loads_bundle("hello\nworld\n{}")


def test_missing_file(tmp_path):
    with pytest.raises(BundleError, match="cannot read"):
        load_bundle(tmp_path / "absent.bundle")
