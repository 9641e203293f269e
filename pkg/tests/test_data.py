import gzip

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qbm_xai import data
from qbm_xai.errors import BadMagic, DegenerateSplit, EmptyResult, IoFailure, TruncatedPayload

from conftest import FIXTURE_IMAGES, FIXTURE_LABELS, official_mnist_paths, write_raw


def test_images_all_255(tmp_path):
    path = tmp_path / "img"
    path.write_bytes(bytes([0, 0, 8, 3]) + (2).to_bytes(4, "big") + (28).to_bytes(4, "big") * 2 + b"\xff" * 1568)
    images = data.load_idx_images(path)
    assert images.shape == (2, 784)
    assert np.all(images == 1.0)


def test_images_empty(tmp_path):
    path = write_raw(tmp_path / "img", [2051, 0, 28, 28], b"")
    assert data.load_idx_images(path).shape == (0, 784)


def test_images_wrong_magic(tmp_path):
    path = write_raw(tmp_path / "lab", [2049, 3], bytes([0, 1, 7]))
    with pytest.raises(BadMagic):
        data.load_idx_images(path)


def test_images_truncated(tmp_path):
    path = write_raw(tmp_path / "img", [2051, 2, 28, 28], b"\x00" * 1000)
    with pytest.raises(TruncatedPayload):
        data.load_idx_images(path)


def test_pixel_order_and_scaling(tmp_path):
    payload = bytes(range(256)) * 3 + bytes(range(16))
    path = write_raw(tmp_path / "img", [2051, 1, 28, 28], payload)
    images = data.load_idx_images(path)
    np.testing.assert_array_equal(images[0], np.frombuffer(payload, dtype=np.uint8) / 255.0)


def test_labels(tmp_path):
    path = write_raw(tmp_path / "lab", [2049, 3], bytes([0, 1, 7]))
    assert data.load_idx_labels(path).tolist() == [0, 1, 7]


def test_labels_empty(tmp_path):
    path = write_raw(tmp_path / "lab", [2049, 0], b"")
    assert data.load_idx_labels(path).tolist() == []


def test_labels_wrong_magic(tmp_path):
    path = write_raw(tmp_path / "img", [2051, 0, 28, 28], b"")
    with pytest.raises(BadMagic):
        data.load_idx_labels(path)


def test_labels_truncated(tmp_path):
    path = write_raw(tmp_path / "lab", [2049, 5], bytes([1, 2]))
    with pytest.raises(TruncatedPayload):
        data.load_idx_labels(path)


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure, match="nope"):
        data.load_idx_labels(tmp_path / "nope")


def test_gzip_transparent(tmp_path):
    raw = data.idx_label_bytes([3, 1, 4])
    (tmp_path / "lab.gz").write_bytes(gzip.compress(raw))
    assert data.load_idx_labels(tmp_path / "lab.gz").tolist() == [3, 1, 4]


def test_filter_binary():
    images = np.arange(5)[:, None] * np.ones((5, 784)) / 10
    ds = data.filter_binary(images, np.array([0, 3, 1, 1, 9]))
    assert ds.labels.tolist() == [0, 1, 1]
    np.testing.assert_array_equal(ds.images[:, 0], [0.0, 0.2, 0.3])


def test_filter_recodes_other_digits():
    ds = data.filter_binary(np.zeros((4, 784)), np.array([3, 8, 8, 5]), keep=(3, 8))
    assert ds.labels.tolist() == [0, 1, 1]
    assert ds.source_digit_map == (3, 8)


def test_filter_empty():
    with pytest.raises(EmptyResult):
        data.filter_binary(np.zeros((3, 784)), np.array([5, 5, 5]))


def test_fixture_filter_count_matches_scan():
    labels = data.load_idx_labels(FIXTURE_LABELS)
    # independent count straight from the label bytes
    raw = gzip.decompress(FIXTURE_LABELS.read_bytes())[8:]
    zeros, ones = raw.count(b"\x00"), raw.count(b"\x01")
    ds = data.filter_binary(data.load_idx_images(FIXTURE_IMAGES), labels)
    assert len(ds) == zeros + ones == 1000
    assert np.bincount(ds.labels).tolist() == [zeros, ones]


@pytest.mark.skipif(official_mnist_paths() is None, reason="set MNIST_DIR to the official IDX files")
def test_full_mnist_train_filter_count():
    paths = official_mnist_paths()
    labels = data.load_idx_labels(paths["train_labels"])
    ds = data.filter_binary(data.load_idx_images(paths["train_images"]), labels)
    assert len(ds) == 12665
    assert np.bincount(ds.labels).tolist() == [5923, 6742]


def _dataset(labels):
    labels = np.asarray(labels)
    images = np.random.default_rng(0).random((labels.size, 784))
    return data.RawDataset(images, labels)


def test_split_deterministic():
    ds = _dataset([0, 1] * 5)
    a_train, a_test = data.split(ds, 0.8, seed=42)
    b_train, b_test = data.split(ds, 0.8, seed=42)
    np.testing.assert_array_equal(a_train.images, b_train.images)
    np.testing.assert_array_equal(a_test.labels, b_test.labels)
    assert len(a_train) == 8 and len(a_test) == 2


def test_split_half_of_four():
    train, test = data.split(_dataset([0, 0, 1, 1]), 0.5, seed=3)
    assert len(train) == len(test) == 2
    assert sorted(train.labels.tolist()) == sorted(test.labels.tolist()) == [0, 1]


def test_split_single_class():
    with pytest.raises(DegenerateSplit):
        data.split(_dataset([0, 0, 0, 0]), 0.5, seed=0)


def test_split_parts_disjoint_and_complete():
    ds = _dataset([0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0])
    train, test = data.split(ds, 0.7, seed=9)
    rows = lambda d: {tuple(r) for r in d.images}  # noqa: E731
    assert not rows(train) & rows(test)
    assert rows(train) | rows(test) == rows(ds)
    assert len(train) + len(test) == len(ds)


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(0, 5), st.just(784))), st.data())
def test_idx_round_trip(tmp_path_factory, pixels, draw):
    labels = draw.draw(arrays(np.uint8, pixels.shape[0], elements=st.integers(0, 9)))
    tmp = tmp_path_factory.mktemp("rt")
    ds = data.RawDataset(pixels / 255.0, labels.astype(np.int64))
    data.write_idx_images(tmp / "img", ds.images)
    data.write_idx_labels(tmp / "lab", ds.labels)
    np.testing.assert_array_equal(data.load_idx_images(tmp / "img"), ds.images)
    np.testing.assert_array_equal(data.load_idx_labels(tmp / "lab"), ds.labels)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=1, max_size=40))
def test_filter_idempotent(labels):
    labels = np.array(labels)
    if not np.isin(labels, (0, 1)).any():
        return
    images = np.random.default_rng(1).random((labels.size, 784))
    once = data.filter_binary(images, labels)
    twice = data.filter_binary(once.images, once.labels)
    np.testing.assert_array_equal(once.images, twice.images)
    np.testing.assert_array_equal(once.labels, twice.labels)
