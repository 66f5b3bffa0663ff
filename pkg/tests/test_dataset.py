import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from relu_landscape.dataset import (Dataset, DatasetError, IdxSizeError, IdxTruncatedError, IdxTypeError,
                                    encode_idx, generate_gaussian_dataset, load_cifar10_binary_subset,
                                    load_csv, load_mnist_binary_subset, parse_idx, save_csv)


def test_dataset_rejects_bad_bias_and_labels():
    with pytest.raises(DatasetError):
        Dataset(np.array([[1.0, 0.5]]), np.array([1.0]))
    with pytest.raises(DatasetError):
        Dataset(np.array([[1.0, 1.0]]), np.array([0.0]))
    with pytest.raises(DatasetError):
        Dataset.from_raw(np.array([[np.nan]]), [1.0])
    with pytest.raises(DatasetError):
        Dataset.from_raw(np.array([[1.5]]), [1.0], image_derived=True)


def test_dataset_arrays_are_read_only():
    data = Dataset.from_raw([[0.1], [0.2]], [1, -1])
    with pytest.raises(ValueError):
        data.samples[0, 0] = 3.0


def test_gaussian_one_dimensional_layout():
    data = generate_gaussian_dataset(1, 5000, 3)
    assert (data.N, data.d) == (10000, 1)
    pos = data.raw[data.labels > 0, 0]
    neg = data.raw[data.labels < 0, 0]
    assert abs(pos.mean() - 1.0) < 0.06 and abs(neg.mean() + 1.0) < 0.06
    assert abs(pos.std() - 1.0) < 0.05


@pytest.mark.parametrize("seed", [0, 1, 99])
def test_gaussian_balanced_labels(seed):
    data = generate_gaussian_dataset(4, 37, seed)
    assert np.sum(data.labels == 1) == 37 and np.sum(data.labels == -1) == 37


def test_gaussian_class_means():
    data = generate_gaussian_dataset(3, 10000, 5)
    for label, mean in ((1, [1, 0, 0]), (-1, [-1, 0, 0])):
        emp = data.raw[data.labels == label].mean(axis=0)
        assert np.all(np.abs(emp - mean) <= 4 / np.sqrt(10000))


def test_gaussian_reproducible():
    a = generate_gaussian_dataset(3, 50, 11)
    b = generate_gaussian_dataset(3, 50, 11)
    assert np.array_equal(a.samples, b.samples) and np.array_equal(a.labels, b.labels)


def test_parse_hand_built_idx():
    raw = bytes([0, 0, 8, 3]) + struct.pack(">3I", 1, 2, 2) + bytes([0, 255, 128, 64])
    out = parse_idx(raw)
    assert out.shape == (1, 2, 2)
    assert out.ravel().tolist() == [0, 255, 128, 64]


def test_parse_idx_truncated_header():
    raw = bytes([0, 0, 8, 3]) + struct.pack(">2I", 1, 2)
    with pytest.raises(IdxTruncatedError):
        parse_idx(raw)


def test_parse_idx_wrong_type_and_size():
    with pytest.raises(IdxTypeError):
        parse_idx(bytes([0, 0, 0x0D, 1]) + struct.pack(">I", 1) + b"\0\0\0\0")
    with pytest.raises(IdxSizeError):
        parse_idx(bytes([0, 0, 8, 1]) + struct.pack(">I", 3) + b"\1\2")


@settings(max_examples=60, deadline=None)
@given(arrays(np.uint8, st.lists(st.integers(1, 5), min_size=1, max_size=4).map(tuple)))
def test_idx_round_trip(tensor):
    out = parse_idx(encode_idx(tensor))
    assert out.shape == tensor.shape and np.array_equal(out, tensor)


def _mnist_pair(labels, size=2):
    labels = np.asarray(labels, dtype=np.uint8)
    images = np.arange(labels.size * size * size, dtype=np.uint8).reshape(labels.size, size, size)
    return encode_idx(images), encode_idx(labels), images


def test_mnist_subset_order_and_labels():
    img, lab, images = _mnist_pair([1, 0, 0, 1, 0, 1])
    data = load_mnist_binary_subset(img, lab, 0, 1, 2)
    assert data.N == 4 and data.d == 4
    assert data.labels.tolist() == [1, 1, -1, -1]
    expected = images[[1, 2, 0, 3]].reshape(4, -1) / 255.0
    assert np.allclose(data.raw, expected)


def test_mnist_gzip_and_paths(tmp_path):
    img, lab, _ = _mnist_pair([0, 1, 0, 1])
    (tmp_path / "i.gz").write_bytes(gzip.compress(img))
    (tmp_path / "l").write_bytes(lab)
    data = load_mnist_binary_subset(tmp_path / "i.gz", tmp_path / "l", 0, 1, 1)
    assert data.N == 2 and data.image_derived


def test_mnist_empty_request():
    img, lab, _ = _mnist_pair([0, 1])
    with pytest.raises(DatasetError):
        load_mnist_binary_subset(img, lab, 0, 1, 0)
    with pytest.raises(DatasetError):
        load_mnist_binary_subset(img, lab, 0, 1, 2)


def _cifar_record(label, r, g, b):
    return bytes([label]) + bytes([r] * 1024) + bytes([g] * 1024) + bytes([b] * 1024)


def test_cifar_white_is_one():
    raw = _cifar_record(0, 255, 255, 255) + _cifar_record(1, 255, 255, 255)
    data = load_cifar10_binary_subset(raw, 0, 1, 1)
    assert data.d == 1024 and np.all(data.raw == 1.0)


def test_cifar_hand_computed_gray():
    raw = _cifar_record(0, 10, 20, 30) + _cifar_record(1, 200, 100, 50)
    data = load_cifar10_binary_subset([raw], 0, 1, 1)
    first = (0.299 * 10 + 0.587 * 20 + 0.114 * 30) / 255
    second = (0.299 * 200 + 0.587 * 100 + 0.114 * 50) / 255
    assert np.all(np.abs(data.raw[0] - first) <= 1e-12)
    assert np.all(np.abs(data.raw[1] - second) <= 1e-12)


def test_cifar_bad_length():
    with pytest.raises(DatasetError):
        load_cifar10_binary_subset(b"\0" * 100, 0, 1, 1)


def test_csv_round_trip(tmp_path):
    data = generate_gaussian_dataset(2, 4, 0)
    save_csv(data, tmp_path / "d.csv")
    back = load_csv(tmp_path / "d.csv")
    assert np.array_equal(back.samples, data.samples) and np.array_equal(back.labels, data.labels)
