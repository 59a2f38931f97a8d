"""Tests for dataset loaders and the on-disk feature / model containers.

IDX fixtures are synthesized byte by byte with ``struct`` (see
``tests/oracles.py``), so the loader is checked against independently
constructed files rather than against itself.  Container tampering is done
by unpacking the raw bytes with ``struct``/``zlib`` directly and re-signing
the CRC, which doubles as a check of the documented byte layout.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import struct
import zlib

import numpy as np
import pytest

import oracles
from wavescat.classifier import fit_classifier
from wavescat.data_io import (
    DataError,
    FormatError,
    LabeledDataset,
    config_mismatch,
    file_sha256,
    load_features,
    load_idx,
    load_model,
    load_texture_dir,
    load_usps_text,
    save_features,
    save_model,
    subsample_train,
)
from wavescat.filterbank import GaborParams, build_bank
from wavescat.scattering import scatter_dataset


# ---------------------------------------------------------------------------
# container surgery helpers (independent re-implementation of the layout)
# ---------------------------------------------------------------------------


def split_container(raw: bytes) -> tuple[bytes, int, dict, bytes]:
    """(magic, version, header dict, payload) from a container's bytes."""
    magic = raw[:4]
    version, head_len = struct.unpack("<II", raw[4:12])
    header = json.loads(raw[12 : 12 + head_len])
    return magic, version, header, raw[12 + head_len : -4]


def build_container(magic: bytes, version: int, header: dict,
                    payload: bytes) -> bytes:
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    body = magic + struct.pack("<II", version, len(head)) + head + payload
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def rebuild(raw: bytes, *, magic=None, version=None, header=None,
            payload=None, raw_head: bytes | None = None) -> bytes:
    """Rebuild a container with selected parts replaced and a fresh CRC."""
    m, v, h, p = split_container(raw)
    m = magic if magic is not None else m
    v = version if version is not None else v
    p = payload if payload is not None else p
    if raw_head is not None:
        body = m + struct.pack("<II", v, len(raw_head)) + raw_head + p
        return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    h = header if header is not None else h
    return build_container(m, v, h, p)


# ---------------------------------------------------------------------------
# LabeledDataset
# ---------------------------------------------------------------------------


class TestLabeledDataset:
    def test_basic_bookkeeping(self):
        ds = LabeledDataset(images=np.zeros((4, 8, 8)),
                            labels=np.array([0, 2, 2, 5]))
        assert len(ds) == 4
        assert ds.n_classes == 6  # labels run 0..max
        assert ds.class_counts() == {0: 1, 2: 2, 5: 1}
        assert ds.images.dtype == np.float64
        assert ds.labels.dtype == np.int64

    def test_rejects_non_stack_images(self):
        with pytest.raises(ValueError, match=r"\(N, H, W\)"):
            LabeledDataset(images=np.zeros((8, 8)), labels=np.zeros(8))

    def test_rejects_label_count_mismatch(self):
        with pytest.raises(ValueError, match="labels"):
            LabeledDataset(images=np.zeros((4, 8, 8)), labels=np.zeros(3))


# ---------------------------------------------------------------------------
# IDX loading
# ---------------------------------------------------------------------------


class TestLoadIdx:
    def write_pair(self, tmp_path, images, labels, gz=False):
        img_bytes = oracles.idx_images_bytes(images)
        lab_bytes = oracles.idx_labels_bytes(labels)
        if gz:
            img_bytes = gzip.compress(img_bytes)
            lab_bytes = gzip.compress(lab_bytes)
        ip = tmp_path / ("imgs.gz" if gz else "imgs")
        lp = tmp_path / ("labs.gz" if gz else "labs")
        ip.write_bytes(img_bytes)
        lp.write_bytes(lab_bytes)
        return ip, lp

    def test_round_trip_with_centered_padding(self, tmp_path, rng):
        """28x28 bytes come back as [0,1] floats centered on a 32x32 zero
        canvas (2-pixel border on every side)."""
        images = rng.integers(0, 256, size=(5, 28, 28)).astype(np.uint8)
        labels = rng.integers(0, 10, size=5).astype(np.uint8)
        ds = load_idx(*self.write_pair(tmp_path, images, labels))
        assert ds.images.shape == (5, 32, 32)
        np.testing.assert_array_equal(ds.labels, labels)
        np.testing.assert_allclose(ds.images[:, 2:30, 2:30], images / 255.0)
        border = ds.images.copy()
        border[:, 2:30, 2:30] = 0.0
        assert np.all(border == 0.0)

    def test_power_of_two_input_is_not_padded(self, tmp_path, rng):
        images = rng.integers(0, 256, size=(3, 16, 16)).astype(np.uint8)
        labels = np.array([1, 2, 3], dtype=np.uint8)
        ds = load_idx(*self.write_pair(tmp_path, images, labels))
        assert ds.images.shape == (3, 16, 16)
        np.testing.assert_allclose(ds.images, images / 255.0)

    def test_gzipped_files_load_identically(self, tmp_path, rng):
        images = rng.integers(0, 256, size=(4, 28, 28)).astype(np.uint8)
        labels = rng.integers(0, 10, size=4).astype(np.uint8)
        plain = load_idx(*self.write_pair(tmp_path, images, labels))
        gzed = load_idx(*self.write_pair(tmp_path, images, labels, gz=True))
        np.testing.assert_array_equal(plain.images, gzed.images)
        np.testing.assert_array_equal(plain.labels, gzed.labels)
        # hashes cover the decompressed stream, so they match too
        assert plain.provenance["images_sha256"] == gzed.provenance["images_sha256"]

    def test_bad_image_magic(self, tmp_path):
        ip = tmp_path / "imgs"
        lp = tmp_path / "labs"
        ip.write_bytes(struct.pack(">IIII", 0xDEADBEEF, 1, 2, 2) + bytes(4))
        lp.write_bytes(oracles.idx_labels_bytes(np.zeros(1, dtype=np.uint8)))
        with pytest.raises(FormatError, match="bad magic"):
            load_idx(ip, lp)

    def test_bad_label_magic(self, tmp_path):
        images = np.zeros((1, 2, 2), dtype=np.uint8)
        ip = tmp_path / "imgs"
        lp = tmp_path / "labs"
        ip.write_bytes(oracles.idx_images_bytes(images))
        lp.write_bytes(struct.pack(">II", 0x00000803, 1) + bytes(1))
        with pytest.raises(FormatError, match="bad magic"):
            load_idx(ip, lp)

    def test_truncated_header(self, tmp_path):
        ip = tmp_path / "imgs"
        ip.write_bytes(b"\x00\x00\x08")
        with pytest.raises(FormatError, match="truncated IDX header"):
            load_idx(ip, tmp_path / "missing")

    def test_truncated_pixel_data(self, tmp_path):
        images = np.zeros((2, 4, 4), dtype=np.uint8)
        ip = tmp_path / "imgs"
        lp = tmp_path / "labs"
        ip.write_bytes(oracles.idx_images_bytes(images)[:-5])
        lp.write_bytes(oracles.idx_labels_bytes(np.zeros(2, dtype=np.uint8)))
        with pytest.raises(FormatError, match="expected"):
            load_idx(ip, lp)

    def test_image_label_count_mismatch(self, tmp_path):
        images = np.zeros((3, 4, 4), dtype=np.uint8)
        ip = tmp_path / "imgs"
        lp = tmp_path / "labs"
        ip.write_bytes(oracles.idx_images_bytes(images))
        lp.write_bytes(oracles.idx_labels_bytes(np.zeros(2, dtype=np.uint8)))
        with pytest.raises(DataError, match="3 images but 2 labels"):
            load_idx(ip, lp)


# ---------------------------------------------------------------------------
# USPS text loading
# ---------------------------------------------------------------------------


def usps_lines(labels: np.ndarray, values: np.ndarray) -> str:
    rows = []
    for lab, vals in zip(labels, values):
        rows.append(" ".join([f"{lab:.4f}"] + [f"{v:.6f}" for v in vals]))
    return "\n".join(rows) + "\n"


class TestLoadUspsText:
    def test_round_trip_rescales_to_unit_interval(self, tmp_path, rng):
        labels = np.array([7, 0, 3])
        values = rng.uniform(-1.0, 1.0, size=(3, 256)).round(6)
        path = tmp_path / "zip.train"
        path.write_text(usps_lines(labels, values))
        ds = load_usps_text(path)
        assert ds.images.shape == (3, 16, 16)
        np.testing.assert_array_equal(ds.labels, labels)
        np.testing.assert_allclose(ds.images.reshape(3, 256),
                                   (values + 1.0) / 2.0, atol=1e-12)

    def test_gzipped_file_loads_identically(self, tmp_path, rng):
        labels = np.array([1, 2])
        values = rng.uniform(-1.0, 1.0, size=(2, 256)).round(6)
        text = usps_lines(labels, values)
        plain = tmp_path / "zip.train"
        plain.write_text(text)
        gzed = tmp_path / "zip.train.gz"
        gzed.write_bytes(gzip.compress(text.encode("ascii")))
        a = load_usps_text(plain)
        b = load_usps_text(gzed)
        np.testing.assert_array_equal(a.images, b.images)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_blank_lines_are_skipped(self, tmp_path, rng):
        labels = np.array([4])
        values = rng.uniform(-1.0, 1.0, size=(1, 256)).round(6)
        path = tmp_path / "zip.train"
        path.write_text("\n" + usps_lines(labels, values) + "\n\n")
        assert len(load_usps_text(path)) == 1

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "zip.train"
        path.write_text("1.0 0.5 0.5\n")
        with pytest.raises(FormatError, match="257 fields"):
            load_usps_text(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "zip.train"
        path.write_text("\n\n")
        with pytest.raises(FormatError, match="no samples"):
            load_usps_text(path)


# ---------------------------------------------------------------------------
# texture directory loading
# ---------------------------------------------------------------------------


class TestLoadTextureDir:
    def write_png(self, path, array: np.ndarray) -> None:
        from PIL import Image

        Image.fromarray(array.astype(np.uint8), mode="L").save(path)

    def make_tree(self, tmp_path, rng, shape=(140, 150)):
        for cname in ("bark", "wool"):
            cdir = tmp_path / cname
            cdir.mkdir()
            for i in range(2):
                arr = rng.integers(0, 256, size=shape)
                self.write_png(cdir / f"{i}.png", arr)
        return tmp_path

    def test_loads_standardized_center_crops(self, tmp_path, rng):
        """Every loaded texture is cropped to the requested square and
        standardized to zero mean, unit variance."""
        root = self.make_tree(tmp_path, rng)
        ds = load_texture_dir(root, crop=128)
        assert ds.images.shape == (4, 128, 128)
        np.testing.assert_array_equal(ds.labels, [0, 0, 1, 1])
        np.testing.assert_allclose(ds.images.mean(axis=(1, 2)), 0.0, atol=1e-10)
        np.testing.assert_allclose(ds.images.std(axis=(1, 2)), 1.0, atol=1e-10)
        assert ds.provenance["classes"] == ["bark", "wool"]

    def test_center_crop_takes_the_middle_block(self, tmp_path, rng):
        """The crop window is the centered block: reproduce it directly from
        the source array."""
        arr = rng.integers(0, 256, size=(130, 128))
        cdir = tmp_path / "only"
        cdir.mkdir()
        self.write_png(cdir / "a.png", arr)
        ds = load_texture_dir(tmp_path, crop=128)
        block = arr[1:129, :].astype(np.float64)
        expected = (block - block.mean()) / block.std()
        np.testing.assert_allclose(ds.images[0], expected, atol=1e-12)

    def test_class_ids_follow_sorted_directory_names(self, tmp_path, rng):
        for cname in ("zebra", "alpha", "mid"):
            cdir = tmp_path / cname
            cdir.mkdir()
            self.write_png(cdir / "x.png", rng.integers(0, 256, size=(128, 128)))
        ds = load_texture_dir(tmp_path, crop=128)
        assert ds.provenance["classes"] == ["alpha", "mid", "zebra"]
        np.testing.assert_array_equal(ds.labels, [0, 1, 2])

    def test_too_small_image_is_rejected(self, tmp_path, rng):
        cdir = tmp_path / "c"
        cdir.mkdir()
        self.write_png(cdir / "a.png", rng.integers(0, 256, size=(100, 128)))
        with pytest.raises(DataError, match="smaller than crop"):
            load_texture_dir(tmp_path, crop=128)

    def test_constant_image_is_rejected(self, tmp_path):
        cdir = tmp_path / "c"
        cdir.mkdir()
        self.write_png(cdir / "a.png", np.full((128, 128), 7))
        with pytest.raises(DataError, match="zero variance"):
            load_texture_dir(tmp_path, crop=128)

    def test_missing_structure_is_rejected(self, tmp_path):
        with pytest.raises(DataError, match="not a directory"):
            load_texture_dir(tmp_path / "nope")
        with pytest.raises(DataError, match="no class subdirectories"):
            load_texture_dir(tmp_path)
        (tmp_path / "empty").mkdir()
        with pytest.raises(DataError, match="no image files"):
            load_texture_dir(tmp_path)


# ---------------------------------------------------------------------------
# stratified subsampling
# ---------------------------------------------------------------------------


def indexed_dataset(labels: list[int]) -> LabeledDataset:
    """Images whose constant pixel value encodes their original index, so
    selections can be traced exactly."""
    labels = np.asarray(labels)
    images = np.tile(
        np.arange(len(labels), dtype=np.float64)[:, None, None], (1, 4, 4)
    )
    return LabeledDataset(images=images, labels=labels)


class TestSubsampleTrain:
    def test_per_class_quota_and_label_consistency(self):
        ds = indexed_dataset([0] * 10 + [1] * 8 + [2] * 12)
        sub = subsample_train(ds, per_class=5, seed=3)
        assert sub.class_counts() == {0: 5, 1: 5, 2: 5}
        # every selected image kept its own label
        for img, lab in zip(sub.images, sub.labels):
            orig = int(img[0, 0])
            assert ds.labels[orig] == lab

    def test_total_splits_evenly_with_remainder_to_low_ids(self):
        ds = indexed_dataset([0] * 10 + [1] * 10 + [2] * 10)
        sub = subsample_train(ds, total=7, seed=0)
        assert sub.class_counts() == {0: 3, 1: 2, 2: 2}
        assert len(sub) == 7

    def test_selection_is_without_replacement(self):
        ds = indexed_dataset([0] * 6 + [1] * 6)
        sub = subsample_train(ds, per_class=6, seed=9)
        picked = sorted(int(v) for v in sub.images[:, 0, 0])
        assert picked == list(range(12))  # full quota = every sample, once

    def test_same_seed_is_deterministic(self):
        ds = indexed_dataset([0] * 30 + [1] * 30)
        a = subsample_train(ds, per_class=10, seed=4)
        b = subsample_train(ds, per_class=10, seed=4)
        np.testing.assert_array_equal(a.images, b.images)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_indices_ascend_within_each_class(self):
        ds = indexed_dataset([0, 1] * 20)
        sub = subsample_train(ds, per_class=5, seed=2)
        ids = sub.images[:, 0, 0]
        assert np.all(np.diff(ids[:5]) > 0)  # class 0 block
        assert np.all(np.diff(ids[5:]) > 0)  # class 1 block
        np.testing.assert_array_equal(sub.labels, [0] * 5 + [1] * 5)

    def test_overdraw_is_rejected(self):
        ds = indexed_dataset([0] * 3 + [1] * 10)
        with pytest.raises(DataError, match="cannot draw"):
            subsample_train(ds, per_class=5)

    def test_exactly_one_mode_must_be_given(self):
        ds = indexed_dataset([0, 1])
        with pytest.raises(ValueError, match="exactly one"):
            subsample_train(ds)
        with pytest.raises(ValueError, match="exactly one"):
            subsample_train(ds, total=2, per_class=1)

    def test_provenance_records_the_draw(self):
        ds = indexed_dataset([0] * 4 + [1] * 4)
        sub = subsample_train(ds, per_class=2, seed=5)
        assert sub.provenance["subsample"] == {
            "total": None, "per_class": 2, "seed": 5,
        }


class TestFileSha256:
    def test_matches_hashlib(self, tmp_path):
        path = tmp_path / "blob"
        payload = bytes(range(256)) * 513  # > one read block
        path.write_bytes(payload)
        assert file_sha256(path) == hashlib.sha256(payload).hexdigest()


# ---------------------------------------------------------------------------
# SCT1 feature container
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_features():
    """A real transform output to persist: 3 images, J=2, 3 orientations."""
    rng = np.random.default_rng(12)
    images = rng.normal(size=(3, 16, 16))
    bank = build_bank(GaborParams(J=2, n_orientations=3), (16, 16))
    layout, feats = scatter_dataset(images, bank, m0=2)
    labels = np.array([4, 0, 7])
    return layout, feats, labels


class TestFeatureContainer:
    def test_round_trip(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels, manifest={"seed": 12})
        l2, f2, y2, manifest = load_features(path)
        assert l2 == layout
        assert f2.dtype == np.float32
        np.testing.assert_array_equal(f2, feats.astype(np.float32))
        np.testing.assert_array_equal(y2, labels)
        assert manifest == {"seed": 12}

    def test_write_is_byte_deterministic(self, tmp_path, small_features):
        layout, feats, labels = small_features
        a, b = tmp_path / "a.sct", tmp_path / "b.sct"
        save_features(a, layout, feats, labels, manifest={"k": [1, 2]})
        save_features(b, layout, feats, labels, manifest={"k": [1, 2]})
        assert a.read_bytes() == b.read_bytes()

    def test_gzipped_container_loads(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        gz = tmp_path / "f.sct.gz"
        gz.write_bytes(gzip.compress(path.read_bytes()))
        l2, f2, y2, _ = load_features(gz)
        assert l2 == layout
        np.testing.assert_array_equal(f2, feats.astype(np.float32))

    def test_flipped_payload_byte_fails_crc(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        raw = bytearray(path.read_bytes())
        raw[-100] ^= 0x01
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="CRC32 mismatch"):
            load_features(path)

    def test_wrong_magic(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        path.write_bytes(rebuild(path.read_bytes(), magic=b"NOPE"))
        with pytest.raises(FormatError, match="bad magic"):
            load_features(path)

    def test_unsupported_version(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        path.write_bytes(rebuild(path.read_bytes(), version=2))
        with pytest.raises(FormatError, match="unsupported container version"):
            load_features(path)

    def test_malformed_header_json(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        path.write_bytes(rebuild(path.read_bytes(), raw_head=b"{not json"))
        with pytest.raises(FormatError, match="malformed header JSON"):
            load_features(path)

    def test_too_short_file(self, tmp_path):
        path = tmp_path / "f.sct"
        path.write_bytes(b"SCT1\x01")
        with pytest.raises(FormatError, match="too short"):
            load_features(path)

    def test_missing_header_key(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        _, _, header, _ = split_container(path.read_bytes())
        del header["J"]
        path.write_bytes(rebuild(path.read_bytes(), header=header))
        with pytest.raises(FormatError, match="incomplete header"):
            load_features(path)

    def test_tampered_path_table(self, tmp_path, small_features):
        """A header whose path table disagrees with the canonical layout for
        its configuration is rejected, even with a valid CRC."""
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        _, _, header, _ = split_container(path.read_bytes())
        header["paths"][1]["offset"] += 64
        path.write_bytes(rebuild(path.read_bytes(), header=header))
        with pytest.raises(FormatError, match="path table disagrees"):
            load_features(path)

    def test_wrong_path_count(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        _, _, header, _ = split_container(path.read_bytes())
        header["n_paths"] += 1
        path.write_bytes(rebuild(path.read_bytes(), header=header))
        with pytest.raises(FormatError, match="header claims"):
            load_features(path)

    def test_inconsistent_out_shape(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        _, _, header, _ = split_container(path.read_bytes())
        header["out_shape"] = [4, 4]
        path.write_bytes(rebuild(path.read_bytes(), header=header))
        with pytest.raises(FormatError, match="out_shape"):
            load_features(path)

    def test_truncated_payload(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        _, _, _, payload = split_container(path.read_bytes())
        path.write_bytes(rebuild(path.read_bytes(), payload=payload[:-8]))
        with pytest.raises(FormatError, match="payload is"):
            load_features(path)

    def test_save_validates_shapes(self, tmp_path, small_features):
        layout, feats, labels = small_features
        with pytest.raises(ValueError, match="do not line up"):
            save_features(tmp_path / "x", layout, feats, labels[:-1])
        with pytest.raises(ValueError, match="does not match layout"):
            save_features(tmp_path / "x", layout, feats[:, :-1], labels)


# ---------------------------------------------------------------------------
# SCM1 model container
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_classifier():
    """Three classes, one of them a singleton (mean-only model)."""
    from fractions import Fraction

    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(size=(6, 12)), rng.normal(size=(4, 12)) + 3.0,
                   rng.normal(size=(1, 12)) - 2.0])
    y = np.array([0] * 6 + [1] * 4 + [5])
    return fit_classifier(X, y, n_components=3, beta=0.125, J=2, m0=2,
                          n_orientations=3, delta=Fraction(1, 2))


class TestModelContainer:
    def test_round_trip_is_exact(self, tmp_path, small_classifier):
        """float64 payload round-trips bitwise: means, eigenvalues, and
        directions are exactly the stored arrays."""
        path = tmp_path / "m.scm"
        save_model(path, small_classifier, manifest={"train": "toy"})
        clf, manifest = load_model(path)
        assert manifest == {"train": "toy"}
        assert clf.beta == small_classifier.beta
        assert clf.n_components == small_classifier.n_components
        assert (clf.J, clf.m0, clf.n_orientations, clf.delta) == (
            small_classifier.J, small_classifier.m0,
            small_classifier.n_orientations, small_classifier.delta,
        )
        assert clf.class_ids == small_classifier.class_ids
        for a, b in zip(clf.models, small_classifier.models):
            assert a.class_id == b.class_id
            assert a.n_train == b.n_train
            np.testing.assert_array_equal(a.mean, b.mean)
            np.testing.assert_array_equal(a.eigvals, b.eigvals)
            np.testing.assert_array_equal(a.eigvecs, b.eigvecs)

    def test_write_is_byte_deterministic(self, tmp_path, small_classifier):
        a, b = tmp_path / "a.scm", tmp_path / "b.scm"
        save_model(a, small_classifier)
        save_model(b, small_classifier)
        assert a.read_bytes() == b.read_bytes()

    def test_crc_detects_corruption(self, tmp_path, small_classifier):
        path = tmp_path / "m.scm"
        save_model(path, small_classifier)
        raw = bytearray(path.read_bytes())
        raw[20] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="CRC32 mismatch"):
            load_model(path)

    def test_feature_file_is_not_a_model(self, tmp_path, small_features):
        layout, feats, labels = small_features
        path = tmp_path / "f.sct"
        save_features(path, layout, feats, labels)
        with pytest.raises(FormatError, match="bad magic"):
            load_model(path)

    def test_payload_length_is_checked(self, tmp_path, small_classifier):
        path = tmp_path / "m.scm"
        save_model(path, small_classifier)
        _, _, _, payload = split_container(path.read_bytes())
        path.write_bytes(rebuild(path.read_bytes(), payload=payload + b"\x00" * 8))
        with pytest.raises(FormatError, match="payload is"):
            load_model(path)

    def test_missing_header_key(self, tmp_path, small_classifier):
        path = tmp_path / "m.scm"
        save_model(path, small_classifier)
        _, _, header, _ = split_container(path.read_bytes())
        del header["beta"]
        path.write_bytes(rebuild(path.read_bytes(), header=header))
        with pytest.raises(FormatError, match="incomplete header"):
            load_model(path)


class TestConfigMismatch:
    def test_matching_configs_have_no_diffs(self, small_features):
        from fractions import Fraction

        layout, feats, labels = small_features
        clf = fit_classifier(feats, labels, n_components=1, J=layout.J,
                             m0=layout.m0,
                             n_orientations=layout.n_orientations,
                             delta=layout.delta)
        assert config_mismatch(layout, clf) == []

    def test_each_difference_is_named(self, small_features, rng):
        layout, feats, labels = small_features
        clf = fit_classifier(rng.normal(size=(4, 10)), np.array([0, 0, 1, 1]),
                             n_components=1, J=3, m0=1, n_orientations=6)
        diffs = config_mismatch(layout, clf)
        named = {d.split(":")[0] for d in diffs}
        assert {"J", "m0", "n_orientations", "delta", "n_features"} == named
