"""Dataset construction, binary/CSV round trips, splitting, synthesis."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embshrink import (
    EmbeddingSet,
    FormatError,
    Split,
    SyntheticConfig,
    ValidationError,
    export_csv,
    generate_synthetic,
    generate_synthetic_detailed,
    import_csv,
    load_embeddings,
    save_embeddings,
    split_per_class,
    unit_normalized,
)

from conftest import random_set


class TestEmbeddingSet:
    def test_empty_set_is_valid(self):
        s = EmbeddingSet.empty(4, ["a"])
        assert len(s) == 0 and s.dimension == 4

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError, match="unique"):
            EmbeddingSet(np.ones((2, 3)), [1, 1], [0, 0], [0, 0], ["a"])

    def test_label_out_of_range_rejected(self):
        with pytest.raises(ValidationError, match="out of range"):
            EmbeddingSet(np.ones((1, 3)), [1], [2], [0], ["a", "b"])

    def test_nan_vector_rejected(self):
        bad = np.ones((2, 3))
        bad[1, 2] = np.nan
        with pytest.raises(ValidationError, match="non-finite"):
            EmbeddingSet(bad, [1, 2], [0, 0], [0, 0], ["a"])

    def test_take_preserves_order(self):
        s = random_set(10, 4, 2, seed=0)
        sub = s.take([7, 2, 5])
        assert list(sub.ids) == [7, 2, 5]

    def test_vectors_are_immutable(self):
        s = random_set(3, 4, 2, seed=0)
        with pytest.raises(ValueError):
            s.vectors[0, 0] = 1.0


class TestBinaryFormat:
    def test_round_trip_small(self, tmp_path):
        s = random_set(2, 4, 3, seed=1)
        path = tmp_path / "two.emb"
        save_embeddings(s, path)
        loaded = load_embeddings(path)
        assert loaded == s and loaded.dimension == 4

    def test_round_trip_1000_records_byte_identical(self, tmp_path):
        s = random_set(1000, 16, 7, seed=2)
        first = tmp_path / "a.emb"
        second = tmp_path / "b.emb"
        save_embeddings(s, first)
        loaded = load_embeddings(first)
        save_embeddings(loaded, second)
        assert first.read_bytes() == second.read_bytes()
        assert loaded == s

    def test_empty_set_round_trip(self, tmp_path):
        s = EmbeddingSet.empty(8, ["only"])
        path = tmp_path / "empty.emb"
        save_embeddings(s, path)
        assert load_embeddings(path) == s

    def test_file_size_formula_df_attr_shape(self, tmp_path):
        # Table-scale train side: 16147 records at d=512. Each record is
        # u64 id + u32 label + u8 split + 512 f32 entries = 2061 bytes.
        n, d = 16147, 512
        vocab = [f"g{i}" for i in range(45)]
        s = EmbeddingSet(
            np.zeros((n, d), dtype=np.float32),
            np.arange(n, dtype=np.uint64),
            np.zeros(n, dtype=np.uint32),
            np.zeros(n, dtype=np.uint8),
            vocab,
        )
        path = tmp_path / "big.emb"
        save_embeddings(s, path)
        header = 4 + 4 + 8 + 4 + sum(2 + len(v.encode()) for v in vocab)
        assert path.stat().st_size == header + n * (8 + 4 + 1 + d * 4)

    def test_truncated_record_reports_offset(self, tmp_path):
        s = random_set(2, 4, 2, seed=3)
        path = tmp_path / "trunc.emb"
        save_embeddings(s, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-4])  # second record loses one float: wrong width
        with pytest.raises(FormatError, match="record 1") as err:
            load_embeddings(path)
        header = len(blob) - 2 * (8 + 4 + 1 + 16)
        assert err.value.offset == header + (8 + 4 + 1 + 16)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.emb"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(FormatError):
            load_embeddings(path)

    def test_duplicate_id_in_file(self, tmp_path):
        s = random_set(3, 2, 2, seed=4)
        path = tmp_path / "dup.emb"
        save_embeddings(s, path)
        blob = bytearray(path.read_bytes())
        rec_size = 8 + 4 + 1 + 8
        start = len(blob) - 3 * rec_size
        blob[start + rec_size : start + rec_size + 8] = blob[start : start + 8]
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="duplicate"):
            load_embeddings(path)

    def test_label_out_of_range_in_file(self, tmp_path):
        s = random_set(2, 2, 2, seed=5)
        path = tmp_path / "badlabel.emb"
        save_embeddings(s, path)
        blob = bytearray(path.read_bytes())
        rec_size = 8 + 4 + 1 + 8
        start = len(blob) - 2 * rec_size
        struct.pack_into("<I", blob, start + 8, 99)
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="label index 99"):
            load_embeddings(path)

    @settings(max_examples=25, deadline=None)
    @given(
        n=st.integers(0, 40),
        d=st.integers(1, 8),
        classes=st.integers(1, 5),
        seed=st.integers(0, 10_000),
    )
    def test_round_trip_property(self, tmp_path_factory, n, d, classes, seed):
        s = random_set(n, d, classes, seed=seed)
        path = tmp_path_factory.mktemp("rt") / "set.emb"
        save_embeddings(s, path)
        assert load_embeddings(path) == s


class TestCsv:
    def test_import_export_round_trip(self, tmp_path):
        csv_in = tmp_path / "in.csv"
        csv_in.write_text(
            "id,label_name,split,v0,v1\n"
            "1,shirt,train,0.5,-1.25\n"
            "2,coat,test,3,0.75\n"
            "3,shirt,unassigned,-0.5,2\n"
        )
        s = import_csv(csv_in)
        assert s.vocabulary == ("shirt", "coat")
        assert list(s.labels) == [0, 1, 0]
        csv_out = tmp_path / "out.csv"
        export_csv(s, csv_out)
        assert import_csv(csv_out) == s

    def test_export_then_import_is_exact(self, tmp_path):
        s = random_set(20, 3, 2, seed=6)
        path = tmp_path / "x.csv"
        export_csv(s, path)
        assert import_csv(path) == s

    def test_ragged_row_reports_line(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("id,label_name,split,v0,v1\n1,a,train,0.5,1\n2,b,train,0.5\n")
        with pytest.raises(ValidationError, match="line 3"):
            import_csv(path)

    def test_unknown_split_reports_line(self, tmp_path):
        path = tmp_path / "badsplit.csv"
        path.write_text("id,label_name,split,v0\n1,a,validation,0.5\n")
        with pytest.raises(ValidationError, match="line 2"):
            import_csv(path)


class TestSplitPerClass:
    def test_singleton_class_stays_in_train(self):
        vectors = np.ones((3, 2))
        s = EmbeddingSet(vectors, [0, 1, 2], [0, 1, 1], [2, 2, 2], ["solo", "pair"])
        train, test = split_per_class(s, 0.2, seed=0)
        assert 0 in train.ids and 0 not in test.ids

    def test_ten_records_fraction_point_two(self):
        s = random_set(10, 3, 1, seed=7)
        for seed in range(5):
            train, test = split_per_class(s, 0.2, seed=seed)
            assert len(test) == 2 and len(train) == 8

    def test_round_half_up_and_clamp(self):
        # 3 records at 0.5 -> round-half-up gives 2, clamped to n-1 = 2
        s = random_set(3, 2, 1, seed=8)
        train, test = split_per_class(s, 0.5, seed=1)
        assert len(test) == 2 and len(train) == 1
        # 2 records at 0.9 -> 2, clamped to 1
        s2 = random_set(2, 2, 1, seed=9)
        train2, test2 = split_per_class(s2, 0.9, seed=1)
        assert len(test2) == 1 and len(train2) == 1

    def test_partition_exact(self):
        s = random_set(100, 4, 5, seed=10)
        train, test = split_per_class(s, 0.3, seed=3)
        assert len(train) + len(test) == len(s)
        assert set(map(int, train.ids)).isdisjoint(map(int, test.ids))
        merged = sorted(map(int, train.ids)) + sorted(map(int, test.ids))
        assert sorted(merged) == list(range(100))
        # fields survive verbatim
        by_id = {int(r.id): r for r in s}
        for rec in list(train) + list(test):
            orig = by_id[rec.id]
            assert np.array_equal(rec.vector, orig.vector)
            assert rec.label == orig.label and rec.split == orig.split

    def test_determinism(self):
        s = random_set(60, 4, 4, seed=11)
        a = split_per_class(s, 0.25, seed=42)
        b = split_per_class(s, 0.25, seed=42)
        assert a[0] == b[0] and a[1] == b[1]

    def test_rejects_bad_fraction(self):
        s = random_set(4, 2, 2, seed=12)
        with pytest.raises(ValidationError):
            split_per_class(s, 0.0, seed=0)
        with pytest.raises(ValidationError):
            split_per_class(s, 1.0, seed=0)


class TestSynthetic:
    def test_single_class_counts(self):
        cfg = SyntheticConfig(1, 1, 5, 4, 0.1, 1.0, 0.0, seed=0)
        s = generate_synthetic(cfg)
        assert len(s) == 5
        assert np.all(s.labels == 0)

    def test_deterministic(self):
        cfg = SyntheticConfig(3, 2, 6, 8, 0.1, 1.0, 0.3, seed=99)
        assert generate_synthetic(cfg) == generate_synthetic(cfg)

    def test_noise_count_exact(self):
        cfg = SyntheticConfig(50, 5, 8, 8, 0.1, 1.0, 0.2, seed=1)
        s, sidecar = generate_synthetic_detailed(cfg)
        assert len(s) == 2000
        assert len(sidecar.noise_ids) == 400

    def test_separated_classes_self_knn_is_perfect(self):
        # Oracle: brute-force leave-one-out nearest neighbor over the set.
        cfg = SyntheticConfig(20, 3, 10, 32, 0.1, 1.0, 0.0, seed=5)
        s = generate_synthetic(cfg)
        unit = unit_normalized(s.vectors)
        sims = unit @ unit.T
        np.fill_diagonal(sims, -np.inf)
        nearest = np.argmax(sims, axis=1)
        assert np.all(s.labels[nearest] == s.labels)

    def test_noise_lands_in_other_class_region(self):
        cfg = SyntheticConfig(10, 2, 20, 16, 0.05, 0.5, 0.25, seed=13)
        s, sidecar = generate_synthetic_detailed(cfg)
        noise = sidecar.noise_mask(s)
        # a noise record's recorded view belongs to a different class
        own_view_class = sidecar.view_index // cfg.views_per_class
        assert np.all(own_view_class[noise] != s.labels[noise])
        assert np.all(own_view_class[~noise] == s.labels[~noise])

    def test_invalid_config_rejected(self):
        with pytest.raises(ValidationError):
            SyntheticConfig(0, 1, 1, 4, 0.1, 1.0, 0.0, seed=0).validate()
        with pytest.raises(ValidationError):
            SyntheticConfig(1, 1, 1, 4, 0.1, 1.0, 1.5, seed=0).validate()
