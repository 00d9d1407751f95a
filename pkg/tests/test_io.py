"""File formats: prediction/truth CSVs, manifests, counts, weights."""

import numpy as np
import pytest

from lesionkit.categories import Category
from lesionkit.datamodel import ClassCounts, GroundTruthSet, Manifest, ManifestRecord, PredictionSet
from lesionkit.exceptions import FormatError
from lesionkit.io import (
    build_manifest,
    image_id_from_path,
    parse_ground_truth,
    parse_predictions,
    read_class_counts,
    read_manifest,
    read_weights,
    write_class_counts,
    write_ground_truth,
    write_manifest,
    write_predictions,
    write_weights,
)

HEADER = "image,MEL,NV,BCC,AK,BKL,DF,VASC,SCC,UNK"


def write_text(path, *lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestParsePredictions:
    def test_one_hot_row(self, tmp_path):
        f = tmp_path / "p.csv"
        write_text(f, HEADER, "ISIC_0000000,1,0,0,0,0,0,0,0,0")
        p = parse_predictions(f)
        assert p.image_ids == ("ISIC_0000000",)
        assert p.values[0, 0] == 1.0
        assert p.values[0, 1:].sum() == 0.0

    def test_negative_value_message(self, tmp_path):
        f = tmp_path / "p.csv"
        write_text(f, HEADER, "a,-0.1,0,0,0,0,0,0,0,0")
        with pytest.raises(FormatError, match="negative confidence at row 2"):
            parse_predictions(f)

    def test_non_numeric_with_row_number(self, tmp_path):
        f = tmp_path / "p.csv"
        write_text(f, HEADER, "a,1,0,0,0,0,0,0,0,0", "b,1,x,0,0,0,0,0,0,0")
        with pytest.raises(FormatError, match="row 3"):
            parse_predictions(f)

    def test_duplicate_id_named(self, tmp_path):
        f = tmp_path / "p.csv"
        rows = [f"img_{i},1,0,0,0,0,0,0,0,0" for i in range(3)]
        rows[2] = rows[0]
        write_text(f, HEADER, *rows)
        with pytest.raises(FormatError, match="img_0"):
            parse_predictions(f)

    def test_wrong_header_rejected(self, tmp_path):
        f = tmp_path / "p.csv"
        write_text(f, "image,NV,MEL,BCC,AK,BKL,DF,VASC,SCC,UNK", "a,1,0,0,0,0,0,0,0,0")
        with pytest.raises(FormatError, match="header"):
            parse_predictions(f)

    def test_wrong_field_count(self, tmp_path):
        f = tmp_path / "p.csv"
        write_text(f, HEADER, "a,1,0,0")
        with pytest.raises(FormatError, match="row 2"):
            parse_predictions(f)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError, match="cannot read"):
            parse_predictions(tmp_path / "absent.csv")


class TestWritePredictions:
    def test_round_trip_exact(self, tmp_path, rng):
        p = PredictionSet(
            tuple(f"img_{i}" for i in range(50)), rng.random((50, 9)) * 3.0
        )
        f = tmp_path / "p.csv"
        write_predictions(p, f)
        q = parse_predictions(f)
        assert q.image_ids == p.image_ids
        np.testing.assert_array_equal(q.values, p.values)  # repr round-trips bits

    def test_empty_set(self, tmp_path):
        f = tmp_path / "p.csv"
        write_predictions(PredictionSet((), np.zeros((0, 9))), f)
        assert f.read_text(encoding="utf-8") == HEADER + "\n"
        assert len(parse_predictions(f)) == 0

    def test_lf_line_endings(self, tmp_path):
        f = tmp_path / "p.csv"
        write_predictions(PredictionSet(("a",), np.ones((1, 9))), f)
        assert b"\r" not in f.read_bytes()


class TestGroundTruth:
    def test_single_row(self, tmp_path):
        f = tmp_path / "t.csv"
        write_text(f, HEADER, "img1,0,1,0,0,0,0,0,0,0")
        t = parse_ground_truth(f)
        assert t.categories() == [Category.NV]

    def test_all_nine_labels_in_order(self, tmp_path):
        f = tmp_path / "t.csv"
        rows = []
        for k in range(9):
            cells = ["0"] * 9
            cells[k] = "1"
            rows.append(f"img_{k}," + ",".join(cells))
        write_text(f, HEADER, *rows)
        t = parse_ground_truth(f)
        assert t.categories() == list(Category)

    def test_two_ones_rejected(self, tmp_path):
        f = tmp_path / "t.csv"
        write_text(f, HEADER, "a,1,1,0,0,0,0,0,0,0")
        with pytest.raises(FormatError, match="not one-hot"):
            parse_ground_truth(f)

    def test_fractional_value_rejected(self, tmp_path):
        f = tmp_path / "t.csv"
        write_text(f, HEADER, "a,0.5,0.5,0,0,0,0,0,0,0")
        with pytest.raises(FormatError, match="not one-hot"):
            parse_ground_truth(f)

    def test_round_trip(self, tmp_path):
        t = GroundTruthSet(("a", "b", "c"), np.array([0, 4, 8]))
        f = tmp_path / "t.csv"
        write_ground_truth(t, f)
        back = parse_ground_truth(f)
        assert back.image_ids == t.image_ids
        np.testing.assert_array_equal(back.labels, t.labels)


class TestManifestIO:
    def test_round_trip(self, tmp_path):
        m = Manifest(
            (
                ManifestRecord("x/a.png", "isic", Category.MEL, "train"),
                ManifestRecord("x/b.png", "isic", Category.UNK, "valid"),
            )
        )
        f = tmp_path / "m.csv"
        write_manifest(m, f)
        back = read_manifest(f)
        assert back.records == m.records

    def test_duplicate_paths_allowed(self, tmp_path):
        # oversampled manifests repeat records; reading them back must work
        m = Manifest(
            (
                ManifestRecord("a.png", "s", Category.DF, "train"),
                ManifestRecord("a.png", "s", Category.DF, "train"),
            )
        )
        f = tmp_path / "m.csv"
        write_manifest(m, f)
        assert len(read_manifest(f)) == 2

    def test_bad_label_rejected(self, tmp_path):
        f = tmp_path / "m.csv"
        write_text(f, "path,source,label,split", "a.png,s,XXX,train")
        with pytest.raises(FormatError, match="row 2"):
            read_manifest(f)

    def test_bad_split_rejected(self, tmp_path):
        f = tmp_path / "m.csv"
        write_text(f, "path,source,label,split", "a.png,s,MEL,test")
        with pytest.raises(FormatError, match="row 2"):
            read_manifest(f)


class TestCountsAndWeights:
    def test_counts_round_trip(self, tmp_path):
        c = ClassCounts(np.arange(1, 10))
        f = tmp_path / "c.csv"
        write_class_counts(c, f)
        np.testing.assert_array_equal(read_class_counts(f).counts, c.counts)

    def test_counts_wrong_category_order(self, tmp_path):
        f = tmp_path / "c.csv"
        write_text(f, "category,count", *(f"{n},1" for n in
                   ("NV", "MEL", "BCC", "AK", "BKL", "DF", "VASC", "SCC", "UNK")))
        with pytest.raises(FormatError, match="row 2"):
            read_class_counts(f)

    def test_weights_round_trip(self, tmp_path, rng):
        w = rng.random(9) + 0.5
        f = tmp_path / "w.csv"
        write_weights(w, f)
        np.testing.assert_array_equal(read_weights(f), w)

    def test_weights_must_be_positive(self, tmp_path):
        f = tmp_path / "w.csv"
        write_weights(np.ones(9), f)
        text = f.read_text(encoding="utf-8").replace("MEL,1.0", "MEL,0.0")
        f.write_text(text, encoding="utf-8")
        with pytest.raises(FormatError):
            read_weights(f)


class TestBuildManifest:
    def test_scans_category_directories(self, tmp_path):
        for name, count in (("MEL", 2), ("NV", 1)):
            d = tmp_path / name
            d.mkdir()
            for i in range(count):
                (d / f"{name}_{i}.png").write_bytes(b"x")
        (tmp_path / "MEL" / "notes.txt").write_text("skip me")
        (tmp_path / "unrelated").mkdir()
        m = build_manifest(tmp_path, source="synthetic")
        assert len(m) == 3
        assert [r.label for r in m] == [Category.MEL, Category.MEL, Category.NV]
        assert all(r.source == "synthetic" for r in m)
        assert all(r.split == "none" for r in m)

    def test_deterministic_order(self, tmp_path):
        d = tmp_path / "BCC"
        d.mkdir()
        for stem in ("b", "a", "c"):
            (d / f"{stem}.png").write_bytes(b"x")
        m = build_manifest(tmp_path)
        assert [r.path.rsplit("/", 1)[-1] for r in m] == ["a.png", "b.png", "c.png"]

    def test_not_a_directory(self, tmp_path):
        with pytest.raises(FormatError):
            build_manifest(tmp_path / "nope")


def test_image_id_from_path():
    assert image_id_from_path("/x/y/ISIC_0012345.png") == "ISIC_0012345"
    assert image_id_from_path("plain.jpeg") == "plain"
