"""Dataset loading, selection, splitting, scaling, and discretization."""
import math

import numpy as np
import pytest

from ctgsvm.data import (
    DataError,
    SplitSpec,
    apply_standardizer,
    discretize_mdl,
    export_csv,
    fit_discretization,
    fit_standardizer,
    load_dataset,
    select_features,
    stratified_split,
)
from conftest import numeric_dataset
from oracles import mdl_cuts_brute


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


CSV = "a,b,cls\n1,2,X\n3,4,Y\n5,6,X\n7,8,Y\n"


class TestCsvLoading:
    def test_happy_path(self, tmp_path):
        ds = load_dataset(write(tmp_path, "t.csv", CSV), class_column="cls")
        assert ds.n_rows == 4
        assert ds.n_features == 2
        assert ds.class_labels == ("X", "Y")
        assert ds.feature_names == ("a", "b")
        assert ds.class_codes().tolist() == [0, 1, 0, 1]

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_dataset(tmp_path / "absent.csv", class_column="cls")

    def test_unparseable_cell_reports_row_and_column(self, tmp_path):
        p = write(tmp_path, "t.csv", "a,cls\n1,X\nbogus,Y\n")
        with pytest.raises(DataError, match="row 2, column 'a'"):
            load_dataset(p, class_column="cls")

    def test_missing_value_rejected(self, tmp_path):
        p = write(tmp_path, "t.csv", "a,cls\n1,X\n?,Y\n")
        with pytest.raises(DataError, match="missing value at row 2"):
            load_dataset(p, class_column="cls")

    def test_single_label_class_rejected(self, tmp_path):
        p = write(tmp_path, "t.csv", "a,b,cls\n1,2,X\n")
        with pytest.raises(DataError, match="fewer than 2 distinct labels"):
            load_dataset(p, class_column="cls")

    def test_unknown_class_column(self, tmp_path):
        p = write(tmp_path, "t.csv", CSV)
        with pytest.raises(DataError, match="not found in header"):
            load_dataset(p, class_column="nope")


ARFF = """% a comment
@relation toy
@attribute a numeric
@attribute color {red, green}
@attribute cls {yes, no}
@data
1.5, red, yes
2.5, green, no
% trailing comment
3.5, red, yes
"""


class TestArffLoading:
    def test_happy_path(self, tmp_path):
        ds = load_dataset(write(tmp_path, "t.arff", ARFF), class_column="cls")
        assert ds.n_rows == 3
        assert ds.schema[1].nominal_values == ("red", "green")
        # declared order kept, not sorted
        assert ds.class_labels == ("yes", "no")
        assert ds.rows[1].tolist() == [2.5, 1.0, 1.0]

    def test_unknown_nominal_value(self, tmp_path):
        bad = ARFF.replace("2.5, green, no", "2.5, blue, no")
        with pytest.raises(DataError, match="'blue' not in declared set"):
            load_dataset(write(tmp_path, "t.arff", bad), class_column="cls")

    def test_missing_data_section(self, tmp_path):
        p = write(tmp_path, "t.arff", "@relation x\n@attribute a numeric\n")
        with pytest.raises(DataError, match="missing @data"):
            load_dataset(p, class_column="a")

    def test_missing_value_rejected(self, tmp_path):
        bad = ARFF.replace("3.5, red, yes", "?, red, yes")
        with pytest.raises(DataError, match="missing value at row 3"):
            load_dataset(write(tmp_path, "t.arff", bad), class_column="cls")


class TestSelectFeatures:
    def setup_method(self):
        self.ds = numeric_dataset([[1, 2, 3], [4, 5, 6]], ["a", "b"])

    def test_full_mask_round_trip(self):
        out = select_features(self.ds, [0, 1, 2])
        assert np.array_equal(out.feature_matrix(), self.ds.feature_matrix())
        assert np.array_equal(out.class_codes(), self.ds.class_codes())

    def test_single_feature(self):
        out = select_features(self.ds, [0])
        assert out.n_features == 1
        assert out.feature_names == ("f0",)
        assert out.feature_matrix().ravel().tolist() == [1.0, 4.0]

    def test_duplicate_index_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            select_features(self.ds, [0, 0])

    def test_empty_mask_rejected(self):
        with pytest.raises(DataError, match="empty"):
            select_features(self.ds, [])

    def test_out_of_range_rejected(self):
        with pytest.raises(DataError, match="out of range"):
            select_features(self.ds, [3])


class TestSplit:
    def test_per_class_floor_counts(self, ctg_table):
        ds, _, _ = ctg_table
        train, test = stratified_split(ds, SplitSpec(0.70, seed=42))
        codes = ds.class_codes()
        # independent per-class floor computation
        expected_train = sum(
            math.floor(0.70 * int((codes == c).sum())) for c in range(len(ds.class_labels))
        )
        assert train.n_rows == expected_train
        assert test.n_rows == ds.n_rows - expected_train
        tr_codes = train.class_codes()
        for c in range(len(ds.class_labels)):
            assert int((tr_codes == c).sum()) == math.floor(0.70 * int((codes == c).sum()))

    def test_balanced_four_rows(self):
        ds = numeric_dataset([[1], [2], [3], [4]], ["a", "b", "a", "b"])
        train, test = stratified_split(ds, SplitSpec(0.5, seed=7))
        for part in (train, test):
            assert part.n_rows == 2
            assert sorted(part.class_codes().tolist()) == [0, 1]

    def test_same_seed_identical(self, ctg_table):
        ds, _, _ = ctg_table
        a = stratified_split(ds, SplitSpec(0.70, seed=42))
        b = stratified_split(ds, SplitSpec(0.70, seed=42))
        assert np.array_equal(a[0].rows, b[0].rows)
        assert np.array_equal(a[1].rows, b[1].rows)

    def test_partition_property(self):
        rng = np.random.default_rng(3)
        ds = numeric_dataset(rng.normal(size=(40, 3)), list("ab" * 20))
        train, test = stratified_split(ds, SplitSpec(0.6, seed=1))
        assert train.n_rows + test.n_rows == ds.n_rows
        merged = np.vstack([train.rows, test.rows])
        assert np.array_equal(
            np.sort(merged, axis=0), np.sort(np.asarray(ds.rows), axis=0)
        )

    def test_tiny_class_rejected(self):
        ds = numeric_dataset([[1], [2], [3]], ["a", "a", "b"])
        with pytest.raises(DataError, match="fewer than 2 rows"):
            stratified_split(ds, SplitSpec(0.5, seed=0))

    def test_unstratified_split(self):
        ds = numeric_dataset(np.arange(20).reshape(10, 2), list("ab") * 5)
        train, test = stratified_split(ds, SplitSpec(0.7, seed=0, stratified=False))
        assert train.n_rows == 7 and test.n_rows == 3


class TestStandardizer:
    def test_two_point_feature(self):
        ds = numeric_dataset([[0.0], [2.0]], ["a", "b"])
        s = fit_standardizer(ds)
        assert s.means[0] == 1.0 and s.sigmas[0] == 1.0
        out = apply_standardizer(s, ds)
        assert out.feature_matrix().ravel().tolist() == [-1.0, 1.0]

    def test_constant_feature_floored(self):
        ds = numeric_dataset([[5.0], [5.0], [5.0]], ["a", "b", "a"])
        s = fit_standardizer(ds)
        assert s.sigmas[0] == 1.0
        out = apply_standardizer(s, ds)
        assert out.feature_matrix().ravel().tolist() == [0.0, 0.0, 0.0]
        # applying twice to a constant feature stays at zero
        again = apply_standardizer(fit_standardizer(out), out)
        assert again.feature_matrix().ravel().tolist() == [0.0, 0.0, 0.0]

    def test_held_out_value(self):
        s = fit_standardizer(numeric_dataset([[0.0], [2.0]], ["a", "b"]))
        assert s.transform_features(np.array([[3.0]]))[0, 0] == 2.0

    def test_self_fit_is_zero_mean_unit_sigma(self):
        rng = np.random.default_rng(11)
        ds = numeric_dataset(rng.normal(5, 3, size=(50, 4)), list("ab") * 25)
        out = apply_standardizer(fit_standardizer(ds), ds)
        feats = out.feature_matrix()
        assert np.all(np.abs(feats.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(np.sqrt((feats**2).mean(axis=0)) - 1) < 1e-9)

    def test_schema_mismatch(self):
        s = fit_standardizer(numeric_dataset([[0.0], [2.0]], ["a", "b"]))
        other = numeric_dataset([[0.0, 1.0], [2.0, 3.0]], ["a", "b"])
        with pytest.raises(DataError, match="schema mismatch"):
            apply_standardizer(s, other)


class TestDiscretization:
    def test_single_clean_cut(self):
        ds = numeric_dataset([[1.0], [2.0], [3.0], [4.0]], ["A", "A", "B", "B"])
        assert discretize_mdl(ds, 0) == (2.5,)
        assert mdl_cuts_brute([1, 2, 3, 4], ["A", "A", "B", "B"]) == [2.5]

    def test_pure_classes_no_cut(self):
        ds = numeric_dataset([[1.0], [2.0], [3.0]], ["A", "A", "A"])
        assert discretize_mdl(ds, 0) == ()

    def test_identical_values_no_cut(self):
        ds = numeric_dataset([[7.0]] * 6, ["A", "B", "A", "B", "A", "B"])
        assert discretize_mdl(ds, 0) == ()

    def test_matches_brute_enumeration(self):
        rng = np.random.default_rng(5)
        for trial in range(30):
            n = int(rng.integers(6, 40))
            values = rng.choice([1.0, 2.0, 3.5, 4.25, 7.0, 9.5, 12.0], size=n)
            classes = rng.choice(["A", "B", "C"], size=n).tolist()
            if len(set(classes)) < 2:
                continue
            ds = numeric_dataset(values.reshape(-1, 1), classes)
            got = list(discretize_mdl(ds, 0))
            want = mdl_cuts_brute(values.tolist(), classes)
            assert got == pytest.approx(want), f"trial {trial}"

    def test_cuts_fall_between_classes(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(8, 60))
            values = np.round(rng.normal(0, 2, size=n), 1)
            classes = rng.choice(["A", "B"], size=n).tolist()
            if len(set(classes)) < 2:
                continue
            ds = numeric_dataset(values.reshape(-1, 1), classes)
            for cut in discretize_mdl(ds, 0):
                below = [c for v, c in zip(values, classes) if v < cut]
                above = [c for v, c in zip(values, classes) if v > cut]
                assert below and above
                # strictly between two observed values of different classes
                assert not (len(set(below)) == 1 and set(below) == set(above) == {below[0]})

    def test_fit_discretization_covers_all_features(self, ctg_table):
        ds, _, _ = ctg_table
        sub = ds.take(range(200))
        dmap = fit_discretization(sub)
        assert len(dmap.cuts) == ds.n_features


class TestExport:
    def test_round_trip_bit_stable(self, tmp_path, ctg_table):
        ds, _, _ = ctg_table
        sub = ds.take(range(50))
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        export_csv(sub, p1)
        reloaded = load_dataset(p1, class_column="NSP")
        export_csv(reloaded, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert np.array_equal(np.asarray(reloaded.rows), np.asarray(sub.rows))
