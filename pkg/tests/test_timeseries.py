import numpy as np
import pytest

from dcd.errors import (
    EmptyFileError,
    NonNumericCellError,
    RaggedRowsError,
    TooFewRowsError,
)
from dcd.synth import SynthSpec, generate
from dcd.timeseries import (
    ConstantColumnWarning,
    IngestOptions,
    TimeSeriesMatrix,
    load_csv,
    save_csv,
    standardize,
    unstandardize,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_direct_parse(self, tmp_path):
        rows = "\n".join(f"{i},{i * 2}" for i in range(1, 9))
        m = load_csv(write(tmp_path, "a,b\n" + rows + "\n"))
        assert m.n == 8 and m.d == 2
        assert m.var_names == ("a", "b")
        assert m.values[0, 0] == 1.0 and m.values[0, 1] == 2.0
        assert m.values[7, 1] == 16.0

    def test_too_few_rows(self, tmp_path):
        with pytest.raises(TooFewRowsError):
            load_csv(write(tmp_path, "a,b\n1,2\n3,4\n5,6\n"))

    def test_non_numeric_cell_location(self, tmp_path):
        rows = "\n".join("1,2" for _ in range(8))
        text = "a,b\n" + rows.replace("1,2", "1,x", 1) + "\n"
        with pytest.raises(NonNumericCellError) as err:
            load_csv(write(tmp_path, text))
        assert err.value.row == 2 and err.value.col == 2

    def test_ragged_rows(self, tmp_path):
        text = "a,b\n" + "\n".join("1,2" for _ in range(5)) + "\n1,2,3\n"
        with pytest.raises(RaggedRowsError) as err:
            load_csv(write(tmp_path, text))
        assert err.value.row == 7

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyFileError):
            load_csv(write(tmp_path, ""))

    def test_time_column_dropped(self, tmp_path):
        rows = "\n".join(f"2020-{i:02d},1,{i}" for i in range(1, 10))
        m = load_csv(write(tmp_path, "date,a,b\n" + rows + "\n"))
        assert m.var_names == ("a", "b")
        assert m.d == 2

    def test_keep_time_col_requires_numeric(self, tmp_path):
        rows = "\n".join(f"{i},{i}" for i in range(9))
        m = load_csv(
            write(tmp_path, "t,a\n" + rows + "\n"),
            IngestOptions(keep_time_col=True),
        )
        assert m.var_names == ("t", "a")

    def test_missing_cell_rejected_by_default(self, tmp_path):
        rows = ["1,2"] * 8
        rows[3] = "1,"
        with pytest.raises(NonNumericCellError):
            load_csv(write(tmp_path, "a,b\n" + "\n".join(rows) + "\n"))

    def test_linear_imputation(self, tmp_path):
        rows = [f"{i},{float(i)}" for i in range(10)]
        rows[4] = "4,"
        m = load_csv(
            write(tmp_path, "a,b\n" + "\n".join(rows) + "\n"),
            IngestOptions(impute="linear"),
        )
        assert m.values[4, 1] == pytest.approx(4.0)

    def test_textual_nan_treated_as_missing(self, tmp_path):
        rows = ["1,2"] * 8
        rows[2] = "1,nan"
        with pytest.raises(NonNumericCellError):
            load_csv(write(tmp_path, "a,b\n" + "\n".join(rows) + "\n"))

    def test_constant_column_warns(self, tmp_path):
        rows = "\n".join(f"{i},5" for i in range(9))
        with pytest.warns(ConstantColumnWarning):
            load_csv(write(tmp_path, "a,b\n" + rows + "\n"))


class TestRoundTrip:
    def test_synth_round_trip_bit_exact(self, tmp_path):
        matrix, _ = generate(SynthSpec(n=1000, d=2, lag=2, seed=7))
        path = tmp_path / "synth.csv"
        save_csv(matrix, path)
        loaded = load_csv(path)
        assert loaded.var_names == matrix.var_names
        assert np.array_equal(loaded.values, matrix.values)

    def test_random_values_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        values = rng.standard_normal((50, 3)) * 10.0 ** rng.integers(-8, 8, (50, 3))
        matrix = TimeSeriesMatrix(values=values, var_names=("u", "v", "w"))
        path = tmp_path / "r.csv"
        save_csv(matrix, path)
        assert np.array_equal(load_csv(path).values, matrix.values)


class TestMatrixInvariants:
    def test_unique_nonempty_names(self):
        with pytest.raises(ValueError):
            TimeSeriesMatrix(values=np.zeros((5, 2)), var_names=("a", "a"))
        with pytest.raises(ValueError):
            TimeSeriesMatrix(values=np.zeros((5, 2)), var_names=("a", ""))

    def test_no_nan(self):
        values = np.zeros((5, 2))
        values[1, 1] = np.nan
        with pytest.raises(ValueError):
            TimeSeriesMatrix(values=values, var_names=("a", "b"))

    def test_values_read_only(self):
        m = TimeSeriesMatrix(values=np.zeros((5, 2)), var_names=("a", "b"))
        with pytest.raises(ValueError):
            m.values[0, 0] = 1.0


class TestStandardize:
    def test_hand_computed_column(self):
        # ddof = n - 1: std([2,4,6]) = 2, so the column maps to [-1, 0, 1]
        m = TimeSeriesMatrix(values=np.array([[2.0], [4.0], [6.0]]), var_names=("a",))
        out, params = standardize(m)
        assert out.values[:, 0] == pytest.approx([-1.0, 0.0, 1.0])
        assert params.mean[0] == pytest.approx(4.0)
        assert params.std[0] == pytest.approx(2.0)

    def test_post_conditions(self):
        rng = np.random.default_rng(0)
        m = TimeSeriesMatrix(values=rng.normal(3, 7, (200, 4)), var_names=tuple("abcd"))
        out, _ = standardize(m)
        assert np.abs(out.values.mean(axis=0)).max() < 1e-12
        assert np.abs(out.values.std(axis=0, ddof=1) - 1).max() < 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        m = TimeSeriesMatrix(values=rng.normal(0, 2, (100, 2)), var_names=("a", "b"))
        once, _ = standardize(m)
        twice, _ = standardize(once)
        assert np.abs(twice.values - once.values).max() < 1e-12

    def test_constant_column_passthrough(self):
        values = np.column_stack([np.full(10, 5.0), np.arange(10.0)])
        m = TimeSeriesMatrix(values=values, var_names=("c", "x"))
        with pytest.warns(ConstantColumnWarning):
            out, params = standardize(m)
        assert np.array_equal(out.values[:, 0], values[:, 0])
        assert params.constant_mask.tolist() == [True, False]

    def test_inversion(self):
        rng = np.random.default_rng(2)
        m = TimeSeriesMatrix(values=rng.normal(5, 3, (50, 3)), var_names=("a", "b", "c"))
        out, params = standardize(m)
        back = unstandardize(out, params)
        assert np.abs(back.values - m.values).max() < 1e-12

    def test_names_and_order_preserved(self):
        m = TimeSeriesMatrix(values=np.random.default_rng(4).normal(size=(20, 3)), var_names=("z", "a", "m"))
        out, _ = standardize(m)
        assert out.var_names == ("z", "a", "m")
