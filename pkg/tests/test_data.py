import numpy as np
import pytest

from foodsys.data import (
    CSV_HEADER,
    UK_CALIBRATION,
    Dataset,
    june_december_indices,
    load_bundled_uk_pork,
    load_csv,
    save_csv,
    validate,
)
from foodsys.errors import DataError, DomainError


def write_csv(tmp_path, rows, header=",".join(CSV_HEADER)):
    path = tmp_path / "data.csv"
    path.write_text("\n".join([header, *rows]) + "\n")
    return path


GOOD_ROWS = [
    "2015-01,400000,80e6,40e6,20e6,140.5",
    "2015-02,,81e6,39e6,21e6,141.0",
    "2015-03,405000,82e6,,20e6,139.0",
]


class TestLoadCsv:
    def test_basic_load_and_derivation(self, tmp_path):
        data = load_csv(write_csv(tmp_path, GOOD_ROWS))
        assert data.anchor == "2015-01"
        assert data.n_months == 3
        assert data.new_supplies[0] == pytest.approx(100e6)  # 80 + 40 - 20
        assert np.isnan(data.new_supplies[2])  # imports missing that month
        assert np.isnan(data.herd[1])
        assert data.months.tolist() == [0, 1, 2]

    def test_rows_may_be_shuffled(self, tmp_path):
        data = load_csv(write_csv(tmp_path, list(reversed(GOOD_ROWS))))
        assert data.anchor == "2015-01"
        assert data.price[0] == pytest.approx(140.5)

    def test_header_must_match(self, tmp_path):
        with pytest.raises(DataError, match="header"):
            load_csv(write_csv(tmp_path, GOOD_ROWS, header="month,herd,p,i,e,price"))

    def test_malformed_month(self, tmp_path):
        with pytest.raises(DataError, match="malformed month") as excinfo:
            load_csv(write_csv(tmp_path, ["2015/01,1,1,1,1,1"]))
        assert excinfo.value.row == 2
        with pytest.raises(DataError, match="malformed month"):
            load_csv(write_csv(tmp_path, ["2015-13,1,1,1,1,1"]))

    def test_duplicate_month(self, tmp_path):
        rows = [GOOD_ROWS[0], GOOD_ROWS[0]]
        with pytest.raises(DataError, match="duplicate") as excinfo:
            load_csv(write_csv(tmp_path, rows))
        assert excinfo.value.row == 3
        assert excinfo.value.column == "month"

    def test_negative_value_named(self, tmp_path):
        rows = ["2015-01,400000,80e6,-40e6,20e6,140.5"]
        with pytest.raises(DataError, match="negative") as excinfo:
            load_csv(write_csv(tmp_path, rows))
        assert excinfo.value.row == 2
        assert excinfo.value.column == "imports_kg"

    def test_non_numeric_cell_named(self, tmp_path):
        rows = ["2015-01,400000,80e6,lots,20e6,140.5"]
        with pytest.raises(DataError, match="non-numeric") as excinfo:
            load_csv(write_csv(tmp_path, rows))
        assert excinfo.value.column == "imports_kg"

    def test_gap_in_months(self, tmp_path):
        rows = [GOOD_ROWS[0], "2015-03,,82e6,41e6,20e6,139.0"]
        with pytest.raises(DataError, match="not contiguous.*2015-02"):
            load_csv(write_csv(tmp_path, rows))

    def test_no_rows(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            load_csv(write_csv(tmp_path, []))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataError, match="missing header"):
            load_csv(path)

    def test_wrong_cell_count(self, tmp_path):
        with pytest.raises(DataError, match="expected 6 cells"):
            load_csv(write_csv(tmp_path, ["2015-01,1,2,3"]))


class TestRoundTrip:
    def test_lossless_including_missingness(self, tmp_path):
        rng = np.random.default_rng(0)
        n = 24
        herd = np.full(n, np.nan)
        herd[june_december_indices("2015-01", n)] = rng.uniform(3e5, 5e5, 4)
        production = rng.uniform(7e7, 9e7, n)
        imports = rng.uniform(3e7, 5e7, n)
        exports = rng.uniform(1e7, 3e7, n)
        price = rng.uniform(120, 160, n)
        production[3] = np.nan
        data = Dataset("2015-01", herd, production + imports - exports, price,
                       production, imports, exports)
        path = tmp_path / "roundtrip.csv"
        save_csv(data, path)
        again = load_csv(path)
        for name in ("herd", "price", "production", "imports", "exports"):
            a, b = getattr(data, name), getattr(again, name)
            assert np.array_equal(np.isnan(a), np.isnan(b))
            assert np.array_equal(a[~np.isnan(a)], b[~np.isnan(b)])
        # derived column respects the missing production cell
        assert np.isnan(again.new_supplies[3])


class TestDatasetContainer:
    def test_month_labels_wrap_years(self):
        data = Dataset("2015-11", *[np.ones(4)] * 6)
        assert [data.month_label(i) for i in range(4)] == [
            "2015-11", "2015-12", "2016-01", "2016-02"]

    def test_series_lookup(self):
        data = Dataset("2015-01", *[np.ones(3)] * 6)
        assert data.series("price").shape == (3,)
        with pytest.raises(DomainError):
            data.series("bacon")

    def test_matrix_order(self):
        data = Dataset("2015-01", np.full(2, 1.0), np.full(2, 2.0),
                       np.full(2, 3.0), np.full(2, 4.0), np.full(2, 5.0),
                       np.full(2, 6.0))
        assert data.data_matrix()[:, 0].tolist() == [1, 2, 3, 4, 5, 6]

    def test_anchor_validated(self):
        with pytest.raises(DomainError):
            Dataset("Jan-2015", *[np.ones(2)] * 6)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            Dataset("2015-01", np.ones(2), np.ones(3), np.ones(2),
                    np.ones(2), np.ones(2), np.ones(2))


class TestValidate:
    def test_sparse_herd_is_informational(self, tmp_path):
        data = load_csv(write_csv(tmp_path, GOOD_ROWS))
        report = validate(data)
        assert not report.fatal
        herd_findings = [f for f in report.findings if f.series == "herd"]
        assert herd_findings and herd_findings[0].level == "info"

    def test_zero_value_fatal(self):
        data = Dataset("2015-01", np.ones(3), np.ones(3), np.array([1.0, 0.0, 1.0]),
                       np.ones(3), np.ones(3), np.ones(3))
        report = validate(data)
        assert report.fatal
        assert any("positivity" in f.message for f in report.findings)

    def test_all_missing_fatal(self):
        data = Dataset("2015-01", *[np.full(3, np.nan)] * 6)
        report = validate(data)
        assert report.fatal
        assert any("no observed series" in f.message for f in report.findings)

    def test_plausibility_warnings(self):
        # price in pounds instead of pence, herd in thousands
        data = Dataset("2015-01", np.full(3, 400.0), np.full(3, 1e8),
                       np.full(3, 1.4), np.full(3, 8e7), np.full(3, 4e7),
                       np.full(3, 2e7))
        report = validate(data)
        warnings = {f.series for f in report.findings if f.level == "warning"}
        assert warnings == {"price", "herd"}

    def test_report_serialises(self, tmp_path):
        report = validate(load_csv(write_csv(tmp_path, GOOD_ROWS)))
        payload = report.to_dict()
        assert set(payload) == {"fatal", "findings", "series"}
        assert payload["series"]["price"]["observed"] == 3


class TestBundledSnapshot:
    def test_loads_and_spans_five_years(self):
        data = load_bundled_uk_pork()
        assert data.anchor == "2015-01"
        assert data.n_months == 60
        assert data.month_label(59) == "2019-12"

    def test_survey_cadence_and_counts(self):
        data = load_bundled_uk_pork()
        counts = data.n_observed()
        assert counts["herd"] == 10  # June and December each year
        assert counts["price"] == 60
        assert counts["new_supplies"] == 60

    def test_validates_cleanly(self):
        report = validate(load_bundled_uk_pork())
        assert not report.fatal
        assert not any(f.level == "warning" for f in report.findings)

    def test_magnitudes_match_calibration(self):
        data = load_bundled_uk_pork()
        fg = UK_CALIBRATION.f * UK_CALIBRATION.g
        herd_mean = np.nanmean(data.herd)
        assert herd_mean == pytest.approx(408000, rel=0.05)
        assert np.nanmean(data.production) == pytest.approx(fg * herd_mean, rel=0.1)
        assert np.nanmean(data.imports) == pytest.approx(
            UK_CALIBRATION.k * UK_CALIBRATION.h, rel=0.1)


def test_june_december_indices():
    idx = june_december_indices("2015-01", 24)
    assert idx.tolist() == [5, 11, 17, 23]
    idx = june_december_indices("2015-11", 4)
    assert idx.tolist() == [1]
    with pytest.raises(DomainError):
        june_december_indices("2015", 10)
