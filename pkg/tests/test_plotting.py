from opvec.metrics import ConfusionMatrix, MetricSet
from opvec.plotting import method_comparison_chart, metrics_chart
from opvec.reports import ReportRow, read_csv, render_table, write_csv

ROWS = [
    ReportRow("random_forest", "a", "ok", MetricSet(0.9, 0.8, None, None), ConfusionMatrix(0, 9, 0, 1)),
    ReportRow("knn", "a", "degenerate"),
    ReportRow("random_forest", "macro", "ok", MetricSet(0.9, 0.8, None, None), None, 1),
]

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_chart_is_deterministic(tmp_path):
    metrics_chart(ROWS, tmp_path / "a.png", "t")
    metrics_chart(ROWS, tmp_path / "b.png", "t")
    a = (tmp_path / "a.png").read_bytes()
    assert a.startswith(PNG_MAGIC) and a == (tmp_path / "b.png").read_bytes()


def test_comparison_chart(tmp_path):
    method_comparison_chart({"x": ROWS, "y": ROWS[:1]}, tmp_path / "c.png", models=["random_forest"], label="a")
    assert (tmp_path / "c.png").read_bytes().startswith(PNG_MAGIC)


def test_csv_round_trip_keeps_undefined(tmp_path):
    write_csv(ROWS, tmp_path / "m.csv")
    assert read_csv(tmp_path / "m.csv") == ROWS


def test_table_text():
    text = render_table(ROWS, "Title")
    assert "undef" in text and "degenerate" in text
    assert "1 label(s) left out of a mean" in text
    assert "0.900" in text
