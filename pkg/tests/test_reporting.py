import pytest

from fogsim.reporting import (APP_ROWS, ENTITY_ROWS, RunCollector, RunResult,
                              SUMMARY_ROWS, fmt, summarize, write_summary)


class StubAccountant:
    """Feeds fixed class sums to the collector."""

    def __init__(self, static=None, dynamic=None, app_static=None, app_dynamic=None):
        self.class_static = static or {}
        self.class_dynamic = dynamic or {}
        self.app_class_static = app_static or {}
        self.app_class_dynamic = app_dynamic or {}

    @property
    def total_entity_dynamic(self):
        return sum(self.class_dynamic.values())

    @property
    def total_app_dynamic(self):
        return sum(self.app_class_dynamic.values())


def result_for(accountant, hours, period_s=3600.0):
    result = RunResult(experiment="x", duration_s=hours * 3600.0,
                       probe_period_s=period_s, seed=0, attribution="full",
                       out_dir=None)
    collector = RunCollector(accountant, result)
    t = 0.0
    while t <= hours * 3600.0:
        collector.collect(t, {}, {})
        t += period_s
    collector.close()
    return result


class TestEnergyIntegration:
    def test_constant_100w_for_24h_is_2400wh(self):
        acc = StubAccountant(static={"fog": 100.0})
        result = result_for(acc, hours=24)
        assert result.static_wh("fog") == 2400.0  # exact: joule accumulator

    def test_all_zero_series_gives_zero_table(self):
        result = result_for(StubAccountant(), hours=1)
        rows = summarize(result)
        assert [r[0] for r in rows] == list(SUMMARY_ROWS)
        assert all(wh == 0.0 and share == 0.0 for _, wh, share in rows)

    def test_left_riemann_ignores_final_sample(self):
        acc = StubAccountant(dynamic={"cloud": 1.0})
        result = RunResult(experiment="x", duration_s=2.0, probe_period_s=1.0,
                           seed=0, attribution="full", out_dir=None)
        collector = RunCollector(acc, result)
        collector.collect(0.0, {}, {})
        collector.collect(1.0, {}, {})
        acc.class_dynamic["cloud"] = 7777.0  # value at the right edge: unused
        collector.collect(2.0, {}, {})
        assert result.dynamic_wh("cloud") == pytest.approx(2.0 / 3600.0)


class TestSummary:
    def test_shares(self):
        acc = StubAccountant(static={"fog": 100.0}, dynamic={"cloud": 300.0},
                             app_dynamic={"cctv": 40.0, "v2i": 10.0})
        result = result_for(acc, hours=10)
        rows = {cls: (wh, share) for cls, wh, share in summarize(result)}
        assert rows["fog_static"][0] == pytest.approx(1000.0)
        assert rows["cloud"][0] == pytest.approx(3000.0)
        assert rows["fog_static"][1] == pytest.approx(25.0)
        assert rows["cloud"][1] == pytest.approx(75.0)
        assert rows["cctv"][1] == pytest.approx(80.0)
        assert rows["v2i"][1] == pytest.approx(20.0)

    def test_summary_file_format(self, tmp_path):
        acc = StubAccountant(static={"fog": 100.0})
        result = result_for(acc, hours=24)
        path = write_summary(tmp_path, summarize(result))
        lines = open(path).read().splitlines()
        assert lines[0] == "class,energy_wh,share_pct"
        assert len(lines) == 1 + len(SUMMARY_ROWS)
        assert lines[2] == "fog_static,2400,100"


class TestCsvFiles:
    def test_row_schema_and_counts(self, tmp_path):
        acc = StubAccountant(static={"fog": 600.0}, dynamic={"cloud": 0.125})
        result = RunResult(experiment="x", duration_s=10.0, probe_period_s=1.0,
                           seed=0, attribution="full", out_dir=str(tmp_path))
        collector = RunCollector(acc, result, str(tmp_path))
        for t in range(11):
            collector.collect(float(t), {}, {})
        collector.close()
        infra_lines = (tmp_path / "infrastructure.csv").read_text().splitlines()
        app_lines = (tmp_path / "applications.csv").read_text().splitlines()
        assert infra_lines[0] == "time_s,entity_id,entity_class,static_w,dynamic_w"
        assert app_lines[0] == "time_s,app_id,app_class,attributed_w"
        assert len(infra_lines) == 1 + 11 * len(ENTITY_ROWS)
        assert len(app_lines) == 1 + 11 * len(APP_ROWS)
        assert infra_lines[1] == "0,cloud,cloud,0,0.125"
        fog_row = [l for l in infra_lines if l.startswith("0,fog")][0]
        assert fog_row == "0,fog,fog,600,0"

    def test_six_significant_digits(self):
        assert fmt(1401.3120001) == "1401.31"
        assert fmt(0.0001234567) == "0.000123457"
        assert fmt(86400.0) == "86400"
        assert fmt(1234567.0) == "1.23457e+06"
