import io

import pytest

from ccfsim.engine import simulate_sequence
from ccfsim.fileio import (
    TRACE_COLUMNS,
    TRACE_HEADER,
    ConfigError,
    SummaryDocument,
    build_run_config,
    parse_config_text,
    parse_summary,
    read_traces,
    render_summary,
    write_traces,
)
from ccfsim.montecarlo import BatchConfig, CountingMode, estimates_from_counts, run_batch, verification_report
from ccfsim.params import AtwoodParams, atwood_to_alpha
from ccfsim.sampling import derive_stream

REF_CFG = """
# converted EDG parameters
omega = 2.04e-6
mu = 8.71e-5      # per hour
rho = 0.492
lambda_ind = 1.14e-3
mission_time = 24
n_trials = 1000
master_seed = 42
counting_mode = sequence
"""


class TestConfig:
    def test_atwood_block(self):
        cfg = build_run_config(parse_config_text(REF_CFG))
        assert cfg.atwood == AtwoodParams(2.04e-6, 8.71e-5, 0.492, 1.14e-3)
        assert cfg.alpha is None
        assert (cfg.mission_time, cfg.n_trials, cfg.master_seed, cfg.m) == (24.0, 1000, 42, 4)
        assert cfg.counting_mode is CountingMode.SEQUENCE

    def test_alpha_block_ccf_only(self):
        cfg = build_run_config(parse_config_text("alpha = 7.06e-3, 4.55e-3, 1.54e-3\nlambda_tot = 1.18e-3"))
        assert cfg.alpha.m == 4
        assert cfg.alpha.alpha[1:] == (7.06e-3, 4.55e-3, 1.54e-3)

    def test_alpha_block_full(self):
        cfg = build_run_config(parse_config_text(
            "alpha = 0.987, 7.06e-3, 4.55e-3, 1.54e-3\nlambda_tot = 1.18e-3\nn_components = 4"))
        assert cfg.alpha.alpha == (0.987, 7.06e-3, 4.55e-3, 1.54e-3)

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="^lambda: unknown key"):
            parse_config_text("lambda = 1e-3")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("mu = 1\nmu = 2")

    def test_both_blocks_rejected(self):
        with pytest.raises(ConfigError, match="either"):
            build_run_config(parse_config_text(REF_CFG + "lambda_tot = 1e-3\n"))

    def test_neither_block_rejected(self):
        with pytest.raises(ConfigError, match="no model parameters"):
            build_run_config(parse_config_text("mission_time = 24"))

    def test_partial_atwood_block(self):
        with pytest.raises(ConfigError, match="^rho: missing"):
            build_run_config(parse_config_text("omega = 0\nmu = 0\nlambda_ind = 0"))

    @pytest.mark.parametrize("text,key", [
        ("n_trials = 1.5", "n_trials"),
        ("counting_mode = both", "counting_mode"),
        ("mission_time = -1", "mission_time"),
        ("mission_time = abc", "mission_time"),
    ])
    def test_bad_values_named(self, text, key):
        with pytest.raises(ConfigError, match=f"^{key}"):
            build_run_config(parse_config_text(REF_CFG.replace("mission_time = 24", "") + text))

    def test_syntax_error(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config_text("omega 1e-6")


class TestTraces:
    def test_round_trip(self, ref_atwood, mission):
        hot = AtwoodParams(2e-2, 4e-2, 0.4, 1e-2)
        traces = [simulate_sequence(hot, mission, derive_stream(3, i)) for i in range(200)]
        buf = io.StringIO()
        n = write_traces(traces, buf)
        text = buf.getvalue()
        assert text.splitlines()[0] == TRACE_HEADER
        assert text.splitlines()[1] == ",".join(TRACE_COLUMNS)
        records = read_traces(io.StringIO(text))
        assert len(records) == n == sum(len(t.events) for t in traces)
        flat = [(t.trial_id, ev) for t in traces for ev in t.events]
        for rec, (tid, ev) in zip(records, flat):
            assert rec.trial_id == tid
            assert rec.kind is ev.kind and rec.component == ev.component and rec.cause is ev.cause
            assert rec.time == pytest.approx(ev.time, rel=1e-9)

    def test_shock_rows_have_empty_component(self, mission):
        p = AtwoodParams(0.5, 0.0, 0.0, 1e-3)
        buf = io.StringIO()
        write_traces([simulate_sequence(p, mission, derive_stream(1, 0))], buf)
        shock_line = buf.getvalue().splitlines()[2]
        assert shock_line.split(",")[2:] == ["lethal_shock", "", ""]

    def test_rejects_foreign_file(self):
        with pytest.raises(ValueError):
            read_traces(io.StringIO("trial_id,time\n"))


def _summary(p, mission, n=20_000, seed=5):
    counts = run_batch(p, mission, BatchConfig(n, master_seed=seed))
    report = verification_report(estimates_from_counts(counts), p, n_trials=n, mission_time=mission.mission_time)
    meta = {"master_seed": seed, "n_trials": n, "mission_time": mission.mission_time, "n_components": 4,
            "counting_mode": CountingMode.SHOCK, "lethal_base_rate": None, "wall_clock_s": 0.123}
    return SummaryDocument(meta, p, atwood_to_alpha(p, 4), counts, report)


class TestSummary:
    def test_lossless_round_trip(self, ref_atwood, mission):
        doc = _summary(AtwoodParams(2e-3, 1e-2, 0.4, 5e-3), mission)
        text = render_summary(doc)
        back = parse_summary(text)
        assert back == doc
        assert back.report.rows == doc.report.rows
        assert render_summary(back) == text

    def test_wall_clock_ignored_in_equality(self, mission):
        doc = _summary(AtwoodParams(2e-3, 1e-2, 0.4, 5e-3), mission, n=1000)
        other = parse_summary(render_summary(doc))
        other.meta["wall_clock_s"] = 99.0
        assert other == doc

    def test_scientific_notation(self, mission):
        text = render_summary(_summary(AtwoodParams(2e-3, 1e-2, 0.4, 5e-3), mission, n=1000))
        assert "input.omega = 2.0000000000000000e-03" in text
        assert "," not in text.split("input.omega = ")[1].splitlines()[0]
