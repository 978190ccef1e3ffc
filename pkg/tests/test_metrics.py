from __future__ import annotations

from types import SimpleNamespace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from syncstego import (
    ParameterError,
    SyntheticModelSpec,
    Token,
    TruncationConfig,
    Vocabulary,
    ambiguity_frequency,
    avg_perplexity,
    entropy_bits,
    generate_vocabulary,
    kl_divergence,
    make_synthetic,
    step_klds,
    total_error,
    utilization,
)
from syncstego.metrics import EvalReport, format_report_table


def rec(bits=0, entropy=0.0, kld=0.0):
    return SimpleNamespace(bits_embedded=bits, entropy_bits=entropy, kld_bits=kld)


class TestKld:
    def test_identical_is_exactly_zero(self):
        assert kl_divergence([0.4, 0.6], [0.4, 0.6]) == 0.0

    def test_hand_value(self):
        # 0.5*log2(2) + 0.5*log2(2/3)
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(
            0.2075187496394219, abs=1e-12
        )

    def test_degenerate(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0, abs=1e-15)

    def test_support_violation(self):
        with pytest.raises(ParameterError):
            kl_divergence([0.5, 0.5], [1.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            kl_divergence([1.0], [0.5, 0.5])

    @given(
        ws=st.lists(st.integers(1, 9), min_size=2, max_size=6),
        vs=st.lists(st.integers(1, 9), min_size=2, max_size=6),
    )
    def test_gibbs_nonnegative(self, ws, vs):
        n = min(len(ws), len(vs))
        p = [w / sum(ws[:n]) for w in ws[:n]]
        q = [v / sum(vs[:n]) for v in vs[:n]]
        assert kl_divergence(p, q) >= -1e-12


class TestStepKlds:
    def test_mean_and_max(self):
        ave, mx = step_klds([rec(kld=0.0), rec(kld=0.3), rec(kld=0.6)])
        assert ave == pytest.approx(0.3)
        assert mx == 0.6

    def test_single_record(self):
        ave, mx = step_klds([rec(kld=0.25)])
        assert ave == mx == 0.25

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            step_klds([])


class TestPerplexity:
    def test_uniform_quarter(self):
        assert avg_perplexity([[0.25] * 10]) == 4.0

    def test_deterministic_text(self):
        assert avg_perplexity([[1.0, 1.0, 1.0]]) == 1.0

    def test_mean_across_texts(self):
        assert avg_perplexity([[0.5, 0.5], [0.25, 0.25]]) == 3.0

    def test_zero_probability_rejected(self):
        with pytest.raises(ParameterError):
            avg_perplexity([[0.5, 0.0]])

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            avg_perplexity([])


class TestUtilization:
    def test_full_use(self):
        assert entropy_bits([0.25] * 4) == 2.0
        assert utilization([rec(bits=2, entropy=2.0)]) == 1.0

    def test_zero_capacity_run(self):
        assert utilization([rec(bits=0, entropy=1.5), rec(bits=0, entropy=0.5)]) == 0.0

    def test_zero_entropy_flagged_as_zero(self):
        assert utilization([rec(bits=0, entropy=0.0)]) == 0.0

    def test_mixed_run_in_unit_interval(self):
        value = utilization([rec(bits=1, entropy=2.0), rec(bits=2, entropy=2.0)])
        assert 0.0 < value < 1.0


class TestTotalError:
    def test_identical(self):
        assert total_error("10110", "10110") == 0.0

    def test_received_empty(self):
        assert total_error("1" * 64, "") == 100.0

    def test_one_wrong_in_hundred(self):
        sent = "0" * 100
        received = "0" * 50 + "1" + "0" * 49
        assert total_error(sent, received) == 1.0

    def test_missing_tail_counts(self):
        assert total_error("1010", "10") == 50.0

    def test_extra_received_ignored(self):
        assert total_error("10", "1011") == 0.0


class TestAmbiguityFrequency:
    def test_prefix_free_is_zero(self):
        vocab = generate_vocabulary(32, 0.0, seed=4)
        prov = make_synthetic(SyntheticModelSpec(vocab, seed=5, order=1, concentration=2.0))
        assert ambiguity_frequency(prov, TruncationConfig(top_k=8), 5, 20, seed=0) == 0.0

    def test_fully_paired_vocab_is_one(self):
        tokens = []
        for i, ch in enumerate("abcdefgh"):
            tokens.append(Token(2 * i, ch.encode()))
            tokens.append(Token(2 * i + 1, (ch + "x").encode()))
        vocab = Vocabulary(tokens)
        prov = make_synthetic(SyntheticModelSpec(vocab, seed=5, order=1, concentration=2.0))
        assert ambiguity_frequency(prov, TruncationConfig(top_k=len(tokens)), 5, 20, seed=0) == 1.0

    def test_parameter_validation(self):
        vocab = generate_vocabulary(8, 0.0, seed=4)
        prov = make_synthetic(SyntheticModelSpec(vocab, seed=5))
        with pytest.raises(ParameterError):
            ambiguity_frequency(prov, TruncationConfig(top_k=4), 0, 10, seed=0)


class TestReportTable:
    def test_table_layout(self):
        report = EvalReport(
            mode="syncpool", k=16, n_sessions=2, ave_ppl=3.19, ave_kld=0.0, max_kld=0.0,
            capacity_bits_per_token=1.0, utilization=0.66, utilization_zero_entropy=False,
            total_error_pct=0.0, ambiguity_frequency=0.1, total_time_s=0.039,
            ave_time_per_bit_s=3.85e-6,
        )
        table = format_report_table([report])
        lines = table.splitlines()
        assert "Ave PPL" in lines[0] and "Total Error" in lines[0]
        assert "syncpool" in lines[2]
        assert len(lines) == 3

    def test_round_trip_dict(self):
        report = EvalReport(
            mode="none", k=None, n_sessions=1, ave_ppl=1.0, ave_kld=0.0, max_kld=0.0,
            capacity_bits_per_token=0.5, utilization=0.2, utilization_zero_entropy=False,
            total_error_pct=1.5, ambiguity_frequency=0.0, total_time_s=0.0,
            ave_time_per_bit_s=0.0,
        )
        doc = report.to_dict()
        assert doc["total_error_pct"] == 1.5 and doc["k"] is None
