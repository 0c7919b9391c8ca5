import dataclasses
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ontorag.clients import KeywordJudgeClient, ScriptedChatClient
from ontorag.errors import (
    OntologySchemaError,
    UnparseableReplyError,
    ValidationUnavailableError,
)
from ontorag.ontology import (
    OntologyTriple,
    ValidationResult,
    build_validation_prompt,
    gate,
    judge_alignment,
    load_ontology,
    parse_judge_score,
    render_ontology,
    schema_to_dict,
    validate_schema,
)
from tests.conftest import read_golden


class TestLoadOntology:
    def test_bundled_counts(self, bundled_schema):
        assert len(bundled_schema.categories) == 3
        assert len(bundled_schema.entity_types) == 12
        assert len(bundled_schema.relations) == 9
        assert len(bundled_schema.edges) == 68
        assert len(set(bundled_schema.edges)) == 68

    def test_example_triple_present(self, bundled_schema):
        assert OntologyTriple("attacker", "can_exploit", "feature") in bundled_schema.edges
        assert OntologyTriple("security_team", "can_analyze", "feature") in bundled_schema.edges

    def test_unknown_entity_type_named(self, tmp_path, bundled_schema):
        raw = schema_to_dict(bundled_schema)
        raw["edges"][0] = ["wizard", "can_exploit", "feature"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(raw))
        with pytest.raises(OntologySchemaError, match="wizard"):
            load_ontology(path)

    def test_duplicate_edge_rejected(self, tmp_path, bundled_schema):
        raw = schema_to_dict(bundled_schema)
        raw["edges"].append(raw["edges"][0])
        path = tmp_path / "dup.json"
        path.write_text(json.dumps(raw))
        with pytest.raises(OntologySchemaError, match="duplicate edge"):
            load_ontology(path)

    def test_unknown_relation_named(self, bundled_schema):
        broken = dataclasses.replace(
            bundled_schema,
            edges=bundled_schema.edges + (OntologyTriple("attacker", "can_fly", "feature"),),
        )
        with pytest.raises(OntologySchemaError, match="can_fly"):
            validate_schema(broken)

    def test_type_without_category_rejected(self, bundled_schema):
        broken = dataclasses.replace(
            bundled_schema, entity_types=bundled_schema.entity_types + ("orphan",)
        )
        with pytest.raises(OntologySchemaError, match="orphan"):
            validate_schema(broken)

    def test_roundtrip_lossless(self, tmp_path, bundled_schema):
        path = tmp_path / "rt.json"
        path.write_text(json.dumps(schema_to_dict(bundled_schema)))
        assert load_ontology(path) == bundled_schema

    def test_missing_file(self, tmp_path):
        with pytest.raises(OntologySchemaError):
            load_ontology(tmp_path / "nope.json")


class TestRenderOntology:
    def test_edge_lines_in_file_order(self, bundled_schema):
        rendered = render_ontology(bundled_schema)
        edge_lines = [line for line in rendered.splitlines() if "-->" in line]
        assert len(edge_lines) == 68
        first = bundled_schema.edges[0]
        assert edge_lines[0] == f"{first.subject_type} --{first.relation}--> {first.object_type}"

    def test_deterministic(self, bundled_schema):
        assert render_ontology(bundled_schema) == render_ontology(bundled_schema)

    def test_groups_types_by_category(self, bundled_schema):
        rendered = render_ontology(bundled_schema)
        assert "CATEGORIES: concepts, applications, roles" in rendered
        assert "roles: user, attacker, security_team" in rendered


class TestBuildValidationPrompt:
    Q = "What criteria are used to determine the severity level of a vulnerability?"
    A = "Severity is determined by potential impact, exploitability, and the scope of affected systems."
    ONTOLOGY_TEXT = (
        "CATEGORIES: concepts, roles\n\nENTITY TYPES:\nconcepts: vulnerability\n"
        "roles: attacker\n\nRULES:\nattacker --can_exploit--> vulnerability"
    )

    def test_matches_golden_file(self):
        assert build_validation_prompt(self.Q, self.A, self.ONTOLOGY_TEXT) == read_golden(
            "validation_prompt.txt"
        )

    def test_section_order(self):
        prompt = build_validation_prompt("q", "a", "o")
        positions = [prompt.index(h) for h in ("QUESTION:", "ANSWER:", "ONTOLOGY:", "INSTRUCTIONS:")]
        assert positions == sorted(positions)

    def test_byte_identical_across_calls(self):
        assert build_validation_prompt(self.Q, self.A, self.ONTOLOGY_TEXT) == (
            build_validation_prompt(self.Q, self.A, self.ONTOLOGY_TEXT)
        )

    def test_empty_answer_rejected(self):
        with pytest.raises(ValueError):
            build_validation_prompt(self.Q, "  ", self.ONTOLOGY_TEXT)


class TestParseJudgeScore:
    def test_leading_score(self):
        assert parse_judge_score("0.9\nThe answer matches the ontology domain.") == 0.9

    def test_labelled_score(self):
        assert parse_judge_score("Score: 0.10 — off topic") == 0.10

    def test_unparseable(self):
        with pytest.raises(UnparseableReplyError):
            parse_judge_score("definitely aligned")

    def test_percentage_normalized(self):
        assert parse_judge_score("I would say 90% aligned") == pytest.approx(0.90)

    def test_integer_bounds_accepted(self):
        assert parse_judge_score("1") == 1.0
        assert parse_judge_score("0") == 0.0

    def test_numbers_out_of_range_skipped(self):
        assert parse_judge_score("on a 0-10 scale I rate 7; normalized that is 0.7") == 0.0
        # scanning finds "0" (from "0-10") first; documented left-to-right rule


class TestJudgeAlignment:
    def _stub(self, replies):
        return ScriptedChatClient([f"{r}\nbecause" for r in replies])

    def test_constant_scores_zero_uncertainty(self, bundled_schema):
        result = judge_alignment(self._stub([0.8] * 5), "q", "a", bundled_schema, m=5)
        assert result.judge_score == pytest.approx(0.8)
        assert result.uncertainty == 0.0
        assert result.passed

    def test_alternating_extremes_max_uncertainty(self, bundled_schema):
        result = judge_alignment(self._stub([0, 1, 0, 1]), "q", "a", bundled_schema, m=4)
        assert result.judge_score == pytest.approx(0.5)
        assert result.uncertainty == 1.0

    def test_hand_computed_dispersion(self, bundled_schema):
        result = judge_alignment(self._stub([0.9, 0.8, 1.0]), "q", "a", bundled_schema, m=3)
        assert result.judge_score == pytest.approx(0.9)
        assert result.uncertainty == pytest.approx(2 * math.sqrt(0.02 / 3), abs=1e-3)
        assert result.uncertainty == pytest.approx(0.1633, abs=1e-3)

    def test_unparseable_retries_once_then_scores_zero(self, bundled_schema):
        client = ScriptedChatClient(["gibberish", "more gibberish"])
        result = judge_alignment(client, "q", "a", bundled_schema, m=1)
        assert result.samples == (0.0,)
        assert len(client.calls) == 2
        assert "unparseable" in result.rationale_texts[0]

    def test_unparseable_then_parseable_retry(self, bundled_schema):
        client = ScriptedChatClient(["gibberish", "0.7 fine"])
        result = judge_alignment(client, "q", "a", bundled_schema, m=1)
        assert result.samples == (0.7,)

    def test_client_failure_fails_closed(self, bundled_schema):
        class DeadClient:
            model_id = "dead"

            def complete(self, messages, temperature=None):
                raise ConnectionError("boom")

        with pytest.raises(ValidationUnavailableError):
            judge_alignment(DeadClient(), "q", "a", bundled_schema, m=3)

    def test_m_must_be_positive(self, bundled_schema):
        with pytest.raises(ValueError):
            judge_alignment(self._stub([1]), "q", "a", bundled_schema, m=0)

    def test_keyword_judge_scores_by_domain(self, bundled_schema):
        judge = KeywordJudgeClient()
        in_domain = judge_alignment(
            judge,
            "What criteria are used to determine the severity level of a vulnerability?",
            "Impact and exploitability.",
            bundled_schema,
            m=3,
        )
        off_domain = judge_alignment(
            judge, "How to make money in the stock market?", "Buy low.", bundled_schema, m=3
        )
        assert in_domain.judge_score == pytest.approx(0.9)
        assert off_domain.judge_score == pytest.approx(0.1)
        assert in_domain.uncertainty == 0.0 and off_domain.uncertainty == 0.0


class TestGate:
    def _result(self, score, sigma=0.5):
        return ValidationResult(
            judge_score=score,
            uncertainty=0.0,
            samples=(score,),
            threshold=sigma,
            passed=score >= sigma,
            rationale_texts=("why",),
        )

    def test_high_score_accepted(self):
        assert gate(self._result(0.90)).accepted

    def test_low_score_blocked_with_reason(self):
        decision = gate(self._result(0.10))
        assert not decision.accepted
        assert "0.10" in decision.reason and "0.50" in decision.reason

    def test_boundary_accepts(self):
        assert gate(self._result(0.5, sigma=0.5)).accepted

    @given(
        score=st.floats(0, 1),
        sigma_lo=st.floats(0, 1),
        sigma_hi=st.floats(0, 1),
    )
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_score_and_sigma(self, score, sigma_lo, sigma_hi):
        lo, hi = sorted((sigma_lo, sigma_hi))
        at_lo = gate(self._result(score, sigma=lo)).accepted
        at_hi = gate(self._result(score, sigma=hi)).accepted
        if at_hi:  # raising sigma never converts Block into Accept
            assert at_lo


class TestParseJudgeScoreEdgeCases:
    def test_negative_number_fragments_not_scores(self):
        with pytest.raises(UnparseableReplyError):
            parse_judge_score("delta was -0.5 overall")

    def test_mid_number_fragments_not_scores(self):
        with pytest.raises(UnparseableReplyError):
            parse_judge_score("protocol v1.2.3 is mentioned")

    def test_score_after_rejected_prefix_number(self):
        assert parse_judge_score("confidence 87 of 100; score 0.87") == pytest.approx(0.87)
