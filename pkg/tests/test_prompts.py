from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from schemakit.gateway import CompletionRequest, CompletionResponse
from schemakit.prompts import (
    MissingSlot,
    TemplateLibrary,
    UnparseableAnswer,
    assign_name,
    parse_event_list,
    parse_yes_no,
    render,
    TEMPLATE_IDS,
)


@pytest.fixture(scope="module")
def templates():
    return TemplateLibrary()


class TestRender:
    def test_skeleton_prompt_wording(self, templates):
        out = templates.render(
            "skeleton",
            {
                "evt.name": "outbreak",
                "evt.description": "The disease spreads",
                "scenario": "disease outbreak",
            },
        )
        assert "List the major events that happen in the outbreak of a disease outbreak:" in out
        assert 'outbreak is defined as "The disease spreads"' in out

    def test_relation_prompt_wording(self, templates):
        out = templates.render(
            "rel-start", {"e1.description": "A", "e2.description": "B"}
        )
        assert out.strip() == 'Does "A" start before "B"? Answer yes, no or unknown.'

    def test_missing_slot_named(self, templates):
        with pytest.raises(MissingSlot) as err:
            templates.render("skeleton", {"evt.name": "x", "evt.description": "y"})
        assert err.value.slot == "scenario"

    def test_naming_template_carries_in_context_pairs(self, templates):
        text = templates.text("naming")
        assert "Name: Sanitize" in text
        assert "Name: Declare Emergency" in text
        assert text.count("Description:") == 11  # 10 examples + query slot

    def test_specificity_template_carries_ten_examples(self, templates):
        text = templates.text("specificity")
        assert "Does the text contain any specific names, numbers, locations or dates?" in text
        assert text.count("Answer: Yes") == 5
        assert text.count("Answer: No") == 5

    def test_all_templates_render_without_leftover_slots(self, templates):
        slots = {
            "evt.name": "n", "evt.description": "d", "scenario": "s",
            "chapter_evt.name": "cn", "chapter_evt.description": "cd",
            "e1.description": "a", "e2.description": "b",
        }
        for tid in TEMPLATE_IDS:
            out = templates.render(tid, slots)
            assert "{" not in out.replace("{}", ""), tid

    def test_override_directory(self, tmp_path):
        (tmp_path / "rel-start.txt").write_text("custom {e1.description}\n")
        lib = TemplateLibrary(tmp_path)
        assert lib.render("rel-start", {"e1.description": "x"}) == "custom x\n"
        # untouched templates still come from the bundled assets
        assert "end before" in lib.text("rel-end")


class TestParseEventList:
    def test_numbered_markers_stripped(self):
        out = parse_event_list("1. Cases rise.\n2. Hospitals fill.")
        assert list(out.items) == ["Cases rise.", "Hospitals fill."]

    def test_dash_markers(self):
        assert len(parse_event_list("- a\n- b\n- c").items) == 3

    def test_empty_input(self):
        assert parse_event_list("").items == ()

    def test_bullet_and_paren_markers(self):
        out = parse_event_list("• First thing happens.\n2) Second thing happens.")
        assert list(out.items) == ["First thing happens.", "Second thing happens."]

    def test_multi_sentence_line_split(self):
        out = parse_event_list("The cases rise quickly. The hospitals fill up fast.")
        assert len(out.items) == 2

    def test_short_fragments_not_split(self):
        out = parse_event_list("Cases rise. Hospitals fill.")
        assert len(out.items) == 1  # two-word fragments stay joined

    @given(st.lists(st.from_regex(r"[A-Za-z][a-z]+( [a-z]+){2,5}\.", fullmatch=True), max_size=6))
    def test_idempotent_on_own_output(self, lines):
        first = parse_event_list("\n".join(lines))
        second = parse_event_list("\n".join(first.items))
        assert first.items == second.items


def logprob_response(candidates: dict[str, float]) -> CompletionResponse:
    return CompletionResponse(text="", token_logprobs=(candidates,))


class TestParseYesNo:
    def test_worked_three_way_normalization(self):
        resp = logprob_response(
            {" Yes": math.log(0.7), " No": math.log(0.2), " unknown": math.log(0.05)}
        )
        dist = parse_yes_no(resp)
        assert dist.yes == pytest.approx(0.7368, abs=1e-3)
        assert dist.no == pytest.approx(0.2105, abs=1e-3)
        assert dist.unknown == pytest.approx(0.0526, abs=1e-3)

    def test_single_class(self):
        dist = parse_yes_no(logprob_response({" yes": 0.0}))
        assert (dist.yes, dist.no, dist.unknown) == (1.0, 0.0, 0.0)

    def test_all_punctuation_everywhere(self):
        resp = CompletionResponse(
            text="", token_logprobs=({".": -0.1, ",": -2.0}, {"!": -0.5})
        )
        with pytest.raises(UnparseableAnswer):
            parse_yes_no(resp)

    def test_earliest_position_wins(self):
        resp = CompletionResponse(
            text="",
            token_logprobs=(
                {".": -1.0},
                {" No": math.log(0.9), " yes": math.log(0.1)},
                {" Yes": 0.0},
            ),
        )
        dist = parse_yes_no(resp)
        assert dist.no > dist.yes

    def test_case_variants_summed(self):
        resp = logprob_response(
            {"Yes": math.log(0.3), " yes": math.log(0.3), " NO": math.log(0.4)}
        )
        dist = parse_yes_no(resp)
        assert dist.yes == pytest.approx(0.6)
        assert dist.no == pytest.approx(0.4)

    @given(
        st.lists(
            st.sampled_from([" yes", " No", "UNKNOWN", "Yes", " unknown", " no"]),
            min_size=1,
            max_size=5,
            unique=True,
        ),
        st.lists(st.floats(min_value=-8, max_value=0), min_size=5, max_size=5),
    )
    def test_masses_sum_to_one(self, tokens, logprobs):
        resp = logprob_response(dict(zip(tokens, logprobs)))
        dist = parse_yes_no(resp)
        assert dist.yes + dist.no + dist.unknown == pytest.approx(1.0, abs=1e-9)
        assert min(dist.yes, dist.no, dist.unknown) >= 0


class CannedProvider:
    def __init__(self, text):
        self.text = text
        self.prompts = []

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        self.prompts.append(req.prompt)
        return CompletionResponse(text=self.text)


class TestAssignName:
    def test_first_line_trimmed(self, templates):
        provider = CannedProvider("  Assess Damage \nextra line")
        assert assign_name(provider, "Assessing the damage.", templates) == "Assess Damage"

    def test_prompt_embeds_description_and_examples(self, templates):
        provider = CannedProvider("Sanitize")
        assign_name(provider, "Disinfect the area to prevent infection.", templates)
        prompt = provider.prompts[0]
        assert "Disinfect the area to prevent infection." in prompt
        assert "Give names to the described event." in prompt

    def test_long_names_truncated_to_eight_words(self, templates):
        provider = CannedProvider("one two three four five six seven eight nine ten")
        name = assign_name(provider, "Something happens.", templates)
        assert name == "one two three four five six seven eight"


def test_render_is_byte_stable(templates):
    slots = {"e1.description": "a", "e2.description": "b"}
    assert templates.render("rel-duration", slots) == templates.render("rel-duration", slots)
    assert (
        templates.render("rel-duration", slots)
        == "Is the duration of a longer than b? Answer yes or no.\n"
    )
