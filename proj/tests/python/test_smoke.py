import srt_datapipe as srt


def test_render_and_parse_round_trip():
    prompt = srt.render_critic_prompt("Write a limerick", "There once was a test")
    assert "### Instruction" in prompt
    assert "Write a limerick" in prompt
    assert "Overall Score: [[1-10]]" in prompt

    raw = srt.format_critic_output("Too terse.", "Add a second stanza.", 7, "A better limerick")
    parsed = srt.parse_critic_output(raw)
    assert parsed["status"] == "ok"
    assert parsed["overall_score"] == 7
    assert parsed["refinement_text"] == "A better limerick"
    assert parsed["weaknesses"] == "Too terse."


def test_parse_score_only():
    assert srt.parse_score_only("Overall Score: [[9]]") == 9
    assert srt.parse_score_only("no rating here") is None


def test_malformed_output_is_classified():
    parsed = srt.parse_critic_output("garbage with no structure")
    assert parsed["status"] == "rule1_violation"
    assert "improved_response" in parsed["violations"]


def test_build_sft_sequence_mask_covers_instruction():
    seq = srt.build_sft_sequence(
        instruction="Summarize the report",
        initial="Short summary.",
        weaknesses="Misses the conclusion.",
        suggestions="Cover the final section.",
        score=6,
        refinement="A fuller summary.",
    )
    assert seq.full_text.startswith("### Instruction\n")
    kinds = [seg.kind for seg in seq.segment_map]
    assert kinds == ["instruction", "response", "feedback", "refinement"]
    (begin, end) = seq.mask_spans[0]
    assert (begin, end) == (seq.segment_map[0].begin, seq.segment_map[0].end)
    assert "Summarize the report" in seq.full_text[begin:end]

    minimal = srt.build_sft_sequence(
        instruction="q", initial="a", weaknesses="w", suggestions="s",
        score=5, refinement="r", variant="refinement_only",
    )
    assert [seg.kind for seg in minimal.segment_map] == ["instruction", "refinement"]


def test_selection_helpers():
    assert srt.select_best_refinement([6, 8, 7]) == 1
    assert srt.select_best_refinement([7, 7]) == 0
    assert srt.rerank_select([4, 7, 7, 5]) == 1
    assert srt.rerank_select([None, 3]) == 1


def test_score_distribution_stats():
    stats = srt.score_distribution_stats([(5, 6), (4, 6)])
    assert stats["mean_improvement"] == 1.5
    assert sum(stats["initial_histogram"]) == 2
    assert sum(stats["refined_histogram"]) == 2
