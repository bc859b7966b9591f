#include <doctest.h>

#include "poseval/scoring.hpp"
#include "support/fixture_store.hpp"

using namespace poseval;
using namespace poseval::scoring;
using corpus::GoldAnswer;
using util::Decimal;

namespace {

corpus::TaskInstance math_target(long gold = 7) {
  corpus::TaskInstance t;
  t.id = "t-math";
  t.kind = corpus::TaskKind::math_word;
  t.question = "How many?";
  t.gold = GoldAnswer::number(Decimal::from_int(gold));
  return t;
}

corpus::TaskInstance choice_target(char gold = 'C') {
  corpus::TaskInstance t;
  t.id = "t-choice";
  t.kind = corpus::TaskKind::multiple_choice;
  t.question = "Which one?";
  t.choices = {{"A", "the mitochondria make energy"},
               {"B", "ribosomes build proteins"},
               {"C", "the nucleus stores genetic material"},
               {"D", "chloroplasts capture light"}};
  t.gold = GoldAnswer::letter(gold);
  return t;
}

runner::RunRecord record_for(const corpus::TaskInstance& target,
                             const std::string& text,
                             modelgate::ResponseStatus status =
                                 modelgate::ResponseStatus::ok) {
  runner::RunRecord r;
  r.key.model_id = "m";
  r.key.task_id = "t";
  r.key.filler_kind = "with_solutions";
  r.key.tier_label = "8K";
  r.key.layout = "middle";
  r.target_id = target.id;
  r.response.text = text;
  r.response.status = status;
  return r;
}

void add_manifest_gold(runner::RunRecord& r, const std::string& id, long gold) {
  promptbuild::ManifestEntry e;
  e.filler_id = id;
  e.gold = GoldAnswer::number(Decimal::from_int(gold));
  e.est_tokens = 10;
  e.start = r.filler_manifest.size() * 40;
  e.end = e.start + 40;
  r.filler_manifest.push_back(std::move(e));
}

}  // namespace

TEST_CASE("math answer extraction") {
  CHECK(extract_math_answer("so the total is 18. #### 18")->str() == "18");
  CHECK(extract_math_answer("The answer is $1,250.")->str() == "1250");
  CHECK_FALSE(extract_math_answer("I cannot determine the answer.").has_value());
  SUBCASE("the number after the last marker wins") {
    CHECK(extract_math_answer("first guess #### 41\nfinal answer: 42")->str() == "42");
  }
  SUBCASE("boxed marker") {
    CHECK(extract_math_answer("Thus \\boxed{256} holds.")->str() == "256");
  }
  SUBCASE("last standalone number fallback") {
    CHECK(extract_math_answer("Has 3 cats and 4 dogs")->str() == "4");
  }
  SUBCASE("numbers glued to words do not count") {
    CHECK(extract_math_answer("model v2.5 runs 64K contexts, count 9")->str() == "9");
    CHECK_FALSE(extract_math_answer("see v2.5 and 64K only").has_value());
  }
  SUBCASE("negatives and decimals survive normalization") {
    CHECK(extract_math_answer("#### -3.50")->str() == "-3.5");
    CHECK(extract_math_answer("answer is 7.0")->str() == "7");
  }
}

TEST_CASE("choice answer extraction") {
  const auto target = choice_target();
  CHECK(*extract_choice_answer("The correct answer is (C).", target.choices) == 'C');
  CHECK(*extract_choice_answer("B because mitochondria... final answer: B",
                               target.choices) == 'B');
  SUBCASE("two distinct bare letters with no marker are ambiguous") {
    CHECK_FALSE(extract_choice_answer("Either A or B could work.", target.choices)
                    .has_value());
  }
  SUBCASE("one consistent bare letter is accepted") {
    CHECK(*extract_choice_answer("D. Definitely D", target.choices) == 'D');
  }
  SUBCASE("unique choice-text mention resolves ambiguity") {
    CHECK(*extract_choice_answer(
              "Both A and B are tempting but ribosomes build proteins.",
              target.choices) == 'B');
  }
  SUBCASE("lowercase and bracketed forms") {
    CHECK(*extract_choice_answer("the answer is c", target.choices) == 'C');
    CHECK(*extract_choice_answer("Answer: [B]", target.choices) == 'B');
  }
  SUBCASE("letters outside the label set never match") {
    corpus::TaskInstance two = choice_target('A');
    two.choices.resize(2);  // A, B only
    CHECK_FALSE(extract_choice_answer("Clearly X. Or maybe Z.", two.choices)
                    .has_value());
  }
}

TEST_CASE("grading correctness") {
  const auto target = math_target(7);
  SUBCASE("marker hit grades correct") {
    const auto g = grade(record_for(target, "#### 7"), target);
    CHECK(g.correct);
    CHECK(g.extracted->display() == "7");
    CHECK_FALSE(g.error_flag.has_value());
  }
  SUBCASE("numeric equality covers 7.0") {
    CHECK(grade(record_for(target, "#### 7.0"), target).correct);
  }
  SUBCASE("wrong number grades incorrect") {
    CHECK_FALSE(grade(record_for(target, "#### 8"), target).correct);
  }
  SUBCASE("api_error grades incorrect with the flag set") {
    const auto g = grade(
        record_for(target, "", modelgate::ResponseStatus::api_error), target);
    CHECK_FALSE(g.correct);
    CHECK(g.error_flag == std::string("api_error"));
    CHECK_FALSE(g.extracted.has_value());
  }
  SUBCASE("empty and timeout statuses are flagged too") {
    CHECK(grade(record_for(target, "", modelgate::ResponseStatus::empty), target)
              .error_flag == std::string("empty"));
    CHECK(grade(record_for(target, "", modelgate::ResponseStatus::timeout), target)
              .error_flag == std::string("timeout"));
  }
  SUBCASE("truncated responses still grade on their text") {
    const auto g = grade(
        record_for(target, "partial... #### 7", modelgate::ResponseStatus::truncated),
        target);
    CHECK(g.correct);
    CHECK_FALSE(g.error_flag.has_value());
  }
  SUBCASE("id mismatch is an error") {
    auto r = record_for(target, "#### 7");
    r.target_id = "someone-else";
    CHECK_THROWS_AS(grade(r, target), Error);
  }
}

TEST_CASE("filler matching flags") {
  const auto target = math_target(7);
  SUBCASE("wrong answer matching any manifest gold") {
    auto r = record_for(target, "#### 31");
    add_manifest_gold(r, "f1", 4);
    add_manifest_gold(r, "f2", 31);
    add_manifest_gold(r, "f3", 9);
    const auto g = filler_match(grade(r, target), r);
    CHECK(g.match_applicable);
    CHECK(g.match_any_filler);
    CHECK_FALSE(g.match_last_filler);
  }
  SUBCASE("matching the final filler item sets both flags") {
    auto r = record_for(target, "#### 9");
    add_manifest_gold(r, "f1", 4);
    add_manifest_gold(r, "f2", 31);
    add_manifest_gold(r, "f3", 9);
    const auto g = filler_match(grade(r, target), r);
    CHECK(g.match_any_filler);
    CHECK(g.match_last_filler);
  }
  SUBCASE("correct records keep both flags false") {
    auto r = record_for(target, "#### 7");
    add_manifest_gold(r, "f1", 7);  // even when the golds collide
    const auto g = filler_match(grade(r, target), r);
    CHECK(g.correct);
    CHECK_FALSE(g.match_any_filler);
    CHECK_FALSE(g.match_last_filler);
  }
  SUBCASE("gold-free manifest is not applicable") {
    auto r = record_for(target, "#### 31");
    promptbuild::ManifestEntry e;
    e.filler_id = "neutral-1";
    e.est_tokens = 10;
    e.end = 40;
    r.filler_manifest.push_back(e);
    const auto g = filler_match(grade(r, target), r);
    CHECK_FALSE(g.match_applicable);
    CHECK_FALSE(g.match_any_filler);
  }
  SUBCASE("normalized equality: 31.0 matches 31") {
    auto r = record_for(target, "#### 31.0");
    add_manifest_gold(r, "f1", 31);
    const auto g = filler_match(grade(r, target), r);
    CHECK(g.match_any_filler);
  }
}

TEST_CASE("match_last implies match_any over random manifests") {
  util::SplitMix64 rng(5);
  const auto target = math_target(777777);
  for (int trial = 0; trial < 500; ++trial) {
    auto r = record_for(target,
                        "#### " + std::to_string(1 + rng.bounded(10)));
    const int manifest_size = 1 + static_cast<int>(rng.bounded(5));
    for (int i = 0; i < manifest_size; ++i)
      add_manifest_gold(r, "f" + std::to_string(i),
                        static_cast<long>(1 + rng.bounded(10)));
    const auto g = filler_match(grade(r, target), r);
    if (g.match_last_filler) CHECK(g.match_any_filler);
  }
}

TEST_CASE("restatement detection") {
  corpus::TaskInstance t;
  t.kind = corpus::TaskKind::math_word;
  t.question =
      "The farmer counted forty chickens and seventeen ducks while the "
      "children watched quietly from the riverbank";
  SUBCASE("verbatim restatement fires") {
    CHECK(detect_restatement("Let me restate: " + t.question + " ... solving now.",
                             t));
  }
  SUBCASE("zero-overlap trace stays false") {
    CHECK_FALSE(detect_restatement(
        "Compute the integral of a polynomial and simplify the result.", t));
  }
  SUBCASE("half the content words stay below the default threshold") {
    // content words: farmer counted forty chickens seventeen ducks children
    // watched quietly riverbank (10); the trace holds exactly 5 of them
    CHECK_FALSE(detect_restatement(
        "The farmer counted forty chickens and seventeen more animals.", t));
  }
  SUBCASE("window bounds the match span") {
    // all content words present but stretched far beyond 1.5x the question
    std::string trace;
    const std::vector<std::string> words = {"farmer",    "counted", "forty",
                                            "chickens",  "seventeen", "ducks",
                                            "children",  "watched", "quietly",
                                            "riverbank"};
    for (const auto& w : words) {
      trace += w + " ";
      for (int i = 0; i < 30; ++i) trace += "meanwhile unrelated reasoning goes on ";
    }
    CHECK_FALSE(detect_restatement(trace, t));
  }
  SUBCASE("threshold is configurable") {
    RestatementParams loose;
    loose.overlap_threshold = 0.4;
    CHECK(detect_restatement(
        "The farmer counted forty chickens and seventeen more animals.", t, loose));
  }
}

TEST_CASE("grade_full wires restatement from the trace") {
  auto target = math_target(7);
  target.question = "What number squared equals fortynine exactly today?";
  auto r = record_for(target, "#### 7");
  r.response.reasoning_trace = "What number squared equals fortynine exactly today?";
  const auto g = grade_full(r, target);
  REQUIRE(g.restated_target.has_value());
  CHECK(*g.restated_target);
  auto r2 = record_for(target, "#### 7");
  CHECK_FALSE(grade_full(r2, target).restated_target.has_value());
}

TEST_CASE("graded record serialization round trip") {
  const auto target = math_target(7);
  auto r = record_for(target, "#### 31");
  add_manifest_gold(r, "f1", 31);
  auto g = filler_match(grade(r, target), r);
  g.restated_target = false;
  const auto j = g.to_json();
  const auto back = GradedRecord::from_json(j);
  CHECK(back.key.to_key_string() == g.key.to_key_string());
  CHECK(back.correct == g.correct);
  CHECK(back.match_any_filler == g.match_any_filler);
  CHECK(back.match_last_filler == g.match_last_filler);
  CHECK(back.extracted->display() == g.extracted->display());
  CHECK(back.restated_target == g.restated_target);
}

TEST_CASE("grading determinism") {
  const auto target = math_target(7);
  const auto r = record_for(target, "some words #### 12 more");
  const auto a = grade_full(r, target).to_json().dump();
  const auto b = grade_full(r, target).to_json().dump();
  CHECK(a == b);
}
