#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include "causal/ctcw.hpp"

using namespace causal;

namespace {

const EventText kCause("The earthquake hit a city.");
const EventText kEffect("Mental health issues arose.");
const EventText kSupporter("A disaster usually leads to suffering and loss of people");
const EventText kDefeater("Lots of mental health assistance was provided.");

std::string sentence_of(const std::string& prompt) {
  const auto cut = prompt.find("\n\n");
  return cut == std::string::npos ? prompt : prompt.substr(0, cut);
}

} // namespace

TEST_CASE("bare prompt renders cause [MASK] effect") {
  const auto prompt = ctcw_build_prompt(CtcwTemplate::bare, kCause, kEffect, std::nullopt);
  CHECK(sentence_of(prompt) ==
        "The earthquake hit a city [MASK] mental health issues arose.");
  CHECK(prompt.find(default_ctcw_instructions()) != std::string::npos);
}

TEST_CASE("fact template splices the supporter in front") {
  const auto prompt = ctcw_build_prompt(CtcwTemplate::fact, kCause, kEffect, kSupporter);
  CHECK(sentence_of(prompt) ==
        "It is a fact that a disaster usually leads to suffering and loss of people. So, "
        "the earthquake hit a city [MASK] mental health issues arose.");
}

TEST_CASE("and_later template appends the defeater after the cause") {
  const auto prompt = ctcw_build_prompt(CtcwTemplate::and_later, kCause, kEffect, kDefeater);
  CHECK(sentence_of(prompt) ==
        "The earthquake hit a city, and later lots of mental health assistance was provided "
        "[MASK] mental health issues arose.");
}

TEST_CASE("and template joins with a plain conjunction") {
  const auto prompt = ctcw_build_prompt(CtcwTemplate::and_word, kCause, kEffect,
                                        EventText("The tremor was strong."));
  CHECK(sentence_of(prompt) ==
        "The earthquake hit a city and The tremor was strong "
        "[MASK] mental health issues arose.");
}

TEST_CASE("templates validate the presence of an addition") {
  CHECK_THROWS_AS(ctcw_build_prompt(CtcwTemplate::fact, kCause, kEffect, std::nullopt),
                  ValidationError);
  CHECK_THROWS_AS(ctcw_build_prompt(CtcwTemplate::and_later, kCause, kEffect, std::nullopt),
                  ValidationError);
  CHECK_THROWS_AS(ctcw_build_prompt(CtcwTemplate::bare, kCause, kEffect, kSupporter),
                  ValidationError);
}

TEST_CASE("ctcw_parse reads labeled probability lines") {
  const auto table = ctcw_parse("- after: 0.30\n- before: 0.50\n- therefore: 0.20\n"
                                "- because: 0.00");
  CHECK(table.after == 0.30);
  CHECK(table.before == 0.50);
  CHECK(table.therefore == 0.20);
  CHECK(table.because == 0.00);
  CHECK(table.raw_sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("ctcw_parse fails loudly on missing words and bad values") {
  try {
    ctcw_parse("- after: 0.30\n- before: 0.50\n- therefore: 0.20");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("because") != std::string::npos);
  }
  try {
    ctcw_parse("after 1.3\nbefore 0.1\ntherefore 0.1\nbecause 0.0");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("after") != std::string::npos);
  }
  CHECK_THROWS_AS(ctcw_parse("   "), ParseError);
}

TEST_CASE("ctcw_parse does not confuse 'therefore' with 'before'") {
  const auto table = ctcw_parse("therefore 0.7\nafter 0.1\nbefore 0.2\nbecause 0.0");
  CHECK(table.therefore == 0.7);
  CHECK(table.before == 0.2);
}

TEST_CASE("ctcw_score reproduces the case-study arithmetic") {
  ProbabilityTable bare{0.30, 0.50, 0.20, 0.00, 0.0};
  bare.finalize();
  ProbabilityTable with_supporter{0.20, 0.10, 0.70, 0.00, 0.0};
  with_supporter.finalize();
  ProbabilityTable with_defeater{0.30, 0.10, 0.40, 0.00, 0.0};
  with_defeater.finalize();

  const double s_bare = ctcw_score(bare).value;
  const double s_sup = ctcw_score(with_supporter).value;
  const double s_def = ctcw_score(with_defeater).value;
  CHECK(s_bare == (0.50 + 0.20) - (0.30 + 0.00));
  CHECK(s_sup == (0.10 + 0.70) - (0.20 + 0.00));
  CHECK(s_def == (0.10 + 0.40) - (0.30 + 0.00));
  CHECK(s_bare == Catch::Approx(0.40).margin(1e-12));
  CHECK(s_sup == Catch::Approx(0.60).margin(1e-12));
  CHECK(s_def == Catch::Approx(0.20).margin(1e-12));
  CHECK(s_sup > s_bare);
  CHECK(s_bare > s_def);
}

TEST_CASE("ctcw_score rescales over-unit tables when clamping") {
  ProbabilityTable table{0.50, 0.50, 0.40, 0.10, 0.0};
  table.finalize();
  REQUIRE(table.raw_sum > 1.0);
  const auto clamped = ctcw_score(table, true);
  CHECK(clamped.rescaled);
  CHECK(clamped.raw == Catch::Approx((0.5 + 0.4) - (0.5 + 0.1)).margin(1e-12));
  CHECK(clamped.value == Catch::Approx(clamped.raw / table.raw_sum).margin(1e-12));
  CHECK(clamped.value >= -1.0);
  CHECK(clamped.value <= 1.0);

  const auto unclamped = ctcw_score(table, false);
  CHECK(!unclamped.rescaled);
  CHECK(unclamped.value == unclamped.raw);
}

TEST_CASE("mock provider is a pure function of the prompt") {
  MockProvider provider;
  const std::string prompt = "anything [MASK] at all";
  const auto a = provider.probabilities(prompt);
  const auto b = provider.probabilities(prompt);
  CHECK(a.after == b.after);
  CHECK(a.before == b.before);
  CHECK(a.therefore == b.therefore);
  CHECK(a.because == b.because);
  CHECK(a.raw_sum <= 1.0);
  const auto c = provider.probabilities(prompt + " ");
  const bool differs = c.after != a.after || c.before != a.before;
  CHECK(differs);
}

TEST_CASE("mock provider fixtures round-trip through JSONL") {
  namespace fs = std::filesystem;
  const auto path = (fs::temp_directory_path() / "ctcw_fixtures_test.jsonl").string();
  const std::string prompt =
      ctcw_build_prompt(CtcwTemplate::bare, kCause, kEffect, std::nullopt);
  ProbabilityTable table{0.30, 0.50, 0.20, 0.00, 0.0};
  table.finalize();
  save_ctcw_fixtures(path, {{prompt, table}});

  auto provider = MockProvider::from_jsonl(path);
  CHECK(provider.fixture_count() == 1);
  const auto got = provider.probabilities(prompt);
  CHECK(got.after == 0.30);
  CHECK(got.before == 0.50);
  CHECK(got.therefore == 0.20);
  CHECK(got.because == 0.00);
  fs::remove(path);
}
