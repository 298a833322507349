#include <doctest.h>

#include <chrono>
#include <random>

#include "flowkit/entities.hpp"
#include "flowkit/skimmer.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace flowkit;
using nlohmann::json;

namespace {

using testing::gen::movie_rules;

json normalized(Normalizer n, const std::string& text) {
  auto rule = EntityRule::make("x", {}, n);
  auto spans = recognize_entities(text, {rule});
  REQUIRE(spans.size() == 1);
  return spans[0].normalized;
}

}  // namespace

TEST_CASE("the movie masking example") {
  auto rules = movie_rules();
  std::string u = "My favorite movie is Matrix";
  auto spans = recognize_entities(u, rules);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].start == 21);
  CHECK(spans[0].end == 27);
  CHECK(spans[0].surface == "Matrix");
  CHECK(mask_entities(u, spans, {"movie"}) == "My favorite movie is {movie}");
  CHECK(mask_entities(u, spans, {"count"}) == u);
}

TEST_CASE("recognition is case-insensitive, longest-match and non-overlapping") {
  std::vector<EntityRule> rules = {EntityRule::make("city", {"york", "new york"}, Normalizer::None),
                                   EntityRule::make("place", {"new york city"}, Normalizer::None),
                                   EntityRule::make("alias", {"york"}, Normalizer::None)};
  auto spans = recognize_entities("I moved from NEW YORK CITY to York", rules);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0].type_name == "place");
  CHECK(spans[0].surface == "NEW YORK CITY");
  // same length at the same offset: the earlier rule wins
  CHECK(spans[1].type_name == "city");
  CHECK(spans[1].surface == "York");
}

TEST_CASE("normalizers") {
  CHECK(normalized(Normalizer::Integer, "I have 1,200 apples") == json(1200));
  CHECK(normalized(Normalizer::Integer, "three of them") == json(3));
  CHECK(normalized(Normalizer::Decimal, "about 3.14 percent") == json(3.14));
  CHECK(normalized(Normalizer::TimeOfDay, "see you at 7:30 pm") == json({{"hour", 19}, {"minute", 30}}));
  CHECK(normalized(Normalizer::TimeOfDay, "at 12 am") == json({{"hour", 0}, {"minute", 0}}));
  CHECK(normalized(Normalizer::TimeOfDay, "lunch at noon") == json({{"hour", 12}, {"minute", 0}}));
  CHECK(normalized(Normalizer::Date, "on 2024-03-05") == json({{"year", 2024}, {"month", 3}, {"day", 5}}));
  CHECK(normalized(Normalizer::Date, "on March 5th") == json({{"month", 3}, {"day", 5}}));
  CHECK(normalized(Normalizer::Date, "the 5 of march 2023") == json({{"year", 2023}, {"month", 3}, {"day", 5}}));
  CHECK(normalized(Normalizer::Date, "see you tomorrow") == json({{"relativeDays", 1}}));
  CHECK(normalized(Normalizer::Url, "visit www.example.com/a.") == json("www.example.com/a"));
  CHECK(normalized(Normalizer::Money, "it costs $20") == json({{"amount", 20.0}, {"currency", "USD"}}));
  CHECK(normalized(Normalizer::Money, "only 15 euros") == json({{"amount", 15.0}, {"currency", "EUR"}}));
}

TEST_CASE("rules without patterns fall back to the normalizer's built-ins") {
  auto r = EntityRule::make("n", {}, Normalizer::Integer);
  CHECK(r.uses_builtin_patterns);
  CHECK(r.compiled.size() == builtin_patterns(Normalizer::Integer).size());
  CHECK_THROWS_AS(EntityRule::make("bad", {"(unclosed"}, Normalizer::None), std::invalid_argument);
}

TEST_CASE("mask rejects overlapping spans") {
  std::vector<EntitySpan> spans = {{0, 4, "abcd", "x", nullptr}, {2, 6, "cdef", "x", nullptr}};
  CHECK_THROWS_AS(mask_entities("abcdefgh", spans, {"x"}), std::invalid_argument);
}

TEST_CASE("masking property: randomized utterances against a construction oracle") {
  auto rules = movie_rules();
  std::mt19937_64 rng(99);
  auto t0 = std::chrono::steady_clock::now();
  for (int c = 0; c < 400; ++c) {
    auto mc = testing::gen::random_mask_case(rng);
    CAPTURE(mc.utterance);
    auto spans = recognize_entities(mc.utterance, rules);
    REQUIRE(spans.size() == mc.inserted.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
      CHECK(spans[i].type_name == mc.inserted[i].first);
      CHECK(spans[i].surface == mc.inserted[i].second);
      CHECK(mc.utterance.substr(spans[i].start, spans[i].end - spans[i].start) == spans[i].surface);
      if (i) CHECK(spans[i - 1].end <= spans[i].start);
    }
    auto detailed = mask_entities_detailed(mc.utterance, spans, mc.allowed);
    CHECK(detailed.text == mc.expected);
    CHECK(mask_entities(mc.utterance, spans, {}) == mc.utterance);
    // spans re-expressed in masked coordinates point at placeholders or verbatim surfaces
    for (const auto& s : detailed.spans) {
      std::string piece = detailed.text.substr(s.start, s.end - s.start);
      CHECK(piece == (mc.allowed.count(s.type_name) ? "{" + s.type_name + "}" : s.surface));
    }
  }
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 1.0);
}

TEST_CASE("skimmer: the brother example") {
  auto rule = SkimmerRule::make({R"(\bbrother\b)"}, *parse_attribute_ref("user.hasBrother"), Value(true));
  auto writes = skim("I went fishing with my brother yesterday", {rule});
  REQUIRE(writes.size() == 1);
  CHECK(writes[0].attribute == *parse_attribute_ref("user.hasBrother"));
  CHECK(writes[0].value == Value(true));
  CHECK(skim("I have a BROTHER", {rule}).size() == 1);
  CHECK(skim("my brotherhood of friends", {rule}).empty());
}

TEST_CASE("skimmer rules are conjunctive and report writes in declaration order") {
  auto both = SkimmerRule::make({R"(\bmy\b)", R"(\bsister\b)"}, *parse_attribute_ref("user.hasSister"), Value(true));
  auto pet = SkimmerRule::make({R"(\b(?<pet>dog|cat)\b)"}, *parse_attribute_ref("user.pet"), CaptureRef{"pet"});
  auto num = SkimmerRule::make({R"(\b(dog|cat)\b)"}, *parse_attribute_ref("user.pet"), CaptureRef{1});
  CHECK(skim("a sister", {both}).empty());
  CHECK(skim("my friend", {both}).empty());
  auto writes = skim("My sister has a Dog", {both, pet, num});
  REQUIRE(writes.size() == 3);
  CHECK(writes[0].attribute.name == "hasSister");
  CHECK(writes[1].value == Value("Dog"));
  CHECK(writes[2].value == Value("Dog"));
  CHECK(pet.capture_is_valid());
  auto bad = SkimmerRule::make({R"(\b(dog)\b)"}, *parse_attribute_ref("user.pet"), CaptureRef{"pet"});
  CHECK_FALSE(bad.capture_is_valid());
  CHECK_THROWS_AS(SkimmerRule::make({}, *parse_attribute_ref("user.pet"), Value(true)), std::invalid_argument);
}

TEST_CASE("entity spans round-trip through json") {
  EntitySpan s{3, 9, "Matrix", "movie", "Matrix"};
  CHECK(entity_span_from_json(to_json(s)) == s);
}
