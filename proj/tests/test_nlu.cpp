#include <doctest.h>

#include <chrono>
#include <numeric>
#include <random>

#include "flowkit/nlu_pack.hpp"
#include "flowkit/validate.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace flowkit;
using nlohmann::json;
namespace oracle = testing::oracle;
using namespace testing::gen;

TEST_CASE("embedder matches the sparse reference embedding") {
  HashedNgramEmbedder e;
  std::mt19937_64 rng(5);
  const std::string alphabet = "abcdefgh XYZ0123.,!'\xC3\xA9";
  for (int i = 0; i < 200; ++i) {
    std::string text;
    const int len = static_cast<int>(rng() % 40);
    for (int k = 0; k < len; ++k) text += alphabet[rng() % alphabet.size()];
    CAPTURE(text);
    auto dense = e.embed(text);
    auto sparse = oracle::embed(text);
    REQUIRE(dense.dim() == kEmbeddingDim);
    double max_err = 0;
    for (std::size_t d = 0; d < dense.dim(); ++d) {
      auto it = sparse.find(d);
      double want = it == sparse.end() ? 0.0 : it->second;
      if (std::isnan(want)) want = 0.0;
      max_err = std::max(max_err, std::abs(dense.values[d] - want));
    }
    CHECK(max_err < 1e-12);
    if (!dense.is_zero()) CHECK(dense.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(e.embed("  ,,, ").is_zero());
  CHECK(cosine(e.embed(""), e.embed("hello")) == 0.0);
  CHECK(HashedNgramEmbedder::tokenize("Hello, WORLD!") == std::vector<std::string>{"hello", "world"});
}

TEST_CASE("classifier separates a yes/no toy problem") {
  HashedNgramEmbedder e;
  std::vector<Embedding> xs;
  std::vector<std::size_t> ys;
  for (const char* s : {"yes", "yeah sure", "of course", "yes please"}) {
    xs.push_back(e.embed(s));
    ys.push_back(0);
  }
  for (const char* s : {"no", "nope", "not really", "no thanks"}) {
    xs.push_back(e.embed(s));
    ys.push_back(1);
  }
  auto clf = IntentClassifier::train({"yes", "no"}, xs, ys);
  CHECK(clf.predict(e.embed("yes").values) == 0);
  CHECK(clf.predict(e.embed("no thanks").values) == 1);
  CHECK(clf.predict(e.embed("yeah").values) == 0);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(clf.predict(xs[i].values) == ys[i]);

  auto single = IntentClassifier::train({"only"}, {e.embed("anything")}, {0});
  CHECK(single.predict_proba(e.embed("whatever").values) == std::vector<double>{1.0});

  auto again = IntentClassifier::from_json(clf.to_json());
  CHECK(again.to_json() == clf.to_json());
}

TEST_CASE("softmax rows sum to one over random embeddings") {
  auto b = testing::load("companion.json");
  auto pack = train_pack(b);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t rows = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(kEmbeddingDim);
    for (auto& v : x) v = gauss(rng);
    double n = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
    for (auto& v : x) v /= n;
    for (const auto* group : {&pack.local_classifiers, &pack.global_classifiers})
      for (const auto& [_, clf] : *group) {
        auto p = clf.predict_proba(x);
        CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9);
        for (double v : p) CHECK((v >= 0.0 && v <= 1.0));
        ++rows;
      }
  }
  CHECK(rows >= 1000);
  std::vector<double> extreme = {1000.0, -1000.0, 999.0};
  auto p = softmax(extreme);
  CHECK(std::abs(p[0] + p[1] + p[2] - 1.0) <= 1e-9);
  CHECK(p[0] > p[2]);
}

TEST_CASE("training is deterministic and the pack round-trips") {
  auto b = testing::load("companion.json");
  auto first = serialize_pack(train_pack(b));
  auto second = serialize_pack(train_pack(b));
  CHECK(first == second);
  auto reloaded = pack_from_json(json::parse(first));
  CHECK(serialize_pack(reloaded) == first);
  CHECK(reloaded.bundle_fingerprint == bundle_fingerprint(b));
}

TEST_CASE("training rejects an intent whose examples are all empty") {
  auto j = json::parse(R"({"main": "m", "dialogues": [{"id": "m", "nodes": [
    {"id": "in", "kind": "enter"}, {"id": "u", "kind": "userInput"},
    {"id": "a", "kind": "intent", "examples": ["...", "!!"]}, {"id": "out", "kind": "exit"}],
    "edges": [{"from": "in", "to": "u"}, {"from": "u", "to": "a"}, {"from": "a", "to": "out"}]}]})");
  CHECK_THROWS_AS(train_pack(parse_bundle(j.dump())), TrainingError);
}

TEST_CASE("routing on the companion bundle") {
  auto b = testing::load("companion.json");
  auto pack = train_pack(b);
  const auto& e = default_embedder();
  RoutingContext ctx{"movies", "fav", {"movies", "main"}};
  CHECK(masking_types(b, ctx) == std::set<std::string>{"movie"});

  auto named = route_and_classify("My favorite movie is {movie}", ctx, pack, e);
  CHECK(named.scope == RoutingScope::Local);
  CHECK(named.best_local_sim == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(named.chosen_intent == "movies/named");

  auto help = route_and_classify("help", ctx, pack, e);
  CHECK(help.scope == RoutingScope::Global);
  CHECK(help.chosen_intent == "main/help");

  auto ood = route_and_classify("what is the capital of france", ctx, pack, e);
  CHECK(ood.scope == RoutingScope::OutOfDomain);
  CHECK_FALSE(ood.chosen_intent.has_value());

  CHECK(routing_from_json(to_json(named)) == named);
  CHECK_THROWS_AS(route_and_classify("x", {"movies", "nope", {}}, pack, e), UnknownContextError);
}

TEST_CASE("routing agrees with a brute-force cosine oracle on random toy bundles") {
  std::mt19937_64 rng(314);
  std::vector<std::string> vocab, foreign;
  for (int i = 0; i < 30; ++i) vocab.push_back(random_word(rng, "abcdefghijklm"));
  for (int i = 0; i < 10; ++i) foreign.push_back(random_word(rng, "nopqrstuvwxyz"));
  const auto& e = default_embedder();
  auto t0 = std::chrono::steady_clock::now();
  for (int bundle_no = 0; bundle_no < 50; ++bundle_no) {
    Toy toy = random_toy(rng, vocab);
    CAPTURE(toy.bundle.dump());
    auto b = parse_bundle(toy.bundle.dump());
    REQUIRE(validate_bundle(b).empty());
    auto pack = train_pack(b);
    RoutingContext ctx{"s", "u", {"s", "m"}};

    std::vector<std::string> queries;
    for (const auto& in : toy.intents) queries.push_back(in.examples[rng() % in.examples.size()]);
    for (int i = 0; i < 4; ++i) queries.push_back(random_phrase(rng, vocab));
    const std::string orthogonal = random_phrase(rng, foreign);
    queries.push_back(orthogonal);

    for (const auto& q : queries) {
      CAPTURE(q);
      auto got = route_and_classify(q, ctx, pack, e);
      auto want = oracle_route(toy, q, 0.55);
      CHECK(std::abs(got.best_local_sim - want.local) <= 1e-9);
      CHECK(std::abs(got.best_global_sim - want.global) <= 1e-9);
      CHECK(got.scope == want.scope);
      if (got.scope == RoutingScope::OutOfDomain) continue;
      REQUIRE(got.chosen_intent.has_value());
      const ToyIntent* chosen = nullptr;
      for (const auto& in : toy.intents)
        if (in.qualified == *got.chosen_intent) chosen = &in;
      REQUIRE(chosen != nullptr);
      CHECK(chosen->global == (got.scope == RoutingScope::Global));
      if (got.scope == RoutingScope::Global) CHECK(chosen->dialogue == want.global_dialogue);
    }
    for (const auto& in : toy.intents) {
      auto got = route_and_classify(in.examples[0], ctx, pack, e);
      CHECK(std::max(got.best_local_sim, got.best_global_sim) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(route_and_classify(orthogonal, ctx, pack, e).scope == RoutingScope::OutOfDomain);
  }
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 10.0);
}
