#include <Eigen/Dense>

#include <random>
#include <set>

#include "dense_oracle.hpp"
#include "doctest.h"
#include "hyperrank/errors.hpp"
#include "hyperrank/retrieval.hpp"
#include "hyperrank/similarity.hpp"
#include "random_hypergraph.hpp"
#include "temp_dir.hpp"

using namespace hyperrank;

namespace {

class StubExtractor final : public ExtractionClient {
 public:
  explicit StubExtractor(std::vector<std::string> mentions, bool fail = false)
      : mentions_(std::move(mentions)), fail_(fail) {}
  std::vector<std::string> extract(std::string_view) const override {
    if (fail_) throw RemoteError("unreachable");
    return mentions_;
  }
  std::string id() const override { return "stub"; }

 private:
  std::vector<std::string> mentions_;
  bool fail_;
};

struct Toy {
  std::vector<Passage> passages = load_corpus(testutil::fixture("toy_corpus.jsonl"));
  ExtractionCache cache = ExtractionCache::load(testutil::fixture("toy_extraction_cache.jsonl"));
  HypergraphIndex index;
  OfflineHashEncoder encoder{256};
  EmbeddingMatrix entity_rows;
  EmbeddingMatrix passage_rows;

  Toy() {
    std::vector<EntitySet> sets;
    for (const auto& p : passages) sets.push_back(*cache.get(p.id));
    index = build_index(passages, sets);
    entity_rows = embed_batch(index.catalog.entities(), encoder);
    std::vector<std::string> texts;
    for (const auto& p : passages) texts.push_back(passage_embedding_text(p));
    passage_rows = embed_batch(texts, encoder);
  }
  EntityIndex entity(const std::string& name) const { return *index.catalog.find(name); }
};

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

std::vector<PassageIndex> ids_of(const std::vector<ScoredPassage>& list) {
  std::vector<PassageIndex> out;
  for (const auto& s : list) out.push_back(s.passage);
  return out;
}

}  // namespace

TEST_CASE("threshold is strict") {
  auto x = threshold_entity_similarity(vec({0.8, 0.81, 1.0, -0.5, 0.0}), 0.8);
  CHECK(x == vec({0.0, 0.81, 1.0, 0.0, 0.0}));
  CHECK(threshold_entity_similarity(vec({1.0, 0.99}), 1.0).isZero(0.0));
}

TEST_CASE("edge weights are clamped") {
  CHECK(diffusion_edge_weights(vec({-0.2, 0.5, 1.0}), true) == vec({0.0, 0.5, 1.0}));
  CHECK(diffusion_edge_weights(vec({-0.2, 0.5}), false) == vec({1.0, 1.0}));
}

TEST_CASE("semantic enhancement") {
  auto pt = vec({0.2, 0.4});
  auto p = vec({0.6, 0.0});
  auto mid = semantic_enhance(pt, p, 0.5, true);
  CHECK(mid[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(mid[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(semantic_enhance(pt, p, 1.0, true) == p);
  CHECK(semantic_enhance(pt, p, 0.0, true) == pt);
  CHECK(semantic_enhance(pt, p, 0.5, false) == pt);
}

TEST_CASE("rank_passages breaks ties by index") {
  auto r = rank_passages(vec({0.5, 0.9, 0.5, 0.9, 0.1}), 5);
  CHECK(ids_of(r) == std::vector<PassageIndex>{1, 3, 0, 2, 4});
  CHECK(rank_passages(vec({0.5, 0.9, 0.5}), 2).size() == 2);
}

TEST_CASE("diffuse basics") {
  Toy toy;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
  x[toy.entity("albert einstein")] = 1.0;
  auto p = vec({0.9, 0.8, 0.3});

  auto zero_steps = diffuse(x, p, toy.index, 0, true);
  CHECK(zero_steps.x_t == x);
  CHECK(zero_steps.p_t == vec({0.9, 0.0, 0.0}));

  auto none = diffuse(Eigen::VectorXd::Zero(5), p, toy.index, 3, true);
  CHECK(none.p_t.isZero(0.0));

  CHECK_THROWS_AS(diffuse(Eigen::VectorXd::Zero(4), p, toy.index, 1, true), ContractError);
  CHECK_THROWS_AS(diffuse(x, vec({1.0}), toy.index, 1, true), ContractError);
}

TEST_CASE("toy diffusion with stipulated weights") {
  Toy toy;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
  x[toy.entity("albert einstein")] = 1.0;
  auto p = vec({0.9, 0.8, 0.3});
  auto out = diffuse(x, p, toy.index, 1, true);

  // Hand evaluation: einstein keeps 0.9/2, germany receives 0.9/(2 sqrt 2).
  const double e = 0.45, g = 0.45 / std::sqrt(2.0);
  CHECK(out.p_t[0] == doctest::Approx(0.9 * (e + g)).epsilon(1e-14));
  CHECK(out.p_t[1] == doctest::Approx(0.8 * g).epsilon(1e-14));
  CHECK(out.p_t[2] == 0.0);
  CHECK(out.x_t[toy.entity("brussels")] == 0.0);

  const auto H = oracle::dense_incidence(
      {{"albert einstein", "germany"}, {"germany", "european union", "berlin"}, {"european union", "brussels"}},
      toy.index.catalog.entities());
  oracle::Config c;
  c.steps = 1;
  c.k1 = 1;
  c.k2 = 3;
  auto want = oracle::run(H, x, p, c);
  CHECK(oracle::relative_error(out.p_t, want.p_t) <= 1e-12);
  CHECK(out.p_t[0] > out.p_t[1]);
  CHECK(out.p_t[1] > out.p_t[2]);
}

TEST_CASE("structural enhancement") {
  Toy toy;
  SUBCASE("shared entity pulls in P2, not P3") {
    auto sel = structural_enhance(vec({0.8, 0.5, 0.15}), toy.index, 1, 3);
    CHECK(ids_of(sel) == std::vector<PassageIndex>{0, 1});
  }
  SUBCASE("k1 = k2 is plain top-k1") {
    auto sel = structural_enhance(vec({0.1, 0.5, 0.9}), toy.index, 2, 2);
    CHECK(ids_of(sel) == std::vector<PassageIndex>{2, 1});
  }
  SUBCASE("k2 beyond the corpus is clamped") {
    auto sel = structural_enhance(vec({0.8, 0.5, 0.15}), toy.index, 1, 10);
    CHECK(ids_of(sel) == std::vector<PassageIndex>{0, 1});
  }
  SUBCASE("k1 beyond the corpus is an error") {
    CHECK_THROWS_AS(structural_enhance(vec({0.8, 0.5, 0.15}), toy.index, 4, 5), ContractError);
  }
  SUBCASE("entityless seed is kept") {
    std::vector<Passage> ps = {{"a", "", "x"}, {"b", "", "y"}, {"c", "", "z"}};
    auto idx = build_index(ps, {{"a", {}}, {"b", {"u"}}, {"c", {"v"}}});
    auto sel = structural_enhance(vec({0.9, 0.5, 0.4}), idx, 1, 3);
    CHECK(ids_of(sel) == std::vector<PassageIndex>{0});
  }
  CHECK(shared_entity_count(toy.index.incidence, 0, 1) == 1);
  CHECK(shared_entity_count(toy.index.incidence, 0, 2) == 0);
  CHECK(shared_entity_count(toy.index.incidence, 1, 1) == 3);
}

TEST_CASE("toy end to end with stipulated weights") {
  Toy toy;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
  x[toy.entity("albert einstein")] = 1.0;
  RetrievalConfig config;
  config.k1 = 1;
  config.k2 = 3;
  for (int steps : {1, 4}) {
    config.steps = steps;
    QueryArtifacts a;
    auto r = rank(x, vec({0.9, 0.8, 0.3}), toy.index, config, &a);
    CHECK(ids_of(r.selected) == std::vector<PassageIndex>{0, 1});
    CHECK(r.diagnostics.nonzero_x == 1);
    CHECK(r.diagnostics.iterations == steps);
    CHECK_FALSE(r.diagnostics.dense_fallback);
    CHECK(r.top_k2().size() == 3);
  }
}

TEST_CASE("zero entity vector falls back to dense ranking") {
  Toy toy;
  RetrievalConfig config;
  config.k1 = 1;
  config.k2 = 3;
  config.beta = 0.0;
  auto p = vec({0.1, 0.3, 0.2});
  auto r = rank(Eigen::VectorXd::Zero(5), p, toy.index, config);
  CHECK(r.diagnostics.dense_fallback);
  CHECK(ids_of(r.ranking) == std::vector<PassageIndex>{1, 2, 0});
}

TEST_CASE("dense mode and beta = 1 reproduce the dense ordering") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = gen::random_instance(rng);
    const auto n = inst.index.num_passages();
    auto p = gen::random_scores(rng, n, -0.2, 1.0);
    auto x = gen::random_entity_vector(rng, inst.index.num_entities());
    RetrievalConfig config;
    config.k1 = 1;
    config.k2 = n;
    config.report_depth = n;
    const auto dense = oracle::argsort_desc(p);

    config.beta = 1.0;
    auto r = rank(x, p, inst.index, config);
    std::vector<std::size_t> got(r.ranking.size());
    std::transform(r.ranking.begin(), r.ranking.end(), got.begin(), [](auto s) { return std::size_t{s.passage}; });
    CHECK(got == dense);

    config.beta = 0.5;
    config.use_hypergraph = false;
    config.use_weight_matrix = false;
    config.use_semantic_enhancement = false;
    config.use_structural_enhancement = false;
    r = rank(x, p, inst.index, config);
    std::transform(r.ranking.begin(), r.ranking.end(), got.begin(), [](auto s) { return std::size_t{s.passage}; });
    CHECK(got == dense);
  }
}

TEST_CASE("selection is scale equivariant") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = gen::random_instance(rng);
    const auto n = inst.index.num_passages();
    auto s = gen::random_scores(rng, n);
    const std::size_t k1 = 1 + trial % n;
    const std::size_t k2 = std::min<std::size_t>(n, k1 + 3);
    auto a = structural_enhance(s, inst.index, k1, k2);
    auto b = structural_enhance(3.5 * s, inst.index, k1, k2);
    CHECK(ids_of(a) == ids_of(b));
  }
}

TEST_CASE("rank is deterministic") {
  std::mt19937_64 rng(8);
  auto inst = gen::random_instance(rng);
  auto p = gen::random_scores(rng, inst.index.num_passages());
  auto x = gen::random_entity_vector(rng, inst.index.num_entities());
  RetrievalConfig config;
  config.k1 = 1;
  config.k2 = 4;
  CHECK(rank(x, p, inst.index, config) == rank(x, p, inst.index, config));
}

TEST_CASE("config validation") {
  RetrievalConfig c;
  CHECK_NOTHROW(c.validate());
  c.eta = 1.5;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = {};
  c.beta = -0.1;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = {};
  c.k1 = 11;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = {};
  c.steps = -1;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = {};
  c.k1 = 0;
  CHECK_THROWS_AS(c.validate(), ContractError);
}

TEST_CASE("entity similarity from the query") {
  Toy toy;
  SUBCASE("exact match crosses the threshold") {
    StubExtractor ex({"Albert Einstein"});
    Retriever r(toy.index, toy.entity_rows, toy.passage_rows, toy.encoder, ex);
    auto x = r.build_entity_similarity("q", 0.8);
    CHECK(x[toy.entity("albert einstein")] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.build_entity_similarity("q", 1.0).isZero(0.0));
  }
  SUBCASE("eta = 0 gives the max-cosine vector") {
    StubExtractor ex({"Germany", "Brussels Berlin"});
    Retriever r(toy.index, toy.entity_rows, toy.passage_rows, toy.encoder, ex);
    auto x = r.build_entity_similarity("q", 0.0);
    for (EntityIndex i = 0; i < 5; ++i) {
      const auto ei = toy.encoder.encode_one(toy.index.catalog.entity(i));
      double best = -1.0;
      for (const char* q : {"germany", "brussels berlin"}) {
        const auto qi = toy.encoder.encode_one(q);
        const Eigen::Map<const Eigen::VectorXf> a(ei.data(), static_cast<Eigen::Index>(ei.size()));
        const Eigen::Map<const Eigen::VectorXf> b(qi.data(), static_cast<Eigen::Index>(qi.size()));
        best = std::max(best, cosine(a, b));
      }
      const double want = best > 0.0 ? best : 0.0;
      CHECK(x[i] == doctest::Approx(want).epsilon(1e-6));
    }
  }
  SUBCASE("extraction failure degrades to x = 0 with a warning") {
    StubExtractor ex({}, true);
    Retriever r(toy.index, toy.entity_rows, toy.passage_rows, toy.encoder, ex);
    std::vector<std::string> warnings;
    CHECK(r.build_entity_similarity("q", 0.5, &warnings).isZero(0.0));
    CHECK(warnings.size() == 1);
    RetrievalConfig config;
    config.k1 = 1;
    config.k2 = 3;
    auto result = r.retrieve("capital", config);
    CHECK(result.diagnostics.dense_fallback);
    CHECK(result.diagnostics.warnings.size() == 1);
  }
}

TEST_CASE("passage similarity from the query") {
  Toy toy;
  StubExtractor ex({});
  Retriever r(toy.index, toy.entity_rows, toy.passage_rows, toy.encoder, ex);
  auto p = r.build_passage_similarity(passage_embedding_text(toy.passages[1]));
  CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.build_passage_similarity("   ").isZero(0.0));
  CHECK(r.build_passage_similarity("?!").isZero(0.0));

  const std::string q = "Where is the European Union headquartered?";
  p = r.build_passage_similarity(q);
  const auto qv = toy.encoder.encode_one(q);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto pv = toy.encoder.encode_one(passage_embedding_text(toy.passages[j]));
    const Eigen::Map<const Eigen::VectorXf> a(qv.data(), static_cast<Eigen::Index>(qv.size()));
    const Eigen::Map<const Eigen::VectorXf> b(pv.data(), static_cast<Eigen::Index>(pv.size()));
    CHECK(p[static_cast<Eigen::Index>(j)] == doctest::Approx(cosine(a, b)).epsilon(1e-6));
  }
}

TEST_CASE("untitled passage: identical query text scores 1") {
  std::vector<Passage> ps = {{"a", "", "Lakes of Finland"}, {"b", "", "Rivers of Poland"}};
  auto idx = build_index(ps, {{"a", {"finland"}}, {"b", {"poland"}}});
  OfflineHashEncoder enc(64);
  auto ents = embed_batch(idx.catalog.entities(), enc);
  auto rows = embed_batch({passage_embedding_text(ps[0]), passage_embedding_text(ps[1])}, enc);
  StubExtractor ex({});
  Retriever r(idx, ents, rows, enc, ex);
  CHECK(r.build_passage_similarity("Lakes of Finland")[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("retriever checks embedding alignment") {
  Toy toy;
  StubExtractor ex({});
  EmbeddingMatrix short_rows(2, 256, std::vector<float>(512, 0.0f));
  CHECK_THROWS_AS(Retriever(toy.index, toy.entity_rows, short_rows, toy.encoder, ex), IndexIntegrityError);
  CHECK_THROWS_AS(Retriever(toy.index, short_rows, toy.passage_rows, toy.encoder, ex), IndexIntegrityError);
}

TEST_CASE("toy query end to end with the offline encoder") {
  Toy toy;
  OfflineExtractor ex;
  Retriever r(toy.index, toy.entity_rows, toy.passage_rows, toy.encoder, ex);
  RetrievalConfig config;
  config.k1 = 1;
  config.k2 = 3;
  const std::string q = "What is the capital of the country where Albert Einstein was born?";
  auto result = r.retrieve(q, config);
  CHECK(ids_of(result.selected) == std::vector<PassageIndex>{0, 1});
  CHECK(result.diagnostics.query_entities == std::vector<std::string>{"albert einstein"});

  auto j = to_json(result, toy.index, q);
  CHECK(j["query"] == q);
  CHECK(j["selected"].size() == 2);
  CHECK(j["selected"][0]["id"] == "P1");
  CHECK(j["selected"][1]["id"] == "P2");
  CHECK(j["topk2"].size() == 3);
  CHECK(j["diagnostics"]["nonzero_x"] == 1);
  CHECK(j["diagnostics"]["iterations"] == 4);
}
