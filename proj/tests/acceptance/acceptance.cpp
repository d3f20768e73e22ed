// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any fail.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "dense_oracle.hpp"
#include "hyperrank/app.hpp"
#include "hyperrank/io.hpp"
#include "hyperrank/metrics.hpp"
#include "hyperrank/retrieval.hpp"
#include "random_hypergraph.hpp"
#include "temp_dir.hpp"

using namespace hyperrank;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::size_t> order_of(const std::vector<ScoredPassage>& list) {
  std::vector<std::size_t> out;
  for (const auto& s : list) out.push_back(s.passage);
  return out;
}

// Shared by criteria 1 and 2: 200 random desk-scale instances.
struct Case {
  gen::Instance inst;
  Eigen::VectorXd x;  // index order
  Eigen::VectorXd p;
  int steps;
  double beta;
};

std::vector<Case> make_cases() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> steps(0, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Case> cases;
  for (int i = 0; i < 200; ++i) {
    Case c;
    c.inst = gen::random_instance(rng);
    c.x = gen::random_entity_vector(rng, c.inst.index.num_entities(), 0.3);
    c.p = gen::random_scores(rng, c.inst.index.num_passages());
    c.steps = steps(rng);
    c.beta = unit(rng);
    cases.push_back(std::move(c));
  }
  return cases;
}

Outcome criterion_dense_oracle(const std::vector<Case>& cases) {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto n = c.inst.index.num_passages();
    RetrievalConfig config;
    config.steps = c.steps;
    config.beta = c.beta;
    config.k1 = 1;
    config.k2 = n;
    QueryArtifacts a;
    rank(c.x, c.p, c.inst.index, config, &a);

    oracle::Config oc;
    oc.steps = c.steps;
    oc.beta = c.beta;
    oc.k1 = 1;
    oc.k2 = n;
    const auto want = oracle::run(c.inst.H, gen::to_oracle_order(c.inst, c.x), c.p, oc);
    const double err = oracle::relative_error(a.p_tilde, want.p_tilde);
    worst = std::max(worst, err);
    o.require(err <= 1e-9, "relative error " + std::to_string(err));
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 10.0, "took " + std::to_string(elapsed) + " s");
  if (o.ok) {
    std::ostringstream s;
    s << "worst relative error " << worst << ", " << elapsed << " s";
    o.detail = s.str();
  }
  return o;
}

Outcome criterion_spectral(const std::vector<Case>& cases) {
  Outcome o;
  double max_eig = 0.0, min_eig = 1.0;
  for (const auto& c : cases) {
    // Materialize the sparse operator column by column: one step on each unit vector.
    const auto m = static_cast<Eigen::Index>(c.inst.index.num_entities());
    Eigen::MatrixXd L(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      L.col(i) = diffuse(Eigen::VectorXd::Unit(m, i), c.p, c.inst.index, 1, true).x_t;
    }
    o.require((L - L.transpose()).norm() <= 1e-12, "operator is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L, Eigen::EigenvaluesOnly);
    max_eig = std::max(max_eig, es.eigenvalues().maxCoeff());
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    o.require(es.eigenvalues().maxCoeff() <= 1.0 + 1e-9, "eigenvalue above 1");
    o.require(es.eigenvalues().minCoeff() >= -1e-9, "negative eigenvalue");

    const double n0 = c.x.norm();
    for (int steps = 0; steps <= 6; ++steps) {
      const auto d = diffuse(c.x, c.p, c.inst.index, steps, true);
      o.require(d.x_t.norm() <= n0 * (1.0 + 1e-12), "norm grew at t=" + std::to_string(steps));
      o.require(d.x_t.minCoeff() >= 0.0, "negative entity score");
      o.require(d.p_t.minCoeff() >= 0.0, "negative passage score");
    }
  }
  if (o.ok) {
    std::ostringstream s;
    s << "eigenvalues within [" << min_eig << ", " << max_eig << "]";
    o.detail = s.str();
  }
  return o;
}

Outcome criterion_toy() {
  Outcome o;
  const auto passages = load_corpus(testutil::fixture("toy_corpus.jsonl"));
  const auto cache = ExtractionCache::load(testutil::fixture("toy_extraction_cache.jsonl"));
  std::vector<EntitySet> sets;
  for (const auto& p : passages) sets.push_back(*cache.get(p.id));
  const auto index = build_index(passages, sets);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(index.num_entities()));
  x[*index.catalog.find("albert einstein")] = 1.0;
  Eigen::VectorXd p(3);
  p << 0.9, 0.8, 0.3;

  RetrievalConfig config;
  config.k1 = 1;
  config.k2 = 3;
  config.steps = 1;
  QueryArtifacts a;
  const auto result = rank(x, p, index, config, &a);

  const auto H = oracle::dense_incidence(
      {{"albert einstein", "germany"}, {"germany", "european union", "berlin"}, {"european union", "brussels"}},
      index.catalog.entities());
  oracle::Config oc;
  oc.steps = 1;
  oc.k1 = 1;
  oc.k2 = 3;
  const auto want = oracle::run(H, x, p, oc);
  o.require(oracle::relative_error(a.p_tilde, want.p_tilde) <= 1e-12, "p_tilde differs from the dense oracle");
  o.require(want.selected == std::vector<std::size_t>{0, 1}, "oracle selection is not {P1, P2}");
  o.require(order_of(result.selected) == std::vector<std::size_t>{0, 1}, "selection is not {P1, P2}");
  std::vector<ScoredPassage> top(result.top_k2().begin(), result.top_k2().end());
  o.require(order_of(top) == std::vector<std::size_t>{0, 1, 2}, "top-k2 is not P1, P2, P3");

  // Same outcome end to end from the query text with the offline encoder and default t.
  OfflineHashEncoder enc;
  OfflineExtractor ex;
  const auto ents = embed_batch(index.catalog.entities(), enc);
  std::vector<std::string> texts;
  for (const auto& ps : passages) texts.push_back(passage_embedding_text(ps));
  const auto rows = embed_batch(texts, enc);
  Retriever retriever(index, ents, rows, enc, ex);
  RetrievalConfig defaults;
  defaults.k1 = 1;
  defaults.k2 = 3;
  const auto e2e = retriever.retrieve("What is the capital of the country where Albert Einstein was born?", defaults);
  o.require(order_of(e2e.selected) == std::vector<std::size_t>{0, 1}, "end-to-end selection is not {P1, P2}");
  if (o.ok) {
    std::ostringstream s;
    s << "p_tilde = (" << a.p_tilde[0] << ", " << a.p_tilde[1] << ", " << a.p_tilde[2] << "), C_q = {P1, P2}";
    o.detail = s.str();
  }
  return o;
}

Outcome criterion_ablations() {
  Outcome o;
  std::mt19937_64 rng(777);
  auto run_n = [&](const char* name, const std::function<void(const gen::Instance&, const Eigen::VectorXd&,
                                                              const Eigen::VectorXd&, std::size_t, std::size_t)>& check) {
    for (int i = 0; i < 50; ++i) {
      auto inst = gen::random_instance(rng);
      const auto n = inst.index.num_passages();
      auto x = gen::random_entity_vector(rng, inst.index.num_entities());
      auto p = gen::random_scores(rng, n, -0.3, 1.0);
      std::uniform_int_distribution<std::size_t> k(1, n);
      std::size_t k1 = k(rng), k2 = k(rng);
      if (k1 > k2) std::swap(k1, k2);
      const bool before = o.ok;
      check(inst, x, p, k1, k2);
      if (before && !o.ok) o.detail = std::string(name) + ": " + o.detail;
    }
  };
  auto base = [](std::size_t n, std::size_t k1, std::size_t k2) {
    RetrievalConfig c;
    c.k1 = k1;
    c.k2 = k2;
    c.report_depth = n;
    return c;
  };

  run_n("beta=1", [&](const auto& inst, const auto& x, const auto& p, std::size_t k1, std::size_t) {
    auto c = base(inst.index.num_passages(), k1, inst.index.num_passages());
    c.beta = 1.0;
    o.require(order_of(rank(x, p, inst.index, c).ranking) == oracle::argsort_desc(p), "ranking differs from dense");
  });
  run_n("k1=k2", [&](const auto& inst, const auto& x, const auto& p, std::size_t k1, std::size_t) {
    auto c = base(inst.index.num_passages(), k1, k1);
    auto r = rank(x, p, inst.index, c);
    o.require(r.selected == std::vector<ScoredPassage>(r.ranking.begin(), r.ranking.begin() + k1),
              "selection is not top-k1");
  });
  run_n("no weights", [&](const auto& inst, const auto& x, const auto& p, std::size_t k1, std::size_t k2) {
    auto c = base(inst.index.num_passages(), k1, k2);
    c.use_weight_matrix = false;
    QueryArtifacts a;
    rank(x, p, inst.index, c, &a);
    oracle::Config oc;
    oc.k1 = k1;
    oc.k2 = k2;
    oc.use_weight_matrix = false;
    auto want = oracle::run(inst.H, gen::to_oracle_order(inst, x), p, oc);
    o.require(oracle::relative_error(a.p_tilde, want.p_tilde) <= 1e-9, "differs from unit-weight oracle");
  });
  run_n("no SE", [&](const auto& inst, const auto& x, const auto& p, std::size_t k1, std::size_t k2) {
    auto c = base(inst.index.num_passages(), k1, k2);
    c.use_semantic_enhancement = false;
    QueryArtifacts a;
    rank(x, p, inst.index, c, &a);
    o.require(a.p_tilde == a.p_t, "p_tilde is not p_t");
  });
  run_n("no structure", [&](const auto& inst, const auto& x, const auto& p, std::size_t k1, std::size_t k2) {
    auto c = base(inst.index.num_passages(), k1, k2);
    c.use_structural_enhancement = false;
    auto r = rank(x, p, inst.index, c);
    o.require(r.selected == std::vector<ScoredPassage>(r.ranking.begin(), r.ranking.begin() + k1),
              "selection is not top-k1");
  });
  run_n("dense mode", [&](const auto& inst, const auto& x, const auto& p, std::size_t k1, std::size_t k2) {
    auto c = base(inst.index.num_passages(), k1, k2);
    c.use_hypergraph = false;
    c.use_weight_matrix = false;
    c.use_semantic_enhancement = false;
    c.use_structural_enhancement = false;
    o.require(order_of(rank(x, p, inst.index, c).ranking) == oracle::argsort_desc(p), "ranking differs from dense");
  });
  run_n("t=0 no weights no SE", [&](const auto& inst, const auto& x, const auto& p, std::size_t k1, std::size_t k2) {
    auto c = base(inst.index.num_passages(), k1, k2);
    c.steps = 0;
    c.use_weight_matrix = false;
    c.use_semantic_enhancement = false;
    QueryArtifacts a;
    auto r = rank(x, p, inst.index, c, &a);
    const Eigen::VectorXd masked = inst.H.transpose() * gen::to_oracle_order(inst, x);
    o.require(oracle::relative_error(a.p_tilde, masked) <= 1e-12, "p_tilde is not H^T x");
    o.require(order_of(r.ranking) == oracle::argsort_desc(masked), "ranking is not argsort of H^T x");
  });
  if (o.ok) o.detail = "7 ablations x 50 instances";
  return o;
}

Outcome criterion_containment() {
  Outcome o;
  std::mt19937_64 rng(4242);
  std::size_t queries = 0;
  while (queries < 500) {
    auto inst = gen::random_instance(rng, {50, 20, 0.15, 4});
    const auto n = inst.index.num_passages();
    for (int q = 0; q < 10; ++q, ++queries) {
      std::uniform_int_distribution<std::size_t> k(1, n);
      std::size_t k1 = k(rng), k2 = k(rng);
      if (k1 > k2) std::swap(k1, k2);
      RetrievalConfig c;
      c.k1 = k1;
      c.k2 = k2;
      c.steps = static_cast<int>(q % 5);
      auto x = gen::random_entity_vector(rng, inst.index.num_entities(), 0.1);
      auto p = gen::random_scores(rng, n, -1.0, 1.0);
      auto r = rank(x, p, inst.index, c);

      std::set<std::size_t> sel, seeds, top;
      for (const auto& s : r.selected) sel.insert(s.passage);
      for (std::size_t i = 0; i < k1; ++i) seeds.insert(r.ranking[i].passage);
      for (const auto& s : r.top_k2()) top.insert(s.passage);
      o.require(sel.size() == r.selected.size(), "duplicate selection");
      o.require(std::includes(sel.begin(), sel.end(), seeds.begin(), seeds.end()), "a seed is missing");
      o.require(std::includes(top.begin(), top.end(), sel.begin(), sel.end()), "selection outside top-k2");
      o.require(k1 <= sel.size() && sel.size() <= k2, "size outside [k1, k2]");
      for (auto j : sel) {
        if (seeds.count(j)) continue;
        bool shares = false;
        for (auto s : seeds) shares = shares || shared_entity_count(inst.index.incidence, j, s) > 0;
        o.require(shares, "non-seed member shares nothing with the seeds");
      }
    }
  }
  if (o.ok) o.detail = std::to_string(queries) + " queries";
  return o;
}

Outcome criterion_metrics() {
  Outcome o;
  using S = std::vector<std::string>;
  o.require(exact_match("Berlin", S{"berlin"}) == 1, "EM Berlin/berlin");
  o.require(exact_match("the Berlin", S{"Berlin"}) == 1, "EM article removal");
  o.require(exact_match("West Berlin", S{"Berlin"}) == 0, "EM West Berlin");
  o.require(std::abs(token_f1("capital Berlin", S{"Berlin"}) - 2.0 / 3.0) <= 1e-12, "F1 capital Berlin");
  o.require(token_f1("Berlin is here", S{"Berlin is here"}) == 1.0, "F1 identical");
  o.require(token_f1("Paris", S{"Berlin"}) == 0.0, "F1 disjoint");
  const S top5 = {"a", "b", "c", "d", "e"};
  o.require(recall_at_k(top5, S{"a", "b"}, 5) == 1.0, "Recall both");
  o.require(recall_at_k(S{"a", "c", "d", "e", "f", "b"}, S{"a", "b"}, 5) == 0.5, "Recall half");
  o.require(recall_at_k(S{"c", "d", "e", "f", "g"}, S{"a"}, 5) == 0.0, "Recall miss");
  if (o.ok) o.detail = "EM, F1 and Recall@k examples exact";
  return o;
}

// Capitalized pseudo-words, unique per id, never stopwords.
std::string synthetic_name(std::size_t id) {
  static const char* syll[] = {"ka", "lo", "mi", "ru", "be", "po", "ta", "su", "ne", "vi",
                               "do", "ga", "ze", "fu", "ri", "ha", "no", "pe", "tu", "xi"};
  std::string s;
  for (int d = 0; d < 4; ++d) {
    s += syll[id % 20];
    id /= 20;
  }
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

Outcome criterion_performance() {
  Outcome o;
  constexpr std::size_t kPassages = 10000, kEntities = 50000, kPerPassage = 8;
  std::mt19937_64 rng(1234);

  // Every entity appears at least once; the rest of the slots are uniform.
  std::vector<std::size_t> slots(kEntities);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  std::uniform_int_distribution<std::size_t> any(0, kEntities - 1);
  while (slots.size() < kPassages * kPerPassage) slots.push_back(any(rng));
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<std::vector<std::size_t>> members(kPassages);
  std::size_t nnz = 0;
  for (std::size_t j = 0; j < kPassages; ++j) {
    std::set<std::size_t> seen;
    for (std::size_t k = 0; k < kPerPassage; ++k) {
      auto e = slots[j * kPerPassage + k];
      if (seen.insert(e).second) members[j].push_back(e);
    }
    nnz += members[j].size();
  }
  std::set<std::size_t> covered;
  for (const auto& m : members) covered.insert(m.begin(), m.end());

  testutil::TempDir dir;
  {
    std::ofstream corpus(dir / "synthetic.jsonl");
    for (std::size_t j = 0; j < kPassages; ++j) {
      std::string text;
      for (std::size_t k = 0; k < members[j].size(); ++k) {
        if (k > 0) text += k % 2 ? " met " : " and ";
        text += synthetic_name(members[j][k]);
      }
      text += ".";
      char id[32];
      std::snprintf(id, sizeof id, "s%05zu", j);
      corpus << nlohmann::json{{"id", id}, {"title", ""}, {"text", text}}.dump() << '\n';
    }
  }

  const auto idx = (dir / "index").string();
  std::ostringstream out, err;
  const auto t_index = Clock::now();
  int code = run_cli({"hyperrank", "--offline", "index", "--corpus", (dir / "synthetic.jsonl").string(), "--index-dir",
                      idx},
                     out, err, {});
  const double index_seconds = seconds_since(t_index);
  o.require(code == kExitOk, "index failed: " + err.str());
  if (!o.ok) return o;

  std::ostringstream sout, serr;
  code = run_cli({"hyperrank", "stats", "--index-dir", idx}, sout, serr, {});
  o.require(code == kExitOk, "stats failed: " + serr.str());
  if (!o.ok) return o;
  const auto stats = nlohmann::json::parse(sout.str());
  o.require(stats["nodes"] == covered.size(), "node count " + stats["nodes"].dump());
  o.require(stats["hyperedges"] == kPassages, "hyperedge count " + stats["hyperedges"].dump());
  o.require(stats["nnz"] == nnz, "nnz " + stats["nnz"].dump() + " vs " + std::to_string(nnz));
  o.require(covered.size() == kEntities, "generator did not cover every entity");

  const auto loaded = load_index_dir(idx);
  OfflineHashEncoder enc(loaded.graph.embeddings.dim);
  OfflineExtractor ex;
  Retriever retriever(loaded.graph, loaded.entity_embeddings, loaded.passage_embeddings, enc, ex);
  RetrievalConfig config;
  config.steps = 4;

  std::vector<std::string> queries;
  for (int q = 0; q < 1000; ++q) {
    queries.push_back("Where did " + synthetic_name(any(rng)) + " meet " + synthetic_name(any(rng)) + "?");
  }
  std::size_t diffused = 0;
  const auto t0 = Clock::now();
  for (const auto& q : queries) {
    auto r = retriever.retrieve(q, config);
    diffused += r.diagnostics.dense_fallback ? 0 : 1;
  }
  const double elapsed = seconds_since(t0);
  o.require(diffused == queries.size(), "some queries found no entity (" + std::to_string(diffused) + ")");
  o.require(elapsed < 60.0, "1000 retrievals took " + std::to_string(elapsed) + " s");
  if (o.ok) {
    std::ostringstream s;
    s << "1000 retrievals in " << elapsed << " s (index build " << index_seconds << " s); nodes=" << stats["nodes"]
      << " hyperedges=" << stats["hyperedges"] << " nnz=" << stats["nnz"];
    o.detail = s.str();
  }
  return o;
}

Outcome criterion_determinism() {
  Outcome o;
  testutil::TempDir dir;
  std::string reports[2][2];
  for (int run = 0; run < 2; ++run) {
    const auto base = dir / ("run" + std::to_string(run));
    std::ostringstream out, err;
    int code = run_cli({"hyperrank", "--offline", "index", "--corpus", testutil::fixture("mini_corpus.jsonl").string(),
                        "--index-dir", (base / "index").string()},
                       out, err, {});
    o.require(code == kExitOk, "index failed: " + err.str());
    code = run_cli({"hyperrank", "--offline", "--parallelism", run == 0 ? "1" : "4", "eval",
                    testutil::fixture("mini_dataset.jsonl").string(), "--index-dir", (base / "index").string(),
                    "--report-dir", (base / "eval").string()},
                   out, err, {});
    o.require(code == kExitOk, "eval failed: " + err.str());
    if (!o.ok) return o;
    reports[run][0] = io::read_text_file(base / "eval" / "report.json");
    reports[run][1] = io::read_text_file(base / "eval" / "report.txt");
  }
  o.require(reports[0][0] == reports[1][0], "report.json differs");
  o.require(reports[0][1] == reports[1][1], "report.txt differs");
  if (o.ok) o.detail = "report.json and report.txt byte-identical (" + io::to_hex(io::fnv1a64(reports[0][0])) + ")";
  return o;
}

}  // namespace

int main() {
  const auto cases = make_cases();
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"dense-oracle equivalence", [&] { return criterion_dense_oracle(cases); }},
      {"spectral bound and stability", [&] { return criterion_spectral(cases); }},
      {"toy scenario selects {P1, P2}", criterion_toy},
      {"ablation identities", criterion_ablations},
      {"selection containment", criterion_containment},
      {"metric examples", criterion_metrics},
      {"performance smoke", criterion_performance},
      {"eval determinism", criterion_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome result;
    try {
      result = criteria[i].second();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    failures += result.ok ? 0 : 1;
    std::cout << (result.ok ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first << " -- "
              << result.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
