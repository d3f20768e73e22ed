#include "hyperrank/app.hpp"

#include <fstream>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "hyperrank/errors.hpp"
#include "hyperrank/evaluation.hpp"
#include "hyperrank/index.hpp"
#include "hyperrank/io.hpp"

extern char** environ;

namespace hyperrank {

namespace fs = std::filesystem;

fs::path AppConfig::effective_cache_dir() const {
  return cache_dir.empty() ? index_dir / "cache" : cache_dir;
}

void AppConfig::validate() const {
  try {
    retrieval.validate();
  } catch (const ContractError& e) {
    throw PreconditionError(e.what());
  }
  if (concurrency < 1) throw PreconditionError("concurrency must be >= 1");
  if (parallelism < 1) throw PreconditionError("parallelism must be >= 1");
  if (endpoints.embed_batch < 1) throw PreconditionError("embed_batch must be >= 1");
  if (endpoints.offline_dim < 1) throw PreconditionError("offline_dim must be >= 1");
  if (index_dir.empty()) throw PreconditionError("no index directory configured");
  if (!offline) {
    if (endpoints.api_base.empty() && endpoints.embed_api_base.empty()) {
      throw PreconditionError("no API base URL configured (set HYPERRANK_API_BASE or use --offline)");
    }
    if (endpoints.embed_model.empty()) throw PreconditionError("no embedding model configured");
    if (endpoints.chat_model.empty()) throw PreconditionError("no chat model configured");
  }
}

void apply_config_json(AppConfig& c, const nlohmann::json& s) {
  if (!s.is_object()) throw PreconditionError("config must be a JSON object");
  using Setter = std::function<void(const nlohmann::json&)>;
  const std::map<std::string, Setter> setters = {
      {"corpus", [&](const auto& v) { c.corpus = v.template get<std::string>(); }},
      {"index_dir", [&](const auto& v) { c.index_dir = v.template get<std::string>(); }},
      {"cache_dir", [&](const auto& v) { c.cache_dir = v.template get<std::string>(); }},
      {"extract_prompt", [&](const auto& v) { c.extract_prompt = v.template get<std::string>(); }},
      {"eta", [&](const auto& v) { c.retrieval.eta = v.template get<double>(); }},
      {"beta", [&](const auto& v) { c.retrieval.beta = v.template get<double>(); }},
      {"t", [&](const auto& v) { c.retrieval.steps = v.template get<int>(); }},
      {"k1", [&](const auto& v) { c.retrieval.k1 = v.template get<std::size_t>(); }},
      {"k2", [&](const auto& v) { c.retrieval.k2 = v.template get<std::size_t>(); }},
      {"use_hypergraph", [&](const auto& v) { c.retrieval.use_hypergraph = v.template get<bool>(); }},
      {"use_weight_matrix", [&](const auto& v) { c.retrieval.use_weight_matrix = v.template get<bool>(); }},
      {"use_semantic_enhancement",
       [&](const auto& v) { c.retrieval.use_semantic_enhancement = v.template get<bool>(); }},
      {"use_structural_enhancement",
       [&](const auto& v) { c.retrieval.use_structural_enhancement = v.template get<bool>(); }},
      {"offline", [&](const auto& v) { c.offline = v.template get<bool>(); }},
      {"api_base", [&](const auto& v) { c.endpoints.api_base = v.template get<std::string>(); }},
      {"api_key", [&](const auto& v) { c.endpoints.api_key = v.template get<std::string>(); }},
      {"chat_model", [&](const auto& v) { c.endpoints.chat_model = v.template get<std::string>(); }},
      {"embed_api_base", [&](const auto& v) { c.endpoints.embed_api_base = v.template get<std::string>(); }},
      {"embed_api_key", [&](const auto& v) { c.endpoints.embed_api_key = v.template get<std::string>(); }},
      {"embed_model", [&](const auto& v) { c.endpoints.embed_model = v.template get<std::string>(); }},
      {"embed_batch", [&](const auto& v) { c.endpoints.embed_batch = v.template get<std::size_t>(); }},
      {"offline_dim", [&](const auto& v) { c.endpoints.offline_dim = v.template get<std::size_t>(); }},
      {"concurrency", [&](const auto& v) { c.concurrency = v.template get<std::size_t>(); }},
      {"parallelism", [&](const auto& v) { c.parallelism = v.template get<std::size_t>(); }},
  };
  for (const auto& [key, value] : s.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw PreconditionError("unknown config key '" + key + "'");
    try {
      it->second(value);
    } catch (const nlohmann::json::exception& e) {
      throw PreconditionError("config key '" + key + "': " + e.what());
    }
  }
}

namespace {

bool truthy(const std::string& v) { return v == "1" || v == "true" || v == "yes" || v == "on"; }

}  // namespace

void apply_environment(AppConfig& c, const std::map<std::string, std::string>& env) {
  auto get = [&](const char* name) -> const std::string* {
    auto it = env.find(name);
    return it == env.end() || it->second.empty() ? nullptr : &it->second;
  };
  if (auto v = get("OPENAI_API_KEY")) c.endpoints.api_key = *v;
  if (auto v = get("HYPERRANK_API_KEY")) c.endpoints.api_key = *v;
  if (auto v = get("HYPERRANK_API_BASE")) c.endpoints.api_base = *v;
  if (auto v = get("HYPERRANK_CHAT_MODEL")) c.endpoints.chat_model = *v;
  if (auto v = get("HYPERRANK_EMBED_API_BASE")) c.endpoints.embed_api_base = *v;
  if (auto v = get("HYPERRANK_EMBED_API_KEY")) c.endpoints.embed_api_key = *v;
  if (auto v = get("HYPERRANK_EMBED_MODEL")) c.endpoints.embed_model = *v;
  if (auto v = get("HYPERRANK_INDEX_DIR")) c.index_dir = *v;
  if (auto v = get("HYPERRANK_OFFLINE")) c.offline = truthy(*v);
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view kv(*e);
    auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
  }
  return env;
}

Clients make_clients(const AppConfig& config) {
  Clients clients;
  if (config.offline) {
    clients.extractor = std::make_unique<OfflineExtractor>();
    clients.encoder = std::make_unique<OfflineHashEncoder>(config.endpoints.offline_dim);
    clients.chat = std::make_unique<OfflineChatClient>();
    return clients;
  }
  const auto& ep = config.endpoints;
  auto chat_client = std::make_shared<const OpenAIClient>(EndpointConfig{ep.api_base, ep.api_key, ep.chat_model});
  auto embed_client = std::make_shared<const OpenAIClient>(
      EndpointConfig{ep.embed_api_base.empty() ? ep.api_base : ep.embed_api_base,
                     ep.embed_api_key.empty() ? ep.api_key : ep.embed_api_key, ep.embed_model});
  auto prompt = config.extract_prompt.empty() ? ExtractionPrompt::defaults()
                                              : ExtractionPrompt::from_file(config.extract_prompt);
  clients.extractor = std::make_unique<ChatExtractor>(chat_client, std::move(prompt));
  clients.encoder = std::make_unique<RemoteEncoder>(embed_client, ep.embed_batch);
  clients.chat = std::make_unique<RemoteChatClient>(chat_client);
  return clients;
}

LoadedIndex load_index_dir(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) {
    throw PreconditionError("no index at '" + dir.string() + "'; run `hyperrank index` first");
  }
  LoadedIndex loaded;
  loaded.graph = load_index(dir);
  try {
    loaded.passages = load_corpus(dir / "passages.jsonl");
  } catch (const std::exception& e) {
    throw IndexIntegrityError(std::string("index passage copy unreadable: ") + e.what());
  }
  if (loaded.passages.size() != loaded.graph.num_passages() ||
      corpus_hash(loaded.passages) != loaded.graph.corpus_hash) {
    throw IndexIntegrityError("index passage copy does not match the manifest");
  }
  const auto& emb = loaded.graph.embeddings;
  loaded.entity_embeddings = load_embeddings(dir / emb.entity_file, loaded.graph.num_entities(), emb.dim);
  loaded.passage_embeddings = load_embeddings(dir / emb.passage_file, loaded.graph.num_passages(), emb.dim);
  return loaded;
}

namespace {

std::string file_safe(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
  }
  return out;
}

// Runs a command body and maps exceptions onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const IndexIntegrityError& e) {
    err << "error: index: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartial;
  }
}

struct QueryContext {
  LoadedIndex loaded;
  Clients clients;
  std::unique_ptr<Retriever> retriever;
};

std::unique_ptr<QueryContext> open_for_queries(const AppConfig& config) {
  config.validate();
  auto ctx = std::make_unique<QueryContext>();
  ctx->loaded = load_index_dir(config.index_dir);
  ctx->clients = make_clients(config);
  const auto& built_with = ctx->loaded.graph.embeddings.encoder_id;
  if (built_with != ctx->clients.encoder->id()) {
    throw PreconditionError("index was embedded with '" + built_with + "' but the configured encoder is '" +
                            ctx->clients.encoder->id() + "'");
  }
  ctx->retriever = std::make_unique<Retriever>(ctx->loaded.graph, ctx->loaded.entity_embeddings,
                                               ctx->loaded.passage_embeddings, *ctx->clients.encoder,
                                               *ctx->clients.extractor);
  return ctx;
}

}  // namespace

int cmd_index(const AppConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    if (config.corpus.empty()) throw PreconditionError("no corpus path given (--corpus)");
    std::error_code ec;
    if (!fs::is_regular_file(config.corpus, ec)) {
      throw PreconditionError("cannot read corpus '" + config.corpus.string() + "'");
    }
    std::vector<Passage> passages;
    try {
      passages = load_corpus(config.corpus);
    } catch (const ParseError& e) {
      throw PreconditionError("corpus '" + config.corpus.string() + "': " + e.what());
    } catch (const ValidationError& e) {
      throw PreconditionError("corpus '" + config.corpus.string() + "': " + e.what());
    }

    auto clients = make_clients(config);
    const auto cache_dir = config.effective_cache_dir();
    const auto extraction_path = cache_dir / ("extraction-" + file_safe(clients.extractor->id()) + ".jsonl");
    auto cache = ExtractionCache::load(extraction_path);
    std::vector<EntitySet> entity_sets;
    try {
      entity_sets = extract_corpus(passages, *clients.extractor, cache, config.concurrency);
    } catch (...) {
      cache.save(extraction_path);
      throw;
    }
    cache.save(extraction_path);

    auto index = build_index(passages, entity_sets);

    EmbeddingCache embedding_cache(cache_dir / ("embeddings-" + file_safe(clients.encoder->id())),
                                   clients.encoder->id());
    std::vector<std::string> passage_texts;
    passage_texts.reserve(passages.size());
    for (const auto& p : passages) passage_texts.push_back(passage_embedding_text(p));
    auto entity_embeddings = embed_batch(index.catalog.entities(), *clients.encoder, &embedding_cache);
    auto passage_embeddings = embed_batch(passage_texts, *clients.encoder, &embedding_cache);

    index.embeddings.encoder_id = clients.encoder->id();
    index.embeddings.dim = static_cast<std::size_t>(std::max(entity_embeddings.dim(), passage_embeddings.dim()));
    if (entity_embeddings.rows() == 0) entity_embeddings = EmbeddingMatrix(0, index.embeddings.dim, {});
    if (passage_embeddings.rows() == 0) passage_embeddings = EmbeddingMatrix(0, index.embeddings.dim, {});

    fs::create_directories(config.index_dir);
    fs::remove(config.index_dir / "manifest.json");
    save_embeddings(entity_embeddings, config.index_dir / index.embeddings.entity_file);
    save_embeddings(passage_embeddings, config.index_dir / index.embeddings.passage_file);
    io::write_file_atomic(config.index_dir / "passages.jsonl", serialize_corpus(passages));
    save_index(index, config.index_dir);

    nlohmann::json summary = {{"index_dir", config.index_dir.string()},
                              {"nodes", index.num_entities()},
                              {"hyperedges", index.num_passages()},
                              {"nnz", index.incidence.nnz()},
                              {"corpus_hash", index.corpus_hash},
                              {"encoder_id", index.embeddings.encoder_id}};
    out << summary.dump(2) << '\n';
    return kExitOk;
  });
}

int cmd_retrieve(const AppConfig& config, const std::string& query, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto ctx = open_for_queries(config);
    auto result = ctx->retriever->retrieve(query, config.retrieval);
    for (const auto& w : result.diagnostics.warnings) err << "warning: " << w << '\n';
    out << to_json(result, ctx->loaded.graph, query).dump(2) << '\n';
    return kExitOk;
  });
}

int cmd_answer(const AppConfig& config, const std::string& query, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto ctx = open_for_queries(config);
    if (!ctx->clients.chat) throw PreconditionError("no reader model configured");
    auto result = ctx->retriever->retrieve(query, config.retrieval);
    for (const auto& w : result.diagnostics.warnings) err << "warning: " << w << '\n';
    std::vector<Passage> context;
    nlohmann::json selected = nlohmann::json::array();
    for (const auto& s : result.selected) {
      context.push_back(ctx->loaded.passages[s.passage]);
      selected.push_back(ctx->loaded.graph.passage_ids[s.passage]);
    }
    auto reply = answer(query, context, *ctx->clients.chat);
    out << nlohmann::json{{"query", query}, {"answer", reply}, {"selected", selected}}.dump(2) << '\n';
    return kExitOk;
  });
}

int cmd_eval(const AppConfig& config, const fs::path& dataset_path, const fs::path& report_dir,
             bool with_qa, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::error_code ec;
    if (!fs::is_regular_file(dataset_path, ec)) {
      throw PreconditionError("cannot read dataset '" + dataset_path.string() + "'");
    }
    std::vector<QAExample> dataset;
    try {
      dataset = load_dataset(dataset_path);
    } catch (const ParseError& e) {
      throw PreconditionError("dataset '" + dataset_path.string() + "': " + e.what());
    }
    auto ctx = open_for_queries(config);

    EvalOptions options;
    options.parallelism = config.parallelism;
    options.llm = with_qa ? ctx->clients.chat.get() : nullptr;
    auto report = run_eval(dataset, *ctx->retriever, ctx->loaded.passages, config.retrieval, options);

    const auto dir = report_dir.empty() ? config.index_dir / "eval" : report_dir;
    io::write_file_atomic(dir / "report.json", report_json(report).dump(2) + "\n");
    io::write_file_atomic(dir / "report.txt", report_table(report));
    io::write_file_atomic(dir / "timing.json", timing_json(report).dump(2) + "\n");

    out << report_table(report);
    out << "report written to " << (dir / "report.json").string() << '\n';
    for (std::size_t i = 0; i < report.records.size(); ++i) {
      if (!report.records[i].error.empty()) err << "example " << i << ": " << report.records[i].error << '\n';
    }
    return report.aggregates.failed > 0 ? kExitPartial : kExitOk;
  });
}

int cmd_stats(const AppConfig& config, bool table, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!fs::exists(config.index_dir / "manifest.json")) {
      throw PreconditionError("no index at '" + config.index_dir.string() + "'");
    }
    auto stats = graph_stats(load_index(config.index_dir));
    if (table) {
      out << format_stats_table(stats);
    } else {
      out << to_json(stats).dump(2) << '\n';
    }
    return kExitOk;
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::map<std::string, std::string>& env) {
  CLI::App app{"Entity-hypergraph passage retrieval for multi-hop QA", "hyperrank"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  std::optional<std::string> corpus, index_dir, cache_dir, extract_prompt;
  std::optional<std::string> api_base, chat_model, embed_api_base, embed_model;
  std::optional<double> eta, beta;
  std::optional<int> steps;
  std::optional<std::size_t> k1, k2, concurrency, parallelism, offline_dim;
  bool offline = false, no_weights = false, no_se = false, no_struct = false, dense = false;

  app.add_option("--config", config_file, "JSON config file");
  app.add_option("--corpus", corpus, "corpus JSONL");
  app.add_option("--index-dir", index_dir, "index directory");
  app.add_option("--cache-dir", cache_dir, "extraction/embedding cache directory");
  app.add_option("--extract-prompt", extract_prompt, "extraction prompt template file");
  app.add_option("--api-base", api_base, "OpenAI-compatible base URL");
  app.add_option("--chat-model", chat_model, "chat model for extraction and answers");
  app.add_option("--embed-api-base", embed_api_base, "base URL for embeddings if different");
  app.add_option("--embed-model", embed_model, "embedding model");
  app.add_option("--eta", eta, "entity similarity threshold");
  app.add_option("--beta", beta, "dense score weight in the final blend");
  app.add_option("--t", steps, "diffusion steps");
  app.add_option("--k1", k1, "seed count for structural enhancement");
  app.add_option("--k2", k2, "candidate depth for structural enhancement");
  app.add_option("--concurrency", concurrency, "in-flight extraction requests");
  app.add_option("--parallelism", parallelism, "concurrently evaluated examples");
  app.add_option("--offline-dim", offline_dim, "offline encoder dimension");
  app.add_flag("--offline", offline, "forbid network access; use offline extractor/encoder/reader");
  app.add_flag("--no-weights", no_weights, "replace the passage weight matrix with identity");
  app.add_flag("--no-se", no_se, "disable semantic enhancement");
  app.add_flag("--no-struct", no_struct, "plain top-k1 instead of structural enhancement");
  app.add_flag("--dense", dense, "plain dense retrieval (skip hypergraph diffusion)");

  auto* index_cmd = app.add_subcommand("index", "extract entities, embed, and build the index");
  std::string query;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "rank passages for a query");
  retrieve_cmd->add_option("query", query, "question text")->required();
  auto* answer_cmd = app.add_subcommand("answer", "retrieve and answer a question");
  answer_cmd->add_option("query", query, "question text")->required();
  std::string dataset, report_dir;
  bool no_qa = false;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate retrieval and QA on a dataset");
  eval_cmd->add_option("dataset", dataset, "dataset JSONL")->required();
  eval_cmd->add_option("--report-dir", report_dir, "where report.json/report.txt/timing.json go");
  eval_cmd->add_flag("--no-qa", no_qa, "score retrieval only");
  bool table = false;
  auto* stats_cmd = app.add_subcommand("stats", "hypergraph scale statistics");
  stats_cmd->add_flag("--table", table, "aligned text instead of JSON");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitPrecondition;
  }

  AppConfig config;
  int rc = guarded(err, [&] {
    // Precedence: flags > environment > config file > defaults.
    std::string file = config_file;
    if (file.empty()) {
      if (auto it = env.find("HYPERRANK_CONFIG"); it != env.end()) file = it->second;
    }
    if (!file.empty()) {
      nlohmann::json settings;
      try {
        settings = nlohmann::json::parse(io::read_text_file(file));
      } catch (const std::exception& e) {
        throw PreconditionError("config file '" + file + "': " + e.what());
      }
      apply_config_json(config, settings);
    }
    apply_environment(config, env);
    if (corpus) config.corpus = *corpus;
    if (index_dir) config.index_dir = *index_dir;
    if (cache_dir) config.cache_dir = *cache_dir;
    if (extract_prompt) config.extract_prompt = *extract_prompt;
    if (api_base) config.endpoints.api_base = *api_base;
    if (chat_model) config.endpoints.chat_model = *chat_model;
    if (embed_api_base) config.endpoints.embed_api_base = *embed_api_base;
    if (embed_model) config.endpoints.embed_model = *embed_model;
    if (eta) config.retrieval.eta = *eta;
    if (beta) config.retrieval.beta = *beta;
    if (steps) config.retrieval.steps = *steps;
    if (k1) config.retrieval.k1 = *k1;
    if (k2) config.retrieval.k2 = *k2;
    if (concurrency) config.concurrency = *concurrency;
    if (parallelism) config.parallelism = *parallelism;
    if (offline_dim) config.endpoints.offline_dim = *offline_dim;
    if (offline) config.offline = true;
    if (no_weights) config.retrieval.use_weight_matrix = false;
    if (no_se) config.retrieval.use_semantic_enhancement = false;
    if (no_struct) config.retrieval.use_structural_enhancement = false;
    if (dense) config.retrieval.use_hypergraph = false;
    return kExitOk;
  });
  if (rc != kExitOk) return rc;

  const bool previous_offline = net::offline();
  net::set_offline(config.offline);
  struct Restore {
    bool value;
    ~Restore() { net::set_offline(value); }
  } restore{previous_offline};

  if (*index_cmd) return cmd_index(config, out, err);
  if (*retrieve_cmd) return cmd_retrieve(config, query, out, err);
  if (*answer_cmd) return cmd_answer(config, query, out, err);
  if (*eval_cmd) return cmd_eval(config, dataset, report_dir, !no_qa, out, err);
  if (*stats_cmd) {
    // stats never touches the network or the encoder, so endpoint settings are not required.
    return cmd_stats(config, table, out, err);
  }
  return kExitPrecondition;
}

}  // namespace hyperrank
