#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperrank/answer.hpp"
#include "hyperrank/embedding.hpp"
#include "hyperrank/extraction.hpp"
#include "hyperrank/retrieval.hpp"
#include "json.hpp"

namespace hyperrank {

enum ExitCode : int { kExitOk = 0, kExitPartial = 1, kExitPrecondition = 2 };

// Missing input, bad configuration or absent index: exit code 2.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EndpointSettings {
  std::string api_base;
  std::string api_key;
  std::string chat_model;
  std::string embed_api_base;  // empty: same as api_base
  std::string embed_api_key;   // empty: same as api_key
  std::string embed_model;
  std::size_t embed_batch = 64;
  std::size_t offline_dim = 256;
};

struct AppConfig {
  std::filesystem::path corpus;
  std::filesystem::path index_dir = "index";
  std::filesystem::path cache_dir;  // empty: <index_dir>/cache
  std::filesystem::path extract_prompt;
  RetrievalConfig retrieval;
  EndpointSettings endpoints;
  bool offline = false;
  std::size_t concurrency = 4;  // in-flight extraction requests
  std::size_t parallelism = 1;  // concurrently evaluated examples

  std::filesystem::path effective_cache_dir() const;
  void validate() const;  // throws PreconditionError
};

/// Overlays a JSON object of settings onto `config`. Unknown keys throw PreconditionError.
void apply_config_json(AppConfig& config, const nlohmann::json& settings);

/// Overlays HYPERRANK_* variables from `env` onto `config`.
void apply_environment(AppConfig& config, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_environment();

/// Extractor, encoder and reader for the configured mode. Offline mode never builds a
/// remote client.
struct Clients {
  std::unique_ptr<ExtractionClient> extractor;
  std::unique_ptr<EncoderClient> encoder;
  std::unique_ptr<ChatClient> chat;  // null when no reader is configured
};
Clients make_clients(const AppConfig& config);

/// Everything a query needs, loaded from an index directory.
struct LoadedIndex {
  HypergraphIndex graph;
  std::vector<Passage> passages;
  EmbeddingMatrix entity_embeddings;
  EmbeddingMatrix passage_embeddings;
};
LoadedIndex load_index_dir(const std::filesystem::path& dir);

int cmd_index(const AppConfig& config, std::ostream& out, std::ostream& err);
int cmd_retrieve(const AppConfig& config, const std::string& query, std::ostream& out, std::ostream& err);
int cmd_answer(const AppConfig& config, const std::string& query, std::ostream& out, std::ostream& err);
int cmd_eval(const AppConfig& config, const std::filesystem::path& dataset,
             const std::filesystem::path& report_dir, bool with_qa, std::ostream& out,
             std::ostream& err);
int cmd_stats(const AppConfig& config, bool table, std::ostream& out, std::ostream& err);

/// Full command line (args[0] is the program name). Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::map<std::string, std::string>& env = process_environment());

}  // namespace hyperrank
