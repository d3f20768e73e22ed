#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyperrank/answer.hpp"
#include "hyperrank/corpus.hpp"
#include "hyperrank/retrieval.hpp"
#include "json.hpp"

namespace hyperrank {

struct QAExample {
  std::string question;
  std::vector<std::string> gold_answers;
  std::vector<std::string> gold_passage_ids;
};

/// JSONL, one `{"question", "answers": [...], "gold_passage_ids": [...]}` per line.
std::vector<QAExample> load_dataset(const std::filesystem::path& path);
std::vector<QAExample> parse_dataset(std::string_view jsonl);

struct ExampleRecord {
  std::string question;
  std::vector<std::string> selected_ids;
  std::vector<std::string> ranked_ids;
  double recall_at_5 = 0.0;
  double recall_at_10 = 0.0;
  double hit_at_5 = 0.0;
  double hit_at_10 = 0.0;
  std::optional<std::string> prediction;
  std::optional<int> em;
  std::optional<double> f1;
  double retrieval_seconds = 0.0;
  std::string error;  // non-empty: example excluded from aggregates
};

struct EvalAggregates {
  std::size_t examples = 0;
  std::size_t scored = 0;
  std::size_t failed = 0;
  double recall_at_5 = 0.0;
  double recall_at_10 = 0.0;
  double hit_at_5 = 0.0;
  double hit_at_10 = 0.0;
  std::optional<double> mean_em;
  std::optional<double> mean_f1;
  double mean_selected = 0.0;
  double total_retrieval_seconds = 0.0;
};

struct EvalReport {
  std::vector<ExampleRecord> records;
  EvalAggregates aggregates;
};

/// Means over the records without an error.
EvalAggregates compute_aggregates(const std::vector<ExampleRecord>& records);

struct EvalOptions {
  std::size_t parallelism = 1;
  const ChatClient* llm = nullptr;  // null: retrieval metrics only
};

/// Runs retrieval (and QA when a reader is given) over the dataset. Only the ranking
/// core (diffusion and enhancement) is timed; extraction and encoding are not.
/// Examples naming unknown gold passages are recorded with an error and skipped.
EvalReport run_eval(const std::vector<QAExample>& dataset, const Retriever& retriever,
                    const std::vector<Passage>& passages, const RetrievalConfig& config,
                    const EvalOptions& options = {});

/// Deterministic report: everything except wall-clock timings.
nlohmann::json report_json(const EvalReport& report);
/// Timings only, per example and total.
nlohmann::json timing_json(const EvalReport& report);
/// Aligned-column summary table, also timing-free.
std::string report_table(const EvalReport& report);

}  // namespace hyperrank
