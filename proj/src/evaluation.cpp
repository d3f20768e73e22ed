#include "hyperrank/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <iomanip>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "hyperrank/errors.hpp"
#include "hyperrank/io.hpp"
#include "hyperrank/metrics.hpp"

namespace hyperrank {

std::vector<QAExample> parse_dataset(std::string_view jsonl) {
  std::vector<QAExample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      auto obj = nlohmann::json::parse(line);
      QAExample ex{obj.at("question").get<std::string>(),
                   obj.at("answers").get<std::vector<std::string>>(),
                   obj.value("gold_passage_ids", std::vector<std::string>{})};
      if (ex.gold_answers.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": answers must be non-empty", line_no);
      }
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

std::vector<QAExample> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(io::read_text_file(path));
}

EvalAggregates compute_aggregates(const std::vector<ExampleRecord>& records) {
  EvalAggregates a;
  a.examples = records.size();
  double em_sum = 0.0;
  double f1_sum = 0.0;
  std::size_t qa_count = 0;
  double selected_sum = 0.0;
  for (const auto& r : records) {
    a.total_retrieval_seconds += r.retrieval_seconds;
    if (!r.error.empty()) {
      ++a.failed;
      continue;
    }
    ++a.scored;
    a.recall_at_5 += r.recall_at_5;
    a.recall_at_10 += r.recall_at_10;
    a.hit_at_5 += r.hit_at_5;
    a.hit_at_10 += r.hit_at_10;
    selected_sum += static_cast<double>(r.selected_ids.size());
    if (r.em && r.f1) {
      em_sum += *r.em;
      f1_sum += *r.f1;
      ++qa_count;
    }
  }
  if (a.scored > 0) {
    const auto n = static_cast<double>(a.scored);
    a.recall_at_5 /= n;
    a.recall_at_10 /= n;
    a.hit_at_5 /= n;
    a.hit_at_10 /= n;
    a.mean_selected = selected_sum / n;
  }
  if (qa_count > 0) {
    a.mean_em = em_sum / static_cast<double>(qa_count);
    a.mean_f1 = f1_sum / static_cast<double>(qa_count);
  }
  return a;
}

namespace {

ExampleRecord evaluate_one(const QAExample& ex, const Retriever& retriever,
                           const std::vector<Passage>& passages,
                           const std::unordered_map<std::string, std::size_t>& column,
                           const RetrievalConfig& config, const ChatClient* llm) {
  ExampleRecord rec;
  rec.question = ex.question;
  for (const auto& gold : ex.gold_passage_ids) {
    if (!column.contains(gold)) {
      rec.error = "gold passage id '" + gold + "' is not in the corpus";
      return rec;
    }
  }

  try {
    const auto vectors = retriever.prepare(ex.question);
    const auto start = std::chrono::steady_clock::now();
    const auto result = retriever.rank_prepared(vectors, config);
    rec.retrieval_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto& ids = retriever.index().passage_ids;
    for (const auto& s : result.ranking) rec.ranked_ids.push_back(ids[s.passage]);
    for (const auto& s : result.selected) rec.selected_ids.push_back(ids[s.passage]);

    if (!ex.gold_passage_ids.empty()) {
      rec.recall_at_5 = recall_at_k(rec.ranked_ids, ex.gold_passage_ids, 5);
      rec.recall_at_10 = recall_at_k(rec.ranked_ids, ex.gold_passage_ids, 10);
      rec.hit_at_5 = hit_at_k(rec.ranked_ids, ex.gold_passage_ids, 5);
      rec.hit_at_10 = hit_at_k(rec.ranked_ids, ex.gold_passage_ids, 10);
    }

    if (llm != nullptr) {
      std::vector<Passage> context;
      for (const auto& s : result.selected) context.push_back(passages[s.passage]);
      rec.prediction = answer(ex.question, context, *llm);
      rec.em = exact_match(*rec.prediction, ex.gold_answers);
      rec.f1 = token_f1(*rec.prediction, ex.gold_answers);
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

EvalReport run_eval(const std::vector<QAExample>& dataset, const Retriever& retriever,
                    const std::vector<Passage>& passages, const RetrievalConfig& config,
                    const EvalOptions& options) {
  config.validate();
  const auto& ids = retriever.index().passage_ids;
  if (passages.size() != ids.size()) {
    throw ContractError("passage list does not match the index (" + std::to_string(passages.size()) +
                        " vs " + std::to_string(ids.size()) + ")");
  }
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t j = 0; j < ids.size(); ++j) column.emplace(ids[j], j);

  EvalReport report;
  report.records.resize(dataset.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < dataset.size(); i = next.fetch_add(1)) {
      report.records[i] = evaluate_one(dataset[i], retriever, passages, column, config, options.llm);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(dataset.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  report.aggregates = compute_aggregates(report.records);
  return report;
}

nlohmann::json report_json(const EvalReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) {
    nlohmann::json rec = {
        {"question", r.question},
        {"selected", r.selected_ids},
        {"ranked", r.ranked_ids},
        {"recall_at_5", r.recall_at_5},
        {"recall_at_10", r.recall_at_10},
        {"hit_at_5", r.hit_at_5},
        {"hit_at_10", r.hit_at_10},
    };
    if (r.prediction) {
      rec["prediction"] = *r.prediction;
      rec["em"] = *r.em;
      rec["f1"] = *r.f1;
    }
    if (!r.error.empty()) rec["error"] = r.error;
    records.push_back(std::move(rec));
  }
  const auto& a = report.aggregates;
  return {
      {"aggregates",
       {{"examples", a.examples},
        {"scored", a.scored},
        {"failed", a.failed},
        {"recall_at_5", a.recall_at_5},
        {"recall_at_10", a.recall_at_10},
        {"hit_at_5", a.hit_at_5},
        {"hit_at_10", a.hit_at_10},
        {"mean_em", optional_number(a.mean_em)},
        {"mean_f1", optional_number(a.mean_f1)},
        {"mean_selected", a.mean_selected}}},
      {"records", std::move(records)},
  };
}

nlohmann::json timing_json(const EvalReport& report) {
  nlohmann::json per_example = nlohmann::json::array();
  for (const auto& r : report.records) per_example.push_back(r.retrieval_seconds);
  return {{"total_retrieval_seconds", report.aggregates.total_retrieval_seconds},
          {"retrieval_seconds", std::move(per_example)}};
}

std::string report_table(const EvalReport& report) {
  const auto& a = report.aggregates;
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << std::left;
  auto row = [&](const std::string& name, const std::string& value) {
    out << std::setw(16) << name << std::right << std::setw(12) << value << std::left << '\n';
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  row("Examples", std::to_string(a.examples));
  row("Scored", std::to_string(a.scored));
  row("Failed", std::to_string(a.failed));
  row("Recall@5", num(a.recall_at_5));
  row("Recall@10", num(a.recall_at_10));
  row("Hit@5", num(a.hit_at_5));
  row("Hit@10", num(a.hit_at_10));
  row("EM", a.mean_em ? num(*a.mean_em) : "-");
  row("F1", a.mean_f1 ? num(*a.mean_f1) : "-");
  row("Avg |C_q|", num(a.mean_selected));
  return out.str();
}

}  // namespace hyperrank
