#include "hyperrank/corpus.hpp"

#include <algorithm>
#include <cctype>

#include "hyperrank/errors.hpp"
#include "hyperrank/io.hpp"
#include "json.hpp"

namespace hyperrank {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string required_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError("line " + std::to_string(line) + ": missing key \"" + key + "\"", line);
  }
  if (!it->is_string()) {
    throw ParseError("line " + std::to_string(line) + ": key \"" + key + "\" is not a string",
                     line);
  }
  return it->get<std::string>();
}

}  // namespace

std::vector<Passage> parse_corpus(std::string_view jsonl) {
  std::vector<Passage> passages;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (!obj.is_object()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected a JSON object", line_no);
    }
    Passage p{required_string(obj, "id", line_no), required_string(obj, "title", line_no),
              required_string(obj, "text", line_no)};
    if (p.id.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty id", line_no);
    }
    if (is_blank(p.text)) {
      throw ParseError("line " + std::to_string(line_no) + ": empty text", line_no);
    }
    passages.push_back(std::move(p));
  }

  std::sort(passages.begin(), passages.end(),
            [](const Passage& a, const Passage& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < passages.size(); ++i) {
    if (passages[i].id == passages[i - 1].id) {
      throw ValidationError("duplicate passage id '" + passages[i].id + "'");
    }
  }
  return passages;
}

std::vector<Passage> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(io::read_text_file(path));
}

std::string serialize_corpus(const std::vector<Passage>& passages) {
  std::string out;
  for (const auto& p : passages) {
    nlohmann::json obj = {{"id", p.id}, {"title", p.title}, {"text", p.text}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string corpus_hash(const std::vector<Passage>& passages) {
  return io::to_hex(io::fnv1a64(serialize_corpus(passages)));
}

std::string passage_embedding_text(const Passage& passage) {
  if (passage.title.empty()) return passage.text;
  return passage.title + "\n" + passage.text;
}

}  // namespace hyperrank
