#include "hyperrank/answer.hpp"

#include "hyperrank/errors.hpp"

namespace hyperrank {

const char* const kAnswerInstruction =
    "You are a reading comprehension assistant. Use the passages provided, if any, to answer "
    "the question. Reply with a short answer phrase only, without explanation.";

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

constexpr std::string_view kTitlePrefix = "Title: ";

}  // namespace

RemoteChatClient::RemoteChatClient(std::shared_ptr<const OpenAIClient> client)
    : client_(std::move(client)) {
  if (!client_) throw ContractError("RemoteChatClient needs a client");
}

std::string RemoteChatClient::complete(const std::vector<ChatMessage>& messages) const {
  return client_->chat(messages);
}

std::string OfflineChatClient::complete(const std::vector<ChatMessage>& messages) const {
  if (messages.empty()) return "unknown";
  const auto& body = messages.back().content;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto end = body.find('\n', pos);
    if (end == std::string::npos) end = body.size();
    std::string_view line(body.data() + pos, end - pos);
    if (line.starts_with(kTitlePrefix)) {
      auto title = trim(line.substr(kTitlePrefix.size()));
      if (!title.empty()) return title;
    }
    pos = end + 1;
  }
  return "unknown";
}

std::vector<ChatMessage> build_answer_prompt(std::string_view question,
                                             const std::vector<Passage>& passages) {
  std::string user;
  for (const auto& p : passages) {
    user += kTitlePrefix;
    user += p.title;
    user += '\n';
    user += p.text;
    user += "\n\n";
  }
  user += "Question: ";
  user += question;
  user += "\nAnswer:";
  return {{"system", kAnswerInstruction}, {"user", std::move(user)}};
}

std::string answer(std::string_view question, const std::vector<Passage>& passages,
                   const ChatClient& llm) {
  return trim(llm.complete(build_answer_prompt(question, passages)));
}

}  // namespace hyperrank
