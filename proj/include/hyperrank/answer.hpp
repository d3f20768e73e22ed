#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hyperrank/corpus.hpp"
#include "hyperrank/openai_client.hpp"

namespace hyperrank {

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) const = 0;
};

class RemoteChatClient final : public ChatClient {
 public:
  explicit RemoteChatClient(std::shared_ptr<const OpenAIClient> client);
  std::string complete(const std::vector<ChatMessage>& messages) const override;

 private:
  std::shared_ptr<const OpenAIClient> client_;
};

/// Stand-in reader for network-free runs: answers with the title of the first passage
/// in the prompt, or "unknown" when the prompt has none.
class OfflineChatClient final : public ChatClient {
 public:
  std::string complete(const std::vector<ChatMessage>& messages) const override;
};

extern const char* const kAnswerInstruction;

/// System message with the instruction, then one user message holding the passages in
/// the given order ("Title: ...\n<text>") followed by the question. No passages gives a
/// closed-book prompt.
std::vector<ChatMessage> build_answer_prompt(std::string_view question,
                                             const std::vector<Passage>& passages);

/// Reader output, trimmed.
std::string answer(std::string_view question, const std::vector<Passage>& passages,
                   const ChatClient& llm);

}  // namespace hyperrank
