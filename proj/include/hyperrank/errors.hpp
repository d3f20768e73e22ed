#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hyperrank {

// Malformed input file. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition (dimension mismatch, bad range).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// On-disk index is missing pieces or disagrees with itself.
class IndexIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RemoteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExtractionError : public std::runtime_error {
 public:
  ExtractionError(const std::string& passage_id, const std::string& what)
      : std::runtime_error("entity extraction failed for passage '" + passage_id +
                           "': " + what),
        passage_id_(passage_id) {}
  const std::string& passage_id() const noexcept { return passage_id_; }

 private:
  std::string passage_id_;
};

class EmbeddingError : public std::runtime_error {
 public:
  EmbeddingError(std::size_t batch_begin, std::size_t batch_end, const std::string& what)
      : std::runtime_error("embedding batch [" + std::to_string(batch_begin) + ", " +
                           std::to_string(batch_end) + ") failed: " + what),
        begin_(batch_begin),
        end_(batch_end) {}
  std::size_t batch_begin() const noexcept { return begin_; }
  std::size_t batch_end() const noexcept { return end_; }

 private:
  std::size_t begin_;
  std::size_t end_;
};

}  // namespace hyperrank
