#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperrank/openai_client.hpp"

namespace hyperrank {

using EmbeddingRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major embeddings plus their L2 norms. Row r is aligned with the r-th
/// catalog entity or passage column of whatever it was built for.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(EmbeddingRows values);
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> flat);

  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index dim() const noexcept { return values_.cols(); }
  const EmbeddingRows& values() const noexcept { return values_; }
  auto row(Eigen::Index r) const { return values_.row(r); }
  const Eigen::VectorXd& norms() const noexcept { return norms_; }

  std::span<const float> flat() const {
    return {values_.data(), static_cast<std::size_t>(values_.size())};
  }

 private:
  EmbeddingRows values_;
  Eigen::VectorXd norms_;
};

/// Dense text encoder E(.). Same input string, same vector.
class EncoderClient {
 public:
  virtual ~EncoderClient() = default;
  virtual std::string id() const = 0;
  virtual std::size_t batch_size() const = 0;
  virtual std::vector<std::vector<float>> encode(std::span<const std::string> texts) const = 0;
};

/// Hashed bag-of-words encoder: lowercase alphanumeric tokens are FNV-hashed into a
/// fixed number of buckets with a hash-derived sign, and the result is L2-normalized.
/// Text without tokens encodes to the zero vector. Pure integer hashing, so the output
/// is bitwise reproducible everywhere.
class OfflineHashEncoder final : public EncoderClient {
 public:
  explicit OfflineHashEncoder(std::size_t dim = 256);
  std::string id() const override { return "offline-hash-bow-" + std::to_string(dim_); }
  std::size_t batch_size() const override { return 1024; }
  std::vector<std::vector<float>> encode(std::span<const std::string> texts) const override;
  std::vector<float> encode_one(std::string_view text) const;

 private:
  std::size_t dim_;
};

class RemoteEncoder final : public EncoderClient {
 public:
  RemoteEncoder(std::shared_ptr<const OpenAIClient> client, std::size_t batch_size = 64);
  std::string id() const override { return "remote-" + client_->config().model; }
  std::size_t batch_size() const override { return batch_size_; }
  std::vector<std::vector<float>> encode(std::span<const std::string> texts) const override;

 private:
  std::shared_ptr<const OpenAIClient> client_;
  std::size_t batch_size_;
};

/// Content-hash keyed embedding store. On disk: `manifest.json` (encoder id, dim, row
/// count), `keys.bin` (u64 FNV-1a of the text) and `vectors.bin` (f32 rows). New rows are
/// appended and the manifest row count is rewritten last, so a torn write is ignored on
/// the next load. A manifest for another encoder id means the cache starts empty.
class EmbeddingCache {
 public:
  EmbeddingCache(std::filesystem::path dir, std::string encoder_id);

  bool lookup(const std::string& text, std::vector<float>& out) const;
  void insert(const std::string& text, std::vector<float> vector);
  void flush();

  std::size_t size() const;
  std::size_t dim() const { return dim_; }

 private:
  std::filesystem::path dir_;
  std::string encoder_id_;
  std::size_t dim_ = 0;
  std::size_t persisted_rows_ = 0;
  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, std::size_t> slot_;
  std::vector<std::uint64_t> keys_;
  std::vector<float> values_;
};

/// Encodes `texts` in order, one row each. Cache hits skip the encoder; misses are
/// encoded in batches of `client.batch_size()` and inserted into the cache.
/// Empty strings violate the contract. Encoder failures surface as EmbeddingError
/// carrying the failing batch's offsets within the list of cache misses.
EmbeddingMatrix embed_batch(const std::vector<std::string>& texts, const EncoderClient& client,
                            EmbeddingCache* cache = nullptr);

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& file);
EmbeddingMatrix load_embeddings(const std::filesystem::path& file, std::size_t rows,
                                std::size_t dim);

}  // namespace hyperrank
