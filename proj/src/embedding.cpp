#include "hyperrank/embedding.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "hyperrank/errors.hpp"
#include "hyperrank/io.hpp"
#include "json.hpp"

namespace hyperrank {

namespace fs = std::filesystem;

EmbeddingMatrix::EmbeddingMatrix(EmbeddingRows values) : values_(std::move(values)) {
  norms_ = values_.cast<double>().rowwise().norm();
  if (!values_.allFinite()) throw ValidationError("embedding matrix has non-finite entries");
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> flat)
    : EmbeddingMatrix([&] {
        if (flat.size() != rows * dim) {
          throw ContractError("flat embedding buffer has " + std::to_string(flat.size()) +
                              " values for " + std::to_string(rows) + "x" + std::to_string(dim));
        }
        return EmbeddingRows(Eigen::Map<const EmbeddingRows>(
            flat.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim)));
      }()) {}

OfflineHashEncoder::OfflineHashEncoder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw ContractError("encoder dimension must be positive");
}

std::vector<float> OfflineHashEncoder::encode_one(std::string_view text) const {
  std::vector<std::int64_t> counts(dim_, 0);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const std::uint64_t h = io::fnv1a64(token);
    const std::size_t bucket = static_cast<std::size_t>(h % dim_);
    counts[bucket] += (h >> 63) != 0 ? -1 : 1;
    token.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      token.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else {
      flush();
    }
  }
  flush();

  double sq = 0.0;
  for (auto c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
  std::vector<float> out(dim_, 0.0f);
  if (sq == 0.0) return out;
  const double inv = 1.0 / std::sqrt(sq);
  for (std::size_t k = 0; k < dim_; ++k) out[k] = static_cast<float>(static_cast<double>(counts[k]) * inv);
  return out;
}

std::vector<std::vector<float>> OfflineHashEncoder::encode(std::span<const std::string> texts) const {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(encode_one(t));
  return out;
}

RemoteEncoder::RemoteEncoder(std::shared_ptr<const OpenAIClient> client, std::size_t batch_size)
    : client_(std::move(client)), batch_size_(batch_size) {
  if (!client_) throw ContractError("RemoteEncoder needs a client");
  if (batch_size_ == 0) throw ContractError("batch size must be positive");
}

std::vector<std::vector<float>> RemoteEncoder::encode(std::span<const std::string> texts) const {
  return client_->embed(std::vector<std::string>(texts.begin(), texts.end()));
}

EmbeddingCache::EmbeddingCache(fs::path dir, std::string encoder_id)
    : dir_(std::move(dir)), encoder_id_(std::move(encoder_id)) {
  const auto manifest_path = dir_ / "manifest.json";
  if (!fs::exists(manifest_path)) return;

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw IndexIntegrityError("embedding cache manifest unreadable: " + std::string(e.what()));
  }
  if (manifest.value("encoder_id", std::string{}) != encoder_id_) return;

  const auto rows = manifest.at("rows").get<std::size_t>();
  const auto dim = manifest.at("dim").get<std::size_t>();
  auto keys = io::read_array<std::uint64_t>(dir_ / "keys.bin");
  auto values = io::read_array<float>(dir_ / "vectors.bin");
  if (keys.size() < rows || values.size() < rows * dim) {
    throw IndexIntegrityError("embedding cache in '" + dir_.string() + "' is shorter than its manifest");
  }
  keys.resize(rows);
  values.resize(rows * dim);
  keys_ = std::move(keys);
  values_ = std::move(values);
  dim_ = dim;
  persisted_rows_ = rows;
  for (std::size_t r = 0; r < rows; ++r) slot_.emplace(keys_[r], r);
}

bool EmbeddingCache::lookup(const std::string& text, std::vector<float>& out) const {
  std::lock_guard lock(mutex_);
  auto it = slot_.find(io::fnv1a64(text));
  if (it == slot_.end()) return false;
  auto begin = values_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_);
  out.assign(begin, begin + static_cast<std::ptrdiff_t>(dim_));
  return true;
}

void EmbeddingCache::insert(const std::string& text, std::vector<float> vector) {
  std::lock_guard lock(mutex_);
  if (keys_.empty() && dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_) {
    throw ContractError("embedding of dim " + std::to_string(vector.size()) +
                        " inserted into a cache of dim " + std::to_string(dim_));
  }
  const auto key = io::fnv1a64(text);
  if (slot_.contains(key)) return;
  slot_.emplace(key, keys_.size());
  keys_.push_back(key);
  values_.insert(values_.end(), vector.begin(), vector.end());
}

void EmbeddingCache::flush() {
  std::lock_guard lock(mutex_);
  if (keys_.size() == persisted_rows_ && fs::exists(dir_ / "manifest.json")) return;
  fs::create_directories(dir_);

  const auto keys_path = dir_ / "keys.bin";
  const auto values_path = dir_ / "vectors.bin";
  auto append = [](const fs::path& path, std::size_t keep_bytes, std::string_view bytes) {
    if (fs::exists(path)) {
      fs::resize_file(path, keep_bytes);  // drops a torn tail or a stale encoder's rows
    } else if (keep_bytes != 0) {
      throw IndexIntegrityError("embedding cache file '" + path.string() + "' disappeared");
    }
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot append to '" + path.string() + "'");
  };

  const std::span<const std::uint64_t> new_keys(keys_.data() + persisted_rows_,
                                                keys_.size() - persisted_rows_);
  const std::span<const float> new_values(values_.data() + persisted_rows_ * dim_,
                                          values_.size() - persisted_rows_ * dim_);
  append(keys_path, persisted_rows_ * sizeof(std::uint64_t), io::as_bytes(new_keys));
  append(values_path, persisted_rows_ * dim_ * sizeof(float), io::as_bytes(new_values));

  nlohmann::json manifest = {{"encoder_id", encoder_id_}, {"dim", dim_}, {"rows", keys_.size()}};
  io::write_file_atomic(dir_ / "manifest.json", manifest.dump(2) + "\n");
  persisted_rows_ = keys_.size();
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mutex_);
  return keys_.size();
}

EmbeddingMatrix embed_batch(const std::vector<std::string>& texts, const EncoderClient& client,
                            EmbeddingCache* cache) {
  std::vector<std::vector<float>> rows(texts.size());
  std::vector<std::string> pending;
  std::unordered_map<std::string, std::vector<std::size_t>> positions;

  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw ContractError("cannot embed an empty string (input " + std::to_string(i) + ")");
    if (cache != nullptr && cache->lookup(texts[i], rows[i])) continue;
    auto [it, fresh] = positions.try_emplace(texts[i]);
    if (fresh) pending.push_back(texts[i]);
    it->second.push_back(i);
  }

  const std::size_t batch = std::max<std::size_t>(client.batch_size(), 1);
  for (std::size_t begin = 0; begin < pending.size(); begin += batch) {
    const std::size_t end = std::min(pending.size(), begin + batch);
    std::vector<std::vector<float>> encoded;
    try {
      encoded = client.encode(std::span<const std::string>(pending.data() + begin, end - begin));
    } catch (const std::exception& e) {
      if (cache != nullptr) cache->flush();
      throw EmbeddingError(begin, end, e.what());
    }
    if (encoded.size() != end - begin) {
      throw EmbeddingError(begin, end, "encoder returned " + std::to_string(encoded.size()) + " rows");
    }
    for (std::size_t k = 0; k < encoded.size(); ++k) {
      for (float v : encoded[k]) {
        if (!std::isfinite(v)) throw EmbeddingError(begin, end, "encoder returned a non-finite value");
      }
      const auto& text = pending[begin + k];
      for (auto pos : positions[text]) rows[pos] = encoded[k];
      if (cache != nullptr) cache->insert(text, std::move(encoded[k]));
    }
  }
  if (cache != nullptr) cache->flush();

  if (rows.empty()) return EmbeddingMatrix{};
  const std::size_t dim = rows.front().size();
  std::vector<float> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw EmbeddingError(0, texts.size(), "encoder returned mixed dimensions");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix(rows.size(), dim, std::move(flat));
}

void save_embeddings(const EmbeddingMatrix& m, const fs::path& file) {
  io::write_array(file, m.flat());
}

EmbeddingMatrix load_embeddings(const fs::path& file, std::size_t rows, std::size_t dim) {
  auto flat = io::read_array<float>(file);
  if (flat.size() != rows * dim) {
    throw IndexIntegrityError("'" + file.string() + "' holds " + std::to_string(flat.size()) +
                              " floats, expected " + std::to_string(rows) + "x" + std::to_string(dim));
  }
  return EmbeddingMatrix(rows, dim, std::move(flat));
}

}  // namespace hyperrank
