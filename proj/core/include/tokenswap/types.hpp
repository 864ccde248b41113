#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tokenswap {

// Index into a Vocabulary.
using TokenId = std::uint32_t;

// Ordered list of unique token surfaces; position is the TokenId.
class Vocabulary {
 public:
  // Throws InvalidArgument on duplicate entries or fewer than two entries.
  explicit Vocabulary(std::vector<std::string> entries);

  // One surface per line, line number = TokenId. A trailing '\r' is stripped.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(TokenId id) const noexcept { return id < entries_.size(); }
  const std::string& surface(TokenId id) const;
  std::optional<TokenId> find(std::string_view surface) const;
  const std::vector<std::string>& entries() const noexcept { return entries_; }

  // FNV-1a over the entries; equal vocabularies have equal fingerprints.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId> lookup_;
  std::uint64_t fingerprint_ = 0;
};

// Dense next-token distribution, stored as linear probabilities. Entries lie in
// [0, 1] and sum to 1 within kSumTolerance.
class TokenDist {
 public:
  static constexpr double kSumTolerance = 1e-9;

  // Validates the invariants; throws NonFinite or InvalidArgument.
  static TokenDist from_probabilities(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](TokenId id) const { return probs_[id]; }
  std::span<const double> probs() const noexcept { return probs_; }

  // Lowest TokenId wins ties.
  TokenId argmax() const noexcept;

  friend bool operator==(const TokenDist&, const TokenDist&) = default;

 private:
  explicit TokenDist(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

// Divides by the sum. Inputs that already sum to 1 within 1e-12 are returned
// unchanged, which makes normalize exactly idempotent.
TokenDist normalize(std::span<const double> raw);

struct GenerationParams {
  int max_tokens = 128;
  double temperature = 0.0;  // 0 = greedy argmax
  std::uint64_t seed = 0;

  void validate() const;
};

using Rng = std::mt19937_64;

// Temperature 0 returns argmax and does not touch rng. Otherwise draws from
// probs^(1/t), renormalized, using 53-bit uniforms from rng.
TokenId sample(const TokenDist& dist, const GenerationParams& params, Rng& rng);

}  // namespace tokenswap
