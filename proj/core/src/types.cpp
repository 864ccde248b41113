#include "tokenswap/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "tokenswap/error.hpp"

namespace tokenswap {

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> entries) : entries_(std::move(entries)) {
  if (entries_.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "vocabulary needs at least 2 entries");
  }
  if (entries_.size() > std::numeric_limits<TokenId>::max()) {
    throw Error(ErrorKind::InvalidArgument, "vocabulary too large");
  }
  lookup_.reserve(entries_.size());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto [it, inserted] = lookup_.emplace(entries_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw Error(ErrorKind::InvalidArgument, "duplicate vocabulary entry '" + entries_[i] + "'");
    }
    h = fnv1a(h, entries_[i]);
    h = fnv1a(h, std::string_view("\0", 1));
  }
  fingerprint_ = h;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open vocabulary " + path.string());
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    entries.push_back(line);
  }
  return Vocabulary(std::move(entries));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write vocabulary " + path.string());
  for (const auto& e : entries_) out << e << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

const std::string& Vocabulary::surface(TokenId id) const {
  if (!contains(id)) {
    throw Error(ErrorKind::InvalidArgument, "token id " + std::to_string(id) + " out of range");
  }
  return entries_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  auto it = lookup_.find(std::string(surface));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

TokenDist TokenDist::from_probabilities(std::vector<double> probs) {
  if (probs.empty()) throw Error(ErrorKind::InvalidArgument, "empty distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p)) throw Error(ErrorKind::NonFinite, "non-finite probability");
    if (p < 0.0 || p > 1.0) {
      throw Error(ErrorKind::InvalidArgument, "probability outside [0, 1]: " + std::to_string(p));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(ErrorKind::InvalidArgument, "probabilities sum to " + std::to_string(sum));
  }
  return TokenDist(std::move(probs));
}

TokenId TokenDist::argmax() const noexcept {
  // max_element returns the first maximum, so the lowest id wins ties.
  return static_cast<TokenId>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

TokenDist normalize(std::span<const double> raw) {
  if (raw.empty()) throw Error(ErrorKind::InvalidArgument, "empty vector");
  double sum = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "non-finite entry");
    if (v < 0.0) throw Error(ErrorKind::InvalidArgument, "negative entry");
    sum += v;
  }
  if (sum <= 0.0) throw Error(ErrorKind::AllZero, "vector sums to 0");
  std::vector<double> probs(raw.begin(), raw.end());
  if (std::abs(sum - 1.0) > 1e-12) {
    for (double& p : probs) p /= sum;
  }
  for (double& p : probs) p = std::min(p, 1.0);
  return TokenDist::from_probabilities(std::move(probs));
}

void GenerationParams::validate() const {
  if (max_tokens < 1) throw Error(ErrorKind::InvalidArgument, "max_tokens must be >= 1");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::InvalidArgument, "temperature must be finite and >= 0");
  }
}

TokenId sample(const TokenDist& dist, const GenerationParams& params, Rng& rng) {
  if (params.temperature == 0.0) return dist.argmax();

  const auto probs = dist.probs();
  const double max_p = probs[dist.argmax()];
  const double log_max = std::log(max_p);
  std::vector<double> cumulative(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) acc += std::exp((std::log(probs[i]) - log_max) / params.temperature);
    cumulative[i] = acc;
  }
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  // Skip zero-probability entries that share a cumulative value with a
  // positive predecessor.
  std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
  while (probs[idx] == 0.0 && idx > 0) --idx;
  return static_cast<TokenId>(idx);
}

}  // namespace tokenswap
