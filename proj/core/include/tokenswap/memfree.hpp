#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>

#include "tokenswap/source.hpp"
#include "tokenswap/swap.hpp"
#include "tokenswap/tokenizer.hpp"

namespace tokenswap {

// Set of hashed n-token windows from a training corpus.
class MemFreeIndex {
 public:
  explicit MemFreeIndex(int n);

  // Adds every n-token window of tokens (none if shorter than n).
  void add(std::span<const TokenId> tokens);
  static MemFreeIndex build(std::span<const std::string> corpus, const Tokenizer& tokenizer, int n);

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return grams_.size(); }
  bool empty() const noexcept { return grams_.empty(); }

  // window.size() must equal n.
  bool contains(std::span<const TokenId> window) const;

  // Hash state of n-1 leading tokens, extendable by one candidate without
  // rehashing the prefix.
  std::uint64_t prefix_state(std::span<const TokenId> leading) const;
  bool contains_extension(std::uint64_t prefix_state, TokenId next) const;

 private:
  int n_;
  std::unordered_set<std::uint64_t> grams_;
};

// Greedy (or temperature) decoding that never emits a token completing a
// window in index: the candidate is masked and the next best taken. When every
// token is masked the unmasked choice is emitted and the step flagged.
GenerationRecord memfree_decode(const ProbabilitySource& main, const MemFreeIndex& index,
                                std::string_view prompt, const GenerationParams& params);

}  // namespace tokenswap
