#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenswap/tokenizer.hpp"
#include "tokenswap/types.hpp"

namespace tokenswap {

struct SourceOutput {
  TokenDist dist;
  // False when part of the distribution was filled in rather than reported by
  // the model (remote top-k responses); `listed` then holds the reported ids,
  // sorted ascending.
  bool complete = true;
  std::vector<TokenId> listed;

  // Share of the mass on `ids` that was reported explicitly. 1 for complete
  // outputs and for id sets with zero mass.
  double coverage(std::span<const TokenId> ids) const;
};

// Anything that maps a token context to a full next-token distribution over its
// own vocabulary. Implementations must be deterministic for a fixed state and
// safe to query concurrently.
class ProbabilitySource {
 public:
  virtual ~ProbabilitySource() = default;

  virtual const Tokenizer& tokenizer() const noexcept = 0;
  virtual SourceOutput query(std::span<const TokenId> context) const = 0;

  // Conditions on surface text. The default encodes with tokenizer(), prepends
  // bos when defined, and calls query(); encode failures become
  // TokenizerDesync.
  virtual SourceOutput query_text(std::string_view surface) const;

  virtual std::string describe() const = 0;
};

std::vector<TokenId> with_bos(const Tokenizer& tokenizer, std::span<const TokenId> ids);

}  // namespace tokenswap
