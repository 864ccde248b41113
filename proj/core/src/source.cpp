#include "tokenswap/source.hpp"

#include <algorithm>

#include "tokenswap/error.hpp"

namespace tokenswap {

double SourceOutput::coverage(std::span<const TokenId> ids) const {
  if (complete) return 1.0;
  double total = 0.0;
  double reported = 0.0;
  for (TokenId id : ids) {
    total += dist[id];
    if (std::binary_search(listed.begin(), listed.end(), id)) reported += dist[id];
  }
  return total > 0.0 ? reported / total : 1.0;
}

SourceOutput ProbabilitySource::query_text(std::string_view surface) const {
  std::vector<TokenId> ids;
  try {
    ids = tokenizer().encode(surface);
  } catch (const Error& e) {
    throw Error(ErrorKind::TokenizerDesync, e.detail());
  }
  return query(with_bos(tokenizer(), ids));
}

std::vector<TokenId> with_bos(const Tokenizer& tokenizer, std::span<const TokenId> ids) {
  std::vector<TokenId> out;
  out.reserve(ids.size() + 1);
  if (auto b = tokenizer.bos()) out.push_back(*b);
  out.insert(out.end(), ids.begin(), ids.end());
  return out;
}

}  // namespace tokenswap
