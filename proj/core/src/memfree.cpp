#include "tokenswap/memfree.hpp"

#include <optional>

#include "tokenswap/error.hpp"

namespace tokenswap {

namespace {

constexpr std::uint64_t kBase = 0x100000001b3ULL * 2 + 1;

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

MemFreeIndex::MemFreeIndex(int n) : n_(n) {
  if (n_ < 1) throw Error(ErrorKind::InvalidArgument, "memfree n must be >= 1");
}

std::uint64_t MemFreeIndex::prefix_state(std::span<const TokenId> leading) const {
  std::uint64_t h = 0;
  for (TokenId t : leading) h = h * kBase + (static_cast<std::uint64_t>(t) + 1);
  return h;
}

bool MemFreeIndex::contains_extension(std::uint64_t prefix_state, TokenId next) const {
  return grams_.contains(mix(prefix_state * kBase + (static_cast<std::uint64_t>(next) + 1)));
}

bool MemFreeIndex::contains(std::span<const TokenId> window) const {
  if (window.size() != static_cast<std::size_t>(n_)) {
    throw Error(ErrorKind::InvalidArgument, "window length differs from n");
  }
  return contains_extension(prefix_state(window.first(window.size() - 1)), window.back());
}

void MemFreeIndex::add(std::span<const TokenId> tokens) {
  const auto n = static_cast<std::size_t>(n_);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    const auto w = tokens.subspan(i, n);
    grams_.insert(mix(prefix_state(w.first(n - 1)) * kBase + (static_cast<std::uint64_t>(w.back()) + 1)));
  }
}

MemFreeIndex MemFreeIndex::build(std::span<const std::string> corpus, const Tokenizer& tokenizer, int n) {
  MemFreeIndex index(n);
  for (const auto& text : corpus) index.add(tokenizer.encode(text));
  return index;
}

GenerationRecord memfree_decode(const ProbabilitySource& main, const MemFreeIndex& index,
                                std::string_view prompt, const GenerationParams& params) {
  params.validate();
  const Tokenizer& tok = main.tokenizer();
  GenerationRecord rec;
  rec.params = params;
  rec.mode = DecodeMode::MemFree;
  rec.prompt_tokens = tok.encode(prompt);

  std::vector<TokenId> history = rec.prompt_tokens;  // window source, no bos
  std::vector<TokenId> context = with_bos(tok, rec.prompt_tokens);
  Rng rng(params.seed);
  const auto eos = tok.eos();
  const std::size_t lead = static_cast<std::size_t>(index.n() - 1);

  for (std::size_t step = 0; step < static_cast<std::size_t>(params.max_tokens); ++step) {
    std::optional<TokenDist> dist;
    try {
      dist = main.query(context).dist;
    } catch (const Error& e) {
      throw Error(e.kind(), "step " + std::to_string(step) + ": " + e.detail());
    }
    TokenId chosen = sample(*dist, params, rng);
    if (history.size() >= lead && !index.empty()) {
      const std::uint64_t state =
          index.prefix_state(std::span<const TokenId>(history).last(lead));
      if (index.contains_extension(state, chosen)) {
        const TokenId original = chosen;
        std::vector<double> masked(dist->probs().begin(), dist->probs().end());
        bool found = false;
        while (true) {
          masked[chosen] = 0.0;
          double remaining = 0.0;
          for (double p : masked) remaining += p;
          if (remaining <= 0.0) break;
          chosen = sample(normalize(masked), params, rng);
          if (!index.contains_extension(state, chosen)) {
            found = true;
            break;
          }
        }
        if (!found) {
          chosen = original;
          rec.flagged_steps.push_back(step);
        }
      }
    }
    if (eos && chosen == *eos) {
      rec.stopped_on_eos = true;
      break;
    }
    rec.generated_tokens.push_back(chosen);
    history.push_back(chosen);
    context.push_back(chosen);
  }
  rec.generated_text = tok.decode(rec.generated_tokens);
  return rec;
}

}  // namespace tokenswap
