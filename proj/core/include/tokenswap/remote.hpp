#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "tokenswap/source.hpp"
#include "tokenswap/tokenizer.hpp"

namespace tokenswap {

enum class ResidualPolicy { Uniform, Zero };

struct RemoteSourceConfig {
  std::string endpoint_url;
  int top_k = 20;
  std::chrono::milliseconds timeout{30'000};
  ResidualPolicy residual_policy = ResidualPolicy::Uniform;
  std::optional<std::string> auth_token;
  int max_in_flight = 4;

  void validate() const;
};

inline constexpr double kMinRemoteProbability = 1e-300;

struct ParsedLogprobs {
  SourceOutput output;
  std::size_t unmapped = 0;  // returned token strings absent from the vocabulary
};

// Converts one response body into a dense distribution. Accepted shapes for the
// next-position alternatives, first match wins:
//   choices[0].logprobs.top_logprobs[0]               {"tok": logprob, ...}
//   choices[0].logprobs.content[0].top_logprobs       [{"token", "logprob"}, ...]
//   top_logprobs                                      either of the above
// Probabilities are exp(logprob) clamped below at 1e-300. Under the uniform
// policy the mass missing from the returned tokens is spread evenly over the
// unlisted vocabulary entries. Throws Protocol.
ParsedLogprobs parse_logprob_response(std::string_view body, const Vocabulary& vocab,
                                      ResidualPolicy policy);

// Endpoint override from the environment: TOKENSWAP_<ROLE>_ENDPOINT, then
// TOKENSWAP_ENDPOINT. Returns url unchanged when neither is set.
std::string resolve_endpoint(std::string url, std::string_view role);

// Next-token distributions from an HTTP completion endpoint, one request per
// step: POST {"prompt", "max_tokens": 1, "logprobs": top_k, "temperature": 0}.
// Concurrent queries are capped by max_in_flight; failures are not retried.
class RemoteSource final : public ProbabilitySource {
 public:
  RemoteSource(RemoteSourceConfig config, std::shared_ptr<const Vocabulary> vocab,
               std::optional<std::string> eos_surface = std::nullopt);

  const Tokenizer& tokenizer() const noexcept override { return tokenizer_; }
  SourceOutput query(std::span<const TokenId> context) const override;
  SourceOutput query_text(std::string_view surface) const override;
  std::string describe() const override;

  std::uint64_t unmapped_tokens() const noexcept { return unmapped_.load(); }
  const RemoteSourceConfig& config() const noexcept { return config_; }

 private:
  RemoteSourceConfig config_;
  std::shared_ptr<const Vocabulary> vocab_;
  VocabTokenizer tokenizer_;
  std::string scheme_host_port_;
  std::string path_;
  mutable std::counting_semaphore<> in_flight_;
  mutable std::atomic<std::uint64_t> unmapped_{0};
};

}  // namespace tokenswap
