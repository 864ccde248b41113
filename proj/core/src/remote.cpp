#include "tokenswap/remote.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include <httplib.h>
#include <json.hpp>

#include "tokenswap/error.hpp"
#include "tokenswap/unicode.hpp"

namespace tokenswap {

using json = nlohmann::json;

void RemoteSourceConfig::validate() const {
  if (endpoint_url.empty()) throw Error(ErrorKind::InvalidArgument, "empty endpoint url");
  if (top_k < 1) throw Error(ErrorKind::InvalidArgument, "top_k must be >= 1");
  if (timeout.count() <= 0) throw Error(ErrorKind::InvalidArgument, "timeout must be positive");
  if (max_in_flight < 1) throw Error(ErrorKind::InvalidArgument, "max_in_flight must be >= 1");
}

namespace {

// (token string, logprob) pairs in response order.
std::vector<std::pair<std::string, double>> extract_alternatives(const json& body) {
  auto from_node = [](const json& node) {
    std::vector<std::pair<std::string, double>> out;
    if (node.is_object()) {
      for (const auto& [tok, lp] : node.items()) {
        if (!lp.is_number()) throw Error(ErrorKind::Protocol, "non-numeric logprob for '" + tok + "'");
        out.emplace_back(tok, lp.get<double>());
      }
    } else if (node.is_array()) {
      for (const auto& item : node) {
        if (!item.is_object() || !item.contains("token") || !item.contains("logprob") ||
            !item["token"].is_string() || !item["logprob"].is_number()) {
          throw Error(ErrorKind::Protocol, "top_logprobs entry lacks token/logprob");
        }
        out.emplace_back(item["token"].get<std::string>(), item["logprob"].get<double>());
      }
    } else {
      throw Error(ErrorKind::Protocol, "top_logprobs is neither object nor list");
    }
    return out;
  };

  if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
    const json& choice = body["choices"][0];
    if (!choice.contains("logprobs") || !choice["logprobs"].is_object()) {
      throw Error(ErrorKind::Protocol, "choice has no logprobs object");
    }
    const json& lp = choice["logprobs"];
    if (lp.contains("top_logprobs") && lp["top_logprobs"].is_array() && !lp["top_logprobs"].empty()) {
      return from_node(lp["top_logprobs"][0]);
    }
    if (lp.contains("content") && lp["content"].is_array() && !lp["content"].empty() &&
        lp["content"][0].contains("top_logprobs")) {
      return from_node(lp["content"][0]["top_logprobs"]);
    }
    throw Error(ErrorKind::Protocol, "logprobs object has no top_logprobs");
  }
  if (body.contains("top_logprobs")) {
    const json& node = body["top_logprobs"];
    // A list of per-position objects, or the alternatives themselves.
    if (node.is_array() && !node.empty() && node[0].is_object() && !node[0].contains("token")) {
      return from_node(node[0]);
    }
    return from_node(node);
  }
  throw Error(ErrorKind::Protocol, "response has no logprob fields");
}

std::optional<TokenId> map_token(const Vocabulary& vocab, const std::string& token) {
  if (auto id = vocab.find(token)) return id;
  std::u32string cps = unicode::decode_utf8(token);
  for (char32_t& cp : cps) {
    if (cp == 0x0120 || cp == 0x2581) cp = U' ';
  }
  if (auto id = vocab.find(unicode::encode_utf8(cps))) return id;
  if (auto id = vocab.find(unicode::trim(token))) return id;
  return std::nullopt;
}

}  // namespace

ParsedLogprobs parse_logprob_response(std::string_view body, const Vocabulary& vocab,
                                      ResidualPolicy policy) {
  json parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(ErrorKind::Protocol, "response body is not a JSON object");
  }
  const auto alternatives = extract_alternatives(parsed);
  if (alternatives.empty()) throw Error(ErrorKind::Protocol, "empty top_logprobs");

  std::size_t unmapped = 0;
  std::map<TokenId, double> listed;
  double returned_mass = 0.0;
  for (const auto& [tok, lp] : alternatives) {
    if (std::isnan(lp) || lp == INFINITY) throw Error(ErrorKind::Protocol, "invalid logprob");
    const double p = std::max(std::exp(lp), kMinRemoteProbability);
    returned_mass += p;
    if (auto id = map_token(vocab, tok)) {
      listed[*id] += p;
    } else {
      ++unmapped;
    }
  }
  if (listed.empty()) throw Error(ErrorKind::Protocol, "no returned token maps into the vocabulary");

  std::vector<double> probs(vocab.size(), 0.0);
  std::vector<TokenId> listed_ids;
  for (const auto& [id, p] : listed) {
    probs[id] = p;
    listed_ids.push_back(id);
  }
  const std::size_t unlisted = vocab.size() - listed.size();
  if (policy == ResidualPolicy::Uniform && unlisted > 0) {
    const double residual = std::max(0.0, 1.0 - returned_mass);
    if (residual > 0.0) {
      const double share = residual / static_cast<double>(unlisted);
      for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!listed.contains(static_cast<TokenId>(i))) probs[i] = share;
      }
    }
  }
  return {SourceOutput{normalize(probs), unlisted == 0, std::move(listed_ids)}, unmapped};
}

std::string resolve_endpoint(std::string url, std::string_view role) {
  std::string role_var = "TOKENSWAP_" + unicode::ascii_upper(role) + "_ENDPOINT";
  if (const char* v = std::getenv(role_var.c_str()); v && *v) return v;
  if (const char* v = std::getenv("TOKENSWAP_ENDPOINT"); v && *v) return v;
  return url;
}

RemoteSource::RemoteSource(RemoteSourceConfig config, std::shared_ptr<const Vocabulary> vocab,
                           std::optional<std::string> eos_surface)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      tokenizer_(vocab_, std::move(eos_surface)),
      in_flight_(std::max(1, config_.max_in_flight)) {
  config_.validate();
  const std::string& url = config_.endpoint_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "endpoint url needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

SourceOutput RemoteSource::query(std::span<const TokenId> context) const {
  return query_text(tokenizer_.decode(context));
}

SourceOutput RemoteSource::query_text(std::string_view surface) const {
  json request = {{"prompt", std::string(surface)},
                  {"max_tokens", 1},
                  {"logprobs", config_.top_k},
                  {"temperature", 0}};

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (config_.auth_token) headers.emplace("Authorization", "Bearer " + *config_.auth_token);

  auto res = client.Post(path_, headers, request.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write) {
      throw Error(ErrorKind::Timeout, config_.endpoint_url + ": " + httplib::to_string(err));
    }
    throw Error(ErrorKind::Http, config_.endpoint_url + ": " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorKind::Http, "status " + std::to_string(res->status) + " from " + config_.endpoint_url);
  }
  ParsedLogprobs parsed = parse_logprob_response(res->body, *vocab_, config_.residual_policy);
  unmapped_ += parsed.unmapped;
  return std::move(parsed.output);
}

std::string RemoteSource::describe() const {
  return "remote(" + config_.endpoint_url + ", top_k=" + std::to_string(config_.top_k) +
         ", residual=" + (config_.residual_policy == ResidualPolicy::Uniform ? "uniform" : "zero") + ")";
}

}  // namespace tokenswap
