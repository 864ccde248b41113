#include "tokenswap/tokenizer.hpp"

#include <fstream>
#include <unordered_set>
#include <utility>

#include "tokenswap/error.hpp"
#include "tokenswap/unicode.hpp"

namespace tokenswap {

WordTokenizer::WordTokenizer(std::shared_ptr<const Vocabulary> vocab, WordTokenizerOptions options)
    : vocab_(std::move(vocab)), options_(options) {
  if (!vocab_) throw Error(ErrorKind::InvalidArgument, "null vocabulary");
  bos_ = vocab_->find(kBosMarker);
  eos_ = vocab_->find(kEosMarker);
  unk_ = vocab_->find(kUnkMarker);
}

std::vector<std::string> WordTokenizer::split(std::string_view text,
                                              const WordTokenizerOptions& options) {
  const std::string folded = options.lowercase ? unicode::ascii_lower(text) : std::string(text);
  std::vector<std::string> out;
  std::string cur;
  for (char32_t cp : unicode::decode_utf8(folded)) {
    if (unicode::is_whitespace(cp)) {
      if (!cur.empty()) out.push_back(std::exchange(cur, {}));
    } else if (unicode::is_punctuation(cp)) {
      if (!cur.empty()) out.push_back(std::exchange(cur, {}));
      std::string p;
      unicode::append_utf8(p, cp);
      out.push_back(std::move(p));
    } else {
      unicode::append_utf8(cur, cp);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<TokenId> WordTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& word : split(text, options_)) {
    if (auto id = vocab_->find(word)) {
      ids.push_back(*id);
    } else if (unk_) {
      ids.push_back(*unk_);
    } else {
      throw Error(ErrorKind::InvalidArgument, "word '" + word + "' not in vocabulary");
    }
  }
  return ids;
}

std::string WordTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == bos_ || id == eos_) continue;
    if (!out.empty()) out.push_back(' ');
    out += vocab_->surface(id);
  }
  return out;
}

std::uint64_t WordTokenizer::fingerprint() const noexcept {
  return vocab_->fingerprint() ^ (options_.lowercase ? 0x9e3779b97f4a7c15ULL : 0x1ULL);
}

Vocabulary build_word_vocabulary(std::span<const std::string> texts,
                                 const WordTokenizerOptions& options) {
  std::vector<std::string> entries{std::string(kBosMarker), std::string(kEosMarker),
                                   std::string(kUnkMarker)};
  std::unordered_set<std::string> seen(entries.begin(), entries.end());
  for (const auto& text : texts) {
    for (auto& word : WordTokenizer::split(text, options)) {
      if (seen.insert(word).second) entries.push_back(std::move(word));
    }
  }
  return Vocabulary(std::move(entries));
}

VocabTokenizer::VocabTokenizer(std::shared_ptr<const Vocabulary> vocab,
                               std::optional<std::string> eos_surface)
    : vocab_(std::move(vocab)) {
  if (!vocab_) throw Error(ErrorKind::InvalidArgument, "null vocabulary");
  for (const auto& e : vocab_->entries()) max_len_ = std::max(max_len_, e.size());
  if (eos_surface) {
    eos_ = vocab_->find(*eos_surface);
    if (!eos_) throw Error(ErrorKind::InvalidArgument, "eos token '" + *eos_surface + "' not in vocabulary");
  }
}

std::vector<TokenId> VocabTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_len_, text.size() - pos); len > 0; --len) {
      if (auto id = vocab_->find(text.substr(pos, len))) {
        ids.push_back(*id);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      // Skip one UTF-8 sequence.
      ++pos;
      while (pos < text.size() && (static_cast<unsigned char>(text[pos]) & 0xC0) == 0x80) ++pos;
    }
  }
  return ids;
}

std::string VocabTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == eos_) continue;
    out += vocab_->surface(id);
  }
  return out;
}

std::uint64_t VocabTokenizer::fingerprint() const noexcept {
  return vocab_->fingerprint() ^ 0x5bd1e9955bd1e995ULL;
}

Vocabulary load_remote_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open vocabulary " + path.string());
  std::vector<std::string> entries;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::u32string cps = unicode::decode_utf8(line);
    for (char32_t& cp : cps) {
      if (cp == 0x0120 || cp == 0x2581) cp = U' ';
    }
    std::string surface = unicode::encode_utf8(cps);
    // Keep ids stable when two raw entries collapse to the same surface; a
    // genuine duplicate is rejected by the Vocabulary constructor.
    if (seen.contains(surface)) surface = line;
    seen.insert(surface);
    entries.push_back(std::move(surface));
  }
  return Vocabulary(std::move(entries));
}

}  // namespace tokenswap
