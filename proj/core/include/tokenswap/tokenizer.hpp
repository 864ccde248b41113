#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenswap/types.hpp"

namespace tokenswap {

// Text <-> token codec bound to one vocabulary.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual const Vocabulary& vocabulary() const noexcept = 0;
  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> ids) const = 0;

  virtual std::optional<TokenId> bos() const noexcept { return std::nullopt; }
  virtual std::optional<TokenId> eos() const noexcept { return std::nullopt; }

  // Identifies encode/decode behaviour: equal fingerprints mean token ids can
  // be passed between the two tokenizers unchanged.
  virtual std::uint64_t fingerprint() const noexcept = 0;
};

struct WordTokenizerOptions {
  bool lowercase = false;  // ASCII case folding on encode
};

inline constexpr std::string_view kBosMarker = "<s>";
inline constexpr std::string_view kEosMarker = "</s>";
inline constexpr std::string_view kUnkMarker = "<unk>";

// Whitespace split with every punctuation code point detached as its own
// token. Unknown words map to <unk> when the vocabulary has it; otherwise
// encode throws InvalidArgument. decode joins surfaces with single spaces and
// skips the <s>/</s> markers.
class WordTokenizer final : public Tokenizer {
 public:
  explicit WordTokenizer(std::shared_ptr<const Vocabulary> vocab,
                         WordTokenizerOptions options = {});

  // Splits text into word-level surfaces without vocabulary lookup.
  static std::vector<std::string> split(std::string_view text, const WordTokenizerOptions& options);

  const Vocabulary& vocabulary() const noexcept override { return *vocab_; }
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::optional<TokenId> bos() const noexcept override { return bos_; }
  std::optional<TokenId> eos() const noexcept override { return eos_; }
  std::optional<TokenId> unk() const noexcept { return unk_; }
  std::uint64_t fingerprint() const noexcept override;

  const WordTokenizerOptions& options() const noexcept { return options_; }
  std::shared_ptr<const Vocabulary> shared_vocabulary() const noexcept { return vocab_; }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  WordTokenizerOptions options_;
  std::optional<TokenId> bos_;
  std::optional<TokenId> eos_;
  std::optional<TokenId> unk_;
};

// Builds "<s>", "</s>", "<unk>" followed by the observed words of texts in
// first-occurrence order.
Vocabulary build_word_vocabulary(std::span<const std::string> texts,
                                 const WordTokenizerOptions& options = {});

// Greedy longest-match tokenizer over an arbitrary surface vocabulary, used for
// vocabularies exported from remote models. decode concatenates surfaces.
// Characters with no covering entry are skipped on encode.
class VocabTokenizer final : public Tokenizer {
 public:
  explicit VocabTokenizer(std::shared_ptr<const Vocabulary> vocab,
                          std::optional<std::string> eos_surface = std::nullopt);

  const Vocabulary& vocabulary() const noexcept override { return *vocab_; }
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::optional<TokenId> eos() const noexcept override { return eos_; }
  std::uint64_t fingerprint() const noexcept override;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  std::optional<TokenId> eos_;
  std::size_t max_len_ = 1;
};

// Loads a remote model's vocabulary file, mapping the byte-level space markers
// U+0120 and U+2581 to ' ' so surfaces are plain text.
Vocabulary load_remote_vocabulary(const std::filesystem::path& path);

}  // namespace tokenswap
