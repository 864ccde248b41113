#include "tokenswap/grammar.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "tokenswap/error.hpp"
#include "tokenswap/unicode.hpp"

namespace tokenswap {

namespace {

constexpr std::string_view kEmbeddedWords[] = {
    "the", "to", "and", "of", "a", "in", "that", "you", "it", "for", "on", "he",
    "with", "this", "as", "we", "but", "at", "they", "what", "his", "from",
    "by", "or", "she", "my", "all", "an", "her", "about", "me", "if", "your",
    "can", "who", "out", "their", "like", "would", "when", "him", "them",
    "some", "how", "which", "than", "our", "into", "because", "these", "over",
    "us", "its", "where", "after", "any", "those", "should", "may", "through",
    "why", "before", "off", "while", "around", "another", "both", "between",
    "every", "each", "might", "since", "against", "without", "must", "during",
    "under", "though", "until", "whether", "among", "along", "within", "across",
    "behind", "either", "himself", "although", "outside", "themselves", "is",
    "was", "be", "have", "are", "do", "had", "has", "were", "will", "did",
    "been", "could", "does", "need", "being", "am", "used", "doing", "having",
};

static_assert(std::size(kEmbeddedWords) == 110);

bool has_internal_whitespace(std::string_view word) {
  for (char32_t cp : unicode::decode_utf8(word)) {
    if (unicode::is_whitespace(cp)) return true;
  }
  return false;
}

}  // namespace

GrammarSet::GrammarSet(std::vector<std::string> words, std::string provenance)
    : words_(std::move(words)), provenance_(std::move(provenance)) {
  if (words_.empty()) throw Error(ErrorKind::EmptySet, "grammar set has no words");
  std::unordered_set<std::string> seen;
  for (const auto& w : words_) {
    if (w.empty()) throw Error(ErrorKind::MalformedWord, "empty word");
    if (has_internal_whitespace(w)) throw Error(ErrorKind::MalformedWord, "'" + w + "' contains whitespace");
    if (unicode::ascii_lower(w) != w) throw Error(ErrorKind::MalformedWord, "'" + w + "' is not lowercase");
    if (!seen.insert(w).second) throw Error(ErrorKind::MalformedWord, "duplicate word '" + w + "'");
  }
}

bool GrammarSet::contains(std::string_view word) const {
  return std::find(words_.begin(), words_.end(), word) != words_.end();
}

GrammarSet GrammarSet::prefix(std::size_t n) const {
  if (n == 0 || n > words_.size()) {
    throw Error(ErrorKind::InvalidArgument, "prefix size " + std::to_string(n) +
                                                " outside [1, " + std::to_string(words_.size()) + "]");
  }
  return GrammarSet({words_.begin(), words_.begin() + static_cast<std::ptrdiff_t>(n)},
                    provenance_ + "[:" + std::to_string(n) + "]");
}

GrammarSet default_grammar_set() {
  return GrammarSet({std::begin(kEmbeddedWords), std::end(kEmbeddedWords)},
                    std::string(kEmbeddedProvenance));
}

GrammarSet parse_grammar_set(std::string_view content, std::string provenance) {
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string entry = unicode::trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    if (has_internal_whitespace(entry)) {
      throw Error(ErrorKind::MalformedWord, "'" + entry + "' contains whitespace");
    }
    std::string word = unicode::ascii_lower(entry);
    if (seen.insert(word).second) words.push_back(std::move(word));
  }
  if (words.empty()) throw Error(ErrorKind::EmptySet, "no words in " + provenance);
  return GrammarSet(std::move(words), std::move(provenance));
}

GrammarSet load_grammar_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open grammar list " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grammar_set(buf.str(), path.string());
}

const std::string& BoundGrammarSet::word_of(TokenId id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) {
    throw Error(ErrorKind::InvalidArgument, "token " + std::to_string(id) + " is not bound");
  }
  return words_[static_cast<std::size_t>(it - ids_.begin())];
}

std::vector<std::string> surface_variants(std::string_view word) {
  std::string cap(word);
  if (!cap.empty()) cap.front() = unicode::ascii_upper(cap.substr(0, 1)).front();
  return {std::string(word), " " + std::string(word), cap, " " + cap, unicode::ascii_upper(word)};
}

BoundGrammarSet bind(const GrammarSet& gs, const Tokenizer& tokenizer) {
  const Vocabulary& vocab = tokenizer.vocabulary();
  std::set<std::pair<TokenId, std::string>> bound;
  std::vector<std::string> dropped;
  for (const auto& word : gs.words()) {
    bool any = false;
    for (const auto& variant : surface_variants(word)) {
      std::vector<TokenId> ids;
      try {
        ids = tokenizer.encode(variant);
      } catch (const Error&) {
        continue;  // vocabulary without <unk>
      }
      if (ids.size() != 1) continue;
      if (unicode::ascii_lower(unicode::trim(vocab.surface(ids[0]))) != word) continue;
      bound.emplace(ids[0], word);
      any = true;
    }
    if (!any) dropped.push_back(word);
  }

  BoundGrammarSet out(gs);
  out.vocab_fingerprint_ = vocab.fingerprint();
  out.dropped_ = std::move(dropped);
  out.mask_.assign(vocab.size(), false);
  for (const auto& [id, word] : bound) {
    out.ids_.push_back(id);
    out.words_.push_back(word);
    out.mask_[id] = true;
  }
  if (out.ids_.empty()) {
    std::string msg = "no grammar word binds to a single token (dropped:";
    for (const auto& w : out.dropped_) msg += " " + w;
    throw Error(ErrorKind::EmptyBinding, msg + ")");
  }
  return out;
}

double grammar_mass(const TokenDist& dist, const BoundGrammarSet& bg) {
  if (dist.size() != bg.vocab_size()) {
    throw Error(ErrorKind::VocabMismatch, "distribution over " + std::to_string(dist.size()) +
                                              " tokens, grammar bound to " +
                                              std::to_string(bg.vocab_size()));
  }
  double mass = 0.0;
  for (TokenId id : bg.token_ids()) mass += dist[id];
  return mass;
}

double grammar_mass(const TokenDist& dist, const BoundGrammarSet& bg, const Vocabulary& vocab) {
  if (vocab.fingerprint() != bg.vocab_fingerprint()) {
    throw Error(ErrorKind::VocabMismatch, "vocabulary fingerprint differs from binding");
  }
  return grammar_mass(dist, bg);
}

GammaReport measure_gamma(std::span<const TokenId> corpus, const BoundGrammarSet& bg,
                          std::string corpus_label) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "gamma over an empty corpus");
  GammaReport r;
  r.corpus_label = std::move(corpus_label);
  r.token_count = corpus.size();
  for (TokenId id : corpus) {
    if (bg.contains(id)) ++r.grammar_token_count;
  }
  r.gamma = static_cast<double>(r.grammar_token_count) / static_cast<double>(r.token_count);
  return r;
}

GammaReport measure_gamma(std::span<const std::string> texts, const Tokenizer& tokenizer,
                          const BoundGrammarSet& bg, std::string corpus_label) {
  if (tokenizer.vocabulary().fingerprint() != bg.vocab_fingerprint()) {
    throw Error(ErrorKind::VocabMismatch, "tokenizer vocabulary differs from binding");
  }
  std::vector<TokenId> all;
  for (const auto& t : texts) {
    const auto ids = tokenizer.encode(t);
    all.insert(all.end(), ids.begin(), ids.end());
  }
  return measure_gamma(all, bg, std::move(corpus_label));
}

}  // namespace tokenswap
