#include "tokenswap/ngram.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "tokenswap/error.hpp"

namespace tokenswap {

void NGramOptions::validate() const {
  if (order < 1) throw Error(ErrorKind::InvalidArgument, "order must be >= 1");
  if (dup_factor < 1) throw Error(ErrorKind::InvalidArgument, "dup_factor must be >= 1");
  if (!(backoff > 0.0 && backoff <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "backoff must lie in (0, 1]");
  }
}

std::size_t NGramModel::ContextHash::operator()(const std::vector<TokenId>& ctx) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ ctx.size();
  for (TokenId id : ctx) {
    h ^= id;
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

NGramModel::NGramModel(std::shared_ptr<const WordTokenizer> tokenizer, int order, double backoff,
                       Table table)
    : tokenizer_(std::move(tokenizer)), order_(order), backoff_(backoff), table_(std::move(table)) {
  finalize();
}

void NGramModel::finalize() {
  unigram_.assign(vocabulary().size(), 0.0);
  auto it = table_.find({});
  if (it == table_.end() || it->second.total == 0) {
    throw Error(ErrorKind::EmptyCorpus, "model has no unigram counts");
  }
  const double total = static_cast<double>(it->second.total);
  for (const auto& [id, c] : it->second.next) unigram_[id] = static_cast<double>(c) / total;
}

NGramModel NGramModel::train(std::span<const std::string> corpus, const NGramOptions& options) {
  options.validate();
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "no training texts");

  const WordTokenizerOptions tok_opts{options.lowercase};
  auto vocab = std::make_shared<const Vocabulary>(build_word_vocabulary(corpus, tok_opts));
  auto tokenizer = std::make_shared<const WordTokenizer>(vocab, tok_opts);

  std::unordered_map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>, ContextHash> counts;
  const auto bos = *tokenizer->bos();
  const auto eos = *tokenizer->eos();
  bool any = false;
  for (const auto& text : corpus) {
    std::vector<TokenId> seq{bos};
    const auto ids = tokenizer->encode(text);
    if (ids.empty()) continue;
    any = true;
    seq.insert(seq.end(), ids.begin(), ids.end());
    seq.push_back(eos);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const std::size_t max_k = std::min<std::size_t>(static_cast<std::size_t>(options.order - 1), i);
      for (std::size_t k = 0; k <= max_k; ++k) {
        std::vector<TokenId> ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - k),
                                 seq.begin() + static_cast<std::ptrdiff_t>(i));
        counts[std::move(ctx)][seq[i]] += options.dup_factor;
      }
    }
  }
  if (!any) throw Error(ErrorKind::EmptyCorpus, "training texts contain no tokens");

  Table table;
  table.reserve(counts.size());
  for (auto& [ctx, next] : counts) {
    Continuations c;
    c.next.assign(next.begin(), next.end());
    for (const auto& [id, n] : c.next) c.total += n;
    table.emplace(ctx, std::move(c));
  }
  return NGramModel(std::move(tokenizer), options.order, options.backoff, std::move(table));
}

TokenDist NGramModel::distribution(std::span<const TokenId> context) const {
  const std::size_t max_k =
      std::min<std::size_t>(static_cast<std::size_t>(order_ - 1), context.size());
  const auto suffix = context.subspan(context.size() - max_k);

  // Longest observed suffix. Every shorter suffix of an observed context is
  // observed as well, so levels 0..top all exist.
  std::vector<const Continuations*> levels{&table_.at({})};
  for (std::size_t k = 1; k <= max_k; ++k) {
    auto it = table_.find(std::vector<TokenId>(suffix.end() - static_cast<std::ptrdiff_t>(k), suffix.end()));
    if (it == table_.end()) break;
    levels.push_back(&it->second);
  }
  const std::size_t top = levels.size() - 1;

  std::vector<double> scores(unigram_.size());
  const double base = std::pow(backoff_, static_cast<double>(top));
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = base * unigram_[i];
  for (std::size_t k = 1; k <= top; ++k) {
    const double weight = std::pow(backoff_, static_cast<double>(top - k));
    const double total = static_cast<double>(levels[k]->total);
    for (const auto& [id, c] : levels[k]->next) scores[id] = weight * static_cast<double>(c) / total;
  }
  return normalize(scores);
}

std::uint64_t NGramModel::count(std::span<const TokenId> context, TokenId next) const {
  auto it = table_.find(std::vector<TokenId>(context.begin(), context.end()));
  if (it == table_.end()) return 0;
  const auto& v = it->second.next;
  auto pos = std::lower_bound(v.begin(), v.end(), next,
                              [](const auto& p, TokenId id) { return p.first < id; });
  return pos != v.end() && pos->first == next ? pos->second : 0;
}

std::string NGramModel::describe() const {
  std::ostringstream s;
  s << "ngram(order=" << order_ << ", vocab=" << vocabulary().size() << ", backoff=" << backoff_
    << (lowercase() ? ", lowercase" : "") << ")";
  return s.str();
}

bool operator==(const NGramModel& a, const NGramModel& b) {
  if (a.order_ != b.order_ || a.backoff_ != b.backoff_ || a.lowercase() != b.lowercase() ||
      !(a.vocabulary() == b.vocabulary()) || a.table_.size() != b.table_.size()) {
    return false;
  }
  for (const auto& [ctx, c] : a.table_) {
    auto it = b.table_.find(ctx);
    if (it == b.table_.end() || it->second.next != c.next) return false;
  }
  return true;
}

// File layout, all integers little-endian:
//   magic "TSNG" | u8 version | u32 order | f64 backoff | u8 flags (bit0 lowercase)
//   vocabulary block: u64 byte length, then u32 count and (u32 len, bytes) per entry
//   triple block: u64 byte length, then u64 count and per triple
//     u32 context length, u32 ids..., u32 next, u64 count
// Triples are sorted lexicographically by (context, next).
namespace {

constexpr char kMagic[4] = {'T', 'S', 'N', 'G'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s); }
  void block(const Writer& inner) {
    u64(inner.buf_.size());
    buf_.append(inner.buf_);
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view take(std::size_t n) {
    if (n > data_.size() - pos_) throw Error(ErrorKind::Format, "truncated model file");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Reader block() {
    const std::uint64_t n = u64();
    if (n > data_.size() - pos_) throw Error(ErrorKind::Format, "truncated model file");
    return Reader(take(static_cast<std::size_t>(n)));
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

void NGramModel::save(const std::filesystem::path& path) const {
  Writer out;
  out.bytes(std::string_view(kMagic, 4));
  out.u8(kFormatVersion);
  out.u32(static_cast<std::uint32_t>(order_));
  out.f64(backoff_);
  out.u8(lowercase() ? 1 : 0);

  Writer vocab;
  vocab.u32(static_cast<std::uint32_t>(vocabulary().size()));
  for (const auto& e : vocabulary().entries()) {
    vocab.u32(static_cast<std::uint32_t>(e.size()));
    vocab.bytes(e);
  }
  out.block(vocab);

  std::vector<const std::vector<TokenId>*> contexts;
  contexts.reserve(table_.size());
  std::uint64_t n_triples = 0;
  for (const auto& [ctx, c] : table_) {
    contexts.push_back(&ctx);
    n_triples += c.next.size();
  }
  std::sort(contexts.begin(), contexts.end(), [](auto* a, auto* b) { return *a < *b; });
  Writer triples;
  triples.u64(n_triples);
  for (const auto* ctx : contexts) {
    for (const auto& [id, n] : table_.at(*ctx).next) {
      triples.u32(static_cast<std::uint32_t>(ctx->size()));
      for (TokenId t : *ctx) triples.u32(t);
      triples.u32(id);
      triples.u64(n);
    }
  }
  out.block(triples);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f.write(out.data().data(), static_cast<std::streamsize>(out.data().size()));
  if (!f) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  const std::string data = buf.str();

  Reader in(data);
  if (in.take(4) != std::string_view(kMagic, 4)) {
    throw Error(ErrorKind::Format, path.string() + " is not an n-gram model file");
  }
  const std::uint8_t version = in.u8();
  if (version != kFormatVersion) {
    throw Error(ErrorKind::Format, "model file version " + std::to_string(version) +
                                       ", this build reads version " +
                                       std::to_string(kFormatVersion));
  }
  const std::uint32_t order = in.u32();
  const double backoff = in.f64();
  const std::uint8_t flags = in.u8();
  NGramOptions{static_cast<int>(order), 1, backoff, false}.validate();

  Reader vin = in.block();
  const std::uint32_t n_vocab = vin.u32();
  std::vector<std::string> entries;
  entries.reserve(n_vocab);
  for (std::uint32_t i = 0; i < n_vocab; ++i) entries.emplace_back(vin.take(vin.u32()));
  if (!vin.done()) throw Error(ErrorKind::Format, "trailing bytes in vocabulary block");
  auto vocab = std::make_shared<const Vocabulary>(std::move(entries));
  auto tokenizer =
      std::make_shared<const WordTokenizer>(vocab, WordTokenizerOptions{(flags & 1) != 0});

  Reader tin = in.block();
  const std::uint64_t n_triples = tin.u64();
  Table table;
  for (std::uint64_t i = 0; i < n_triples; ++i) {
    const std::uint32_t len = tin.u32();
    if (len >= order) throw Error(ErrorKind::Format, "context longer than order - 1");
    std::vector<TokenId> ctx(len);
    for (auto& t : ctx) t = tin.u32();
    const TokenId next = tin.u32();
    const std::uint64_t n = tin.u64();
    if (n == 0) throw Error(ErrorKind::Format, "zero count");
    for (TokenId t : ctx) {
      if (t >= vocab->size()) throw Error(ErrorKind::Format, "token id out of range");
    }
    if (next >= vocab->size()) throw Error(ErrorKind::Format, "token id out of range");
    auto& c = table[std::move(ctx)];
    if (!c.next.empty() && c.next.back().first >= next) {
      throw Error(ErrorKind::Format, "triples not sorted");
    }
    c.next.emplace_back(next, n);
    c.total += n;
  }
  if (!tin.done() || !in.done()) throw Error(ErrorKind::Format, "trailing bytes in model file");
  return NGramModel(std::move(tokenizer), static_cast<int>(order), backoff, std::move(table));
}

}  // namespace tokenswap
