#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tokenswap {

enum class ErrorKind {
  InvalidArgument,
  AllZero,
  NonFinite,
  Io,
  Format,
  EmptySet,
  MalformedWord,
  EmptyBinding,
  VocabMismatch,
  EmptyCorpus,
  Source,
  TokenizerDesync,
  Timeout,
  Http,
  Protocol,
  EmptyReference,
  BothEmpty,
  EmptyList,
  Schema,
  TooShort,
  Usage,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace tokenswap
