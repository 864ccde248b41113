#include "tokenswap/error.hpp"

namespace tokenswap {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::AllZero: return "AllZero";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::MalformedWord: return "MalformedWord";
    case ErrorKind::EmptyBinding: return "EmptyBinding";
    case ErrorKind::VocabMismatch: return "VocabMismatch";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::Source: return "SourceError";
    case ErrorKind::TokenizerDesync: return "TokenizerDesync";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::Http: return "HttpError";
    case ErrorKind::Protocol: return "ProtocolError";
    case ErrorKind::EmptyReference: return "EmptyReference";
    case ErrorKind::BothEmpty: return "BothEmpty";
    case ErrorKind::EmptyList: return "EmptyList";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::Usage: return "UsageError";
  }
  return "Error";
}

}  // namespace tokenswap
