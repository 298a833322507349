#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "flowkit/dialogue.hpp"

namespace flowkit {

/// First problem found while reading a bundle document.
class BundleParseError : public std::runtime_error {
 public:
  BundleParseError(std::size_t line, std::size_t column, std::string path, const std::string& message);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  /// JSON pointer of the offending element ("" for document-level syntax errors).
  const std::string& path() const { return path_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string path_;
  std::string detail_;
};

DialogueBundle parse_bundle(std::string_view text);
DialogueBundle load_bundle_file(const std::string& path);

/// Canonical JSON document; parse_bundle(serialize_bundle(b)) reproduces b.
std::string serialize_bundle(const DialogueBundle& bundle);

/// 64-bit FNV-1a of the canonical serialization, as 16 hex digits.
std::string bundle_fingerprint(const DialogueBundle& bundle);

}  // namespace flowkit
