#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace turngov::cnn {

/// Lowercased whitespace tokens.
std::vector<std::string> tokenize(std::string_view text);

/// "prev_sender prev_text cur_sender cur_text", single-space joined; the
/// prev pair is omitted when absent. Empty parts are skipped.
std::string build_input_text(const std::optional<std::pair<std::string, std::string>>& prev,
                             const std::pair<std::string, std::string>& cur);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnknown = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnknownToken = "<unk>";

  Vocabulary();
  /// Rebuilds from a token list in index order (specials first).
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Adds a token if new; returns its index.
  std::size_t add(const std::string& token);
  std::size_t lookup(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Tokens are indexed in order of first appearance across `texts`.
Vocabulary build_vocab(std::span<const std::string> texts);

/// Token indices of `text`, keeping the last `max_len` tokens and padding
/// the tail with kPad up to `max_len`.
struct TokenSequence {
  std::vector<std::size_t> indices;
  std::size_t unknown = 0;  // tokens mapped to kUnknown
};

TokenSequence encode(const Vocabulary& vocab, std::string_view text, std::size_t max_len);

}  // namespace turngov::cnn
