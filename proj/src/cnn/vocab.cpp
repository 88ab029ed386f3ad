#include "cnn/vocab.hpp"

#include <cctype>

#include "common/error.hpp"

namespace turngov::cnn {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string build_input_text(const std::optional<std::pair<std::string, std::string>>& prev,
                             const std::pair<std::string, std::string>& cur) {
  std::string out;
  auto append = [&out](const std::string& part) {
    if (part.empty()) return;
    if (!out.empty()) out += ' ';
    out += part;
  };
  if (prev) {
    append(prev->first);
    append(prev->second);
  }
  append(cur.first);
  append(cur.second);
  return out;
}

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnknownToken);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[kPad] != kPadToken || tokens[kUnknown] != kUnknownToken) {
    throw CorruptError("vocabulary must start with the padding and unknown tokens");
  }
  for (auto& t : tokens) {
    if (index_.count(t)) throw CorruptError("duplicate vocabulary token '" + t + "'");
    index_.emplace(t, tokens_.size());
    tokens_.push_back(std::move(t));
  }
}

std::size_t Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::size_t Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

Vocabulary build_vocab(std::span<const std::string> texts) {
  Vocabulary v;
  for (const auto& text : texts) {
    for (const auto& tok : tokenize(text)) v.add(tok);
  }
  return v;
}

TokenSequence encode(const Vocabulary& vocab, std::string_view text, std::size_t max_len) {
  const auto tokens = tokenize(text);
  TokenSequence seq;
  seq.indices.assign(max_len, Vocabulary::kPad);
  const std::size_t start = tokens.size() > max_len ? tokens.size() - max_len : 0;
  for (std::size_t i = start; i < tokens.size(); ++i) {
    const auto idx = vocab.lookup(tokens[i]);
    if (idx == Vocabulary::kUnknown) ++seq.unknown;
    seq.indices[i - start] = idx;
  }
  return seq;
}

}  // namespace turngov::cnn
