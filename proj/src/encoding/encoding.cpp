#include "encoding/encoding.hpp"

#include "common/error.hpp"

namespace turngov::encoding {

std::size_t OneHotVector::argmax() const {
  std::size_t found = bits.size();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == 0) continue;
    if (found != bits.size() || bits[i] != 1) {
      throw InvalidArgument("not a one-hot vector");
    }
    found = i;
  }
  if (found == bits.size()) throw InvalidArgument("not a one-hot vector");
  return found;
}

std::string WindowedState::key() const {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve((bits.size() + 3) / 4);
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      nibble <<= 1;
      if (i + k < bits.size() && bits[i + k]) nibble |= 1;
    }
    out += digits[nibble];
  }
  return out;
}

WindowedState WindowedState::from_key(const std::string& key, std::size_t window,
                                      std::size_t agents) {
  const std::size_t length = window * agents;
  if (key.size() != (length + 3) / 4) {
    throw InvalidArgument("state key '" + key + "' has the wrong length");
  }
  WindowedState s{window, agents, std::vector<std::uint8_t>(length, 0)};
  for (std::size_t d = 0; d < key.size(); ++d) {
    const char c = key[d];
    unsigned nibble;
    if (c >= '0' && c <= '9') {
      nibble = static_cast<unsigned>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      nibble = static_cast<unsigned>(c - 'a' + 10);
    } else {
      throw InvalidArgument("state key '" + key + "' is not lowercase hex");
    }
    for (std::size_t k = 0; k < 4; ++k) {
      const bool bit = (nibble >> (3 - k)) & 1U;
      const std::size_t pos = d * 4 + k;
      if (pos < length) {
        s.bits[pos] = bit ? 1 : 0;
      } else if (bit) {
        throw InvalidArgument("state key '" + key + "' sets padding bits");
      }
    }
  }
  for (std::size_t b = 0; b < window; ++b) {
    std::size_t set = 0;
    for (std::size_t i = 0; i < agents; ++i) set += s.bits[b * agents + i];
    if (set > 1) throw InvalidArgument("state key '" + key + "' has a block with two senders");
  }
  return s;
}

OneHotVector one_hot(std::string_view sender, const corpus::AgentInventory& agents) {
  OneHotVector v{std::vector<std::uint8_t>(agents.size(), 0)};
  v.bits[agents.index_of(sender)] = 1;
  return v;
}

WindowedState window_state(std::span<const std::string> history, std::size_t window,
                           const corpus::AgentInventory& agents) {
  if (window < 1) throw InvalidArgument("window size must be at least 1");
  const std::size_t n = agents.size();
  WindowedState s{window, n, std::vector<std::uint8_t>(window * n, 0)};
  for (std::size_t b = 0; b < window && b < history.size(); ++b) {
    const auto& sender = history[history.size() - 1 - b];
    s.bits[b * n + agents.index_of(sender)] = 1;
  }
  return s;
}

std::vector<TransitionEvent> transitions_from_dialogue(const corpus::Dialogue& dialogue,
                                                       std::size_t window,
                                                       const corpus::AgentInventory& agents) {
  const auto senders = dialogue.genuine_senders();
  std::vector<TransitionEvent> events;
  if (senders.size() < 2) return events;
  events.reserve(senders.size() - 1);
  const std::span<const std::string> all(senders);
  for (std::size_t t = 1; t < senders.size(); ++t) {
    events.push_back({window_state(all.first(t), window, agents), senders[t]});
  }
  return events;
}

}  // namespace turngov::encoding
