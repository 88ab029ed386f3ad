#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"

namespace turngov::encoding {

/// x(t): bit i is set iff inventory agent i sent the utterance.
struct OneHotVector {
  std::vector<std::uint8_t> bits;

  /// Index of the set bit. Throws InvalidArgument unless exactly one is set.
  std::size_t argmax() const;

  bool operator==(const OneHotVector&) const = default;
};

/// Concatenation of `window` one-hot blocks of width `agents`, most recent
/// sender first. All-zero blocks pad histories shorter than the window.
struct WindowedState {
  std::size_t window = 0;
  std::size_t agents = 0;
  std::vector<std::uint8_t> bits;

  /// Hex rendering of the bit string: bits are packed four per digit, first
  /// bit most significant, the tail zero-padded to a whole digit.
  std::string key() const;
  static WindowedState from_key(const std::string& key, std::size_t window,
                                std::size_t agents);

  bool operator==(const WindowedState&) const = default;
};

struct TransitionEvent {
  WindowedState from_state;
  std::string to_sender;

  bool operator==(const TransitionEvent&) const = default;
};

OneHotVector one_hot(std::string_view sender, const corpus::AgentInventory& agents);

/// Window over the last `window` senders of `history`.
WindowedState window_state(std::span<const std::string> history, std::size_t window,
                           const corpus::AgentInventory& agents);

/// One event per genuine turn t in [1, T-1]: the window over senders up to
/// t, and the sender of turn t+1. Distractor turns are ignored.
std::vector<TransitionEvent> transitions_from_dialogue(const corpus::Dialogue& dialogue,
                                                       std::size_t window,
                                                       const corpus::AgentInventory& agents);

}  // namespace turngov::encoding
