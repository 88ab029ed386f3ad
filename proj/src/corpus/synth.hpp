#pragma once

#include <cstdint>

#include "corpus/corpus.hpp"

namespace turngov::corpus {

/// Knobs of the synthetic multi-bot travel corpus. Defaults reproduce the
/// reference corpus shape: 6,138 dialogues of ~16 strictly alternating
/// user/bot turns, user share ~50%, bot shares close to train 12%, hotel 11%,
/// restaurant 11%, attraction 10%, travel 4%, taxi 2%.
struct SynthConfig {
  std::size_t dialogues = 6138;
  std::uint64_t seed = 2019;

  /// P(number of service domains = 1, 2, 3).
  double domains_1 = 0.70;
  double domains_2 = 0.27;
  double domains_3 = 0.03;

  /// Probability that the user names the domain when opening it.
  double first_cue = 0.40;
  double switch_cue = 0.30;
  /// Probability that a continuation turn borrows another domain's words.
  double cross_domain_noise = 0.06;
  /// Probability that a continuation turn reads like another domain's
  /// opening request while the current bot keeps serving.
  double misleading_cue = 0.10;
  /// Probability of a generic (domain-agnostic) continuation turn.
  double generic_continuation = 0.30;
  /// Probability of a thank-you exchange with the same bot between domains.
  double mid_ack = 0.25;

  /// How a multi-domain dialogue ends after the last booking; single-domain
  /// dialogues always close through travel_bot so every dialogue has at
  /// least three participants.
  double close_travel = 0.30;
  double close_same_bot = 0.60;
  // remainder: the user's goodbye gets no reply
};

/// Generates a clean (distractor-free) corpus with agents user,
/// attraction_bot, hotel_bot, restaurant_bot, taxi_bot, train_bot, travel_bot.
Corpus synthesize_corpus(const SynthConfig& config);

}  // namespace turngov::corpus
