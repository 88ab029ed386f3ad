#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace turngov::corpus {

enum class Role { user, bot };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);

struct Agent {
  std::string name;
  Role role = Role::bot;

  bool operator==(const Agent&) const = default;
};

/// The participants of a corpus in canonical (lexicographic) order. Every
/// one-hot encoding and every probability vector in the project is indexed
/// by position in this inventory.
class AgentInventory {
 public:
  AgentInventory() = default;
  explicit AgentInventory(std::vector<Agent> agents);

  std::size_t size() const { return agents_.size(); }
  bool empty() const { return agents_.empty(); }
  const std::vector<Agent>& agents() const { return agents_; }
  const Agent& at(std::size_t index) const { return agents_.at(index); }
  const std::string& name(std::size_t index) const { return agents_.at(index).name; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws InvalidArgument for names outside the inventory.
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }
  Role role_of(std::string_view name) const { return agents_[index_of(name)].role; }

  /// Name of the single user-role participant.
  const std::string& user() const;
  std::vector<std::string> bots() const;
  std::vector<std::string> names() const;

  bool operator==(const AgentInventory&) const = default;

 private:
  std::vector<Agent> agents_;
};

struct Utterance {
  std::string sender;
  Role role = Role::user;
  std::string text;
  std::vector<std::string> mentions;
  bool is_distractor = false;
  std::optional<int> slot;

  bool operator==(const Utterance&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> turns;

  /// Turns with distractors removed, in order.
  std::vector<Utterance> genuine_turns() const;
  std::vector<std::string> genuine_senders() const;

  bool operator==(const Dialogue&) const = default;
};

struct Corpus {
  AgentInventory agents;
  std::vector<Dialogue> dialogues;

  std::size_t utterance_count() const;
  bool is_augmented() const;

  bool operator==(const Corpus&) const = default;
};

/// Names of inventory agents occurring as case-insensitive whole tokens in
/// `text` (tokens are maximal runs of alphanumerics and '_'), in order
/// of first occurrence, without duplicates.
std::vector<std::string> extract_mentions(std::string_view text,
                                          const AgentInventory& agents);

/// Checks corpus invariants; throws ValidationError naming the dialogue/turn.
void validate(const Corpus& corpus);

Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Builds a corpus from in-memory dialogues: infers the inventory, fills
/// mentions and validates.
Corpus make_corpus(std::vector<Dialogue> dialogues,
                   std::vector<Agent> extra_agents = {});

/// Positional split: the first floor(ratio * D) dialogues train, the rest test.
std::pair<Corpus, Corpus> split_train_test(const Corpus& corpus, double ratio);

/// Genuine bot replies per bot, used as the text source for distractors.
struct ReplyPools {
  std::map<std::string, std::vector<std::string>> by_bot;

  static ReplyPools from(const Corpus& corpus);
};

/// Adds, for every genuine bot reply to a user utterance, one distractor
/// reply from each other bot. Genuine reply and its distractors share a slot
/// index (0-based within the dialogue). Distractor text is drawn uniformly
/// from the distractor bot's pool.
Corpus augment_with_errors(const Corpus& corpus, std::uint64_t seed,
                           const ReplyPools& pools);

struct CorpusStats {
  std::size_t utterances = 0;
  std::size_t dialogues = 0;
  std::size_t genuine_utterances = 0;
  std::size_t distractor_utterances = 0;
  std::map<std::string, std::size_t> per_agent;
  double utterances_per_agent = 0.0;
  double avg_agents_per_dialogue = 0.0;
  double std_agents_per_dialogue = 0.0;
  std::size_t min_agents_per_dialogue = 0;
  std::size_t max_agents_per_dialogue = 0;
  double avg_utterances_per_dialogue = 0.0;
  double avg_words_per_utterance = 0.0;
};

CorpusStats corpus_stats(const Corpus& corpus);
nlohmann::ordered_json to_json(const CorpusStats& stats);

std::size_t count_words(std::string_view text);

}  // namespace turngov::corpus
