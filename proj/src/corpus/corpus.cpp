#include "corpus/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace turngov::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Role role) {
  return role == Role::user ? "user" : "bot";
}

Role parse_role(std::string_view text) {
  if (text == "user") return Role::user;
  if (text == "bot") return Role::bot;
  throw InvalidArgument("unknown role '" + std::string(text) + "'");
}

AgentInventory::AgentInventory(std::vector<Agent> agents)
    : agents_(std::move(agents)) {
  std::sort(agents_.begin(), agents_.end(),
            [](const Agent& a, const Agent& b) { return a.name < b.name; });
  std::size_t users = 0;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    if (agents_[i].name.empty()) {
      throw ValidationError("agent inventory contains an empty name");
    }
    if (i > 0 && agents_[i].name == agents_[i - 1].name) {
      throw ValidationError("duplicate agent '" + agents_[i].name + "'");
    }
    if (agents_[i].role == Role::user) ++users;
  }
  if (!agents_.empty() && users != 1) {
    throw ValidationError("inventory must contain exactly one user-role agent, found " +
                          std::to_string(users));
  }
}

std::optional<std::size_t> AgentInventory::find(std::string_view name) const {
  auto it = std::lower_bound(
      agents_.begin(), agents_.end(), name,
      [](const Agent& a, std::string_view n) { return a.name < n; });
  if (it == agents_.end() || it->name != name) return std::nullopt;
  return static_cast<std::size_t>(it - agents_.begin());
}

std::size_t AgentInventory::index_of(std::string_view name) const {
  auto index = find(name);
  if (!index) throw InvalidArgument("unknown agent '" + std::string(name) + "'");
  return *index;
}

const std::string& AgentInventory::user() const {
  for (const auto& a : agents_) {
    if (a.role == Role::user) return a.name;
  }
  throw StateError("inventory has no user-role agent");
}

std::vector<std::string> AgentInventory::bots() const {
  std::vector<std::string> out;
  for (const auto& a : agents_) {
    if (a.role == Role::bot) out.push_back(a.name);
  }
  return out;
}

std::vector<std::string> AgentInventory::names() const {
  std::vector<std::string> out;
  out.reserve(agents_.size());
  for (const auto& a : agents_) out.push_back(a.name);
  return out;
}

std::vector<Utterance> Dialogue::genuine_turns() const {
  std::vector<Utterance> out;
  out.reserve(turns.size());
  for (const auto& u : turns) {
    if (!u.is_distractor) out.push_back(u);
  }
  return out;
}

std::vector<std::string> Dialogue::genuine_senders() const {
  std::vector<std::string> out;
  out.reserve(turns.size());
  for (const auto& u : turns) {
    if (!u.is_distractor) out.push_back(u.sender);
  }
  return out;
}

std::size_t Corpus::utterance_count() const {
  std::size_t n = 0;
  for (const auto& d : dialogues) n += d.turns.size();
  return n;
}

bool Corpus::is_augmented() const {
  for (const auto& d : dialogues) {
    for (const auto& u : d.turns) {
      if (u.is_distractor) return true;
    }
  }
  return false;
}

namespace {

bool is_token_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string turn_ref(const Dialogue& d, std::size_t t) {
  return "dialogue '" + d.id + "' turn " + std::to_string(t);
}

void fill_mentions(Corpus& corpus) {
  for (auto& d : corpus.dialogues) {
    for (auto& u : d.turns) u.mentions = extract_mentions(u.text, corpus.agents);
  }
}

}  // namespace

std::vector<std::string> extract_mentions(std::string_view text,
                                          const AgentInventory& agents) {
  std::vector<std::string> lowered;
  lowered.reserve(agents.size());
  for (const auto& a : agents.agents()) lowered.push_back(lower(a.name));

  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_char(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && is_token_char(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      const std::string token = lower(text.substr(i, j - i));
      for (std::size_t k = 0; k < lowered.size(); ++k) {
        if (lowered[k] == token &&
            std::find(out.begin(), out.end(), agents.name(k)) == out.end()) {
          out.push_back(agents.name(k));
        }
      }
    }
    i = j;
  }
  return out;
}

void validate(const Corpus& corpus) {
  if (corpus.dialogues.empty()) throw ValidationError("corpus has no dialogues");
  std::set<std::string> ids;
  for (const auto& d : corpus.dialogues) {
    if (d.turns.empty()) throw ValidationError("dialogue '" + d.id + "' has no turns");
    if (!ids.insert(d.id).second) {
      throw ValidationError("duplicate dialogue id '" + d.id + "'");
    }
    if (d.turns.front().role != Role::user || d.turns.front().is_distractor) {
      throw ValidationError(turn_ref(d, 0) + ": dialogue must open with a user turn");
    }
    const Utterance* prev_genuine = nullptr;
    std::map<int, std::vector<const Utterance*>> slots;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const auto& u = d.turns[t];
      auto index = corpus.agents.find(u.sender);
      if (!index) {
        throw ValidationError(turn_ref(d, t) + ": sender '" + u.sender +
                              "' is not in the agent inventory");
      }
      if (corpus.agents.at(*index).role != u.role) {
        throw ValidationError(turn_ref(d, t) + ": role of '" + u.sender +
                              "' disagrees with the inventory");
      }
      for (const auto& m : u.mentions) {
        if (!corpus.agents.contains(m)) {
          throw ValidationError(turn_ref(d, t) + ": mention of unknown agent '" + m + "'");
        }
      }
      if (u.is_distractor && !u.slot) {
        throw ValidationError(turn_ref(d, t) + ": distractor without slot");
      }
      if (u.slot) slots[*u.slot].push_back(&u);
      if (u.is_distractor) continue;
      if (prev_genuine && prev_genuine->role == Role::bot && u.role == Role::bot) {
        throw ValidationError(turn_ref(d, t) + ": bot turn follows a bot turn");
      }
      prev_genuine = &u;
    }
    for (const auto& [slot, members] : slots) {
      std::size_t genuine = 0;
      std::set<std::string> senders;
      for (const auto* u : members) {
        if (!u->is_distractor) ++genuine;
        if (u->role != Role::bot || !senders.insert(u->sender).second) {
          throw ValidationError("dialogue '" + d.id + "' slot " + std::to_string(slot) +
                                ": candidates must come from distinct bots");
        }
      }
      if (genuine != 1) {
        throw ValidationError("dialogue '" + d.id + "' slot " + std::to_string(slot) +
                              ": expected exactly one genuine reply");
      }
    }
  }
}

Corpus make_corpus(std::vector<Dialogue> dialogues, std::vector<Agent> extra_agents) {
  std::map<std::string, Role> roles;
  for (const auto& a : extra_agents) roles.emplace(a.name, a.role);
  for (const auto& d : dialogues) {
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const auto& u = d.turns[t];
      auto [it, inserted] = roles.emplace(u.sender, u.role);
      if (!inserted && it->second != u.role) {
        throw ValidationError(turn_ref(d, t) + ": sender '" + u.sender +
                              "' appears with two roles");
      }
    }
  }
  std::vector<Agent> agents;
  for (const auto& [name, role] : roles) agents.push_back({name, role});
  Corpus corpus{AgentInventory(std::move(agents)), std::move(dialogues)};
  fill_mentions(corpus);
  validate(corpus);
  return corpus;
}

Corpus parse_corpus(std::istream& in) {
  std::vector<Dialogue> dialogues;
  std::vector<Agent> header_agents;
  bool header_seen = false;
  bool use_header_only = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
    try {
      if (j.contains("agents")) {
        if (header_seen || !dialogues.empty()) {
          throw ParseError("agent header must be the first line", line_no);
        }
        header_seen = true;
        for (const auto& a : j.at("agents")) {
          if (a.is_string()) {
            header_agents.push_back({a.get<std::string>(), Role::bot});
          } else {
            header_agents.push_back({a.at("name").get<std::string>(),
                                     parse_role(a.at("role").get<std::string>())});
            use_header_only = true;
          }
        }
        continue;
      }
      Dialogue d;
      d.id = j.at("id").get<std::string>();
      for (const auto& t : j.at("turns")) {
        Utterance u;
        u.sender = t.at("sender").get<std::string>();
        u.role = parse_role(t.at("role").get<std::string>());
        u.text = t.at("text").get<std::string>();
        if (t.contains("distractor") && !t.at("distractor").is_null()) {
          u.is_distractor = t.at("distractor").get<bool>();
        }
        if (t.contains("slot") && !t.at("slot").is_null()) u.slot = t.at("slot").get<int>();
        d.turns.push_back(std::move(u));
      }
      dialogues.push_back(std::move(d));
    } catch (const ParseError&) {
      throw;
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (dialogues.empty()) throw ParseError("no dialogues in input", line_no);

  // A header given as bare names only contributes names; roles come from turns.
  std::vector<Agent> extra;
  if (use_header_only) extra = header_agents;
  Corpus corpus = make_corpus(std::move(dialogues), extra);
  if (header_seen && !use_header_only) {
    for (const auto& a : header_agents) {
      if (!corpus.agents.contains(a.name)) {
        throw ValidationError("header agent '" + a.name + "' never speaks and has no role");
      }
    }
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file '" + path.string() + "'");
  return parse_corpus(in);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  ordered_json header;
  header["agents"] = ordered_json::array();
  for (const auto& a : corpus.agents.agents()) {
    header["agents"].push_back({{"name", a.name}, {"role", to_string(a.role)}});
  }
  out << header.dump() << '\n';
  for (const auto& d : corpus.dialogues) {
    ordered_json j;
    j["id"] = d.id;
    j["turns"] = ordered_json::array();
    for (const auto& u : d.turns) {
      ordered_json t;
      t["sender"] = u.sender;
      t["role"] = to_string(u.role);
      t["text"] = u.text;
      t["distractor"] = u.is_distractor;
      t["slot"] = u.slot ? ordered_json(*u.slot) : ordered_json(nullptr);
      j["turns"].push_back(std::move(t));
    }
    out << j.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file '" + path.string() + "'");
  write_corpus(corpus, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::pair<Corpus, Corpus> split_train_test(const Corpus& corpus, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidArgument("split ratio must lie strictly between 0 and 1");
  }
  const std::size_t total = corpus.dialogues.size();
  // The epsilon keeps products like 0.7 * 10 from flooring to 6.
  const auto n_train = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(total) + 1e-9));
  Corpus train{corpus.agents, {}};
  Corpus test{corpus.agents, {}};
  train.dialogues.assign(corpus.dialogues.begin(), corpus.dialogues.begin() + n_train);
  test.dialogues.assign(corpus.dialogues.begin() + n_train, corpus.dialogues.end());
  return {std::move(train), std::move(test)};
}

ReplyPools ReplyPools::from(const Corpus& corpus) {
  ReplyPools pools;
  for (const auto& bot : corpus.agents.bots()) pools.by_bot[bot];
  for (const auto& d : corpus.dialogues) {
    for (const auto& u : d.turns) {
      if (u.role == Role::bot && !u.is_distractor) pools.by_bot[u.sender].push_back(u.text);
    }
  }
  return pools;
}

Corpus augment_with_errors(const Corpus& corpus, std::uint64_t seed,
                           const ReplyPools& pools) {
  if (corpus.is_augmented()) throw StateError("corpus is already augmented");
  const auto bots = corpus.agents.bots();
  for (const auto& bot : bots) {
    auto it = pools.by_bot.find(bot);
    if (it == pools.by_bot.end() || it->second.empty()) {
      throw StateError("bot '" + bot + "' has an empty reply pool");
    }
  }

  Corpus out{corpus.agents, {}};
  out.dialogues.reserve(corpus.dialogues.size());
  for (std::size_t di = 0; di < corpus.dialogues.size(); ++di) {
    const auto& d = corpus.dialogues[di];
    Rng rng(derive_seed(seed, di));
    Dialogue aug{d.id, {}};
    aug.turns.reserve(d.turns.size() * bots.size());
    int slot = 0;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      Utterance u = d.turns[t];
      const bool is_reply = u.role == Role::bot && t > 0 &&
                            d.turns[t - 1].role == Role::user;
      if (!is_reply) {
        aug.turns.push_back(std::move(u));
        continue;
      }
      u.slot = slot;
      const std::string genuine_sender = u.sender;
      aug.turns.push_back(std::move(u));
      for (const auto& bot : bots) {
        if (bot == genuine_sender) continue;
        const auto& pool = pools.by_bot.at(bot);
        Utterance distractor;
        distractor.sender = bot;
        distractor.role = Role::bot;
        distractor.text = pool[rng.uniform_index(pool.size())];
        distractor.mentions = extract_mentions(distractor.text, corpus.agents);
        distractor.is_distractor = true;
        distractor.slot = slot;
        aug.turns.push_back(std::move(distractor));
      }
      ++slot;
    }
    out.dialogues.push_back(std::move(aug));
  }
  return out;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.dialogues = corpus.dialogues.size();
  for (const auto& a : corpus.agents.agents()) s.per_agent[a.name] = 0;
  std::size_t words = 0;
  std::vector<std::size_t> agents_per_dialogue;
  agents_per_dialogue.reserve(s.dialogues);
  for (const auto& d : corpus.dialogues) {
    std::set<std::string> speakers;
    for (const auto& u : d.turns) {
      ++s.utterances;
      ++s.per_agent[u.sender];
      (u.is_distractor ? s.distractor_utterances : s.genuine_utterances)++;
      words += count_words(u.text);
      speakers.insert(u.sender);
    }
    agents_per_dialogue.push_back(speakers.size());
  }
  if (s.dialogues == 0) return s;
  const double D = static_cast<double>(s.dialogues);
  s.avg_utterances_per_dialogue = static_cast<double>(s.utterances) / D;
  s.avg_words_per_utterance =
      s.utterances ? static_cast<double>(words) / static_cast<double>(s.utterances) : 0.0;
  s.utterances_per_agent =
      corpus.agents.empty() ? 0.0
                            : static_cast<double>(s.utterances) /
                                  static_cast<double>(corpus.agents.size());
  double sum = 0.0, sq = 0.0;
  s.min_agents_per_dialogue = agents_per_dialogue.front();
  s.max_agents_per_dialogue = agents_per_dialogue.front();
  for (auto k : agents_per_dialogue) {
    sum += static_cast<double>(k);
    sq += static_cast<double>(k * k);
    s.min_agents_per_dialogue = std::min(s.min_agents_per_dialogue, k);
    s.max_agents_per_dialogue = std::max(s.max_agents_per_dialogue, k);
  }
  s.avg_agents_per_dialogue = sum / D;
  s.std_agents_per_dialogue =
      std::sqrt(std::max(0.0, sq / D - s.avg_agents_per_dialogue * s.avg_agents_per_dialogue));
  return s;
}

ordered_json to_json(const CorpusStats& s) {
  ordered_json j;
  j["utterances"] = s.utterances;
  j["dialogues"] = s.dialogues;
  j["genuine_utterances"] = s.genuine_utterances;
  j["distractor_utterances"] = s.distractor_utterances;
  j["utterances_per_agent"] = s.utterances_per_agent;
  j["avg_agents_per_dialogue"] = s.avg_agents_per_dialogue;
  j["std_agents_per_dialogue"] = s.std_agents_per_dialogue;
  j["min_agents_per_dialogue"] = s.min_agents_per_dialogue;
  j["max_agents_per_dialogue"] = s.max_agents_per_dialogue;
  j["avg_utterances_per_dialogue"] = s.avg_utterances_per_dialogue;
  j["avg_words_per_utterance"] = s.avg_words_per_utterance;
  ordered_json per_agent;
  for (const auto& [name, count] : s.per_agent) {
    per_agent[name] = {
        {"utterances", count},
        {"share", s.utterances ? static_cast<double>(count) / static_cast<double>(s.utterances)
                               : 0.0}};
  }
  j["per_agent"] = per_agent;
  return j;
}

}  // namespace turngov::corpus
