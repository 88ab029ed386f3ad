#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <string>
#include <vector>

#include <json.hpp>

#include "cnn/classifier.hpp"
#include "dsl/engine.hpp"
#include "hybrid/hybrid.hpp"
#include "predictors/predictors.hpp"

namespace turngov::hub {

struct HubConfig {
  hybrid::CascadeConfig cascade;
  std::filesystem::path ruleset_path;
  std::optional<std::filesystem::path> mle_model;
  std::optional<std::filesystem::path> cnn_model;
  std::string listen = "127.0.0.1:7070";
  /// Participants; when empty they come from the loaded models.
  std::vector<corpus::Agent> agents;

  /// Relative paths resolve against `base`. Throws ValidationError for
  /// unknown keys or wrongly typed values.
  static HubConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  /// Reads the file and applies the TURNGOV_LISTEN override.
  static HubConfig load(const std::filesystem::path& path);
};

/// Ruleset plus optional expectation source: everything a conversation needs.
struct Governor {
  std::shared_ptr<const dsl::Engine> engine;
  std::shared_ptr<const hybrid::Expecter> expecter;

  /// Loads rules and models. The cascade is used only when both models are
  /// configured.
  static Governor from_config(const HubConfig& config);
};

std::pair<std::string, std::uint16_t> parse_listen(const std::string& address);

/// The verdict frame sent back to the submitter.
nlohmann::ordered_json verdict_frame(const std::string& conv, const std::string& sender,
                                     const hybrid::Submission& submission);

/// Offline replay of a transcript: one `{"sender","text"[,"conv"]}` object
/// per line, blank lines skipped. Returns the verdict frame of every message
/// (a missing conv is "default"), exactly as the service would send them.
std::vector<nlohmann::ordered_json> replay_transcript(const Governor& governor, std::istream& in);

using ConnectionId = std::uint64_t;

/// A frame addressed to one connection.
struct Outgoing {
  ConnectionId to = 0;
  nlohmann::ordered_json frame;
};

/// Routing core of the service: one governed session per conversation,
/// created on first use. Safe to call from many threads; frames of one
/// conversation are processed one at a time in call order.
class Hub {
 public:
  explicit Hub(Governor governor) : governor_(std::move(governor)) {}

  /// Handles one inbound frame from `from`. `deliver` is called while the
  /// conversation is locked, so per-conversation output order matches
  /// processing order.
  void handle(ConnectionId from, const std::string& line,
              const std::function<void(const Outgoing&)>& deliver);
  /// Forgets a connection's subscriptions.
  void disconnect(ConnectionId id);

 private:
  struct Conversation {
    std::mutex mutex;
    hybrid::Session session;
    std::set<ConnectionId> members;
    explicit Conversation(hybrid::Session s) : session(std::move(s)) {}
  };
  Conversation& conversation(const std::string& id);

  Governor governor_;
  std::mutex conversations_mutex_;
  std::map<std::string, std::unique_ptr<Conversation>> conversations_;
};

/// Newline-delimited JSON over TCP, one thread per connection.
class Server {
 public:
  explicit Server(Governor governor) : hub_(std::move(governor)) {}
  ~Server();

  /// Binds and listens; returns the bound port (useful with port 0).
  std::uint16_t bind(const std::string& address);
  /// Accept loop; returns after stop().
  void run();
  void stop();

 private:
  void serve_connection(int fd, ConnectionId id);
  void send(ConnectionId id, const std::string& line);

  Hub hub_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::atomic<ConnectionId> next_id_{1};
  std::mutex connections_mutex_;
  struct Connection {
    explicit Connection(int f) : fd(f) {}
    int fd;
    std::mutex write_mutex;
  };
  std::map<ConnectionId, std::shared_ptr<Connection>> connections_;
  std::vector<std::thread> threads_;
};

}  // namespace turngov::hub
