#include "hub/hub.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>

#include "common/error.hpp"

namespace turngov::hub {

using nlohmann::json;
using nlohmann::ordered_json;

HubConfig HubConfig::from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> known = {"k1",        "k2",        "default_agent",
                                              "literal_guard", "ruleset_path", "mle_model",
                                              "cnn_model", "listen",    "agents"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");
  }
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
  };
  HubConfig c;
  try {
    if (j.contains("k1")) c.cascade.k1 = j.at("k1").get<double>();
    if (j.contains("k2")) c.cascade.k2 = j.at("k2").get<double>();
    if (j.contains("default_agent")) c.cascade.default_agent = j.at("default_agent").get<std::string>();
    if (j.contains("literal_guard")) c.cascade.literal_guard = j.at("literal_guard").get<bool>();
    if (!j.contains("ruleset_path")) throw ValidationError("config needs 'ruleset_path'");
    c.ruleset_path = resolve(j.at("ruleset_path").get<std::string>());
    if (j.contains("mle_model")) c.mle_model = resolve(j.at("mle_model").get<std::string>());
    if (j.contains("cnn_model")) c.cnn_model = resolve(j.at("cnn_model").get<std::string>());
    if (j.contains("listen")) c.listen = j.at("listen").get<std::string>();
    if (j.contains("agents")) {
      for (const auto& a : j.at("agents")) {
        if (a.is_string()) {
          const auto name = a.get<std::string>();
          c.agents.push_back({name, name == "user" ? corpus::Role::user : corpus::Role::bot});
        } else {
          c.agents.push_back({a.at("name").get<std::string>(),
                              corpus::parse_role(a.at("role").get<std::string>())});
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  if (!(c.cascade.k1 >= 0.0 && c.cascade.k1 <= 1.0 && c.cascade.k2 >= 0.0 && c.cascade.k2 <= 1.0)) {
    throw ValidationError("k1 and k2 must lie in [0, 1]");
  }
  parse_listen(c.listen);
  return c;
}

HubConfig HubConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  auto c = from_json(j, path.parent_path());
  if (const char* env = std::getenv("TURNGOV_LISTEN"); env && *env) {
    parse_listen(env);
    c.listen = env;
  }
  return c;
}

Governor Governor::from_config(const HubConfig& config) {
  auto rules = std::make_shared<const dsl::RuleSet>(dsl::load_ruleset(config.ruleset_path));
  std::shared_ptr<const predictors::MlePredictor> mle;
  std::shared_ptr<const cnn::CnnPredictor> cnnp;
  std::optional<corpus::AgentInventory> agents;
  if (!config.agents.empty()) agents = corpus::AgentInventory(config.agents);
  auto check = [&](const corpus::AgentInventory& inv, const char* what) {
    if (!agents) {
      agents = inv;
    } else if (!(*agents == inv)) {
      throw ValidationError(std::string(what) + " was trained for different participants");
    }
  };
  if (config.mle_model) {
    auto table = std::make_shared<const predictors::TransitionTable>(
        predictors::TransitionTable::load(*config.mle_model));
    check(table->agents(), "MLE model");
    mle = std::make_shared<const predictors::MlePredictor>(table);
  }
  if (config.cnn_model) {
    auto cl = std::make_shared<const cnn::CnnClassifier>(cnn::load_model(*config.cnn_model));
    check(cl->agents, "CNN model");
    cnnp = std::make_shared<const cnn::CnnPredictor>(cl);
  }
  if (!agents) throw ValidationError("config names no agents and no models");
  Governor g;
  g.engine = std::make_shared<const dsl::Engine>(rules, *agents);
  if (mle && cnnp) {
    config.cascade.validate(*agents);
    g.expecter = std::make_shared<const hybrid::CascadeExpecter>(cnnp, mle, config.cascade);
  } else if (mle || cnnp) {
    throw ValidationError("the cascade needs both an MLE and a CNN model");
  }
  return g;
}

std::pair<std::string, std::uint16_t> parse_listen(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw ValidationError("listen address must be host:port, got '" + address + "'");
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535) {
    throw ValidationError("bad port in listen address '" + address + "'");
  }
  return {host, static_cast<std::uint16_t>(p)};
}

ordered_json verdict_frame(const std::string& conv, const std::string& sender,
                           const hybrid::Submission& sub) {
  ordered_json v;
  v["type"] = "verdict";
  v["conv"] = conv;
  v["seq"] = sub.seq;
  v["sender"] = sender;
  v["verdict"] = dsl::to_string(sub.decision.verdict);
  v["justification"] = sub.decision.justification;
  v["expected"] = sub.expected ? json(*sub.expected) : json(nullptr);
  return v;
}

std::vector<ordered_json> replay_transcript(const Governor& governor, std::istream& in) {
  std::map<std::string, hybrid::Session> sessions;
  std::vector<ordered_json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("transcript line is not valid JSON", line_no);
    }
    if (!j.is_object() || !j.contains("sender") || !j["sender"].is_string() ||
        !j.contains("text") || !j["text"].is_string()) {
      throw ParseError("transcript lines need string 'sender' and 'text'", line_no);
    }
    const std::string conv =
        j.contains("conv") && j["conv"].is_string() ? j["conv"].get<std::string>() : "default";
    auto it = sessions.find(conv);
    if (it == sessions.end()) {
      it = sessions.emplace(conv, hybrid::Session(governor.engine, governor.expecter)).first;
    }
    const auto sender = j["sender"].get<std::string>();
    try {
      out.push_back(verdict_frame(conv, sender, it->second.submit(sender, j["text"].get<std::string>())));
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

Hub::Conversation& Hub::conversation(const std::string& id) {
  std::lock_guard lock(conversations_mutex_);
  auto& slot = conversations_[id];
  if (!slot) slot = std::make_unique<Conversation>(hybrid::Session(governor_.engine, governor_.expecter));
  return *slot;
}

void Hub::handle(ConnectionId from, const std::string& line,
                 const std::function<void(const Outgoing&)>& deliver) {
  auto error = [&](const std::string& message, const json* conv) {
    ordered_json f;
    f["type"] = "error";
    if (conv) f["conv"] = *conv;
    f["message"] = message;
    deliver({from, f});
  };
  json in;
  try {
    in = json::parse(line);
  } catch (const json::exception&) {
    error("frame is not valid JSON", nullptr);
    return;
  }
  if (!in.is_object() || !in.contains("conv") || !in["conv"].is_string()) {
    error("frame needs a string 'conv'", nullptr);
    return;
  }
  const auto conv_id = in["conv"].get<std::string>();
  auto& conv = conversation(conv_id);
  std::lock_guard lock(conv.mutex);
  conv.members.insert(from);

  if (in.contains("join")) {
    ordered_json f;
    f["type"] = "joined";
    f["conv"] = conv_id;
    deliver({from, f});
    return;
  }
  if (!in.contains("sender") || !in["sender"].is_string() || !in.contains("text") ||
      !in["text"].is_string()) {
    error("message frames need string 'sender' and 'text'", &in["conv"]);
    return;
  }
  const auto sender = in["sender"].get<std::string>();
  const auto text = in["text"].get<std::string>();
  hybrid::Submission sub;
  try {
    sub = conv.session.submit(sender, text);
  } catch (const Error& e) {
    error(e.what(), &in["conv"]);
    return;
  }
  const auto v = verdict_frame(conv_id, sender, sub);
  deliver({from, v});
  if (sub.decision.verdict != dsl::Verdict::allow) return;
  ordered_json b;
  b["type"] = "broadcast";
  b["conv"] = conv_id;
  b["seq"] = sub.seq;
  b["sender"] = sender;
  b["text"] = text;
  b["expected"] = v["expected"];
  for (auto member : conv.members) deliver({member, b});
}

void Hub::disconnect(ConnectionId id) {
  std::vector<Conversation*> all;
  {
    std::lock_guard lock(conversations_mutex_);
    for (auto& [k, c] : conversations_) all.push_back(c.get());
  }
  for (auto* c : all) {
    std::lock_guard lock(c->mutex);
    c->members.erase(id);
  }
}

Server::~Server() {
  stop();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

std::uint16_t Server::bind(const std::string& address) {
  const auto [host, port] = parse_listen(address);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  const std::string h = host == "localhost" ? "127.0.0.1" : host;
  if (inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
    throw ValidationError("listen host must be an IPv4 address, got '" + host + "'");
  }
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw IoError("cannot listen on " + address + ": " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

void Server::run() {
  if (listen_fd_ < 0) throw StateError("server is not bound");
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      if (errno == EINTR || errno == ECONNABORTED) continue;
      throw IoError(std::string("accept: ") + std::strerror(errno));
    }
    const ConnectionId id = next_id_++;
    {
      std::lock_guard lock(connections_mutex_);
      connections_[id] = std::make_shared<Connection>(fd);
    }
    threads_.emplace_back([this, fd, id] { serve_connection(fd, id); });
  }
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
  }
  std::lock_guard lock(connections_mutex_);
  for (auto& [id, c] : connections_) ::shutdown(c->fd, SHUT_RDWR);
}

void Server::send(ConnectionId id, const std::string& line) {
  std::shared_ptr<Connection> c;
  {
    std::lock_guard lock(connections_mutex_);
    auto it = connections_.find(id);
    if (it == connections_.end()) return;
    c = it->second;
  }
  std::lock_guard lock(c->write_mutex);
  const char* p = line.data();
  std::size_t left = line.size();
  while (left > 0) {
    const ssize_t n = ::send(c->fd, p, left, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return;
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

void Server::serve_connection(int fd, ConnectionId id) {
  std::string buffer;
  char chunk[4096];
  auto deliver = [this](const Outgoing& o) { send(o.to, o.frame.dump() + "\n"); };
  for (;;) {
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) hub_.handle(id, line, deliver);
    }
  }
  hub_.disconnect(id);
  std::lock_guard lock(connections_mutex_);
  connections_.erase(id);
  ::close(fd);
}

}  // namespace turngov::hub
