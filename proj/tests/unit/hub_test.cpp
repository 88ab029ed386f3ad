#include <doctest.h>

#include <sstream>
#include <thread>

#include "client.hpp"
#include "common/error.hpp"
#include "helpers.hpp"
#include "hub/hub.hpp"

using namespace turngov;
using namespace turngov::hub;
using nlohmann::json;

namespace {

/// Expects the bot named after the first word of a user message, else the user.
class KeywordExpecter : public hybrid::Expecter {
 public:
  std::optional<std::string> expected(std::span<const corpus::Utterance> history) const override {
    const auto& last = history.back();
    if (last.role == corpus::Role::bot) return "user";
    const auto word = last.text.substr(0, last.text.find(' '));
    return word + "_bot";
  }
};

Governor governor() {
  Governor g;
  g.engine = std::make_shared<dsl::Engine>(
      std::make_shared<dsl::RuleSet>(
          dsl::load_ruleset(std::string(TURNGOV_RULES_DIR) + "/scenario_b.cr")),
      testing::inventory());
  g.expecter = std::make_shared<KeywordExpecter>();
  return g;
}

json msg(const std::string& conv, const std::string& sender, const std::string& text) {
  return {{"conv", conv}, {"sender", sender}, {"text", text}};
}

struct RunningServer {
  Server server;
  std::uint16_t port;
  std::thread thread;
  RunningServer() : server(governor()), port(server.bind("127.0.0.1:0")) {
    thread = std::thread([this] { server.run(); });
  }
  ~RunningServer() {
    server.stop();
    thread.join();
  }
};

/// Scripted session of 50 messages across two conversations.
std::vector<json> script() {
  const std::vector<std::string> domains = {"hotel", "train", "taxi", "restaurant"};
  std::vector<json> out;
  for (int i = 0; out.size() < 50; ++i) {
    const std::string conv = i % 2 == 0 ? "c1" : "c2";
    const auto& d = domains[static_cast<std::size_t>(i) % domains.size()];
    out.push_back(msg(conv, "user", d + " please"));
    out.push_back(msg(conv, i % 3 == 0 ? "travel_bot" : d + "_bot", "done"));
    out.push_back(msg(conv, d + "_bot", "anything else ?"));
  }
  out.resize(50);
  return out;
}

}  // namespace

TEST_CASE("listen addresses") {
  CHECK(parse_listen("127.0.0.1:7070") == std::pair<std::string, std::uint16_t>{"127.0.0.1", 7070});
  CHECK(parse_listen("localhost:0").second == 0);
  CHECK_THROWS(parse_listen("nonsense"));
  CHECK_THROWS(parse_listen("host:99999"));
}

TEST_CASE("config parsing") {
  const json j = {{"ruleset_path", "rules/b.cr"}, {"k1", 0.9}, {"listen", "0.0.0.0:9000"}};
  const auto c = HubConfig::from_json(j, "/base");
  CHECK(c.cascade.k1 == 0.9);
  CHECK(c.cascade.k2 == 0.8);
  CHECK(c.ruleset_path == std::filesystem::path("/base/rules/b.cr"));
  CHECK(c.listen == "0.0.0.0:9000");
  CHECK_THROWS_AS(HubConfig::from_json({{"ruleset_path", "x"}, {"k3", 1}}), ValidationError);
  CHECK_THROWS_AS(HubConfig::from_json({{"ruleset_path", 5}}), ValidationError);
}

TEST_CASE("hub routing without sockets") {
  Hub hub(governor());
  std::vector<Outgoing> sent;
  auto deliver = [&](const Outgoing& o) { sent.push_back(o); };
  hub.handle(1, R"({"conv":"c","join":true})", deliver);
  hub.handle(2, msg("c", "user", "hotel room").dump(), deliver);
  REQUIRE(sent.size() == 1 + 1 + 2);
  CHECK(sent[1].to == 2);
  CHECK(sent[1].frame["verdict"] == "allow");
  CHECK(sent[1].frame["expected"] == "hotel_bot");
  CHECK(sent[2].frame["type"] == "broadcast");

  sent.clear();
  hub.handle(3, msg("c", "taxi_bot", "a taxi ?").dump(), deliver);
  REQUIRE(sent.size() == 1);
  CHECK(sent[0].frame["verdict"] == "deny");
  CHECK_FALSE(sent[0].frame["justification"].empty());

  sent.clear();
  hub.handle(3, "not json", deliver);
  hub.handle(3, R"({"conv":"c","sender":"ghost_bot","text":"x"})", deliver);
  REQUIRE(sent.size() == 2);
  CHECK(sent[0].frame["type"] == "error");
  CHECK(sent[1].frame["type"] == "error");
}

TEST_CASE("service over TCP") {
  RunningServer rs;
  testclient::Client user(rs.port), hotel(rs.port), taxi(rs.port);
  hotel.send({{"conv", "c1"}, {"join", true}});
  hotel.expect("joined");
  taxi.send({{"conv", "c1"}, {"join", true}});
  taxi.expect("joined");

  SUBCASE("user message then the right bot: both broadcast") {
    user.send(msg("c1", "user", "hotel for two nights"));
    CHECK(user.expect("verdict")["verdict"] == "allow");
    CHECK(user.expect("broadcast")["sender"] == "user");
    CHECK(hotel.expect("broadcast")["text"] == "hotel for two nights");
    taxi.expect("broadcast");

    hotel.send(msg("c1", "hotel_bot", "which area ?"));
    CHECK(hotel.expect("verdict")["verdict"] == "allow");
    CHECK(user.expect("broadcast")["sender"] == "hotel_bot");
    hotel.expect("broadcast");
    taxi.expect("broadcast");
  }
  SUBCASE("the wrong bot is denied with norm ids and not broadcast") {
    user.send(msg("c1", "user", "hotel for two nights"));
    user.expect("verdict");
    user.expect("broadcast");
    hotel.expect("broadcast");
    taxi.expect("broadcast");

    taxi.send(msg("c1", "taxi_bot", "need a taxi ?"));
    const auto v = taxi.expect("verdict");
    CHECK(v["verdict"] == "deny");
    CHECK(v["justification"] == json::array({"b3_hotel_bot"}));
    CHECK_FALSE(user.receive(200).has_value());
    CHECK_FALSE(hotel.receive(200).has_value());
  }
  SUBCASE("interleaved conversations stay isolated") {
    testclient::Client other(rs.port);
    other.send({{"conv", "c2"}, {"join", true}});
    other.expect("joined");
    user.send(msg("c1", "user", "hotel please"));
    other.send(msg("c2", "user", "train please"));
    user.send(msg("c1", "hotel_bot", "sure"));
    other.send(msg("c2", "train_bot", "sure"));
    user.send(msg("c1", "train_bot", "me too"));

    std::vector<json> from_c2;
    while (auto f = other.receive(300)) from_c2.push_back(*f);
    for (const auto& f : from_c2) CHECK(f["conv"] == "c2");
    REQUIRE(from_c2.size() == 4);
    CHECK(from_c2[0]["seq"] == 1);
    CHECK(from_c2[2]["seq"] == 2);

    std::vector<json> verdicts;
    while (auto f = user.receive(300)) {
      CHECK((*f)["conv"] == "c1");
      if ((*f)["type"] == "verdict") verdicts.push_back(*f);
    }
    REQUIRE(verdicts.size() == 3);
    CHECK(verdicts[2]["verdict"] == "deny");
  }
}

TEST_CASE("scripted session matches offline replay") {
  RunningServer rs;
  testclient::Client c(rs.port);
  std::vector<json> live;
  std::ostringstream transcript;
  std::ostringstream broadcast;
  for (const auto& m : script()) {
    c.send(m);
    auto v = c.expect("verdict");
    if (v["verdict"] == "allow") {
      c.expect("broadcast");
      broadcast << m.dump() << "\n";
    }
    live.push_back(v);
    transcript << m.dump() << "\n";
  }
  REQUIRE(live.size() == 50);

  std::istringstream in(transcript.str());
  const auto offline = replay_transcript(governor(), in);
  REQUIRE(offline.size() == live.size());
  std::size_t denied = 0;
  for (std::size_t i = 0; i < live.size(); ++i) {
    CHECK(json(offline[i]) == live[i]);
    denied += live[i]["verdict"] == "deny";
  }
  CHECK(denied > 0);

  std::istringstream accepted(broadcast.str());
  for (const auto& v : replay_transcript(governor(), accepted)) CHECK(v["verdict"] == "allow");
}
