#include "corpus/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace turngov::corpus {
namespace {

using Pool = std::vector<std::string>;

enum Domain { attraction, hotel, restaurant, taxi, train, domain_count };

const std::array<const char*, domain_count> kBotNames = {
    "attraction_bot", "hotel_bot", "restaurant_bot", "taxi_bot", "train_bot"};

const Pool kDays = {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
const Pool kAreas = {"north", "south", "east", "west", "centre"};
const Pool kPrices = {"cheap", "moderate", "expensive"};
const Pool kFoods = {"italian", "chinese", "indian", "british", "french", "thai", "spanish",
                     "lebanese", "european", "mexican", "korean", "turkish", "seafood",
                     "vietnamese", "portuguese", "gastropub"};
const Pool kHotels = {"acorn guest house", "alexander bed and breakfast", "ashley hotel",
                      "avalon", "bridge guest house", "carolina bed and breakfast",
                      "city centre north", "el shaddai", "finches bed and breakfast",
                      "hamilton lodge", "hobsons house", "leverton house", "limehouse",
                      "lovell lodge", "warkworth house", "the lensfield hotel",
                      "gonville hotel", "huntingdon marriott hotel", "allenbell", "autumn house"};
const Pool kRestaurants = {"pizza hut city centre", "the golden curry", "curry garden",
                           "la margherita", "the nirala", "yippee noodle bar", "bedouin",
                           "cote", "charlie chan", "royal spice", "saigon city",
                           "the missing sock", "meze bar", "the gardenia", "la raza",
                           "nandos", "the copper kettle", "midsummer house", "golden wok",
                           "the varsity"};
const Pool kAttractions = {"kings college", "the fitzwilliam museum", "cambridge punter",
                           "all saints church", "byard art", "castle galleries",
                           "whipple museum of the history of science", "nusha", "club salsa",
                           "parkside pools", "milton country park", "the place",
                           "abbey pool and astroturf pitch", "cineworld cinema",
                           "the cambridge corn exchange", "great saint marys church",
                           "queens college", "scott polar museum", "jesus green outdoor pool",
                           "wandlebury country park"};
const Pool kAttractionTypes = {"museum", "college", "park", "theatre", "nightclub",
                               "swimming pool", "church", "architecture", "cinema", "boat",
                               "gallery", "entertainment venue"};
const Pool kStations = {"cambridge", "london kings cross", "stansted airport",
                        "birmingham new street", "ely", "peterborough", "norwich", "leicester",
                        "broxbourne", "bishops stortford", "stevenage", "london liverpool street"};
const Pool kPence = {"10", "60", "80", "00"};
const Pool kCars = {"black toyota", "white audi", "red honda", "blue volkswagen", "grey ford",
                    "yellow tesla", "black skoda", "white lexus", "red bmw", "blue volvo"};

struct Filler {
  Rng& rng;

  const std::string& pick(const Pool& pool) { return pool[rng.uniform_index(pool.size())]; }

  std::string time() {
    static const char* minutes[] = {"00", "15", "30", "45", "11", "24", "36", "52"};
    const auto hour = 5 + rng.uniform_index(18);
    return (hour < 10 ? "0" : "") + std::to_string(hour) + ":" + minutes[rng.uniform_index(8)];
  }
  std::string number(std::size_t lo, std::size_t hi) {
    return std::to_string(lo + rng.uniform_index(hi - lo + 1));
  }
  std::string code(std::size_t pool_size, const char* prefix) {
    // Drawn from a bounded pool so identifiers recur across dialogues.
    static const char alphabet[] = "abcdefghjkmnpqrstuvwxyz23456789";
    Rng local(derive_seed(0x5eedULL, rng.uniform_index(pool_size)));
    std::string out = prefix;
    for (int i = 0; i < 8; ++i) out += alphabet[local.uniform_index(sizeof(alphabet) - 1)];
    return out;
  }
  std::string phone() { return "01223" + code_digits(6); }
  std::string code_digits(int n) {
    Rng local(derive_seed(0xfeedULL, rng.uniform_index(400)));
    std::string out;
    for (int i = 0; i < n; ++i) out += static_cast<char>('0' + local.uniform_index(10));
    return out;
  }
  std::string postcode() { return "cb" + number(1, 5) + code_digits(1) + "ab"; }
  std::string train_id() { return "tr" + code_digits(4); }
  std::string address() {
    static const Pool streets = {"regent street", "trumpington street", "hills road",
                                 "mill road", "king street", "bridge street", "market square",
                                 "newmarket road", "chesterton road", "castle street"};
    return number(1, 120) + " " + pick(streets);
  }
  std::string place() {
    static const Pool places = {"the hotel", "the restaurant", "the museum", "the college",
                                "the station", "the park", "the theatre", "my guesthouse"};
    return pick(places);
  }

  /// Replaces every {key} in `pattern`.
  std::string fill(const std::string& pattern) {
    std::string out;
    for (std::size_t i = 0; i < pattern.size();) {
      if (pattern[i] != '{') {
        out += pattern[i++];
        continue;
      }
      const auto close = pattern.find('}', i);
      const std::string key = pattern.substr(i + 1, close - i - 1);
      out += expand(key);
      i = close + 1;
    }
    return out;
  }

  std::string expand(const std::string& key) {
    if (key == "day") return pick(kDays);
    if (key == "area") return pick(kAreas);
    if (key == "price") return pick(kPrices);
    if (key == "food") return pick(kFoods);
    if (key == "hotelname") return pick(kHotels);
    if (key == "restname") return pick(kRestaurants);
    if (key == "attrname") return pick(kAttractions);
    if (key == "atype") return pick(kAttractionTypes);
    if (key == "station") return pick(kStations);
    if (key == "car") return pick(kCars);
    if (key == "time") return time();
    if (key == "people") return number(1, 8);
    if (key == "nights") return number(1, 5);
    if (key == "stars") return number(2, 4);
    if (key == "count") return number(2, 24);
    if (key == "minutes") return number(17, 120);
    if (key == "fee") return number(2, 10);
    if (key == "gbp") return number(4, 38) + "." + pick(kPence);
    if (key == "ref") return code(600, "");
    if (key == "phone") return phone();
    if (key == "postcode") return postcode();
    if (key == "trainid") return train_id();
    if (key == "address") return address();
    if (key == "place") return place();
    throw StateError("unknown template key '" + key + "'");
  }
};

struct DomainText {
  Pool cue_openings;
  Pool continuations;
  Pool cross_domain;
  Pool bot_requests;   // bot asks for constraints
  Pool bot_offers;     // bot offers options
  Pool bot_bookings;   // bot confirms a booking; closes a segment
};

const std::array<DomainText, domain_count>& domain_text() {
  static const std::array<DomainText, domain_count> text = {{
      // attraction
      {{"i am looking for a {atype} to visit in the {area} of town",
        "can you suggest some attractions in the {area} ? maybe a {atype}",
        "are there any interesting places to go in town , like a {atype} ?",
        "what {atype} would you recommend i visit while i am in the {area} ?",
        "i want to see some attractions , is there a good {atype} around ?"},
       {"what is the entrance fee for that one please ?",
        "could i get the address and the postcode please ?",
        "what are the opening hours on {day} ?",
        "is there anything like that in the {area} instead ?",
        "can i get the phone number for it please ?",
        "that sounds interesting , what type of place is it exactly ?"},
       {"is it close to the train station ? i will arrive by rail",
        "is there a good restaurant near there for lunch afterwards ?"},
       {"what sort of attraction are you interested in ? we have museums and colleges",
        "which area of town would you like to visit ? there are many attractions"},
       {"{attrname} is a {atype} in the {area} and the entrance is free",
        "there are {count} attractions of that type , {attrname} is very popular",
        "i recommend {attrname} in the {area} , the entrance fee is {fee} pounds",
        "{attrname} opens at {time} , it is located at {address}"},
       {"the address of {attrname} is {address} and the postcode is {postcode}",
        "the phone number of the attraction is {phone} , the entrance fee is {fee} pounds"}},
      // hotel
      {{"i am looking for a hotel in the {area} with free parking",
        "i need a place to stay , preferably a {price} guest house",
        "can you find me a {stars} star hotel in the {area} of town ?",
        "i am looking for somewhere to stay with free wifi in the {area}",
        "i need accommodation for {people} people , a {price} hotel please"},
       {"i would like a {price} place with free wifi please",
        "it should have {stars} stars and be in the {area}",
        "please book it for {people} people for {nights} nights starting {day}",
        "does it have free parking as well ?",
        "what is the postcode and the phone number please ?",
        "i would prefer the {area} part of town if possible"},
       {"is it close to the train station ? i am coming by rail",
        "is there a good restaurant near the guest house ?"},
       {"what price range and area would you like for your stay ?",
        "do you have a preference for a hotel or a guest house ?"},
       {"{hotelname} is a {price} {stars} star hotel in the {area} with free parking",
        "i have {count} guest houses in the {area} , {hotelname} has free wifi",
        "how many nights will you be staying and how many people ?",
        "{hotelname} is available in the {area} , shall i book a room ?"},
       {"booking was successful for {people} people , reference number is {ref}",
        "i have booked your room at {hotelname} for {nights} nights , the reference is {ref}"}},
      // restaurant
      {{"i am looking for a {price} restaurant serving {food} food",
        "i want to find a place to eat in the {area} that serves {food} food",
        "can you recommend a {food} restaurant in the {area} ?",
        "i need a restaurant for dinner , something {price} in the {area}",
        "i am hungry , where can i get some good {food} food ?"},
       {"i would like {food} food please",
        "please book a table for {people} at {time} on {day}",
        "what is the address and phone number please ?",
        "how about something in the {price} price range ?",
        "is there anything in the {area} ?",
        "that sounds good , do they take reservations for large groups ?"},
       {"is it near the museum ? we will visit it before dinner",
        "is it close to our hotel in the {area} ?"},
       {"what type of food would you like and in what price range ?",
        "do you have a preferred area of town for dining ?"},
       {"{restname} serves {food} food in the {area} and is {price}",
        "i have {count} restaurants matching , {restname} is a {price} {food} place",
        "{restname} is located at {address} , would you like a table there ?",
        "there is {restname} in the {area} , it serves {food} food"},
       {"your table for {people} is booked at {time} , the reference is {ref}",
        "booking at {restname} was successful , the table will be held for 15 minutes , reference {ref}"}},
      // taxi
      {{"i need a taxi to take me from {place} to {place}",
        "can you book me a taxi leaving {place} after {time} ?",
        "i also need a taxi to get between the two places",
        "please get me a cab from {place} that arrives by {time}"},
       {"i want to leave after {time} please",
        "i need to arrive by {time} at the latest",
        "what is the contact number and the car type ?"},
       {"it is for the restaurant booking , so we must be on time"},
       {"what time would you like the taxi to pick you up ?",
        "where would you like the taxi to take you from ?"},
       {"when would you like to leave and where will you be going ?",
        "i can book that car for you , what time do you need it ?"},
       {"i have booked a {car} for you , the contact number is {phone}",
        "your taxi is booked , look for a {car} , contact number {phone}"}},
      // train
      {{"i need a train from {station} to {station} on {day}",
        "i am looking for a train leaving {station} after {time} on {day}",
        "can you help me find a train to {station} that arrives by {time} ?",
        "i would like to book a train ticket to {station} on {day} please",
        "i need to travel by train on {day} from {station}"},
       {"i would like to leave after {time} on {day}",
        "it should arrive by {time} please",
        "what is the travel time and the price ?",
        "yes , please book it for {people} people",
        "i am departing from {station}",
        "could you give me the departure time of that one ?"},
       {"will i be able to get a taxi at {station} when i arrive ?",
        "i need to get there before my hotel check in"},
       {"where will you be departing from and what day would you like to travel ?",
        "what time would you like to leave and where are you heading ?"},
       {"train {trainid} leaves {station} at {time} and arrives in {station} at {time}",
        "there are {count} trains that match , what time would you like to leave ?",
        "the travel time is {minutes} minutes and the price is {gbp} pounds",
        "{trainid} departs at {time} , would you like me to book it ?"},
       {"i have booked {people} tickets on {trainid} , your reference number is {ref}",
        "the booking was successful , the total fee is {gbp} pounds , reference {ref}"}},
  }};
  return text;
}

const Pool kGenericOpenings = {
    "hi , i need some help planning my trip please",
    "i am planning a visit and need to book something for {people} people on {day}",
    "can you help me with another booking ? it is for {people} people",
    "i also need some more information please",
    "i have one more request , something in the {area} would be great",
    "could you help me find something else for my visit on {day} ?",
    "i need one more thing for our stay please"};

const Pool kGenericContinuations = {
    "yes please , that would be great",
    "that sounds great , please book it",
    "can you check for something else instead ?",
    "what about {day} instead of that ?",
    "how much does it cost ?",
    "can i get the reference number please ?",
    "no preference really , whatever you recommend",
    "yes , for {people} people please"};

const Pool kAcks = {
    "thank you , that is all i need",
    "great , thanks for your help",
    "thanks , that will be all for now",
    "perfect , thank you very much",
    "ok , thank you so much for your help today"};

const Pool kBotAnythingElse = {
    "you are welcome , is there anything else i can help you with ?",
    "my pleasure , can i help you with anything else today ?",
    "glad to help , do you need anything else ?"};

const Pool kBotGoodbye = {
    "you are welcome , have a great day . goodbye",
    "thank you for contacting us , enjoy your trip"};

const Pool kTravelClosings = {
    "thank you for using our travel service , have a great trip !",
    "you are welcome , enjoy your stay in cambridge . goodbye",
    "glad i could help with your plans , have a wonderful day",
    "it was a pleasure to help you organise your visit , bye"};

const Pool kUserLeadIns = {"ok , ", "great , ", "alright , ", "sounds good . ", "hello , ",
                           "thanks . "};

const Pool kOfferTails = {" , would you like me to make a reservation ?",
                          " , do you want more details about it ?",
                          " , shall i go ahead and book that for you ?"};

class DialogueBuilder {
 public:
  DialogueBuilder(const SynthConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng), fill_{rng} {}

  Dialogue build(std::string id) {
    dialogue_.id = std::move(id);
    const auto domains = pick_domains();
    for (std::size_t k = 0; k < domains.size(); ++k) {
      run_segment(domains[k], k == 0, k + 1 == domains.size());
    }
    close(domains.back(), domains.size() == 1);
    return std::move(dialogue_);
  }

 private:
  std::vector<Domain> pick_domains() {
    const std::size_t count =
        1 + rng_.weighted_index({cfg_.domains_1, cfg_.domains_2, cfg_.domains_3});
    // attraction, hotel, restaurant, taxi, train
    std::vector<double> first = {0.22, 0.22, 0.22, 0.02, 0.32};
    std::vector<double> later = {0.20, 0.20, 0.20, 0.30, 0.10};
    std::vector<Domain> out;
    while (out.size() < count) {
      auto weights = out.empty() ? first : later;
      for (auto d : out) weights[d] = 0.0;
      out.push_back(static_cast<Domain>(rng_.weighted_index(weights)));
    }
    return out;
  }

  std::size_t segment_replies(Domain d) {
    switch (d) {
      case taxi: return 1 + rng_.uniform_index(3);
      case attraction: return 3 + rng_.uniform_index(6);
      default: return 3 + rng_.uniform_index(6) + (rng_.bernoulli(0.25) ? 1 : 0);
    }
  }

  void user(const std::string& pattern) {
    if (rng_.bernoulli(0.35)) {
      push("user", Role::user, pick(kUserLeadIns) + pattern);
    } else {
      push("user", Role::user, pattern);
    }
  }
  void bot(Domain d, const std::string& pattern) { push(kBotNames[d], Role::bot, pattern); }
  void push(const std::string& sender, Role role, const std::string& pattern) {
    Utterance u;
    u.sender = sender;
    u.role = role;
    u.text = fill_.fill(pattern);
    dialogue_.turns.push_back(std::move(u));
  }
  const std::string& pick(const Pool& pool) { return pool[rng_.uniform_index(pool.size())]; }

  void run_segment(Domain d, bool first, bool last) {
    const auto& text = domain_text()[d];
    const double cue = first ? cfg_.first_cue : cfg_.switch_cue;
    user(rng_.bernoulli(cue) ? pick(text.cue_openings) : pick(kGenericOpenings));
    const std::size_t replies = segment_replies(d);
    for (std::size_t r = 0; r < replies; ++r) {
      if (r > 0) {
        if (rng_.bernoulli(cfg_.misleading_cue)) {
          auto other = static_cast<Domain>(rng_.uniform_index(domain_count - 1));
          if (other >= d) other = static_cast<Domain>(other + 1);
          user(pick(domain_text()[other].cue_openings));
        } else if (rng_.bernoulli(cfg_.cross_domain_noise)) {
          user(pick(text.cross_domain));
        } else if (rng_.bernoulli(cfg_.generic_continuation)) {
          user(pick(kGenericContinuations));
        } else {
          user(pick(text.continuations));
        }
      }
      if (r + 1 == replies) {
        bot(d, pick(text.bot_bookings));
      } else if (r == 0 && rng_.bernoulli(0.5)) {
        bot(d, pick(text.bot_requests));
      } else {
        std::string offer = pick(text.bot_offers);
        if (rng_.bernoulli(0.5)) offer += pick(kOfferTails);
        bot(d, offer);
      }
    }
    if (!last && rng_.bernoulli(cfg_.mid_ack)) {
      user(pick(kAcks));
      bot(d, pick(kBotAnythingElse));
    }
  }

  void close(Domain last, bool single_domain) {
    user(pick(kAcks));
    const auto choice =
        single_domain ? 0
                      : rng_.weighted_index(
                            {cfg_.close_travel, cfg_.close_same_bot,
                             std::max(0.0, 1.0 - cfg_.close_travel - cfg_.close_same_bot)});
    if (choice == 0) {
      push("travel_bot", Role::bot, pick(kTravelClosings));
    } else if (choice == 1) {
      bot(last, pick(kBotGoodbye));
    }
  }

  const SynthConfig& cfg_;
  Rng& rng_;
  Filler fill_;
  Dialogue dialogue_;
};

}  // namespace

Corpus synthesize_corpus(const SynthConfig& config) {
  if (config.dialogues == 0) throw InvalidArgument("synthetic corpus needs at least one dialogue");
  std::vector<Dialogue> dialogues;
  dialogues.reserve(config.dialogues);
  for (std::size_t i = 0; i < config.dialogues; ++i) {
    Rng rng(derive_seed(config.seed, i));
    char id[32];
    std::snprintf(id, sizeof(id), "MBW%05zu", i + 1);
    dialogues.push_back(DialogueBuilder(config, rng).build(id));
  }
  std::vector<Agent> agents = {{"user", Role::user}, {"travel_bot", Role::bot}};
  for (const char* name : kBotNames) agents.push_back({name, Role::bot});
  return make_corpus(std::move(dialogues), std::move(agents));
}

}  // namespace turngov::corpus
