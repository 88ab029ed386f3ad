#include "cnn/classifier.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cnn/network.hpp"

namespace turngov::cnn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'T', 'G', 'C', 'N', 'N', 'M', 'D', 'L'};

static_assert(sizeof(float) == 4);

template <typename U>
void put_le(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(const unsigned char* bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<U>(v);
}

}  // namespace

std::string context_text(std::span<const corpus::Utterance> history) {
  if (history.empty()) throw InvalidArgument("context needs at least one turn");
  const auto& cur = history.back();
  std::optional<std::pair<std::string, std::string>> prev;
  if (history.size() >= 2) {
    const auto& p = history[history.size() - 2];
    prev = std::make_pair(p.sender, p.text);
  }
  return build_input_text(prev, {cur.sender, cur.text});
}

std::vector<TextInstance> text_instances(const corpus::Corpus& corpus) {
  std::vector<TextInstance> out;
  for (const auto& d : corpus.dialogues) {
    const auto turns = d.genuine_turns();
    const std::span<const corpus::Utterance> all(turns);
    for (std::size_t t = 1; t < turns.size(); ++t) {
      out.push_back({d.id, t, context_text(all.first(t)), corpus.agents.index_of(turns[t].sender)});
    }
  }
  return out;
}

std::vector<double> CnnClassifier::distribution(
    std::span<const corpus::Utterance> history) const {
  const auto seq = encode(vocab, context_text(history), max_len);
  const auto probs = forward(model, seq.indices, false);
  return {probs.begin(), probs.end()};
}

CnnClassifier train_classifier(const corpus::Corpus& train_corpus,
                               const corpus::Corpus& vocab_corpus,
                               const ClassifierOptions& options, const TrainProgress& progress) {
  if (!(train_corpus.agents == vocab_corpus.agents)) {
    throw InvalidArgument("train and vocabulary corpora have different agent inventories");
  }
  const auto train_inst = text_instances(train_corpus);
  const auto vocab_inst = text_instances(vocab_corpus);
  if (train_inst.empty()) throw InvalidArgument("training corpus yields no instances");

  std::vector<std::string> texts;
  texts.reserve(train_inst.size() + vocab_inst.size());
  for (const auto& i : train_inst) texts.push_back(i.text);
  for (const auto& i : vocab_inst) texts.push_back(i.text);

  CnnClassifier c;
  c.vocab = build_vocab(texts);
  c.agents = train_corpus.agents;
  c.max_len = options.max_len;
  CnnShape shape{c.vocab.size(), options.embed, options.filters, options.kernel, options.hidden,
                 c.agents.size()};
  if (options.max_len < options.kernel) throw InvalidArgument("max_len shorter than kernel");
  CnnModel model(shape, options.dropout);
  model.initialize(derive_seed(options.train.seed, 0x1417ULL));

  std::vector<LabeledSequence> data;
  data.reserve(train_inst.size());
  for (const auto& i : train_inst) data.push_back({encode(c.vocab, i.text, c.max_len).indices, i.label});
  c.model = train(std::move(model), options.train, data, progress);
  return c;
}

void save_model(const CnnClassifier& c, const std::filesystem::path& path) {
  ordered_json manifest;
  manifest["format"] = "turngov-cnn";
  manifest["version"] = CnnClassifier::kFormatVersion;
  const auto& s = c.model.shape;
  manifest["shape"] = {{"vocab", s.vocab},     {"embed", s.embed},   {"filters", s.filters},
                       {"kernel", s.kernel},   {"hidden", s.hidden}, {"classes", s.classes}};
  manifest["dropout"] = c.model.dropout;
  manifest["max_len"] = c.max_len;
  manifest["agents"] = ordered_json::array();
  for (const auto& a : c.agents.agents()) {
    manifest["agents"].push_back({{"name", a.name}, {"role", corpus::to_string(a.role)}});
  }
  manifest["vocab"] = c.vocab.tokens();
  manifest["tensors"] = ordered_json::array();
  std::uint64_t offset = 0;
  const auto tensors = c.model.tensors();
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    manifest["tensors"].push_back({{"name", CnnModel::tensor_names()[k]},
                                   {"shape", tensors[k]->shape},
                                   {"dtype", "f32"},
                                   {"offset", offset}});
    offset += tensors[k]->size() * 4;
  }
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file '" + path.string() + "'");
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, CnnClassifier::kFormatVersion);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* t : tensors) {
    for (float v : t->data) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

CnnClassifier load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t header = sizeof(kMagic) + 4 + 8;
  if (bytes.size() < header) throw CorruptError("model file is truncated");
  if (std::memcmp(data, kMagic, sizeof(kMagic)) != 0) throw CorruptError("not a model file");
  const auto version = get_le<std::uint32_t>(data + 8);
  if (version != CnnClassifier::kFormatVersion) {
    throw VersionError("unsupported model file version " + std::to_string(version));
  }
  const auto manifest_len = get_le<std::uint64_t>(data + 12);
  if (bytes.size() - header < manifest_len) throw CorruptError("model manifest is truncated");

  CnnClassifier c;
  try {
    const json manifest = json::parse(bytes.substr(header, manifest_len));
    if (manifest.at("version").get<std::uint32_t>() != version) {
      throw CorruptError("manifest version disagrees with the container");
    }
    const auto& sj = manifest.at("shape");
    CnnShape shape{sj.at("vocab").get<std::size_t>(),  sj.at("embed").get<std::size_t>(),
                   sj.at("filters").get<std::size_t>(), sj.at("kernel").get<std::size_t>(),
                   sj.at("hidden").get<std::size_t>(),  sj.at("classes").get<std::size_t>()};
    c.model = CnnModel(shape, manifest.at("dropout").get<double>());
    c.max_len = manifest.at("max_len").get<std::size_t>();
    std::vector<corpus::Agent> agents;
    for (const auto& a : manifest.at("agents")) {
      agents.push_back({a.at("name").get<std::string>(),
                        corpus::parse_role(a.at("role").get<std::string>())});
    }
    c.agents = corpus::AgentInventory(std::move(agents));
    c.vocab = Vocabulary(manifest.at("vocab").get<std::vector<std::string>>());
    if (c.vocab.size() != shape.vocab || c.agents.size() != shape.classes) {
      throw CorruptError("manifest shape disagrees with its vocabulary or agents");
    }
    const std::size_t body = header + manifest_len;
    auto tensors = c.model.tensors();
    const auto& table = manifest.at("tensors");
    if (table.size() != tensors.size()) throw CorruptError("unexpected tensor count");
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const auto& entry = table[k];
      if (entry.at("name").get<std::string>() != CnnModel::tensor_names()[k] ||
          entry.at("dtype").get<std::string>() != "f32" ||
          entry.at("shape").get<std::vector<std::size_t>>() != tensors[k]->shape) {
        throw CorruptError("tensor table entry " + std::to_string(k) + " is inconsistent");
      }
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const std::uint64_t need = tensors[k]->size() * 4;
      if (body + offset + need > bytes.size()) throw CorruptError("tensor data is truncated");
      for (std::size_t i = 0; i < tensors[k]->size(); ++i) {
        tensors[k]->data[i] = std::bit_cast<float>(get_le<std::uint32_t>(data + body + offset + 4 * i));
      }
    }
  } catch (const json::exception& e) {
    throw CorruptError(std::string("malformed model manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptError(std::string("invalid model manifest: ") + e.what());
  } catch (const ValidationError& e) {
    throw CorruptError(std::string("invalid model manifest: ") + e.what());
  }
  if (!c.model.all_finite()) throw CorruptError("model contains non-finite values");
  return c;
}

predictors::PredictorOutput CnnPredictor::predict(
    std::span<const corpus::Utterance> history) const {
  return predictors::make_output(classifier_->distribution(history), classifier_->agents);
}

}  // namespace turngov::cnn
