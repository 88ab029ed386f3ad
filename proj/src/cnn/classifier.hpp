#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "cnn/model.hpp"
#include "cnn/train.hpp"
#include "cnn/vocab.hpp"
#include "corpus/corpus.hpp"
#include "predictors/predictors.hpp"

namespace turngov::cnn {

/// One next-speaker example: the two most recent genuine turns rendered as
/// text, labelled with the sender of the following turn.
struct TextInstance {
  std::string dialogue_id;
  std::size_t t = 0;  // number of turns seen (1-based index of the current turn)
  std::string text;
  std::size_t label = 0;
};

/// Input text for predicting the turn after history.back().
std::string context_text(std::span<const corpus::Utterance> history);

std::vector<TextInstance> text_instances(const corpus::Corpus& corpus);

/// Model plus everything needed to turn a dialogue context into its input.
struct CnnClassifier {
  static constexpr std::uint32_t kFormatVersion = 1;

  CnnModel model;
  Vocabulary vocab;
  corpus::AgentInventory agents;
  std::size_t max_len = 96;

  std::vector<double> distribution(std::span<const corpus::Utterance> history) const;
};

struct ClassifierOptions {
  std::size_t embed = 64;
  std::size_t filters = 64;
  std::size_t kernel = 3;
  std::size_t hidden = 300;
  double dropout = 0.2;
  std::size_t max_len = 96;
  TrainConfig train;
};

/// Builds the vocabulary over the inputs of `train_corpus` and
/// `vocab_corpus` (the test split, so nothing is out of vocabulary), then
/// trains on `train_corpus`.
CnnClassifier train_classifier(const corpus::Corpus& train_corpus,
                               const corpus::Corpus& vocab_corpus,
                               const ClassifierOptions& options,
                               const TrainProgress& progress = {});

/// Container: 8-byte magic "TGCNNMDL", u32 version, u64 manifest length, a
/// JSON manifest (shape, dropout, max_len, agents, vocabulary, tensor table
/// with name/shape/dtype/offset), then little-endian float32 tensor data.
void save_model(const CnnClassifier& classifier, const std::filesystem::path& path);
CnnClassifier load_model(const std::filesystem::path& path);

class CnnPredictor : public predictors::NextSpeakerPredictor {
 public:
  explicit CnnPredictor(std::shared_ptr<const CnnClassifier> classifier)
      : classifier_(std::move(classifier)) {}
  std::string name() const override { return "AC-CNN"; }
  predictors::PredictorOutput predict(std::span<const corpus::Utterance> history) const override;
  const CnnClassifier& classifier() const { return *classifier_; }

 private:
  std::shared_ptr<const CnnClassifier> classifier_;
};

}  // namespace turngov::cnn
