#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ipseq/data/corpus.hpp"
#include "ipseq/data/task_manifest.hpp"
#include "ipseq/learn/trainer.hpp"

namespace ipseq {

// "307" -> "three zero seven"
std::string spell_digits(std::string_view digits);

// `n` random digit strings of 1..max_digits digits paired with their spelling.
ParallelCorpus digit_corpus(std::size_t n, std::uint64_t seed, std::size_t max_digits = 5);

struct ModelShape {
  std::size_t embedding_dim = 24;
  std::size_t hidden_dim = 24;  // encoder and decoder
  std::size_t attention_dim = 24;
  std::size_t max_vocab = 2000;  // per side, text only
};

struct TrainTaskOptions {
  ModelShape shape;
  TrainConfig train;
  std::string split = "train";
  std::uint64_t init_seed = 11;
  std::filesystem::path loss_curve;  // written when set
};

struct TrainTaskResult {
  std::vector<LossPoint> curve;
  double train_exact = 0.0;      // greedy exact match on the training split
  double held_out_exact = -1.0;  // on the samples split, when it differs from the training split
};

// Training pairs for `split` of `manifest`, tokenized or loaded with `bundle`.
std::vector<TrainingPair> load_pairs(const TaskManifest& manifest, const ModelBundle& bundle,
                                     const std::string& split);

// Builds vocabularies from the training split, trains a fresh model and saves
// it to the manifest's checkpoint path.
TrainTaskResult train_task(const TaskManifest& manifest, const TrainTaskOptions& options,
                           const ProgressFn& progress = {});

struct DemoOptions {
  std::size_t train_pairs = 200;
  std::size_t test_pairs = 50;
  std::uint64_t seed = 7;
  std::size_t epochs = 200;
  bool train = true;  // false writes data and manifests only
};

using LogFn = std::function<void(const std::string&)>;

// Writes the demo tasks into `dir`: nmt (digits -> words), image_caption and
// video_caption (synthetic feature sequences with media previews), and the
// scripted football caption replay. Returns their manifests.
std::vector<TaskManifest> write_demo_tasks(const std::filesystem::path& dir, const DemoOptions& options,
                                           const LogFn& log = {});

}  // namespace ipseq
