#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ipseq/data/vocabulary.hpp"

namespace ipseq {

enum class Modality { kText, kFeatures };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view name);

struct SplitFiles {
  std::filesystem::path source;
  std::filesystem::path target;
  std::optional<std::filesystem::path> media;  // per-line preview references
};

// Plain-text task description, one key=value per line, '#' comments.
//
//   id, name, modality (text|features), predictor (neural|scripted),
//   checkpoint, script, source_tokens, target_tokens, samples,
//   <split>.source, <split>.target, <split>.media, media_dir,
//   beam_width, max_len, length_norm (none|divide-by-length), online_lr,
//   optimizer (sgd|adadelta), clip_norm
//
// Relative paths are resolved against the manifest's directory.
struct TaskManifest {
  std::string id;
  std::string name;
  Modality modality = Modality::kText;
  std::string predictor = "neural";
  std::filesystem::path checkpoint;
  std::filesystem::path script;
  TokenMode source_tokens = TokenMode::kChar;
  TokenMode target_tokens = TokenMode::kWord;
  std::map<std::string, SplitFiles> splits;
  std::string samples_split = "test";
  std::optional<std::filesystem::path> media_dir;
  std::size_t beam_width = 5;
  std::size_t max_len = 120;
  std::string length_norm = "none";
  double online_lr = 0.0;
  std::string optimizer = "sgd";
  double clip_norm = 5.0;

  const SplitFiles& split(const std::string& name) const;
};

TaskManifest parse_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const TaskManifest& m);

// Every *.task file in `dir`, sorted by id.
std::vector<TaskManifest> load_manifests(const std::filesystem::path& dir);

}  // namespace ipseq
