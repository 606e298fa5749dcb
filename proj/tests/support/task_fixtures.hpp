#pragma once

// Task directories written to a scratch location for service-level tests.

#include <filesystem>
#include <string>
#include <vector>

#include "ipseq/data/corpus.hpp"
#include "ipseq/data/task_manifest.hpp"
#include "ipseq/model/checkpoint.hpp"

namespace ipseq::fixtures {

namespace fs = std::filesystem;

inline fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ipseq_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// The four system hypotheses of the football captioning session, in order.
inline const std::vector<std::string> kFootballHypotheses = {
    "A group of football players in red uniforms.",
    "A football player in a red uniform is holding a football.",
    "A football player in a red uniform is wearing a football.",
    "A football player in a red uniform is wearing a helmet.",
};
inline const std::string kFootballFinal = "A football player in a red uniform is wearing a helmet.";

// Scripted image-captioning task "football" with one test sample.
inline TaskManifest write_football_task(const fs::path& dir) {
  write_lines(dir / "football.script", kFootballHypotheses);
  write_lines(dir / "football.test.src", {"football.ikcf"});
  write_lines(dir / "football.test.tgt", {kFootballFinal});
  TaskManifest m;
  m.id = "football";
  m.name = "Football caption replay";
  m.modality = Modality::kFeatures;
  m.predictor = "scripted";
  m.script = dir / "football.script";
  m.splits["test"] = {dir / "football.test.src", dir / "football.test.tgt", std::nullopt};
  write_manifest(dir / "football.task", m);
  return parse_manifest(dir / "football.task");
}

// Neural text task backed by `bundle`, with a "test" split of the given pairs.
inline TaskManifest write_neural_task(const fs::path& dir, const std::string& id, const ModelBundle& bundle,
                                      const std::vector<std::string>& sources,
                                      const std::vector<std::string>& targets, double online_lr = 0.0,
                                      std::size_t beam_width = 3, std::size_t max_len = 40) {
  save_checkpoint(dir / (id + ".ckpt"), bundle);
  write_lines(dir / (id + ".test.src"), sources);
  write_lines(dir / (id + ".test.tgt"), targets);
  TaskManifest m;
  m.id = id;
  m.name = id;
  m.modality = bundle.network.config().input_modality;
  m.checkpoint = dir / (id + ".ckpt");
  m.source_tokens = bundle.source.mode();
  m.target_tokens = bundle.target.mode();
  m.splits["test"] = {dir / (id + ".test.src"), dir / (id + ".test.tgt"), std::nullopt};
  m.beam_width = beam_width;
  m.max_len = max_len;
  m.online_lr = online_lr;
  write_manifest(dir / (id + ".task"), m);
  return parse_manifest(dir / (id + ".task"));
}

}  // namespace ipseq::fixtures
