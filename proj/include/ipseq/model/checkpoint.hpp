#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ipseq/data/tokenizer.hpp"
#include "ipseq/model/seq2seq.hpp"

namespace ipseq {

// Per-parameter optimizer accumulators ("" kind = none).
struct OptimizerState {
  std::string kind;
  std::vector<std::pair<std::string, Tensor>> slots;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

// Everything needed to serve or resume a model.
struct ModelBundle {
  Seq2Seq network;
  Tokenizer source;
  Tokenizer target;
  OptimizerState optimizer;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout (all integers u32 little-endian, floats f64 little-endian):
//   "IPSQCKPT" | version
//   config: src_vocab tgt_vocab embedding enc_hidden dec_hidden attention
//           modality feature_dim max_output_len
//   source vocab: mode | n | n x (len | bytes)      (content tokens only)
//   target vocab: same
//   params: n | n x (name | rank | dims... | values row-major)
//   optimizer: kind | n | n x tensor record as above
std::string serialize_checkpoint(const ModelBundle& bundle);
ModelBundle deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace ipseq
