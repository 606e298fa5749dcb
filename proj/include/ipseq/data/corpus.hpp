#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipseq/numerics/tensor.hpp"

namespace ipseq {

// Aligned (source, target) segments. For feature-modality tasks each source
// line is a path to a feature sequence file, relative to the corpus file.
struct ParallelCorpus {
  std::vector<std::string> sources;
  std::vector<std::string> targets;

  std::size_t size() const { return targets.size(); }
};

// One segment per line, UTF-8; a trailing '\r' is dropped.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

// Throws on count mismatch or on an empty (after normalization) target.
ParallelCorpus load_parallel(const std::filesystem::path& source_path, const std::filesystem::path& target_path);

class FeatureFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "IKCF" | u32 version=1 | u32 T | u32 d | T*d little-endian f64, row-major.
void write_feature_sequence(const std::filesystem::path& path, const Tensor& rows);
Tensor load_feature_sequence(const std::filesystem::path& path);

}  // namespace ipseq
