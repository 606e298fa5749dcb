#include "ipseq/data/corpus.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ipseq/data/binary_io.hpp"
#include "ipseq/data/text.hpp"

namespace ipseq {

namespace {
constexpr char kFeatureMagic[4] = {'I', 'K', 'C', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::size_t kFeatureHeaderBytes = 16;
}  // namespace

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

ParallelCorpus load_parallel(const std::filesystem::path& source_path, const std::filesystem::path& target_path) {
  ParallelCorpus corpus{read_lines(source_path), read_lines(target_path)};
  if (corpus.sources.size() != corpus.targets.size()) {
    throw std::runtime_error("corpus: " + source_path.string() + " has " + std::to_string(corpus.sources.size()) +
                             " lines but " + target_path.string() + " has " + std::to_string(corpus.targets.size()));
  }
  for (std::size_t i = 0; i < corpus.targets.size(); ++i) {
    if (normalize(corpus.targets[i]).empty()) {
      throw std::runtime_error("corpus: empty target on line " + std::to_string(i + 1) + " of " + target_path.string());
    }
  }
  return corpus;
}

void write_feature_sequence(const std::filesystem::path& path, const Tensor& rows) {
  if (!rows.all_finite()) throw FeatureFileError("feature sequence contains non-finite values");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FeatureFileError("cannot write " + path.string());
  out.write(kFeatureMagic, 4);
  binary::put_u32(out, kFeatureVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(rows.rows()));
  binary::put_u32(out, static_cast<std::uint32_t>(rows.cols()));
  for (double v : rows.data()) binary::put_f64(out, v);
  if (!out) throw FeatureFileError("write failed for " + path.string());
}

Tensor load_feature_sequence(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FeatureFileError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  if (bytes.size() < kFeatureHeaderBytes) {
    throw FeatureFileError(path.string() + ": header needs " + std::to_string(kFeatureHeaderBytes) +
                           " bytes, file has " + std::to_string(bytes.size()));
  }
  if (bytes.compare(0, 4, kFeatureMagic, 4) != 0) throw FeatureFileError(path.string() + ": bad magic (expected IKCF)");
  std::istringstream hdr(bytes.substr(4, 12));
  const auto version = binary::get_u32(hdr);
  const auto t = binary::get_u32(hdr);
  const auto d = binary::get_u32(hdr);
  if (version != kFeatureVersion) throw FeatureFileError(path.string() + ": unsupported version " + std::to_string(version));
  if (t == 0 || d == 0) throw FeatureFileError(path.string() + ": empty feature sequence");
  const std::size_t expected = kFeatureHeaderBytes + static_cast<std::size_t>(t) * d * 8;
  if (bytes.size() != expected) {
    throw FeatureFileError(path.string() + ": expected " + std::to_string(expected) + " bytes for T=" +
                           std::to_string(t) + " d=" + std::to_string(d) + ", actual " + std::to_string(bytes.size()));
  }
  std::istringstream payload(bytes.substr(kFeatureHeaderBytes));
  std::vector<double> values(static_cast<std::size_t>(t) * d);
  for (auto& v : values) {
    v = binary::get_f64(payload);
    if (!std::isfinite(v)) throw FeatureFileError(path.string() + ": non-finite feature value");
  }
  return Tensor({t, d}, std::move(values));
}

}  // namespace ipseq
