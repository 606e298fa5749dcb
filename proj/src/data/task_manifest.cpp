#include "ipseq/data/task_manifest.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace ipseq {

std::string_view to_string(Modality m) { return m == Modality::kText ? "text" : "features"; }

Modality modality_from_string(std::string_view name) {
  if (name == "text") return Modality::kText;
  if (name == "features") return Modality::kFeatures;
  throw std::invalid_argument("unknown modality: " + std::string(name));
}

const SplitFiles& TaskManifest::split(const std::string& split_name) const {
  auto it = splits.find(split_name);
  if (it == splits.end()) throw std::out_of_range("task " + id + " has no split '" + split_name + "'");
  return it->second;
}

namespace {

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c); };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_absolute() ? p : base / p;
}

std::filesystem::path relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  auto rel = p.lexically_relative(base);
  return rel.empty() ? p : rel;
}

}  // namespace

TaskManifest parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open task manifest " + path.string());
  const auto base = path.parent_path();
  TaskManifest m;
  m.id = path.stem().string();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "id") m.id = value;
      else if (key == "name") m.name = value;
      else if (key == "modality") m.modality = modality_from_string(value);
      else if (key == "predictor") m.predictor = value;
      else if (key == "checkpoint") m.checkpoint = resolve(base, value);
      else if (key == "script") m.script = resolve(base, value);
      else if (key == "source_tokens") m.source_tokens = token_mode_from_string(value);
      else if (key == "target_tokens") m.target_tokens = token_mode_from_string(value);
      else if (key == "samples") m.samples_split = value;
      else if (key == "media_dir") m.media_dir = resolve(base, value);
      else if (key == "beam_width") m.beam_width = std::stoul(value);
      else if (key == "max_len") m.max_len = std::stoul(value);
      else if (key == "length_norm") m.length_norm = value;
      else if (key == "online_lr") m.online_lr = std::stod(value);
      else if (key == "optimizer") m.optimizer = value;
      else if (key == "clip_norm") m.clip_norm = std::stod(value);
      else if (auto dot = key.rfind('.'); dot != std::string::npos) {
        const auto split = key.substr(0, dot);
        const auto field = key.substr(dot + 1);
        auto& files = m.splits[split];
        if (field == "source") files.source = resolve(base, value);
        else if (field == "target") files.target = resolve(base, value);
        else if (field == "media") files.media = resolve(base, value);
        else throw std::invalid_argument("unknown split field '" + field + "'");
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::logic_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (m.name.empty()) m.name = m.id;
  if (m.predictor != "neural" && m.predictor != "scripted") {
    throw std::runtime_error(path.string() + ": predictor must be neural or scripted");
  }
  if (m.beam_width == 0 || m.max_len == 0) throw std::runtime_error(path.string() + ": beam_width and max_len must be >= 1");
  if (m.online_lr < 0) throw std::runtime_error(path.string() + ": online_lr must be >= 0");
  return m;
}

void write_manifest(const std::filesystem::path& path, const TaskManifest& m) {
  const auto base = path.parent_path();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "id=" << m.id << "\n";
  out << "name=" << m.name << "\n";
  out << "modality=" << to_string(m.modality) << "\n";
  out << "predictor=" << m.predictor << "\n";
  if (!m.checkpoint.empty()) out << "checkpoint=" << relative_to(m.checkpoint, base).string() << "\n";
  if (!m.script.empty()) out << "script=" << relative_to(m.script, base).string() << "\n";
  out << "source_tokens=" << to_string(m.source_tokens) << "\n";
  out << "target_tokens=" << to_string(m.target_tokens) << "\n";
  out << "samples=" << m.samples_split << "\n";
  for (const auto& [name, files] : m.splits) {
    out << name << ".source=" << relative_to(files.source, base).string() << "\n";
    out << name << ".target=" << relative_to(files.target, base).string() << "\n";
    if (files.media) out << name << ".media=" << relative_to(*files.media, base).string() << "\n";
  }
  if (m.media_dir) out << "media_dir=" << relative_to(*m.media_dir, base).string() << "\n";
  out << "beam_width=" << m.beam_width << "\n";
  out << "max_len=" << m.max_len << "\n";
  out << "length_norm=" << m.length_norm << "\n";
  out << "online_lr=" << m.online_lr << "\n";
  out << "optimizer=" << m.optimizer << "\n";
  out << "clip_norm=" << m.clip_norm << "\n";
}

std::vector<TaskManifest> load_manifests(const std::filesystem::path& dir) {
  std::vector<TaskManifest> out;
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("tasks dir not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".task") out.push_back(parse_manifest(entry.path()));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].id == out[i - 1].id) throw std::runtime_error("duplicate task id " + out[i].id);
  }
  return out;
}

}  // namespace ipseq
