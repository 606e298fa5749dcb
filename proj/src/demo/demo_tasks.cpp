#include "ipseq/demo/demo_tasks.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "ipseq/data/text.hpp"
#include "ipseq/model/checkpoint.hpp"

namespace ipseq {

namespace fs = std::filesystem;

namespace {

constexpr std::array<const char*, 10> kDigitWords = {"zero", "one", "two",   "three", "four",
                                                     "five", "six", "seven", "eight", "nine"};
constexpr std::array<const char*, 3> kColors = {"red", "blue", "green"};
constexpr std::array<const char*, 3> kColorHex = {"#c0392b", "#2e86de", "#27ae60"};
constexpr std::array<const char*, 4> kObjects = {"dog", "cat", "ball", "car"};
constexpr std::array<const char*, 3> kActions = {"runs", "jumps", "sits"};

// Feature layout shared by both captioning tasks: color one-hot, object
// one-hot, action one-hot, bias.
constexpr std::size_t kFeatureDim = 3 + 4 + 3 + 1;
constexpr std::size_t kVideoFrames = 4;

std::string index_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu%s", i, ext);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string svg_preview(std::size_t color, std::size_t object, const char* action) {
  std::string label = std::string(kColors[color]) + " " + kObjects[object] + (action ? std::string(" ") + action : "");
  std::string shape = "<circle cx=\"80\" cy=\"60\" r=\"40\" fill=\"" + std::string(kColorHex[color]) + "\"";
  shape += action ? "><animate attributeName=\"cy\" values=\"60;40;60\" dur=\"1s\" repeatCount=\"indefinite\"/></circle>"
                  : "/>";
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"160\" height=\"140\">" + shape +
         "<text x=\"80\" y=\"130\" text-anchor=\"middle\" font-family=\"sans-serif\">" + label + "</text></svg>\n";
}

struct CaptionSplit {
  std::vector<std::string> sources, targets, media;
};

// Writes feature files, previews and captions for `n` random scenes.
CaptionSplit caption_split(const fs::path& dir, const std::string& task, const std::string& split, std::size_t n,
                           bool video, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> color(0, kColors.size() - 1), object(0, kObjects.size() - 1),
      action(0, kActions.size() - 1);
  std::normal_distribution<double> noise(0.0, 0.1);
  fs::create_directories(dir / "features" / task);
  fs::create_directories(dir / "media" / task);
  CaptionSplit out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = color(rng), o = object(rng), a = action(rng);
    const std::size_t frames = video ? kVideoFrames : 1;
    auto x = Tensor::zeros({frames, kFeatureDim});
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t k = 0; k < kFeatureDim; ++k) x.at(t, k) = noise(rng);
      x.at(t, c) += 1.0;
      x.at(t, 3 + o) += 1.0;
      // The action shows only in the last frame, so the decoder must attend to it.
      if (video && t + 1 == frames) x.at(t, 7 + a) += 1.0;
      x.at(t, kFeatureDim - 1) += 1.0;
    }
    const auto name = split + "_" + index_name(i, "");
    write_feature_sequence(dir / "features" / task / (name + ".ikcf"), x);
    write_text(dir / "media" / task / (name + ".svg"), svg_preview(c, o, video ? kActions[a] : nullptr));
    out.sources.push_back("features/" + task + "/" + name + ".ikcf");
    out.media.push_back(name + ".svg");
    std::string caption = std::string("A ") + kColors[c] + " " + kObjects[o];
    out.targets.push_back(caption + (video ? std::string(" ") + kActions[a] : std::string()) + ".");
  }
  return out;
}

TaskManifest caption_task(const fs::path& dir, const std::string& id, const std::string& name, bool video,
                          const DemoOptions& options, std::mt19937_64& rng) {
  TaskManifest m;
  m.id = id;
  m.name = name;
  m.modality = Modality::kFeatures;
  m.checkpoint = dir / (id + ".ckpt");
  m.target_tokens = TokenMode::kWord;
  m.media_dir = dir / "media" / id;
  for (const auto& [split, n] : {std::pair<std::string, std::size_t>{"train", options.train_pairs},
                                 {"test", options.test_pairs}}) {
    const auto s = caption_split(dir, id, split, n, video, rng);
    const auto stem = dir / (id + "." + split);
    write_lines(stem.string() + ".src", s.sources);
    write_lines(stem.string() + ".tgt", s.targets);
    write_lines(stem.string() + ".media", s.media);
    m.splits[split] = {stem.string() + ".src", stem.string() + ".tgt", fs::path(stem.string() + ".media")};
  }
  write_manifest(dir / (id + ".task"), m);
  return parse_manifest(dir / (id + ".task"));
}

TaskManifest nmt_task(const fs::path& dir, const DemoOptions& options) {
  TaskManifest m;
  m.id = "nmt";
  m.name = "Digits to words";
  m.modality = Modality::kText;
  m.checkpoint = dir / "nmt.ckpt";
  m.source_tokens = TokenMode::kChar;
  m.target_tokens = TokenMode::kWord;
  const auto all = digit_corpus(options.train_pairs + options.test_pairs, options.seed);
  const auto cut = static_cast<std::ptrdiff_t>(options.train_pairs);
  const auto write = [&](const std::string& split, std::ptrdiff_t begin, std::ptrdiff_t end) {
    write_lines(dir / ("nmt." + split + ".src"), {all.sources.begin() + begin, all.sources.begin() + end});
    write_lines(dir / ("nmt." + split + ".tgt"), {all.targets.begin() + begin, all.targets.begin() + end});
    m.splits[split] = {dir / ("nmt." + split + ".src"), dir / ("nmt." + split + ".tgt"), std::nullopt};
  };
  write("train", 0, cut);
  write("test", cut, static_cast<std::ptrdiff_t>(all.size()));
  write_manifest(dir / "nmt.task", m);
  return parse_manifest(dir / "nmt.task");
}

const std::vector<std::string> kFootballHypotheses = {
    "A group of football players in red uniforms.",
    "A football player in a red uniform is holding a football.",
    "A football player in a red uniform is wearing a football.",
    "A football player in a red uniform is wearing a helmet.",
};

TaskManifest football_task(const fs::path& dir) {
  TaskManifest m;
  m.id = "football";
  m.name = "Football caption replay (scripted)";
  m.modality = Modality::kFeatures;
  m.predictor = "scripted";
  m.script = dir / "football.script";
  write_lines(m.script, kFootballHypotheses);
  fs::create_directories(dir / "features" / "football");
  write_feature_sequence(dir / "features" / "football" / "000.ikcf", Tensor::zeros({1, kFeatureDim}));
  write_lines(dir / "football.test.src", {"features/football/000.ikcf"});
  write_lines(dir / "football.test.tgt", {kFootballHypotheses.back()});
  m.splits["test"] = {dir / "football.test.src", dir / "football.test.tgt", std::nullopt};
  write_manifest(dir / "football.task", m);
  return parse_manifest(dir / "football.task");
}

}  // namespace

std::string spell_digits(std::string_view digits) {
  std::string out;
  for (char d : digits) {
    if (d < '0' || d > '9') throw std::invalid_argument("spell_digits: not a digit: " + std::string(1, d));
    if (!out.empty()) out += ' ';
    out += kDigitWords[static_cast<std::size_t>(d - '0')];
  }
  return out;
}

ParallelCorpus digit_corpus(std::size_t n, std::uint64_t seed, std::size_t max_digits) {
  if (max_digits < 1) throw std::invalid_argument("digit_corpus: max_digits must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(1, max_digits);
  std::uniform_int_distribution<int> digit(0, 9);
  ParallelCorpus c;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    for (auto k = len(rng); k > 0; --k) s += static_cast<char>('0' + digit(rng));
    c.targets.push_back(spell_digits(s));
    c.sources.push_back(std::move(s));
  }
  return c;
}

std::vector<TrainingPair> load_pairs(const TaskManifest& manifest, const ModelBundle& bundle,
                                     const std::string& split) {
  const auto& files = manifest.split(split);
  const auto corpus = load_parallel(files.source, files.target);
  if (manifest.modality == Modality::kText) return make_pairs(corpus, bundle.source, bundle.target);
  std::vector<TrainingPair> pairs;
  const auto base = files.source.parent_path();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const fs::path p(corpus.sources[i]);
    pairs.push_back({load_feature_sequence(p.is_absolute() ? p : base / p), bundle.target.tokenize(corpus.targets[i])});
  }
  return pairs;
}

TrainTaskResult train_task(const TaskManifest& manifest, const TrainTaskOptions& options,
                           const ProgressFn& progress) {
  if (manifest.predictor != "neural") throw std::invalid_argument("task " + manifest.id + " is not neural");
  const auto& files = manifest.split(options.split);
  const auto corpus = load_parallel(files.source, files.target);
  const auto& shape = options.shape;

  ModelConfig config;
  config.input_modality = manifest.modality;
  config.embedding_dim = shape.embedding_dim;
  config.encoder_hidden_dim = shape.hidden_dim;
  config.decoder_hidden_dim = shape.hidden_dim;
  config.attention_dim = shape.attention_dim;
  config.max_output_len = manifest.max_len;

  Tokenizer source;
  if (manifest.modality == Modality::kText) {
    source = Tokenizer(manifest.source_tokens, build_vocab(corpus.sources, manifest.source_tokens, shape.max_vocab));
    config.src_vocab_size = source.vocab().size();
  } else {
    const fs::path first(corpus.sources.at(0));
    config.feature_dim = load_feature_sequence(first.is_absolute() ? first : files.source.parent_path() / first).cols();
  }
  Tokenizer target(manifest.target_tokens, build_vocab(corpus.targets, manifest.target_tokens, shape.max_vocab));
  config.tgt_vocab_size = target.vocab().size();

  ModelBundle bundle{Seq2Seq(config, options.init_seed), std::move(source), std::move(target), {}};
  const auto pairs = load_pairs(manifest, bundle, options.split);

  TrainTaskResult result;
  result.curve = train(bundle.network, bundle.optimizer, pairs, options.train, progress);
  save_checkpoint(manifest.checkpoint, bundle);
  if (!options.loss_curve.empty()) {
    std::ofstream out(options.loss_curve);
    if (!out) throw std::runtime_error("cannot write " + options.loss_curve.string());
    write_loss_curve(out, result.curve);
  }

  BeamParams greedy;
  greedy.beam_width = 1;
  greedy.max_len = manifest.max_len;
  result.train_exact = exact_match(bundle.network, bundle.target, pairs, greedy);
  if (manifest.splits.count(manifest.samples_split) && manifest.samples_split != options.split) {
    const auto held_out = load_pairs(manifest, bundle, manifest.samples_split);
    result.held_out_exact = exact_match(bundle.network, bundle.target, held_out, greedy);
  }
  return result;
}

std::vector<TaskManifest> write_demo_tasks(const fs::path& dir, const DemoOptions& options, const LogFn& log) {
  fs::create_directories(dir);
  std::mt19937_64 rng(options.seed);
  std::vector<TaskManifest> tasks{nmt_task(dir, options),
                                  caption_task(dir, "image_caption", "Image captioning", false, options, rng),
                                  caption_task(dir, "video_caption", "Video captioning", true, options, rng)};
  if (options.train) {
    for (const auto& m : tasks) {
      TrainTaskOptions t;
      t.train.learning_rate = 0.5;
      t.train.batch_size = 10;
      t.train.epochs = options.epochs;
      t.train.seed = options.seed;
      t.loss_curve = dir / (m.id + ".loss.tsv");
      if (log) log("training " + m.id);
      const auto r = train_task(m, t);
      if (log) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: final loss %.4g, train exact %.3f, held-out exact %.3f", m.id.c_str(),
                      r.curve.empty() ? 0.0 : r.curve.back().loss, r.train_exact, r.held_out_exact);
        log(buf);
      }
    }
  }
  tasks.push_back(football_task(dir));
  return tasks;
}

}  // namespace ipseq
