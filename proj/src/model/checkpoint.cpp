#include "ipseq/model/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "ipseq/data/binary_io.hpp"

namespace ipseq {

namespace {

constexpr char kMagic[8] = {'I', 'P', 'S', 'Q', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  binary::put_string(out, name);
  binary::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) binary::put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.data()) binary::put_f64(out, v);
}

std::pair<std::string, Tensor> get_tensor(std::istream& in) {
  auto name = binary::get_string(in, "tensor name");
  auto rank = binary::get_u32(in, "tensor rank");
  if (rank == 0 || rank > 4) throw CheckpointError("checkpoint: bad rank for " + name);
  Shape shape(rank);
  for (auto& d : shape) d = binary::get_u32(in, "tensor shape");
  const auto n = shape_numel(shape);
  if (n == 0 || n > (1u << 28)) throw CheckpointError("checkpoint: bad shape for " + name);
  std::vector<double> values(n);
  for (auto& v : values) v = binary::get_f64(in, "tensor values");
  return {std::move(name), Tensor(std::move(shape), std::move(values))};
}

void put_vocab(std::ostream& out, const Tokenizer& tok) {
  binary::put_u32(out, tok.mode() == TokenMode::kChar ? 0 : 1);
  auto tokens = tok.vocab().content_tokens();
  binary::put_u32(out, static_cast<std::uint32_t>(tokens.size()));
  for (const auto& t : tokens) binary::put_string(out, t);
}

Tokenizer get_vocab(std::istream& in) {
  auto mode = binary::get_u32(in, "vocab mode");
  if (mode > 1) throw CheckpointError("checkpoint: bad tokenization mode");
  auto n = binary::get_u32(in, "vocab size");
  std::vector<std::string> tokens(n);
  for (auto& t : tokens) t = binary::get_string(in, "vocab token");
  return Tokenizer(mode == 0 ? TokenMode::kChar : TokenMode::kWord, Vocabulary(tokens));
}

}  // namespace

std::string serialize_checkpoint(const ModelBundle& bundle) {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, sizeof kMagic);
  binary::put_u32(out, kVersion);
  const auto& c = bundle.network.config();
  for (std::size_t v : {c.src_vocab_size, c.tgt_vocab_size, c.embedding_dim, c.encoder_hidden_dim,
                        c.decoder_hidden_dim, c.attention_dim}) {
    binary::put_u32(out, static_cast<std::uint32_t>(v));
  }
  binary::put_u32(out, c.input_modality == Modality::kText ? 0 : 1);
  binary::put_u32(out, static_cast<std::uint32_t>(c.feature_dim));
  binary::put_u32(out, static_cast<std::uint32_t>(c.max_output_len));
  put_vocab(out, bundle.source);
  put_vocab(out, bundle.target);
  const auto& params = bundle.network.params();
  binary::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) put_tensor(out, e.name, e.value);
  binary::put_string(out, bundle.optimizer.kind);
  binary::put_u32(out, static_cast<std::uint32_t>(bundle.optimizer.slots.size()));
  for (const auto& [name, t] : bundle.optimizer.slots) put_tensor(out, name, t);
  return out.str();
}

ModelBundle deserialize_checkpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  try {
    char magic[8];
    binary::read_exact(in, magic, 8, "magic");
    if (std::string(magic, 8) != std::string(kMagic, 8)) throw CheckpointError("checkpoint: bad magic");
    auto version = binary::get_u32(in, "version");
    if (version != kVersion) throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));

    ModelConfig c;
    c.src_vocab_size = binary::get_u32(in);
    c.tgt_vocab_size = binary::get_u32(in);
    c.embedding_dim = binary::get_u32(in);
    c.encoder_hidden_dim = binary::get_u32(in);
    c.decoder_hidden_dim = binary::get_u32(in);
    c.attention_dim = binary::get_u32(in);
    auto modality = binary::get_u32(in);
    if (modality > 1) throw CheckpointError("checkpoint: bad modality");
    c.input_modality = modality == 0 ? Modality::kText : Modality::kFeatures;
    c.feature_dim = binary::get_u32(in);
    c.max_output_len = binary::get_u32(in);

    ModelBundle bundle;
    bundle.source = get_vocab(in);
    bundle.target = get_vocab(in);
    if (bundle.target.vocab().size() != c.tgt_vocab_size ||
        (c.input_modality == Modality::kText && bundle.source.vocab().size() != c.src_vocab_size)) {
      throw CheckpointError("checkpoint: vocabulary size does not match model config");
    }
    bundle.network = Seq2Seq(c, 0);
    auto& params = bundle.network.params();
    auto n = binary::get_u32(in, "parameter count");
    if (n != params.size()) throw CheckpointError("checkpoint: parameter count mismatch");
    for (std::uint32_t i = 0; i < n; ++i) {
      auto [name, t] = get_tensor(in);
      auto& e = params.entry(i);
      if (e.name != name || e.value.shape() != t.shape()) {
        throw CheckpointError("checkpoint: unexpected parameter " + name + " " + shape_string(t.shape()));
      }
      e.value = std::move(t);
    }
    bundle.optimizer.kind = binary::get_string(in, "optimizer kind");
    auto slots = binary::get_u32(in, "optimizer slot count");
    for (std::uint32_t i = 0; i < slots; ++i) bundle.optimizer.slots.push_back(get_tensor(in));
    if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("checkpoint: trailing bytes");
    return bundle;
  } catch (const binary::ReadError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle) {
  const auto bytes = serialize_checkpoint(bundle);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace ipseq
