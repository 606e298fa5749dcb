#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "ipseq/data/corpus.hpp"
#include "ipseq/data/task_manifest.hpp"
#include "ipseq/data/text.hpp"
#include "ipseq/data/tokenizer.hpp"

using namespace ipseq;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ipseq_test_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("normalization: NFC, whitespace collapse, trimming") {
  CHECK(normalize("  A   football\tplayer \n") == "A football player");
  // "e" + combining acute composes to U+00E9.
  CHECK(normalize("caf\x65\xCC\x81") == "caf\xC3\xA9");
  CHECK(normalize("") == "");
  CHECK(normalize_prefix("A  f") == "A f");
  CHECK(normalize_prefix("A football ") == "A football ");
  CHECK(normalize_prefix("  A   ") == "A ");
  CHECK(normalize("bad \xFF byte") == "bad \xEF\xBF\xBD byte");
}

TEST_CASE("scalar helpers count code points, not bytes") {
  const std::string s = "a\xC3\xA9z";  // a é z
  CHECK(scalar_count(s) == 3);
  CHECK(scalar_prefix(s, 2) == "a\xC3\xA9");
  CHECK(split_scalars(s).size() == 3);
  CHECK(from_scalars(to_scalars(s)) == s);
}

TEST_CASE("build_vocab orders by frequency then lexicographically") {
  std::vector<std::string> corpus = {"aa b"};
  auto v = build_vocab(corpus, TokenMode::kChar, 100);
  REQUIRE(v.size() == 4 + 3);
  CHECK(v.surface(4) == "a");
  CHECK(v.surface(5) == " ");
  CHECK(v.surface(6) == "b");
  CHECK(v == build_vocab(corpus, TokenMode::kChar, 100));
}

TEST_CASE("build_vocab truncation maps rare tokens to UNK") {
  std::vector<std::string> corpus = {"the cat", "the dog", "the cat ."};
  auto v = build_vocab(corpus, TokenMode::kWord, 2);
  CHECK(v.content_size() == 2);
  CHECK(v.surface(4) == "the");
  CHECK(v.surface(5) == "cat");
  Tokenizer tok(TokenMode::kWord, v);
  auto ids = tok.tokenize("the dog");
  CHECK(ids == std::vector<TokenId>{4, kUnkId, kEosId});
}

TEST_CASE("reserved surfaces never enter a built vocabulary") {
  std::vector<std::string> corpus = {"<unk> word </s>"};
  auto v = build_vocab(corpus, TokenMode::kWord, 10);
  CHECK(v.content_size() == 1);
  CHECK_THROWS(Vocabulary({"<s>"}));
  CHECK_THROWS(Vocabulary({"x", "x"}));
}

TEST_CASE("tokenize examples") {
  Tokenizer chars(TokenMode::kChar, Vocabulary({"a", "b"}));
  CHECK(chars.tokenize("ab") == std::vector<TokenId>{4, 5, kEosId});

  Tokenizer words(TokenMode::kWord, Vocabulary({"A", "football", "player", "."}));
  CHECK(words.tokenize("A football") == std::vector<TokenId>{4, 5, kEosId});
  CHECK(words.tokenize("A football player.") == std::vector<TokenId>{4, 5, 6, 7, kEosId});
  CHECK(words.detokenize(std::vector<TokenId>{4, 5, 6, 7, kEosId}) == "A football player.");
  CHECK(words.continuation(5, true) == "football");
  CHECK(words.continuation(5, false) == " football");
  CHECK(words.continuation(7, false) == ".");
  CHECK(words.continuation(kEosId, false).empty());
}

TEST_CASE("word splitting peels sentence punctuation") {
  CHECK(split_tokens("in red uniforms.", TokenMode::kWord) ==
        std::vector<std::string>{"in", "red", "uniforms", "."});
  CHECK(split_tokens("wait?!", TokenMode::kWord) == std::vector<std::string>{"wait", "?", "!"});
  CHECK(split_tokens("a,b", TokenMode::kWord) == std::vector<std::string>{"a,b"});
}

TEST_CASE("tokenize/detokenize round-trip on random in-vocabulary text") {
  std::mt19937_64 rng(101);
  const std::vector<std::string> words = {"a", "group", "of", "football", "players", "in", "red",
                                          "uniforms", "\xC3\xA9t\xC3\xA9", ".", ",", "!", "?"};
  Tokenizer wt(TokenMode::kWord, Vocabulary(words));
  const std::vector<std::string> chars = {"a", "b", "c", " ", "\xC3\xA9", ".", "z"};
  Tokenizer ct(TokenMode::kChar, Vocabulary(chars));

  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_int_distribution<std::size_t> len(1, 12);
    std::vector<TokenId> ids;
    for (std::size_t i = len(rng); i > 0; --i) {
      ids.push_back(static_cast<TokenId>(kFirstContentId + rng() % words.size()));
    }
    const auto text = wt.detokenize(ids);
    CHECK(wt.detokenize(wt.tokenize(text)) == normalize(text));

    std::string s;
    for (std::size_t i = len(rng); i > 0; --i) s += chars[rng() % chars.size()];
    CHECK(ct.detokenize(ct.tokenize(s)) == normalize(s));
  }
}

TEST_CASE("feature sequence files") {
  auto dir = scratch_dir("features");

  SUBCASE("zeros round-trip to a 1x4 zero tensor") {
    write_feature_sequence(dir / "z.ikcf", Tensor::zeros({1, 4}));
    auto t = load_feature_sequence(dir / "z.ikcf");
    CHECK(t.shape() == Shape{1, 4});
    for (double v : t.data()) CHECK(v == 0.0);
    CHECK(fs::file_size(dir / "z.ikcf") == 16 + 32);
  }

  SUBCASE("write-then-read is bit-exact") {
    std::mt19937_64 rng(9);
    std::vector<double> v(3 * 5);
    for (auto& x : v) x = std::uniform_real_distribution<double>(-1e3, 1e3)(rng);
    Tensor t({3, 5}, v);
    write_feature_sequence(dir / "r.ikcf", t);
    CHECK(load_feature_sequence(dir / "r.ikcf") == t);
  }

  SUBCASE("header layout is little-endian") {
    write_feature_sequence(dir / "h.ikcf", Tensor::filled({2, 3}, 1.0));
    std::ifstream in(dir / "h.ikcf", std::ios::binary);
    unsigned char b[16];
    in.read(reinterpret_cast<char*>(b), 16);
    CHECK(std::string(reinterpret_cast<char*>(b), 4) == "IKCF");
    CHECK(b[4] == 1);
    CHECK(b[8] == 2);
    CHECK(b[12] == 3);
  }

  SUBCASE("truncation names expected and actual sizes") {
    write_feature_sequence(dir / "t.ikcf", Tensor::zeros({2, 2}));
    fs::resize_file(dir / "t.ikcf", 16 + 20);
    try {
      load_feature_sequence(dir / "t.ikcf");
      FAIL("expected FeatureFileError");
    } catch (const FeatureFileError& e) {
      std::string msg = e.what();
      CHECK(msg.find("expected 48") != std::string::npos);
      CHECK(msg.find("actual 36") != std::string::npos);
    }
  }

  SUBCASE("bad magic") {
    std::ofstream(dir / "m.ikcf", std::ios::binary) << "NOPE0000000000000000000000000";
    CHECK_THROWS_AS(load_feature_sequence(dir / "m.ikcf"), FeatureFileError);
  }
}

TEST_CASE("parallel corpus loading") {
  auto dir = scratch_dir("corpus");
  write_lines(dir / "a.src", {"1 2", "3"});
  write_lines(dir / "a.tgt", {"one two", "three"});
  auto c = load_parallel(dir / "a.src", dir / "a.tgt");
  CHECK(c.size() == 2);
  write_lines(dir / "b.tgt", {"one"});
  CHECK_THROWS(load_parallel(dir / "a.src", dir / "b.tgt"));
  write_lines(dir / "c.tgt", {"one", "   "});
  CHECK_THROWS(load_parallel(dir / "a.src", dir / "c.tgt"));
}

TEST_CASE("task manifests parse, resolve paths, and round-trip") {
  auto dir = scratch_dir("manifest");
  {
    std::ofstream out(dir / "nmt.task");
    out << "# demo\nname=Digits\nmodality=text\ncheckpoint=model.ckpt\n"
        << "test.source=test.src\ntest.target=test.tgt\nbeam_width=4\nonline_lr=0.05\n";
  }
  auto m = parse_manifest(dir / "nmt.task");
  CHECK(m.id == "nmt");
  CHECK(m.name == "Digits");
  CHECK(m.checkpoint == dir / "model.ckpt");
  CHECK(m.split("test").target == dir / "test.tgt");
  CHECK(m.beam_width == 4);
  CHECK(m.online_lr == 0.05);
  CHECK_THROWS_AS(m.split("dev"), std::out_of_range);

  m.id = "copy";
  write_manifest(dir / "copy.task", m);
  auto again = parse_manifest(dir / "copy.task");
  CHECK(again.checkpoint == m.checkpoint);
  CHECK(again.beam_width == 4);

  std::ofstream(dir / "bad.task") << "colour=blue\n";
  CHECK_THROWS(parse_manifest(dir / "bad.task"));
  fs::remove(dir / "bad.task");
  auto all = load_manifests(dir);
  REQUIRE(all.size() == 2);
  CHECK(all[0].id == "copy");
  CHECK(all[1].id == "nmt");

  std::ofstream(dir / "dup.task") << "id=nmt\n";
  CHECK_THROWS(load_manifests(dir));
}
