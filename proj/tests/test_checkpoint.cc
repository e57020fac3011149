#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "chemprot/checkpoint.h"
#include "chemprot/ner.h"
#include "chemprot/relation.h"
#include "test_util.h"

using namespace chemprot;

namespace {

std::filesystem::path Temp(const std::string &name) { return std::filesystem::temp_directory_path() / name; }

std::vector<unsigned char> Bytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t Le(const std::vector<unsigned char> &b, std::size_t at, int n) {
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | b[at + i];
  return v;
}

}  // namespace

TEST_CASE("byte layout") {
  Checkpoint ckpt;
  ckpt.dim = 16;
  ckpt.blocks = 2;
  ckpt.seed = 0x0102030405060708ULL;
  ckpt.kind = ModelKind::kNer;
  ckpt.config_json = "{}";
  Matrix m(1, 2);
  m << 1.0, -2.5;
  ckpt.tensors.emplace_back("w", m);
  WriteCheckpoint(ckpt, Temp("chemprot_layout.ckpt"));

  const auto b = Bytes(Temp("chemprot_layout.ckpt"));
  REQUIRE(b.size() == 8 + 4 + 4 + 4 + 8 + 4 + (4 + 2) + 4 + (4 + 1) + 4 + 4 + 16);
  CHECK(std::memcmp(b.data(), "CPRTCKPT", 8) == 0);
  CHECK(Le(b, 8, 4) == kCheckpointVersion);
  CHECK(Le(b, 12, 4) == 16);
  CHECK(Le(b, 16, 4) == 2);
  CHECK(Le(b, 20, 8) == 0x0102030405060708ULL);
  CHECK(Le(b, 28, 4) == 1);
  CHECK(Le(b, 32, 4) == 2);
  CHECK(b[36] == '{');
  CHECK(Le(b, 38, 4) == 1);
  CHECK(Le(b, 42, 4) == 1);
  CHECK(b[46] == 'w');
  CHECK(Le(b, 47, 4) == 1);
  CHECK(Le(b, 51, 4) == 2);
  // 1.0 and -2.5 as IEEE-754 binary64.
  CHECK(Le(b, 55, 8) == 0x3ff0000000000000ULL);
  CHECK(Le(b, 63, 8) == 0xc004000000000000ULL);

  const Checkpoint back = ReadCheckpoint(Temp("chemprot_layout.ckpt"));
  CHECK(back.seed == ckpt.seed);
  CHECK(back.kind == ModelKind::kNer);
  REQUIRE(back.tensors.size() == 1);
  CHECK(back.tensors[0].second == m);
}

TEST_CASE("bad files are rejected") {
  {
    std::ofstream out(Temp("chemprot_bad.ckpt"), std::ios::binary);
    out << "NOTACKPT";
  }
  CHECK_THROWS_AS(ReadCheckpoint(Temp("chemprot_bad.ckpt")), Error);
  CHECK_THROWS_AS(ReadCheckpoint(Temp("chemprot_missing.ckpt")), Error);

  Checkpoint ckpt;
  ckpt.tensors.emplace_back("w", Matrix::Zero(2, 2));
  WriteCheckpoint(ckpt, Temp("chemprot_trunc.ckpt"));
  auto b = Bytes(Temp("chemprot_trunc.ckpt"));
  b.resize(b.size() - 3);
  {
    std::ofstream out(Temp("chemprot_trunc.ckpt"), std::ios::binary);
    out.write(reinterpret_cast<const char *>(b.data()), static_cast<std::streamsize>(b.size()));
  }
  CHECK_THROWS_AS(ReadCheckpoint(Temp("chemprot_trunc.ckpt")), Error);
}

TEST_CASE("restoring checks names and shapes") {
  Param w("w", 2, 3);
  Param v("v", 1, 1);
  Checkpoint ckpt;
  ckpt.tensors.emplace_back("w", Matrix::Ones(2, 3));
  Param *both[] = {&w, &v};
  CHECK_THROWS_AS(ckpt.RestoreParams(both), Error);
  Param *only_w[] = {&w};
  ckpt.RestoreParams(only_w);
  CHECK(w.value == Matrix::Ones(2, 3));
  Param wrong("w", 3, 2);
  Param *shaped[] = {&wrong};
  CHECK_THROWS_AS(ckpt.RestoreParams(shaped), Error);
}

TEST_CASE("model checkpoints keep their kind") {
  const NerModel ner = NerModel::Create(NerConfig{}, chemprot::testing::TinyEncoderConfig(3));
  ner.Save(Temp("chemprot_kind_ner.ckpt"));
  CHECK(ReadCheckpoint(Temp("chemprot_kind_ner.ckpt")).kind == ModelKind::kNer);
  CHECK_THROWS_AS(RelationModel::Load(Temp("chemprot_kind_ner.ckpt")), Error);
  const NerModel back = NerModel::Load(Temp("chemprot_kind_ner.ckpt"));
  CHECK(back.config().max_span_len == ner.config().max_span_len);
  CHECK(back.encoder().dim() == 16);
}
