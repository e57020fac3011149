#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chemprot/encoder.h"
#include "chemprot/types.h"

using namespace chemprot;

namespace {

EncoderConfig Tiny() {
  EncoderConfig c;
  c.dim = 16;
  c.blocks = 2;
  c.max_len = 8;
  c.buckets = 32;
  c.ff_dim = 24;
  c.seed = 11;
  return c;
}

std::vector<Symbol> Input() {
  return {Symbol::Marker(Special::kCls), Symbol::Text("Cl"), Symbol::Text("-"),
          Symbol::Marker(Special::kSubjectStart), Symbol::Text("secretion")};
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(HashSurface("") == 0xcbf29ce484222325ULL);
  CHECK(HashSurface("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(HashSurface("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("special symbols own rows past the hash buckets") {
  TinyEncoder enc(Tiny());
  CHECK(enc.EmbeddingRow(Symbol::Marker(Special::kCls)) == 32);
  CHECK(enc.EmbeddingRow(Symbol::Marker(Special::kObjectEnd)) == 36);
  CHECK(enc.EmbeddingRow(Symbol::Text("[CLS]")) < 32);
}

TEST_CASE("marker names") {
  CHECK(Symbol::Marker(Special::kSubjectStart).ToString() == "[S:CHEM]");
  CHECK(Symbol::Marker(Special::kSubjectEnd).ToString() == "[\\S:CHEM]");
  CHECK(Symbol::Marker(Special::kObjectStart).ToString() == "[O:GENE]");
  CHECK(Symbol::Marker(Special::kObjectEnd).ToString() == "[\\O:GENE]");
  CHECK(Symbol::Marker(Special::kCls).ToString() == "[CLS]");
  CHECK_FALSE(Symbol::Marker(Special::kCls).is_marker());
}

TEST_CASE("output shape and determinism") {
  TinyEncoder a(Tiny());
  TinyEncoder b(Tiny());
  const auto input = Input();
  const Matrix x = a.Encode(input, false).output;
  CHECK(x.rows() == 5);
  CHECK(x.cols() == 16);
  CHECK(x == b.Encode(input, false).output);
  CHECK(x == a.Clone()->Encode(input, false).output);
  CHECK(x.allFinite());
}

TEST_CASE("different seeds give different encoders") {
  EncoderConfig c = Tiny();
  c.seed = 12;
  CHECK(TinyEncoder(Tiny()).Encode(Input(), false).output !=
        TinyEncoder(c).Encode(Input(), false).output);
}

TEST_CASE("over-length input is rejected, not truncated") {
  TinyEncoder enc(Tiny());
  std::vector<Symbol> input(9, Symbol::Text("x"));
  CHECK_THROWS_AS(enc.Encode(input, false), ContractViolation);
  input.pop_back();
  CHECK_NOTHROW(enc.Encode(input, false));
}

TEST_CASE("positions matter") {
  TinyEncoder enc(Tiny());
  auto input = Input();
  const Matrix a = enc.Encode(input, false).output;
  std::swap(input[1], input[4]);
  const Matrix b = enc.Encode(input, false).output;
  CHECK(a.row(1) != b.row(4));
}

TEST_CASE("context changes the representation") {
  TinyEncoder enc(Tiny());
  const std::vector<Symbol> a = {Symbol::Text("x"), Symbol::Text("inhibits")};
  const std::vector<Symbol> b = {Symbol::Text("x"), Symbol::Text("activates")};
  CHECK(enc.Encode(a, false).output.row(0) != enc.Encode(b, false).output.row(0));
}

TEST_CASE("encoder gradients match finite differences") {
  TinyEncoder enc(Tiny());
  // Key biases get an exactly zero gradient (softmax ignores a shift shared by
  // all keys), so their relative error is finite-difference noise.
  const GradCheckResult r = CheckEncoderGradients(&enc, Input(), 1e-4);
  INFO("worst: " << r.worst_param << "[" << r.worst_entry << "] " << r.max_rel_error);
  CHECK(r.max_rel_error < 1e-3);
  CHECK(r.entries_checked > 1000);
}

TEST_CASE("encoder without blocks still trains embeddings") {
  EncoderConfig c = Tiny();
  c.blocks = 0;
  TinyEncoder enc(c);
  CHECK(CheckEncoderGradients(&enc, Input(), 1e-4).max_rel_error < 1e-3);
}
