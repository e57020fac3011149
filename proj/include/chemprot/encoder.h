#ifndef CHEMPROT_ENCODER_H_
#define CHEMPROT_ENCODER_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chemprot/nn.h"

namespace chemprot {

// Symbols that are not text. They get dedicated embeddings and can never
// collide with a surface string.
enum class Special : std::uint8_t {
  kNone = 0,
  kCls,           // sequence start, the [CLS] role
  kSubjectStart,  // [S:CHEM]
  kSubjectEnd,    // [\S:CHEM]
  kObjectStart,   // [O:GENE]
  kObjectEnd,     // [\O:GENE]
};

constexpr int kNumSpecials = 5;

struct Symbol {
  Special special = Special::kNone;
  std::string surface;

  static Symbol Text(std::string surface) { return {Special::kNone, std::move(surface)}; }
  static Symbol Marker(Special special) { return {special, {}}; }

  bool is_marker() const {
    return special != Special::kNone && special != Special::kCls;
  }
  // Surface text, or the bracketed marker name.
  std::string ToString() const;
  bool operator==(const Symbol &) const = default;
};

std::vector<Symbol> ToSymbols(std::span<const std::string> surfaces);

// Fixed 64-bit FNV-1a of the UTF-8 bytes.
std::uint64_t HashSurface(std::string_view surface);

// Opaque per-call state kept by Encode() for the backward pass.
struct EncoderCache {
  virtual ~EncoderCache() = default;
};

struct Encoding {
  Matrix output;  // one row per input symbol, dim() columns
  std::unique_ptr<EncoderCache> cache;
};

// Maps a symbol sequence to contextual vectors of width dim(). Any surface
// string is accepted. Implementations must be deterministic given input and
// parameters; an adapter around a pretrained model fits the same contract.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual int dim() const = 0;
  virtual int max_len() const = 0;

  // Throws ContractViolation if input.size() > max_len(); callers window
  // their input, nothing is truncated here.
  virtual Encoding Encode(std::span<const Symbol> input, bool keep_cache) const = 0;
  // Accumulates parameter gradients given dL/d(output).
  virtual void Backward(const EncoderCache &cache, const Matrix &d_output) = 0;

  virtual std::vector<Param *> params() = 0;
  virtual std::unique_ptr<Encoder> Clone() const = 0;
};

struct EncoderConfig {
  int dim = 64;
  int blocks = 2;
  int max_len = 512;
  int buckets = 4096;
  int ff_dim = 128;
  std::uint64_t seed = 1;

  bool operator==(const EncoderConfig &) const = default;
};

// Small trainable transformer: hashed surface embeddings plus learned
// positions, then pre-norm blocks of single-head self-attention and a GELU
// feed-forward layer, then a final layer norm.
class TinyEncoder : public Encoder {
 public:
  explicit TinyEncoder(const EncoderConfig &config);

  int dim() const override { return config_.dim; }
  int max_len() const override { return config_.max_len; }
  const EncoderConfig &config() const { return config_; }

  Encoding Encode(std::span<const Symbol> input, bool keep_cache) const override;
  void Backward(const EncoderCache &cache, const Matrix &d_output) override;
  std::vector<Param *> params() override;
  std::unique_ptr<Encoder> Clone() const override;

  // Row of the embedding table used for a symbol.
  int EmbeddingRow(const Symbol &symbol) const;

 private:
  struct Block {
    LayerNorm ln_attention;
    Linear query, key, value, output;
    LayerNorm ln_ff;
    Linear ff_in, ff_out;
  };

  EncoderConfig config_;
  Param embeddings_;  // buckets + kNumSpecials rows
  Param positions_;   // max_len rows
  std::vector<Block> blocks_;
  LayerNorm final_norm_;
};

// Gradient check of the encoder alone under a fixed random linear read-out
// loss. Returns the worst relative error across all parameters.
GradCheckResult CheckEncoderGradients(TinyEncoder *encoder, std::span<const Symbol> input,
                                      double epsilon);

}  // namespace chemprot

#endif  // CHEMPROT_ENCODER_H_
