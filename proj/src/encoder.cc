#include "chemprot/encoder.h"

#include <cmath>

#include "chemprot/types.h"

namespace chemprot {

std::string Symbol::ToString() const {
  switch (special) {
    case Special::kNone: return surface;
    case Special::kCls: return "[CLS]";
    case Special::kSubjectStart: return "[S:CHEM]";
    case Special::kSubjectEnd: return "[\\S:CHEM]";
    case Special::kObjectStart: return "[O:GENE]";
    case Special::kObjectEnd: return "[\\O:GENE]";
  }
  return "?";
}

std::vector<Symbol> ToSymbols(std::span<const std::string> surfaces) {
  std::vector<Symbol> out;
  out.reserve(surfaces.size());
  for (const auto &s : surfaces) out.push_back(Symbol::Text(s));
  return out;
}

std::uint64_t HashSurface(std::string_view surface) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : surface) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

struct BlockCache {
  Matrix input;
  LayerNormCache ln_attention;
  Matrix normed_attention;
  Matrix q, k, v;
  Matrix probs;
  Matrix mixed;  // probs * v
  Matrix residual;
  LayerNormCache ln_ff;
  Matrix normed_ff;
  Matrix hidden_pre;
  Matrix hidden;
};

struct TinyCache : EncoderCache {
  std::vector<int> rows;
  std::vector<BlockCache> blocks;
  Matrix pre_final;
  LayerNormCache final_norm;
};

}  // namespace

TinyEncoder::TinyEncoder(const EncoderConfig &config)
    : config_(config),
      embeddings_("encoder.embeddings", config.buckets + kNumSpecials, config.dim),
      positions_("encoder.positions", config.max_len, config.dim),
      final_norm_("encoder.final_norm", config.dim) {
  if (config.dim <= 0 || config.blocks < 0 || config.max_len <= 0 || config.buckets <= 0 ||
      config.ff_dim <= 0) {
    throw ContractViolation("encoder config sizes must be positive");
  }
  Rng rng(config.seed);
  embeddings_.InitNormal(rng, 0.5);
  positions_.InitNormal(rng, 0.1);
  const int d = config.dim;
  for (int b = 0; b < config.blocks; ++b) {
    const std::string prefix = "encoder.block" + std::to_string(b) + ".";
    Block block{LayerNorm(prefix + "ln_attention", d),
                Linear(prefix + "query", d, d),
                Linear(prefix + "key", d, d),
                Linear(prefix + "value", d, d),
                Linear(prefix + "output", d, d),
                LayerNorm(prefix + "ln_ff", d),
                Linear(prefix + "ff_in", d, config.ff_dim),
                Linear(prefix + "ff_out", config.ff_dim, d)};
    for (Linear *l : {&block.query, &block.key, &block.value, &block.output, &block.ff_in,
                      &block.ff_out}) {
      l->Init(rng);
    }
    blocks_.push_back(std::move(block));
  }
}

int TinyEncoder::EmbeddingRow(const Symbol &symbol) const {
  if (symbol.special != Special::kNone) {
    return config_.buckets + static_cast<int>(symbol.special) - 1;
  }
  return static_cast<int>(HashSurface(symbol.surface) % static_cast<std::uint64_t>(config_.buckets));
}

Encoding TinyEncoder::Encode(std::span<const Symbol> input, bool keep_cache) const {
  const int n = static_cast<int>(input.size());
  if (n > config_.max_len) {
    throw ContractViolation("encoder input of " + std::to_string(n) +
                            " symbols exceeds max_len " + std::to_string(config_.max_len) +
                            "; window the input before encoding");
  }
  auto cache = keep_cache ? std::make_unique<TinyCache>() : nullptr;
  const int d = config_.dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Matrix x(n, d);
  std::vector<int> rows(n);
  for (int i = 0; i < n; ++i) {
    rows[i] = EmbeddingRow(input[i]);
    x.row(i) = embeddings_.value.row(rows[i]) + positions_.value.row(i);
  }

  for (const Block &block : blocks_) {
    BlockCache bc;
    const Matrix a = block.ln_attention.Forward(x, &bc.ln_attention);
    Matrix q = block.query.Forward(a);
    Matrix k = block.key.Forward(a);
    Matrix v = block.value.Forward(a);
    Matrix probs = SoftmaxRows((q * k.transpose()) * scale);
    Matrix mixed = probs * v;
    Matrix residual = x + block.output.Forward(mixed);
    const Matrix b = block.ln_ff.Forward(residual, &bc.ln_ff);
    Matrix hidden_pre = block.ff_in.Forward(b);
    Matrix hidden = Gelu(hidden_pre);
    Matrix next = residual + block.ff_out.Forward(hidden);
    if (cache) {
      bc.input = std::move(x);
      bc.normed_attention = a;
      bc.q = std::move(q);
      bc.k = std::move(k);
      bc.v = std::move(v);
      bc.probs = std::move(probs);
      bc.mixed = std::move(mixed);
      bc.residual = std::move(residual);
      bc.normed_ff = b;
      bc.hidden_pre = std::move(hidden_pre);
      bc.hidden = std::move(hidden);
      cache->blocks.push_back(std::move(bc));
    }
    x = std::move(next);
  }

  Encoding out;
  out.output = final_norm_.Forward(x, cache ? &cache->final_norm : nullptr);
  if (cache) {
    cache->rows = std::move(rows);
    cache->pre_final = std::move(x);
    out.cache = std::move(cache);
  }
  return out;
}

void TinyEncoder::Backward(const EncoderCache &base, const Matrix &d_output) {
  const auto &cache = dynamic_cast<const TinyCache &>(base);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.dim));

  Matrix dx = final_norm_.Backward(cache.final_norm, d_output);
  for (int b = static_cast<int>(blocks_.size()) - 1; b >= 0; --b) {
    Block &block = blocks_[b];
    const BlockCache &bc = cache.blocks[b];

    // Feed-forward sublayer.
    Matrix d_hidden = block.ff_out.Backward(bc.hidden, dx);
    Matrix d_pre = GeluBackward(bc.hidden_pre, d_hidden);
    Matrix d_normed = block.ff_in.Backward(bc.normed_ff, d_pre);
    Matrix d_residual = dx + block.ln_ff.Backward(bc.ln_ff, d_normed);

    // Attention sublayer.
    Matrix d_mixed = block.output.Backward(bc.mixed, d_residual);
    Matrix d_probs = d_mixed * bc.v.transpose();
    Matrix d_v = bc.probs.transpose() * d_mixed;
    Matrix d_scores = SoftmaxRowsBackward(bc.probs, d_probs) * scale;
    Matrix d_q = d_scores * bc.k;
    Matrix d_k = d_scores.transpose() * bc.q;
    Matrix d_a = block.query.Backward(bc.normed_attention, d_q);
    d_a += block.key.Backward(bc.normed_attention, d_k);
    d_a += block.value.Backward(bc.normed_attention, d_v);
    dx = d_residual + block.ln_attention.Backward(bc.ln_attention, d_a);
  }

  for (std::size_t i = 0; i < cache.rows.size(); ++i) {
    embeddings_.grad.row(cache.rows[i]) += dx.row(i);
    positions_.grad.row(i) += dx.row(i);
  }
}

std::vector<Param *> TinyEncoder::params() {
  std::vector<Param *> out{&embeddings_, &positions_};
  for (Block &block : blocks_) {
    block.ln_attention.Collect(&out);
    block.query.Collect(&out);
    block.key.Collect(&out);
    block.value.Collect(&out);
    block.output.Collect(&out);
    block.ln_ff.Collect(&out);
    block.ff_in.Collect(&out);
    block.ff_out.Collect(&out);
  }
  final_norm_.Collect(&out);
  return out;
}

std::unique_ptr<Encoder> TinyEncoder::Clone() const {
  return std::make_unique<TinyEncoder>(*this);
}

GradCheckResult CheckEncoderGradients(TinyEncoder *encoder, std::span<const Symbol> input,
                                      double epsilon) {
  Rng rng(encoder->config().seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix readout(static_cast<Eigen::Index>(input.size()), encoder->dim());
  for (Eigen::Index i = 0; i < readout.size(); ++i) readout.data()[i] = dist(rng);

  auto loss = [&](bool backprop) {
    Encoding enc = encoder->Encode(input, backprop);
    const double value = (enc.output.array() * readout.array()).sum();
    if (backprop) encoder->Backward(*enc.cache, readout);
    return value;
  };
  auto params = encoder->params();
  return GradCheck(params, loss, epsilon);
}

}  // namespace chemprot
