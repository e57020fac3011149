#ifndef CHEMPROT_CONFIG_H_
#define CHEMPROT_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "chemprot/corpus.h"
#include "chemprot/encoder.h"

namespace chemprot {

// Relation representation built from the contextual embeddings:
//   A = [S ; O]            B = [CLS ; A]
//   C = [S ; M ; O]        D = [CLS ; C]
//   E = [S ; \S ; M ; O ; \O]   F = [CLS ; E]
// where S, \S, O, \O are the marker embeddings and M is the mean of the
// tokens between the two entities.
enum class Variant { kA, kB, kC, kD, kE, kF };

std::string ToString(Variant v);
Variant ParseVariant(std::string_view s);  // throws Error on unknown names

struct TrainOptions {
  int epochs = 1;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
};

struct NerConfig {
  int max_span_len = 16;    // L
  int width_dim = 25;       // width embedding size
  int context_window = 300; // W_NER
  TrainOptions train{50, 16, 2e-3, 1.0};
};

struct RelationConfig {
  Variant variant = Variant::kC;
  int context_window = 100;  // W_RE
  int hidden_dim = 0;        // 0 means the encoder width
  TrainOptions train{10, 16, 2e-3, 1.0};
};

struct PipelineConfig {
  EncoderConfig encoder;
  NerConfig ner;
  RelationConfig relation;
  LoadOptions load;
};

nlohmann::json ToJson(const EncoderConfig &c);
nlohmann::json ToJson(const NerConfig &c);
nlohmann::json ToJson(const RelationConfig &c);
nlohmann::json ToJson(const PipelineConfig &c);

// Missing keys keep their defaults.
void FromJson(const nlohmann::json &j, EncoderConfig *c);
void FromJson(const nlohmann::json &j, NerConfig *c);
void FromJson(const nlohmann::json &j, RelationConfig *c);
void FromJson(const nlohmann::json &j, PipelineConfig *c);

PipelineConfig LoadPipelineConfig(const std::filesystem::path &path);

}  // namespace chemprot

#endif  // CHEMPROT_CONFIG_H_
