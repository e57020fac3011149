#include "chemprot/config.h"

#include <fstream>

namespace chemprot {

using nlohmann::json;

std::string ToString(Variant v) {
  static constexpr const char *kNames[] = {"A", "B", "C", "D", "E", "F"};
  return kNames[static_cast<int>(v)];
}

Variant ParseVariant(std::string_view s) {
  if (s.starts_with("r_")) s.remove_prefix(2);
  if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'F') return static_cast<Variant>(s[0] - 'A');
  throw Error("unknown relation representation variant '" + std::string(s) + "'");
}

namespace {

json TrainToJson(const TrainOptions &t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"clip_norm", t.clip_norm}};
}

void TrainFromJson(const json &j, TrainOptions *t) {
  t->epochs = j.value("epochs", t->epochs);
  t->batch_size = j.value("batch_size", t->batch_size);
  t->learning_rate = j.value("learning_rate", t->learning_rate);
  t->clip_norm = j.value("clip_norm", t->clip_norm);
  if (t->epochs < 0 || t->batch_size <= 0 || !(t->learning_rate > 0)) {
    throw Error("invalid training options: " + j.dump());
  }
}

}  // namespace

json ToJson(const EncoderConfig &c) {
  return {{"dim", c.dim},         {"blocks", c.blocks}, {"max_len", c.max_len},
          {"buckets", c.buckets}, {"ff_dim", c.ff_dim}, {"seed", c.seed}};
}

json ToJson(const NerConfig &c) {
  return {{"max_span_len", c.max_span_len},
          {"width_dim", c.width_dim},
          {"context_window", c.context_window},
          {"train", TrainToJson(c.train)}};
}

json ToJson(const RelationConfig &c) {
  return {{"variant", ToString(c.variant)},
          {"context_window", c.context_window},
          {"hidden_dim", c.hidden_dim},
          {"train", TrainToJson(c.train)}};
}

json ToJson(const PipelineConfig &c) {
  json aliases = json::object();
  for (const auto &[name, type] : c.load.type_aliases) aliases[name] = std::string(ToString(type));
  return {{"encoder", ToJson(c.encoder)},
          {"ner", ToJson(c.ner)},
          {"relation", ToJson(c.relation)},
          {"type_aliases", aliases}};
}

void FromJson(const json &j, EncoderConfig *c) {
  c->dim = j.value("dim", c->dim);
  c->blocks = j.value("blocks", c->blocks);
  c->max_len = j.value("max_len", c->max_len);
  c->buckets = j.value("buckets", c->buckets);
  c->ff_dim = j.value("ff_dim", c->ff_dim);
  c->seed = j.value("seed", c->seed);
}

void FromJson(const json &j, NerConfig *c) {
  c->max_span_len = j.value("max_span_len", c->max_span_len);
  c->width_dim = j.value("width_dim", c->width_dim);
  c->context_window = j.value("context_window", c->context_window);
  if (j.contains("train")) TrainFromJson(j["train"], &c->train);
  if (c->max_span_len < 1 || c->width_dim < 1 || c->context_window < 0) {
    throw Error("invalid ner config: " + j.dump());
  }
}

void FromJson(const json &j, RelationConfig *c) {
  if (j.contains("variant")) c->variant = ParseVariant(j["variant"].get<std::string>());
  c->context_window = j.value("context_window", c->context_window);
  c->hidden_dim = j.value("hidden_dim", c->hidden_dim);
  if (j.contains("train")) TrainFromJson(j["train"], &c->train);
  if (c->context_window < 0 || c->hidden_dim < 0) {
    throw Error("invalid relation config: " + j.dump());
  }
}

void FromJson(const json &j, PipelineConfig *c) {
  if (j.contains("encoder")) FromJson(j["encoder"], &c->encoder);
  if (j.contains("ner")) FromJson(j["ner"], &c->ner);
  if (j.contains("relation")) FromJson(j["relation"], &c->relation);
  if (j.contains("type_aliases")) {
    c->load.type_aliases.clear();
    for (const auto &[name, type] : j["type_aliases"].items()) {
      auto parsed = ParseEntityType(type.get<std::string>());
      if (!parsed) throw Error("type alias " + name + " maps to unknown type");
      c->load.type_aliases.emplace(name, *parsed);
    }
  }
}

PipelineConfig LoadPipelineConfig(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  PipelineConfig config;
  try {
    FromJson(json::parse(in), &config);
  } catch (const json::exception &e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  return config;
}

}  // namespace chemprot
