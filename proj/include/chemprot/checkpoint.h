#ifndef CHEMPROT_CHECKPOINT_H_
#define CHEMPROT_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "chemprot/nn.h"

namespace chemprot {

// Binary parameter checkpoint. Layout (all integers little-endian):
//
//   char[8]  magic "CPRTCKPT"
//   u32      format_version
//   u32      dim
//   u32      blocks
//   u64      seed
//   u32      model kind (0 encoder, 1 ner, 2 relation)
//   u32      length of config JSON, then that many UTF-8 bytes
//   u32      tensor count, then per tensor:
//              u32 name length, name bytes, u32 rows, u32 cols,
//              rows*cols IEEE-754 binary64 values in row-major order
//
// See docs/checkpoint_format.md.

constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind : std::uint32_t { kEncoder = 0, kNer = 1, kRelation = 2 };

struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  std::uint32_t dim = 0;
  std::uint32_t blocks = 0;
  std::uint64_t seed = 0;
  ModelKind kind = ModelKind::kEncoder;
  std::string config_json;
  std::vector<std::pair<std::string, Matrix>> tensors;

  void AddParams(std::span<Param *const> params);
  // Copies tensors into params by name; every param must be present with a
  // matching shape.
  void RestoreParams(std::span<Param *const> params) const;
};

void WriteCheckpoint(const Checkpoint &ckpt, const std::filesystem::path &path);
Checkpoint ReadCheckpoint(const std::filesystem::path &path);

}  // namespace chemprot

#endif  // CHEMPROT_CHECKPOINT_H_
