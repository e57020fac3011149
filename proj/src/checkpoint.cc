#include "chemprot/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "chemprot/types.h"

namespace chemprot {
namespace {

constexpr char kMagic[8] = {'C', 'P', 'R', 'T', 'C', 'K', 'P', 'T'};

template <typename T>
void PutLe(std::ostream &out, T value) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  }
  out.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <typename T>
T GetLe(std::istream &in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char *>(bytes), sizeof(T))) {
    throw Error("checkpoint truncated");
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

void PutString(std::ostream &out, const std::string &s) {
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string GetString(std::istream &in) {
  const auto n = GetLe<std::uint32_t>(in);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw Error("checkpoint truncated");
  return s;
}

}  // namespace

void Checkpoint::AddParams(std::span<Param *const> params) {
  for (const Param *p : params) tensors.emplace_back(p->name, p->value);
}

void Checkpoint::RestoreParams(std::span<Param *const> params) const {
  std::map<std::string_view, const Matrix *> by_name;
  for (const auto &[name, m] : tensors) by_name.emplace(name, &m);
  for (Param *p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw Error("checkpoint has no tensor " + p->name);
    const Matrix &m = *it->second;
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw Error("checkpoint tensor " + p->name + " has shape " + std::to_string(m.rows()) +
                  "x" + std::to_string(m.cols()) + ", expected " +
                  std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
    }
    p->value = m;
  }
}

void WriteCheckpoint(const Checkpoint &ckpt, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  PutLe<std::uint32_t>(out, ckpt.format_version);
  PutLe<std::uint32_t>(out, ckpt.dim);
  PutLe<std::uint32_t>(out, ckpt.blocks);
  PutLe<std::uint64_t>(out, ckpt.seed);
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.kind));
  PutString(out, ckpt.config_json);
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto &[name, m] : ckpt.tensors) {
    PutString(out, name);
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      PutLe<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m.data()[i]));
    }
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint ReadCheckpoint(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(path.string() + " is not a checkpoint");
  }
  Checkpoint ckpt;
  ckpt.format_version = GetLe<std::uint32_t>(in);
  if (ckpt.format_version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(ckpt.format_version));
  }
  ckpt.dim = GetLe<std::uint32_t>(in);
  ckpt.blocks = GetLe<std::uint32_t>(in);
  ckpt.seed = GetLe<std::uint64_t>(in);
  const auto kind = GetLe<std::uint32_t>(in);
  if (kind > 2) throw Error("unknown model kind in checkpoint");
  ckpt.kind = static_cast<ModelKind>(kind);
  ckpt.config_json = GetString(in);
  const auto count = GetLe<std::uint32_t>(in);
  for (std::uint32_t t = 0; t < count; ++t) {
    std::string name = GetString(in);
    const auto rows = GetLe<std::uint32_t>(in);
    const auto cols = GetLe<std::uint32_t>(in);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = std::bit_cast<double>(GetLe<std::uint64_t>(in));
    }
    ckpt.tensors.emplace_back(std::move(name), std::move(m));
  }
  return ckpt;
}

}  // namespace chemprot
