// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"

namespace latentrec {

namespace {

constexpr char kMagic[8] = {'L', 'R', '3', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  void need(std::size_t n) {
    if (pos_ + n > in_.size()) throw Error(ErrorKind::kFormat, "checkpoint", "truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return raw(u32()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

std::string metadata_text(const std::map<std::string, std::string>& meta) {
  std::string out;
  for (const auto& [k, v] : meta) {
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
        v.find('\n') != std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument, "checkpoint", "bad metadata entry '" + k + "'");
    }
    out += k + "=" + v + "\n";
  }
  return out;
}

}  // namespace

std::string Checkpoint::serialize() const {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  const auto& params = model.params();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    w.u32(p.group == ParamGroup::kBase ? 0 : 1);
    w.u32(2);
    w.u32(static_cast<std::uint32_t>(p.value.rows));
    w.u32(static_cast<std::uint32_t>(p.value.cols));
    for (float v : p.value.data) w.f32(v);
  }
  const std::string config_text = model.config().canonical();
  w.str(config_text);
  w.str(metadata_text(metadata));
  w.str(rng_state);
  w.u64(fnv1a(config_text));
  return w.take();
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw Error(ErrorKind::kFormat, "checkpoint", "bad magic header");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw Error(ErrorKind::kFormat, "checkpoint", "unsupported version " + std::to_string(version));
  }
  struct Stored {
    std::string name;
    std::uint32_t group;
    std::uint32_t rows, cols;
    std::vector<float> data;
  };
  std::vector<Stored> stored(r.u32());
  for (auto& s : stored) {
    s.name = r.str();
    s.group = r.u32();
    const std::uint32_t ndim = r.u32();
    if (ndim != 2) throw Error(ErrorKind::kFormat, "checkpoint", "expected 2-d array " + s.name);
    s.rows = r.u32();
    s.cols = r.u32();
    r.need(std::size_t(s.rows) * s.cols * 4);
    s.data.resize(std::size_t(s.rows) * s.cols);
    for (float& v : s.data) v = r.f32();
  }
  const std::string config_text = r.str();
  const std::string meta_text = r.str();
  Checkpoint ckpt;
  ckpt.rng_state = r.str();
  const std::uint64_t stored_hash = r.u64();
  if (!r.done()) throw Error(ErrorKind::kFormat, "checkpoint", "trailing bytes");
  if (stored_hash != fnv1a(config_text)) {
    throw Error(ErrorKind::kFormat, "checkpoint", "config hash mismatch: stored " +
                                                      hex64(stored_hash) + ", computed " +
                                                      hex64(fnv1a(config_text)));
  }
  const ModelConfig config = ModelConfig::parse(config_text);
  ckpt.model = Model<float>::zeros(config);
  auto& params = ckpt.model.params();
  if (params.size() != stored.size()) {
    throw Error(ErrorKind::kFormat, "checkpoint", "parameter count differs from config");
  }
  for (std::size_t i = 0; i < stored.size(); ++i) {
    auto& p = params[i];
    const auto& s = stored[i];
    const std::uint32_t group = p.group == ParamGroup::kBase ? 0 : 1;
    if (s.name != p.name || s.group != group || int(s.rows) != p.value.rows ||
        int(s.cols) != p.value.cols) {
      throw Error(ErrorKind::kFormat, "checkpoint", "parameter '" + s.name + "' does not match config");
    }
    p.value.data = s.data;
  }
  std::istringstream in(meta_text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::kFormat, "checkpoint", "bad metadata line");
    ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return ckpt;
}

std::uint64_t Checkpoint::hash() const { return fnv1a(serialize()); }

std::string Checkpoint::meta(const std::string& key) const {
  auto it = metadata.find(key);
  return it == metadata.end() ? std::string() : it->second;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  const std::string bytes = checkpoint.serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "checkpoint", "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "checkpoint", "write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "checkpoint", "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return Checkpoint::deserialize(buf.str());
}

Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.model.config().hash() != expected.hash()) {
    throw Error(ErrorKind::kConfig, "checkpoint",
                "model config hash mismatch: checkpoint " + hex64(ckpt.model.config().hash()) +
                    ", expected " + hex64(expected.hash()));
  }
  return ckpt;
}

}  // namespace latentrec
