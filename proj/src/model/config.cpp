// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "model/config.hpp"

#include <map>
#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"

namespace latentrec {

const char* to_string(LatentMode mode) {
  return mode == LatentMode::kAttention ? "attention" : "last_hidden";
}

LatentMode parse_latent_mode(const std::string& text) {
  if (text == "attention") return LatentMode::kAttention;
  if (text == "last_hidden") return LatentMode::kLastHidden;
  throw Error(ErrorKind::kConfig, "config", "unknown latent_mode '" + text + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kConfig, "model", msg); };
  if (d_model <= 0 || n_layers <= 0 || n_heads <= 0) fail("dimensions must be positive");
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (vocab_size < 5) fail("vocab_size must cover the special tokens");
  if (max_seq_len <= 0) fail("max_seq_len must be positive");
  if (latent_len < 0) fail("latent_len must be >= 0");
}

std::string ModelConfig::canonical() const {
  std::ostringstream out;
  out << "d_model=" << d_model << "\n"
      << "latent_len=" << latent_len << "\n"
      << "latent_mode=" << to_string(latent_mode) << "\n"
      << "latent_residual=" << (latent_residual ? 1 : 0) << "\n"
      << "max_seq_len=" << max_seq_len << "\n"
      << "n_heads=" << n_heads << "\n"
      << "n_layers=" << n_layers << "\n"
      << "vocab_size=" << vocab_size << "\n";
  return out.str();
}

std::uint64_t ModelConfig::hash() const { return fnv1a(canonical()); }

ModelConfig ModelConfig::parse(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kFormat, "model", "malformed config line '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto take = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorKind::kFormat, "model", std::string("missing ") + key);
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  ModelConfig c;
  try {
    c.d_model = std::stoi(take("d_model"));
    c.latent_len = std::stoi(take("latent_len"));
    c.latent_mode = parse_latent_mode(take("latent_mode"));
    c.latent_residual = std::stoi(take("latent_residual")) != 0;
    c.max_seq_len = std::stoi(take("max_seq_len"));
    c.n_heads = std::stoi(take("n_heads"));
    c.n_layers = std::stoi(take("n_layers"));
    c.vocab_size = std::stoi(take("vocab_size"));
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::kFormat, "model", "non-numeric model config value");
  }
  if (!kv.empty()) {
    throw Error(ErrorKind::kFormat, "model", "unknown model config key '" + kv.begin()->first + "'");
  }
  c.validate();
  return c;
}

}  // namespace latentrec
