// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latentrec/latentrec.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "common/error.hpp"
#include "corpus/dataset.hpp"
#include "model/checkpoint.hpp"
#include "run/commands.hpp"
#include "run/run_config.hpp"

struct lrec_config {
  latentrec::RunConfig config;
};

struct lrec_dataset {
  latentrec::Dataset data;
  latentrec::TitleTrie trie;
};

struct lrec_checkpoint {
  latentrec::Checkpoint checkpoint;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_result;

lrec_status code_of(latentrec::ErrorKind kind) {
  using latentrec::ErrorKind;
  switch (kind) {
    case ErrorKind::kInvalidArgument: return LREC_ERR_INVALID_ARGUMENT;
    case ErrorKind::kIo: return LREC_ERR_IO;
    case ErrorKind::kFormat: return LREC_ERR_FORMAT;
    case ErrorKind::kConfig: return LREC_ERR_CONFIG;
    case ErrorKind::kNumeric: return LREC_ERR_NUMERIC;
    case ErrorKind::kState: return LREC_ERR_STATE;
  }
  return LREC_ERR_INTERNAL;
}

template <typename F>
lrec_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LREC_OK;
  } catch (const latentrec::Error& e) {
    g_last_error = e.what();
    return code_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "[internal] out of memory";
    return LREC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = std::string("[internal] ") + e.what();
    return LREC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "[internal] unknown exception";
    return LREC_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw latentrec::Error(latentrec::ErrorKind::kInvalidArgument, "capi", what);
}

void copy_out(const std::string& s, char* buf, size_t cap, size_t* len) {
  if (len) *len = s.size();
  if (buf == nullptr) return;
  require(cap > s.size(), "output buffer too small");
  std::memcpy(buf, s.data(), s.size());
  buf[s.size()] = '\0';
}

template <typename F>
lrec_status command(F&& fn) {
  return guarded([&] { g_last_result = fn().dump(); });
}

}  // namespace

extern "C" {

const char* lrec_version(void) { return "0.1.0"; }

const char* lrec_status_name(lrec_status status) {
  switch (status) {
    case LREC_OK: return "ok";
    case LREC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case LREC_ERR_IO: return "io";
    case LREC_ERR_FORMAT: return "format";
    case LREC_ERR_CONFIG: return "config";
    case LREC_ERR_NUMERIC: return "numeric";
    case LREC_ERR_STATE: return "state";
    case LREC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* lrec_last_error(void) { return g_last_error.c_str(); }
const char* lrec_last_result(void) { return g_last_result.c_str(); }

lrec_status lrec_config_new(lrec_config** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = new lrec_config();
  });
}

void lrec_config_free(lrec_config* config) { delete config; }

lrec_status lrec_config_set(lrec_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "null argument");
    config->config.set(key, value);
  });
}

lrec_status lrec_config_get(const lrec_config* config, const char* key, char* buf, size_t cap,
                            size_t* len) {
  return guarded([&] {
    require(config && key, "null argument");
    copy_out(config->config.get(key), buf, cap, len);
  });
}

lrec_status lrec_config_load_file(lrec_config* config, const char* path) {
  return guarded([&] {
    require(config && path, "null argument");
    config->config.load_file(path);
  });
}

lrec_status lrec_config_canonical(const lrec_config* config, char* buf, size_t cap, size_t* len) {
  return guarded([&] {
    require(config != nullptr, "null config");
    copy_out(config->config.canonical(), buf, cap, len);
  });
}

lrec_status lrec_config_hash(const lrec_config* config, char* buf, size_t cap, size_t* len) {
  return guarded([&] {
    require(config != nullptr, "null config");
    copy_out(config->config.hash(), buf, cap, len);
  });
}

size_t lrec_config_key_count(void) { return latentrec::RunConfig::keys().size(); }

const char* lrec_config_key_name(size_t i) {
  const auto& keys = latentrec::RunConfig::keys();
  return i < keys.size() ? keys[i].name.c_str() : nullptr;
}

const char* lrec_config_key_help(size_t i) {
  const auto& keys = latentrec::RunConfig::keys();
  return i < keys.size() ? keys[i].help.c_str() : nullptr;
}

lrec_status lrec_cmd_synth_data(const lrec_config* config, const char* out_dir) {
  return command([&] {
    require(config && out_dir, "null argument");
    return latentrec::cmd_synth_data(config->config, out_dir);
  });
}

lrec_status lrec_cmd_prepare_data(const lrec_config* config, const char* tsv_path,
                                  const char* out_dir) {
  return command([&] {
    require(config && tsv_path && out_dir, "null argument");
    return latentrec::cmd_prepare_data(config->config, tsv_path, out_dir);
  });
}

lrec_status lrec_cmd_sft(const lrec_config* config, const char* data_dir, const char* run_dir) {
  return command([&] {
    require(config && data_dir && run_dir, "null argument");
    return latentrec::cmd_sft(config->config, data_dir, run_dir);
  });
}

lrec_status lrec_cmd_rl(const lrec_config* config, const char* data_dir, const char* checkpoint,
                        const char* run_dir) {
  return command([&] {
    require(config && data_dir && checkpoint && run_dir, "null argument");
    return latentrec::cmd_rl(config->config, data_dir, checkpoint, run_dir);
  });
}

lrec_status lrec_cmd_eval(const lrec_config* config, const char* data_dir, const char* checkpoint,
                          const char* out_path) {
  return command([&] {
    require(config && data_dir && checkpoint && out_path, "null argument");
    return latentrec::cmd_eval(config->config, data_dir, checkpoint, out_path);
  });
}

lrec_status lrec_cmd_ablate(const lrec_config* config, const char* data_dir, const char* run_dir) {
  return command([&] {
    require(config && data_dir && run_dir, "null argument");
    return latentrec::cmd_ablate(config->config, data_dir, run_dir);
  });
}

lrec_status lrec_cmd_sweep_length(const lrec_config* config, const char* data_dir,
                                  const char* run_dir) {
  return command([&] {
    require(config && data_dir && run_dir, "null argument");
    return latentrec::cmd_sweep_length(config->config, data_dir, run_dir);
  });
}

lrec_status lrec_cmd_bench_reward(const lrec_config* config, const char* data_dir,
                                  const char* checkpoint, const char* run_dir) {
  return command([&] {
    require(config && data_dir && checkpoint && run_dir, "null argument");
    return latentrec::cmd_bench_reward(config->config, data_dir, checkpoint, run_dir);
  });
}

lrec_status lrec_dataset_load(const char* dir, lrec_dataset** out) {
  return guarded([&] {
    require(dir && out, "null argument");
    auto* ds = new lrec_dataset{latentrec::load_dataset(dir), {}};
    ds->trie = latentrec::TitleTrie::build(ds->data.catalog.title_tokens);
    *out = ds;
  });
}

void lrec_dataset_free(lrec_dataset* dataset) { delete dataset; }

lrec_status lrec_dataset_split_size(const lrec_dataset* dataset, const char* split, size_t* out) {
  return guarded([&] {
    require(dataset && split && out, "null argument");
    *out = dataset->data.prompts(split).size();
  });
}

lrec_status lrec_dataset_catalog_size(const lrec_dataset* dataset, size_t* out) {
  return guarded([&] {
    require(dataset && out, "null argument");
    *out = static_cast<size_t>(dataset->data.catalog.size());
  });
}

lrec_status lrec_dataset_item_id(const lrec_dataset* dataset, size_t index, char* buf, size_t cap,
                                 size_t* len) {
  return guarded([&] {
    require(dataset != nullptr, "null dataset");
    require(index < dataset->data.catalog.item_ids.size(), "item index out of range");
    copy_out(dataset->data.catalog.item_ids[index], buf, cap, len);
  });
}

lrec_status lrec_checkpoint_load(const char* path, lrec_checkpoint** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new lrec_checkpoint{latentrec::load_checkpoint(path)};
  });
}

void lrec_checkpoint_free(lrec_checkpoint* checkpoint) { delete checkpoint; }

lrec_status lrec_checkpoint_hash(const lrec_checkpoint* checkpoint, uint64_t* out) {
  return guarded([&] {
    require(checkpoint && out, "null argument");
    *out = checkpoint->checkpoint.hash();
  });
}

lrec_status lrec_checkpoint_group_hash(const lrec_checkpoint* checkpoint, lrec_param_group group,
                                       uint64_t* out) {
  return guarded([&] {
    require(checkpoint && out, "null argument");
    require(group == LREC_GROUP_BASE || group == LREC_GROUP_LATENT, "unknown parameter group");
    *out = checkpoint->checkpoint.model.group_hash(group == LREC_GROUP_BASE
                                                       ? latentrec::ParamGroup::kBase
                                                       : latentrec::ParamGroup::kLatent);
  });
}

lrec_status lrec_checkpoint_meta(const lrec_checkpoint* checkpoint, const char* key, char* buf,
                                 size_t cap, size_t* len) {
  return guarded([&] {
    require(checkpoint && key, "null argument");
    copy_out(checkpoint->checkpoint.meta(key), buf, cap, len);
  });
}

lrec_status lrec_rank(const lrec_checkpoint* checkpoint, const lrec_dataset* dataset,
                      const char* split, size_t sample, int32_t* items, size_t cap, size_t* count) {
  return guarded([&] {
    require(checkpoint && dataset && split && count, "null argument");
    const auto& model = checkpoint->checkpoint.model;
    require(model.config().vocab_size == dataset->data.vocab.size(),
            "checkpoint vocabulary differs from the dataset");
    const auto& prompts = dataset->data.prompts(split);
    require(sample < prompts.size(), "sample index out of range");
    const size_t n = static_cast<size_t>(dataset->data.catalog.size());
    *count = n;
    if (items == nullptr) return;
    require(cap >= n, "output buffer too small");
    const std::span<const int> x(prompts[sample].x);
    const auto r = latentrec::generate_latent(model, x);
    const auto ranked = latentrec::rank_catalog(model, x, r, dataset->trie);
    for (size_t i = 0; i < n; ++i) items[i] = ranked[i];
  });
}

}  // extern "C"
