// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance --config configs/fixture.conf --criteria 1,2,3 [--seeds 1,2,3]
//              [--out results.txt] [--report-only]
//
// The exit status is the number of failed criteria, or 0 with --report-only.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "common/hash.hpp"
#include "common/rng.hpp"
#include "common/tokens.hpp"
#include "corpus/dataset.hpp"
#include "eval/evaluate.hpp"
#include "eval/experiments.hpp"
#include "model/checkpoint.hpp"
#include "run/commands.hpp"
#include "run/run_config.hpp"
#include "train/rl.hpp"
#include "train/sft.hpp"

using namespace latentrec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Tiny models for the property criteria
// ---------------------------------------------------------------------------

ModelConfig tiny_config(int latent_len) {
  ModelConfig c;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.vocab_size = 20;
  c.max_seq_len = 40;
  c.latent_len = latent_len;
  return c;
}

template <typename T>
Model<T> noisy(const ModelConfig& c, std::uint64_t seed, double scale = 0.3) {
  Model<T> m = Model<T>::initialize(c, seed);
  Rng rng(seed + 7);
  for (auto& p : m.params())
    for (T& v : p.value.data) v += T(rng.normal() * scale);
  return m;
}

std::vector<PromptSample> toy_samples(int n, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PromptSample> out(n);
  for (auto& s : out) {
    s.x.push_back(tokens::kBos);
    for (int j = 0; j < 5; ++j) s.x.push_back(tokens::kNumSpecial + int(rng.below(vocab - tokens::kNumSpecial)));
    for (int j = 0; j < 2; ++j) s.y.push_back(tokens::kNumSpecial + int(rng.below(vocab - tokens::kNumSpecial)));
    s.y.push_back(tokens::kEos);
  }
  return out;
}

// Largest per-array relative error between analytic and central-difference
// gradients over the arrays selected by `use`.
double fd_max_error(Model<double>& m, const Gradients<double>& analytic,
                    const std::function<double(const Model<double>&)>& loss,
                    const std::function<bool(const Parameter<double>&)>& use) {
  const double h = 1e-5;
  double worst = 0;
  for (std::size_t pi = 0; pi < m.params().size(); ++pi) {
    auto& p = m.params()[pi];
    if (!use(p)) continue;
    double diff2 = 0, num2 = 0, ana2 = 0;
    for (std::size_t j = 0; j < p.value.data.size(); ++j) {
      double& v = p.value.data[j];
      const double keep = v;
      v = keep + h;
      const double up = loss(m);
      v = keep - h;
      const double down = loss(m);
      v = keep;
      const double num = (up - down) / (2 * h);
      const double ana = analytic.grads[pi].data[j];
      diff2 += (num - ana) * (num - ana);
      num2 += num * num;
      ana2 += ana * ana;
    }
    // Arrays whose true gradient vanishes (key biases under softmax) carry no signal.
    if (std::max(num2, ana2) < 1e-14) continue;
    worst = std::max(worst, std::sqrt(diff2) / std::max(std::sqrt(num2), std::sqrt(ana2)));
  }
  return worst;
}

Verdict criterion_gradients() {
  const auto t0 = Clock::now();
  const auto c = tiny_config(2);
  auto m = noisy<double>(c, 4);
  const auto batch = toy_samples(2, c.vocab_size, 5);
  const auto sg = sft_gradient(m, std::span<const PromptSample>(batch));
  const double sft_err = fd_max_error(
      m, sg.grads, [&](const Model<double>& mm) { return sft_loss(mm, std::span<const PromptSample>(batch)); },
      [](const Parameter<double>&) { return true; });

  RLConfig rl;
  rl.group_size = 4;
  rl.sigma = 0.2;
  rl.beta = 0.1;
  Rng rng(1);
  const auto groups = build_groups(m, std::span<const PromptSample>(batch), rl, rng, &m);
  // Evaluate away from the sampling point so the ratios differ from one.
  Rng jitter(9);
  for (auto& p : m.params())
    if (p.group == ParamGroup::kLatent)
      for (double& v : p.value.data) v += 0.05 * jitter.normal();
  const auto gg = grpo_gradient(m, std::span<const SampleGroup<double>>(groups), rl);
  const double grpo_err = fd_max_error(
      m, gg.grads,
      [&](const Model<double>& mm) { return grpo_loss(mm, std::span<const SampleGroup<double>>(groups), rl); },
      [](const Parameter<double>& p) { return p.group == ParamGroup::kLatent; });
  const double secs = seconds_since(t0);
  return {sft_err < 1e-4 && grpo_err < 1e-4 && secs < 120,
          "sft_rel=" + fmt("%.2e", sft_err) + " grpo_rel=" + fmt("%.2e", grpo_err) + " time=" + fmt("%.1fs", secs)};
}

Verdict criterion_rewards() {
  const auto c = tiny_config(1);
  auto m = noisy<double>(c, 5);
  const std::vector<int> x = {1, 5, 6};
  const std::vector<int> y = {7, 7};
  const auto r = generate_latent(m, std::span<const int>(x));
  auto head = [&](double target_logit) {
    m.p(m.layout().head_w).fill(0);
    m.p(m.layout().head_b).fill(0);
    m.p(m.layout().head_b)(0, 7) = target_logit;
    return reward_ppl(m, std::span<const int>(x), r, std::span<const int>(y));
  };
  const double one = head(200);
  const double half = head(std::log(double(c.vocab_size - 1)));
  const double mixed = reward_from_logprobs(std::vector<double>{0.0, std::log(0.25)});
  bool exact = std::abs(one + 1) < 1e-9 && std::abs(half + 2) < 1e-9 && std::abs(mixed + 2) < 1e-9;

  Rng rng(11);
  int monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> lp(1 + rng.below(6));
    for (double& v : lp) v = std::log(0.01 + 0.98 * rng.uniform());
    const double before = reward_from_logprobs(lp);
    const std::size_t i = rng.below(lp.size());
    const double p = std::exp(lp[i]);
    lp[i] = std::log(p + (1 - p) * (0.01 + 0.98 * rng.uniform()));
    monotone += reward_from_logprobs(lp) > before;
  }
  return {exact && monotone == 100, "s(p=1)=" + fmt("%.12f", one) + " s(p=.5,.5)=" + fmt("%.12f", half) +
                                        " s(1,.25)=" + fmt("%.12f", mixed) +
                                        " monotone=" + std::to_string(monotone) + "/100"};
}

Verdict criterion_advantages() {
  Rng rng(21);
  double worst_center = 0, worst_shift = 0, worst_scale = 0, worst_group = 0;
  bool zero_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> rw(1 + rng.below(8), std::vector<double>(1 + 1 + rng.below(8)));
    const std::size_t k = rw[0].size();
    for (auto& g : rw) {
      g.resize(k);
      for (double& v : g) v = -1 - 5 * rng.uniform();
    }
    const auto a = advantage_batch(rw, batch_baseline(rw), 1e-8);
    double s0 = 0;
    for (const auto& g : a) s0 += g[0];
    worst_center = std::max(worst_center, std::abs(s0 / double(a.size())));
    auto shifted = rw, scaled = rw;
    const double c = 20 * rng.uniform() - 10, lambda = 0.05 + 10 * rng.uniform();
    for (auto& g : shifted)
      for (double& v : g) v += c;
    for (auto& g : scaled)
      for (double& v : g) v *= lambda;
    const auto as = advantage_batch(shifted, batch_baseline(shifted), 1e-8);
    const auto al = advantage_batch(scaled, batch_baseline(scaled), 1e-8);
    for (std::size_t g = 0; g < rw.size(); ++g) {
      for (std::size_t j = 0; j < k; ++j) {
        worst_shift = std::max(worst_shift, std::abs(as[g][j] - a[g][j]));
        worst_scale = std::max(worst_scale, std::abs(al[g][j] - a[g][j]));
      }
      const auto ag = advantage_group(rw[g], 1e-8);
      worst_group = std::max(worst_group, std::abs(std::accumulate(ag.begin(), ag.end(), 0.0)));
    }
    auto flat = rw;
    for (auto& g : flat) std::fill(g.begin(), g.end(), -2.5);
    for (const auto& g : advantage_batch(flat, batch_baseline(flat), 1e-8))
      for (double v : g) zero_ok = zero_ok && v == 0;
    for (double v : advantage_group(flat[0], 1e-8)) zero_ok = zero_ok && v == 0;
  }
  // Sample-0 centering is exact up to the rounding of one mean.
  const bool pass = worst_center < 1e-12 && worst_shift < 1e-9 && worst_scale < 1e-9 && worst_group < 1e-9 && zero_ok;
  return {pass, "sample0_mean=" + fmt("%.1e", worst_center) + " shift=" + fmt("%.1e", worst_shift) +
                    " scale=" + fmt("%.1e", worst_scale) + " group_sum=" + fmt("%.1e", worst_group) +
                    " equal_rewards_zero=" + (zero_ok ? "yes" : "no")};
}

Verdict criterion_metric_oracle() {
  SynthConfig sc;
  sc.num_users = 800;
  sc.num_items = 100;
  sc.num_categories = 10;
  sc.seed = 4;
  DataConfig dc;
  dc.min_items = 50;
  const Dataset d = prepare_dataset(synth_generate(sc), dc, "oracle");
  if (d.catalog.size() != 100 || d.test.size() < 50) return {false, "fixture shape"};
  const std::vector<PromptSample> split(d.test.begin(), d.test.begin() + 50);
  ModelConfig c = tiny_config(2);
  c.vocab_size = d.vocab.size();
  c.max_seq_len = 128;
  const auto m = noisy<float>(c, 3);

  // Raw score matrix, then ranks by brute-force counting.
  std::vector<std::vector<float>> scores;
  for (const auto& s : split) {
    const auto r = generate_latent(m, std::span<const int>(s.x));
    std::vector<float> row;
    for (const auto& t : d.catalog.title_tokens) row.push_back(score_item(m, std::span<const int>(s.x), r, std::span<const int>(t)));
    scores.push_back(row);
  }
  double h5 = 0, h10 = 0, n5 = 0, n10 = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const int t = d.catalog.index_of(split[i].target_item_id);
    int rank = 1;
    for (int j = 0; j < d.catalog.size(); ++j)
      rank += scores[i][j] > scores[i][t] || (scores[i][j] == scores[i][t] && j < t);
    h5 += rank <= 5;
    h10 += rank <= 10;
    n5 += rank <= 5 ? 1 / std::log2(rank + 1.0) : 0;
    n10 += rank <= 10 ? 1 / std::log2(rank + 1.0) : 0;
  }
  const double n = double(split.size());
  const auto rep = evaluate(m, split, d.catalog).report.overall;
  const bool same = rep.hr.at(5) == h5 / n && rep.hr.at(10) == h10 / n && rep.ndcg.at(5) == n5 / n &&
                    rep.ndcg.at(10) == n10 / n;
  std::vector<int> ranked(10);
  std::iota(ranked.begin(), ranked.end(), 0);
  const bool bounds = ndcg(ranked, 0, 5) == 1.0 && ndcg(ranked, 2, 5) == 0.5 && ndcg(ranked, 6, 5) == 0.0;
  return {same && bounds, std::string("exact=") + (same ? "yes" : "no") + " ndcg(1,3,7)=" +
                              fmt("%.3g", ndcg(ranked, 0, 5)) + "/" + fmt("%.3g", ndcg(ranked, 2, 5)) + "/" +
                              fmt("%.3g", ndcg(ranked, 6, 5)) + " hr@10=" + fmt("%.3f", rep.hr.at(10))};
}

// ---------------------------------------------------------------------------
// Fixture-backed criteria
// ---------------------------------------------------------------------------

struct Fixture {
  RunConfig config;
  Dataset data;
  Model<float> sft;  // briefly trained, latent length from the config
};

Fixture make_fixture(const RunConfig& base) {
  Fixture f;
  f.config = base;
  f.data = prepare_dataset(synth_generate(base.synth_config()), base.data, base.hash());
  ModelConfig mc = base.model;
  mc.vocab_size = f.data.vocab.size();
  SFTConfig sc = base.sft_config();
  sc.max_epochs = 1;
  f.sft = train_sft(Model<float>::initialize(mc, base.init_seed()), f.data.train, f.data.valid, sc).model;
  return f;
}

Verdict criterion_n0(const Fixture& f) {
  auto c0 = f.sft.config();
  c0.latent_len = 0;
  Model<float> m0 = Model<float>::zeros(c0);
  for (auto& p : m0.params()) p.value = f.sft.p(f.sft.find(p.name));
  EvalOptions base;
  base.use_latent = false;
  const auto a = evaluate(m0, f.data.test, f.data.catalog).report.to_json().dump();
  const auto b = evaluate(f.sft, f.data.test, f.data.catalog, base).report.to_json().dump();
  return {a == b, "report_hash(N=0)=" + hex64(fnv1a(a)) + " report_hash(base)=" + hex64(fnv1a(b))};
}

Verdict criterion_freeze(const Fixture& f) {
  Model<float> model = f.sft;
  const RLConfig rc = f.config.rl_config();
  AdamW<float> opt(AdamWConfig{rc.learning_rate, 0.9, 0.999, 1e-8, rc.weight_decay});
  Rng rng(rc.seed);
  const auto& train = f.data.train;
  for (int step = 0; step < 100; ++step) {
    std::vector<PromptSample> batch;
    for (int j = 0; j < rc.batch_size; ++j) batch.push_back(train[(step * rc.batch_size + j) % train.size()]);
    rl_train_step(model, opt, std::span<const PromptSample>(batch), rc, rng);
  }
  int base_changed = 0, latent_changed = 0, latent_total = 0;
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    const bool same = model.params()[i].value.data == f.sft.params()[i].value.data;
    if (model.params()[i].group == ParamGroup::kBase) {
      base_changed += !same;
    } else {
      ++latent_total;
      latent_changed += !same;
    }
  }
  const bool hash_ok = model.group_hash(ParamGroup::kBase) == f.sft.group_hash(ParamGroup::kBase);
  return {hash_ok && base_changed == 0 && latent_changed > 0,
          "base_hash=" + hex64(model.group_hash(ParamGroup::kBase)) + " base_arrays_changed=" +
              std::to_string(base_changed) + " latent_arrays_changed=" + std::to_string(latent_changed) + "/" +
              std::to_string(latent_total)};
}

Verdict criterion_efficiency(const Fixture& f) {
  RLConfig rc = f.config.rl_config();
  rc.max_answer_len = 16;
  const std::size_t n = std::min<std::size_t>(f.data.train.size(), std::size_t(f.config.bench_batch));
  const std::vector<PromptSample> batch(f.data.train.begin(), f.data.train.begin() + n);
  std::vector<double> ratios;
  long ppl_calls = 0, em_calls = 0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto b = efficiency_bench(f.sft, batch, rc);
    ratios.push_back(b.ratio);
    ppl_calls += b.ppl_generation_calls;
    em_calls += b.exact_match_generation_calls;
  }
  std::sort(ratios.begin(), ratios.end());
  return {ratios[1] >= 2.0 && ppl_calls == 0,
          "median_ratio=" + fmt("%.2f", ratios[1]) + " ppl_generation_calls=" + std::to_string(ppl_calls) +
              " exact_match_generation_calls=" + std::to_string(em_calls)};
}

Verdict criterion_determinism(const RunConfig& base) {
  RunConfig c = base;
  c.set("sft_max_epochs", "1");
  c.set("rl_steps_per_epoch", "20");
  c.set("rl_max_epochs", "1");
  const auto root = (std::filesystem::temp_directory_path() / "latentrec_acceptance_det").string();
  std::filesystem::remove_all(root);
  std::vector<std::string> parts;
  bool ok = true;
  auto same_file = [&](const std::string& a, const std::string& b, const std::string& what) {
    const bool eq = slurp(a) == slurp(b) && !slurp(a).empty();
    ok = ok && eq;
    parts.push_back(what + (eq ? "=same" : "=DIFF"));
  };
  for (const char* run : {"a", "b"}) {
    const std::string r = root + "/" + run;
    cmd_synth_data(c, r + "/data");
    cmd_sft(c, r + "/data", r + "/sft");
    cmd_rl(c, r + "/data", r + "/sft/sft.ckpt", r + "/rl");
    cmd_eval(c, r + "/data", r + "/rl/rl.ckpt", r + "/report.json");
  }
  RunConfig threaded = c;
  threaded.set("threads", "2");
  cmd_eval(threaded, root + "/a/data", root + "/a/rl/rl.ckpt", root + "/a/report_t2.json");
  same_file(root + "/a/data/manifest.json", root + "/b/data/manifest.json", "manifest");
  same_file(root + "/a/sft/sft.ckpt", root + "/b/sft/sft.ckpt", "sft_ckpt");
  same_file(root + "/a/rl/rl.ckpt", root + "/b/rl/rl.ckpt", "rl_ckpt");
  same_file(root + "/a/report.json", root + "/b/report.json", "report");
  same_file(root + "/a/report.json", root + "/a/report_t2.json", "report_threads2");
  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : " ") + p;
  std::filesystem::remove_all(root);
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// Directional criteria over seeds
// ---------------------------------------------------------------------------

struct SeedRun {
  std::map<std::string, MetricReport> rows;
  std::vector<double> valid_curve;  // epoch-0 value, then per-step values
};

SeedRun run_seed(const RunConfig& base, std::uint64_t seed, std::FILE* log) {
  RunConfig c = base;
  c.set("seed", std::to_string(seed));
  const Dataset data = prepare_dataset(synth_generate(c.synth_config()), c.data, c.hash());
  SeedRun out;
  ExperimentLog xl;
  xl.on_sft_epoch = [&](const std::string& row, const SFTEpochLog& e) {
    std::fprintf(log, "  seed %llu %-20s sft epoch %d valid_loss %.4f (%.1fs)\n", (unsigned long long)seed,
                 row.c_str(), e.epoch, e.valid_loss, e.wall_ms / 1000.0);
    std::fflush(log);
  };
  xl.on_rl_epoch = [&](const std::string& row, const RLEpochLog& e) {
    if (row == "full" && e.epoch == 0) out.valid_curve.insert(out.valid_curve.begin(), e.valid_reward);
    std::fprintf(log, "  seed %llu %-20s rl epoch %d valid_reward %.5f\n", (unsigned long long)seed, row.c_str(),
                 e.epoch, e.valid_reward);
    std::fflush(log);
  };
  xl.on_rl_step = [&](const std::string& row, const RLStepLog& s) {
    if (row == "full" && s.valid_reward && s.step <= 20) out.valid_curve.push_back(*s.valid_reward);
  };
  for (const auto& row : ablation_suite(data, pipeline_config(c), xl)) out.rows[row.name] = row.report;
  return out;
}

double ndcg10(const Metrics& m) { return m.ndcg.at(10); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria runner"};
  std::string config_path = "configs/fixture.conf";
  std::vector<int> criteria;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out_path;
  bool report_only = false;
  app.add_option("--config", config_path, "fixture config")->check(CLI::ExistingFile);
  app.add_option("--criteria", criteria, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--seeds", seeds, "seeds for the directional criteria")->delimiter(',');
  app.add_option("--out", out_path, "also write the verdict lines here");
  app.add_flag("--report-only", report_only, "exit 0 regardless of verdicts");
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty())
    for (int i = 1; i <= 11; ++i) criteria.push_back(i);
  const std::set<int> want(criteria.begin(), criteria.end());

  RunConfig base;
  base.load_file(config_path);

  std::map<int, Verdict> verdicts;
  auto record = [&](int id, Verdict v) {
    std::printf("criterion %d: %s %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    verdicts[id] = std::move(v);
  };

  if (want.count(1)) record(1, criterion_gradients());
  if (want.count(2)) record(2, criterion_rewards());
  if (want.count(3)) record(3, criterion_advantages());
  if (want.count(5)) record(5, criterion_metric_oracle());
  if (want.count(4) || want.count(6) || want.count(9)) {
    const Fixture f = make_fixture(base);
    if (want.count(4)) record(4, criterion_n0(f));
    if (want.count(6)) record(6, criterion_freeze(f));
    if (want.count(9)) record(9, criterion_efficiency(f));
  }
  if (want.count(11)) record(11, criterion_determinism(base));

  if (want.count(7) || want.count(8) || want.count(10)) {
    const auto t0 = Clock::now();
    std::vector<SeedRun> runs;
    for (auto s : seeds) runs.push_back(run_seed(base, s, stderr));
    const double secs = seconds_since(t0);
    const std::vector<std::string> names = {"full", "w/o Reasoning", "w/o LatentRATT", "w/o RL", "w/o Batch Advantage"};
    std::map<std::string, double> avg, pop, unpop;
    for (const auto& name : names) {
      for (const auto& r : runs) {
        const auto& rep = r.rows.at(name);
        avg[name] += ndcg10(rep.overall) / double(runs.size());
        pop[name] += ndcg10(rep.per_bucket.at("popular")) / double(runs.size());
        unpop[name] += ndcg10(rep.per_bucket.at("unpopular")) / double(runs.size());
      }
      std::string per_seed;
      for (const auto& r : runs) per_seed += " " + fmt("%.4f", ndcg10(r.rows.at(name).overall));
      std::printf("  %-20s ndcg@10 mean %.4f (seeds%s) popular %.4f unpopular %.4f\n", name.c_str(), avg[name],
                  per_seed.c_str(), pop[name], unpop[name]);
    }
    const auto gain = relative_improvement(avg["full"], avg["w/o Reasoning"]);
    if (want.count(7)) {
      const bool order = avg["full"] >= avg["w/o RL"] && avg["w/o RL"] >= avg["w/o Reasoning"];
      const bool ok = order && gain && *gain >= 5.0 && secs < 1800;
      record(7, {ok, "full=" + fmt("%.4f", avg["full"]) + " w/o_RL=" + fmt("%.4f", avg["w/o RL"]) +
                         " w/o_Reasoning=" + fmt("%.4f", avg["w/o Reasoning"]) +
                         " gain=" + (gain ? fmt("%+.2f%%", *gain) : std::string("n/a")) +
                         " time=" + fmt("%.0fs", secs)});
    }
    if (want.count(8)) {
      const auto gp = relative_improvement(pop["full"], pop["w/o Reasoning"]);
      const auto gu = relative_improvement(unpop["full"], unpop["w/o Reasoning"]);
      record(8, {gp && gu && *gu > *gp, "popular_gain=" + (gp ? fmt("%+.2f%%", *gp) : std::string("n/a")) +
                                            " unpopular_gain=" + (gu ? fmt("%+.2f%%", *gu) : std::string("n/a"))});
    }
    if (want.count(10)) {
      int good = 0;
      std::string curves;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& v = runs[i].valid_curve;
        bool mono = v.size() >= 21;
        int drops = 0;
        for (std::size_t j = 1; j < v.size(); ++j) drops += v[j] < v[j - 1];
        mono = mono && drops == 0;
        good += mono;
        curves += " seed" + std::to_string(seeds[i]) + ":" + (v.empty() ? std::string("none") :
                  fmt("%.5f", v.front()) + "->" + fmt("%.5f", v.back()) + ",drops=" + std::to_string(drops) +
                  ",points=" + std::to_string(v.size()));
      }
      record(10, {good >= 2, "non_decreasing_seeds=" + std::to_string(good) + "/" + std::to_string(runs.size()) + curves});
    }
  }

  int failed = 0;
  for (const auto& [id, v] : verdicts) failed += !v.pass;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    for (const auto& [id, v] : verdicts) out << "criterion " << id << ": " << (v.pass ? "PASS " : "FAIL ") << v.detail << "\n";
  }
  return report_only ? 0 : failed;
}
