#pragma once

// Subcommand implementations behind the mfmpgm tool. Each writes its outputs
// plus a `config.resolved` snapshot; every JSON artifact carries the seed, a
// hash of the resolved configuration and the software version.

#include "mfmpgm/gibbs.hpp"
#include "mfmpgm/io.hpp"
#include "mfmpgm/simgen.hpp"
#include "mfmpgm/summary.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace mfmpgm::cli {

namespace fs = std::filesystem;

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
}

inline std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Writes data.csv, truth.json and config.resolved for one design block.
inline void cmd_simulate(const std::string& design_path, const std::string& out_dir) {
  const auto blocks = read_key_value_blocks(design_path);
  if (blocks.size() != 1) throw std::invalid_argument(design_path + ": expected exactly one design block");
  const SimDesign design = design_from(blocks.front(), design_path);
  const std::string resolved = format_key_values(resolved_design_keys(design));
  const std::string hash = config_hash(resolved);

  const auto sim = simulate_dataset(design);
  ensure_dir(out_dir);
  write_ordinal_csv(join(out_dir, "data.csv"), sim.data);
  write_json(join(out_dir, "truth.json"), truth_to_json(design, sim.truth, hash));
  write_text(join(out_dir, "config.resolved"), resolved);
}

// ---------------------------------------------------------------------------
// discretize
// ---------------------------------------------------------------------------

inline void cmd_discretize(const std::string& in_path, const std::string& out_path, int levels) {
  const auto result = discretize_table(read_csv(in_path), levels);
  if (!result.unusable.empty()) {
    std::string names;
    for (const auto& n : result.unusable) names += (names.empty() ? "" : ", ") + n;
    throw std::runtime_error("discretize: single-level (unusable) columns: " + names);
  }
  write_ordinal_csv(out_path, result.data);
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOptions {
  std::string data_path;
  std::string config_path;  // optional
  std::string out_dir;
  int levels = 0;           // 0: per-column maximum observed level
  KeyValues overrides;      // flag values, applied over the config file
};

struct FitOutputs {
  PosteriorSamples samples;
  FitSummary summary;
  ChainConfig config;
};

inline FitOutputs cmd_fit(const FitOptions& opt) {
  KeyValues kv = opt.config_path.empty() ? KeyValues{} : read_key_values(opt.config_path);
  for (const auto& [k, v] : opt.overrides) kv[k] = v;
  ChainConfig config = chain_config_from(kv, opt.config_path.empty() ? "flags" : opt.config_path);

  const OrdinalDataset data = read_ordinal_csv(opt.data_path, opt.levels);
  apply_dimensioned_keys(config, kv, data.cols());
  config.validate(data.cols());

  const std::string resolved = format_key_values(resolved_chain_keys(config, kv));
  const std::string hash = config_hash(resolved);

  FitOutputs out;
  out.config = config;
  out.samples = run_chain(data, config);
  out.summary = summarize(out.samples);

  ensure_dir(opt.out_dir);
  write_text(join(opt.out_dir, "samples.bin"), encode_samples(out.samples));
  Json summary = fit_to_json(out.summary, out.samples, data, config, hash);
  summary["data_hash"] = config_hash(read_text(opt.data_path));
  write_json(join(opt.out_dir, "summary.json"), summary);
  write_text(join(opt.out_dir, "config.resolved"), resolved);
  return out;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct Metrics {
  double ari = 0.0;
  double rmse_g = 0.0;
  int k_hat = 0;
  int k_true = 0;
  bool k_correct = false;
};

/// Metrics of an estimated partition and per-group graphs against the truth.
inline Metrics evaluate(const std::vector<int>& labels, const std::vector<Graph>& group_graphs,
                        const std::vector<int>& true_labels, const std::vector<Graph>& true_graphs) {
  if (labels.size() != true_labels.size()) throw std::invalid_argument("evaluate: N differs between fit and truth");
  Metrics m;
  m.k_hat = distinct_count(labels);
  m.k_true = distinct_count(true_labels);
  m.k_correct = m.k_hat == m.k_true;
  m.ari = ari(labels, true_labels);
  std::vector<Graph> est, tru;
  for (int c : labels) est.push_back(group_graphs.at(c - 1));
  for (int c : true_labels) tru.push_back(true_graphs.at(c - 1));
  m.rmse_g = rmse_graph({est}, {tru});
  return m;
}

/// Reads <fit_dir>/summary.json and the truth file; writes <fit_dir>/metrics.json.
inline Metrics cmd_evaluate(const std::string& fit_dir, const std::string& truth_path) {
  const Json fit = read_json(join(fit_dir, "summary.json"));
  const Json truth = read_json(truth_path);
  const auto labels = fit.at("labels").get<std::vector<int>>();
  const auto true_labels = truth.at("labels").get<std::vector<int>>();
  if (labels.size() != true_labels.size())
    throw std::invalid_argument("evaluate: fit has N = " + std::to_string(labels.size()) + " but truth has N = " +
                                std::to_string(true_labels.size()));
  std::vector<Graph> groups, true_graphs;
  for (const auto& g : fit.at("groups")) groups.push_back(graph_from_json(g.at("adjacency")));
  for (const auto& c : truth.at("clusters")) true_graphs.push_back(graph_from_json(c.at("adjacency")));

  const Metrics m = evaluate(labels, groups, true_labels, true_graphs);
  Json out = Json{{"version", kVersion},
                  {"seed", fit.at("seed")},
                  {"config_hash", fit.at("config_hash")},
                  {"truth_seed", truth.at("seed")},
                  {"truth_config_hash", truth.at("config_hash")},
                  {"n", labels.size()},
                  {"ARI", m.ari},
                  {"RMSE_G", m.rmse_g},
                  {"K_hat", m.k_hat},
                  {"K_true", m.k_true},
                  {"K_correct", m.k_correct}};
  write_json(join(fit_dir, "metrics.json"), out);
  return m;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOptions {
  std::string designs_path;
  std::string config_path;  // optional chain settings shared by all designs
  std::string out_dir;
  int replicates = 10;
  std::vector<LabelMode> modes = {LabelMode::MFM, LabelMode::CRP};
  KeyValues overrides;
  int threads = 0;  // 0: worker_threads()
};

inline Json report_to_json(const BenchmarkReport& r) {
  Json reps = Json::array();
  for (const auto& x : r.replicates) {
    Json j = {{"replicate", x.replicate}, {"ok", x.ok}};
    if (x.ok) {
      j["K_hat"] = x.k_hat;
      j["ARI"] = x.ari;
    } else {
      j["error"] = x.error;
    }
    reps.push_back(j);
  }
  return Json{{"design", r.design},
              {"mode", to_string(r.mode)},
              {"K_true", r.k_true},
              {"replicates", r.replicates.size()},
              {"completed", r.completed()},
              {"Prob", r.prob_correct_k()},
              {"ARI_mean", r.ari_mean()},
              {"ARI_sd", r.ari_sd()},
              {"RMSE_G", r.rmse_g()},
              {"K_hat_mean", r.mean_k_hat()},
              {"runs", reps}};
}

/// Runs every design under every label mode; writes bench.json, bench.csv and
/// config.resolved. Per-replicate failures are recorded, not fatal.
inline std::vector<BenchmarkReport> cmd_bench(const BenchOptions& opt, std::ostream* log = nullptr) {
  const auto blocks = read_key_value_blocks(opt.designs_path);
  std::vector<SimDesign> designs;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    designs.push_back(design_from(blocks[b], opt.designs_path + " block " + std::to_string(b + 1)));

  KeyValues kv = opt.config_path.empty() ? KeyValues{} : read_key_values(opt.config_path);
  for (const auto& [k, v] : opt.overrides) kv[k] = v;
  if (kv.count("label_mode")) throw std::invalid_argument("bench: label_mode is set per row; use --modes");
  const ChainConfig base = chain_config_from(kv, opt.config_path.empty() ? "flags" : opt.config_path);

  std::string resolved = format_key_values(resolved_chain_keys(base, kv));
  resolved += "replicates = " + std::to_string(opt.replicates) + "\n";
  std::string mode_list;
  for (auto m : opt.modes) mode_list += (mode_list.empty() ? "" : ",") + to_string(m);
  resolved += "modes = " + mode_list + "\n";
  for (const auto& d : designs) resolved += "---\n" + format_key_values(resolved_design_keys(d));
  const std::string hash = config_hash(resolved);

  const int threads = opt.threads > 0 ? opt.threads : worker_threads();
  std::vector<BenchmarkReport> reports;
  Json rows = Json::array();
  std::string csv = "design,mode,K_true,replicates,completed,Prob,ARI_mean,ARI_sd,RMSE_G,K_hat_mean\n";
  for (const auto& d : designs) {
    for (auto mode : opt.modes) {
      ChainConfig c = base;
      c.label_mode = mode;
      apply_dimensioned_keys(c, kv, d.p);
      c.validate(d.p);
      auto report = run_replicates(d, c, opt.replicates, threads);
      for (const auto& r : report.replicates)
        if (!r.ok && log) *log << "replicate " << r.replicate << " of " << d.name << " failed: " << r.error << "\n";
      if (log)
        *log << d.name << " " << to_string(mode) << ": Prob " << report.prob_correct_k() << ", ARI "
             << report.ari_mean() << " (" << report.ari_sd() << "), RMSE_G " << report.rmse_g() << "\n";
      rows.push_back(report_to_json(report));
      std::ostringstream line;
      line << d.name << "," << to_string(mode) << "," << d.k_true << "," << opt.replicates << ","
           << report.completed() << "," << detail::format_double(report.prob_correct_k()) << ","
           << detail::format_double(report.ari_mean()) << "," << detail::format_double(report.ari_sd()) << ","
           << detail::format_double(report.rmse_g()) << "," << detail::format_double(report.mean_k_hat()) << "\n";
      csv += line.str();
      reports.push_back(std::move(report));
    }
  }
  ensure_dir(opt.out_dir);
  Json out = provenance(base.seed, hash);
  out["rows"] = rows;
  write_json(join(opt.out_dir, "bench.json"), out);
  write_text(join(opt.out_dir, "bench.csv"), csv);
  write_text(join(opt.out_dir, "config.resolved"), resolved);
  return reports;
}

}  // namespace mfmpgm::cli
