// att: data generation, training, evaluation, sampling and export for
// adaptive tensor tree Born machines.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "att/datasets.hpp"
#include "att/dot.hpp"
#include "att/errors.hpp"
#include "att/io.hpp"
#include "att/model.hpp"
#include "att/mutual_info.hpp"
#include "att/sampling.hpp"
#include "att/train.hpp"

namespace {

using namespace att;

constexpr int kExitUsage = 1;
constexpr int kExitFormat = 2;
constexpr int kExitNumerical = 3;

std::string manifest_path_for(const std::string& model_path) { return model_path + ".json"; }

void print_shape(const DataBatch& b, const std::string& path) {
  std::printf("wrote %zu rows x %zu columns to %s\n", b.num_samples(), b.num_variables(), path.c_str());
}

struct GenPatterns {
  PatternSpec spec;
  std::uint64_t seed = 0;
  std::string out;
};

struct GenPolytree {
  std::string spec_path;
  std::string name;
  double r = 0.8;
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string write_spec;
};

struct GenIdx {
  std::string images, labels;
  int threshold = 127;
  std::size_t pad = 32;
  std::size_t limit = 0;
  std::string out;
};

struct GenReturns {
  std::string csv;
  std::string out, train_out, test_out;
  double fraction = 0.5;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string data, test;
  std::size_t chi = 4;
  double lr = 0.001;
  std::size_t iters = 1000;
  std::string init = "train";
  std::string topology_from;
  bool fixed = false;
  std::size_t batch_size = 1000;
  std::string refresh = "steps:1000";
  std::uint64_t seed = 0;
  std::size_t combined = 1, candidate = 10;
  std::size_t test_interval = 100;
  std::size_t threads = 1;
  std::size_t checkpoint = 0;
  bool strict = false;
  std::string out_model = "model.attb";
  std::string out_report, out_dot;
};

struct EvalArgs {
  std::string model, data;
  std::size_t threads = 1;
  bool clamp = false;
};

struct SampleArgs {
  std::string model, out;
  std::size_t count = 1000;
  std::uint64_t seed = 0;
};

struct ExportArgs {
  std::string model, dot, labels, rank_csv;
  std::string center = "centroid";
  bool exact = false;
};

void run_gen_patterns(const GenPatterns& a) {
  const DataBatch b = gen_random_patterns(a.spec, a.seed);
  write_batch(b, a.out);
  print_shape(b, a.out);
}

void run_gen_polytree(const GenPolytree& a) {
  if (a.spec_path.empty() == a.name.empty()) throw std::invalid_argument("give exactly one of --spec and --name");
  const BayesPolytree bn = a.spec_path.empty() ? make_designed_polytree(a.name, a.r) : read_polytree_spec(a.spec_path);
  if (!a.write_spec.empty()) write_text_file(a.write_spec, format_polytree_spec(bn));
  if (a.out.empty()) return;
  const DataBatch b = sample_polytree(bn, a.count, a.seed);
  write_batch(b, a.out);
  print_shape(b, a.out);
}

void run_gen_idx(const GenIdx& a) {
  const DataBatch b = load_idx_binarized(a.images, a.labels, a.threshold, a.pad, a.limit);
  write_batch(b, a.out);
  print_shape(b, a.out);
}

void run_gen_returns(const GenReturns& a) {
  const ReturnsTable table = read_returns_csv(a.csv);
  const DataBatch b = binarize_returns(table.values);
  if (!a.out.empty()) {
    write_batch(b, a.out);
    print_shape(b, a.out);
  }
  if (!a.train_out.empty() || !a.test_out.empty()) {
    if (a.train_out.empty() || a.test_out.empty()) {
      throw std::invalid_argument("--train-out and --test-out go together");
    }
    const auto [train_part, test_part] = split_train_test(b, a.fraction, a.seed);
    write_batch(train_part, a.train_out);
    print_shape(train_part, a.train_out);
    write_batch(test_part, a.test_out);
    print_shape(test_part, a.test_out);
  }
}

void parse_refresh(const std::string& s, TrainConfig& cfg) {
  if (s == "sweep") {
    cfg.batch_refresh = RefreshPolicy::Sweep;
    return;
  }
  if (s.rfind("steps:", 0) == 0) {
    cfg.batch_refresh = RefreshPolicy::EveryK;
    const std::string k = s.substr(6);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(k, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == k.size() && used > 0 && v > 0) {
      cfg.refresh_interval = static_cast<std::size_t>(v);
      return;
    }
  }
  throw std::invalid_argument("--refresh expects steps:K or sweep");
}

void run_train(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.chi = a.chi;
  cfg.learning_rate = a.lr;
  cfg.max_iterations = a.iters;
  cfg.batch_size = a.batch_size;
  cfg.seed = a.seed;
  cfg.structure_fixed = a.fixed;
  cfg.combined_updates = a.combined;
  cfg.candidate_updates = a.candidate;
  cfg.test_interval = a.test_interval;
  cfg.threads = a.threads;
  cfg.clamp_zero = !a.strict;
  cfg.initial_topology = parse_initial_topology(a.init);
  parse_refresh(a.refresh, cfg);
  cfg.validate();

  std::optional<TreeTopology> from_file;
  if (cfg.initial_topology == InitialTopology::FromFile) {
    if (a.topology_from.empty()) throw std::invalid_argument("--init file needs --topology-from MODEL");
    from_file = load_model(a.topology_from).topology();
  }

  const DataBatch data = read_batch(a.data);
  std::optional<DataBatch> test;
  if (!a.test.empty()) test = read_batch(a.test);

  TrainCallback checkpoint;
  if (a.checkpoint > 0) {
    checkpoint = [&](std::size_t it, const TensorTreeModel& m, const StepResult&) {
      if ((it + 1) % a.checkpoint == 0) save_model(m, a.out_model + ".checkpoint");
    };
  }
  const TrainResult res = train(data, cfg, test ? &*test : nullptr, from_file ? &*from_file : nullptr, checkpoint);

  const TensorTreeModel& final_model = res.model;
  save_model(final_model, a.out_model);
  if (res.report.best_model) save_model(*res.report.best_model, a.out_model + ".best");

  nlohmann::json manifest;
  manifest["format_version"] = kModelFormatVersion;
  manifest["seed"] = cfg.seed;
  manifest["config"] = config_to_json(cfg);
  manifest["dataset"] = {{"train", a.data},
                         {"train_rows", data.num_samples()},
                         {"variables", data.num_variables()},
                         {"test", a.test},
                         {"test_rows", test ? test->num_samples() : 0}};
  nlohmann::json outputs = {{"model", a.out_model}};
  if (res.report.best_model) outputs["best_model"] = a.out_model + ".best";
  if (!a.out_report.empty()) outputs["report"] = a.out_report;
  if (!a.out_dot.empty()) outputs["dot"] = a.out_dot;
  manifest["outputs"] = outputs;
  manifest["edge_bmi"] = edge_bmi_to_json(res.report.edge_bmi);
  manifest["rewires"] = res.report.rewires;
  manifest["batch_refreshes"] = res.report.batch_refreshes;
  if (!res.report.nll_history.empty()) manifest["final_train_nll"] = res.report.nll_history.back();
  if (res.report.best_test_nll) {
    manifest["best_test_nll"] = *res.report.best_test_nll;
    manifest["best_iteration"] = res.report.best_iteration + 1;
  }
  write_text_file(manifest_path_for(a.out_model), manifest.dump(2) + "\n");

  if (!a.out_report.empty()) write_text_file(a.out_report, format_report_csv(res.report));
  if (!a.out_dot.empty()) write_text_file(a.out_dot, to_dot(final_model.topology(), res.report.edge_bmi));

  if (!res.report.nll_history.empty()) {
    std::printf("final train NLL %.6f\n", res.report.nll_history.back());
  }
  if (res.report.best_test_nll) {
    std::printf("best test NLL %.6f at iteration %zu\n", *res.report.best_test_nll, res.report.best_iteration + 1);
  }
  std::printf("rewires %zu, batch refreshes %zu\n", res.report.rewires, res.report.batch_refreshes);
}

void run_eval(const EvalArgs& a) {
  const TensorTreeModel m = load_model(a.model);
  const DataBatch data = read_batch(a.data);
  if (data.num_variables() != m.num_variables()) {
    throw FormatError("data has " + std::to_string(data.num_variables()) + " variables, model has " +
                      std::to_string(m.num_variables()));
  }
  const double value = nll(m, data, a.clamp ? ZeroPolicy::Clamp : ZeroPolicy::Strict, a.threads);
  std::printf("%.6f\n", value);
}

void run_sample(const SampleArgs& a) {
  const TensorTreeModel m = load_model(a.model);
  const DataBatch b = sample_batch(m, a.count, a.seed);
  write_batch(b, a.out);
  print_shape(b, a.out);
}

void run_export(const ExportArgs& a) {
  const TensorTreeModel m = load_model(a.model);
  const TreeTopology& t = m.topology();
  CenterKind kind = CenterKind::Centroid;
  if (a.center == "eccentricity") {
    kind = CenterKind::MinEccentricity;
  } else if (a.center != "centroid") {
    throw std::invalid_argument("--center expects centroid or eccentricity");
  }
  if (a.dot.empty() && a.rank_csv.empty()) throw std::invalid_argument("nothing to export: give --dot or --rank-csv");

  if (!a.dot.empty()) {
    std::map<Edge, double> bmi;
    const std::string manifest = manifest_path_for(a.model);
    if (!a.exact && std::filesystem::exists(manifest)) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_text_file(manifest));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
      }
      for (const auto& [e, v] : edge_bmi_from_json(j.value("edge_bmi", nlohmann::json::array()))) {
        if (t.has_edge(e)) bmi[e] = v;
      }
    } else if (m.num_variables() <= kMaxExactBmiVariables) {
      for (Edge e : t.edges()) bmi[e] = bmi_exact(m, e);
    }
    std::map<std::size_t, LeafLabel> labels;
    if (!a.labels.empty()) labels = read_labels_csv(a.labels);
    write_text_file(a.dot, to_dot(t, bmi, labels));
  }
  if (!a.rank_csv.empty()) {
    const auto ranks = center_distance_ranking(t, kind);
    const auto dist = bfs_distances(t, tree_center(t, kind));
    std::string out = "variable,distance,rank\n";
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      out += std::to_string(i) + "," + std::to_string(dist[i]) + "," + std::to_string(ranks[i]) + "\n";
    }
    write_text_file(a.rank_csv, out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive tensor tree Born machine"};
  app.require_subcommand(1);

  GenPatterns gp;
  GenPolytree gt;
  GenIdx gi;
  GenReturns gr;
  auto* gen = app.add_subcommand("gen", "generate or convert a data set");
  gen->require_subcommand(1);
  auto* gen_patterns = gen->add_subcommand("patterns", "random outer bits with a zero middle block");
  gen_patterns->add_option("--total", gp.spec.total_bits, "bits per pattern")->capture_default_str();
  gen_patterns->add_option("--left", gp.spec.left_random, "random bits on the left")->capture_default_str();
  gen_patterns->add_option("--right", gp.spec.right_random, "random bits on the right")->capture_default_str();
  gen_patterns->add_option("--num", gp.spec.num_patterns, "number of distinct patterns")->capture_default_str();
  gen_patterns->add_option("--seed", gp.seed)->capture_default_str();
  gen_patterns->add_option("--out", gp.out, "output batch file")->required();

  auto* gen_polytree = gen->add_subcommand("polytree", "samples from a binary polytree network");
  gen_polytree->add_option("--spec", gt.spec_path, "polytree spec file");
  gen_polytree->add_option("--name", gt.name, "built-in network: chain, branching or collision");
  gen_polytree->add_option("--r", gt.r, "correlation rate for --name")->capture_default_str();
  gen_polytree->add_option("--count", gt.count, "number of samples")->capture_default_str();
  gen_polytree->add_option("--seed", gt.seed)->capture_default_str();
  gen_polytree->add_option("--out", gt.out, "output batch file");
  gen_polytree->add_option("--write-spec", gt.write_spec, "also write the network as a spec file");

  auto* gen_idx = gen->add_subcommand("idx", "binarize IDX images");
  gen_idx->add_option("--images", gi.images, "IDX image file")->required();
  gen_idx->add_option("--labels", gi.labels, "IDX label file (checked for a matching count)");
  gen_idx->add_option("--threshold", gi.threshold, "pixel > threshold gives 1")->capture_default_str();
  gen_idx->add_option("--pad", gi.pad, "frame side, 0 keeps the original size")->capture_default_str();
  gen_idx->add_option("--limit", gi.limit, "read at most this many images, 0 for all")->capture_default_str();
  gen_idx->add_option("--out", gi.out, "output batch file")->required();

  auto* gen_returns = gen->add_subcommand("returns", "binarize a CSV of daily change rates");
  gen_returns->add_option("--csv", gr.csv, "dates x tickers CSV")->required();
  gen_returns->add_option("--out", gr.out, "full binarized batch");
  gen_returns->add_option("--train-out", gr.train_out, "training half");
  gen_returns->add_option("--test-out", gr.test_out, "test half");
  gen_returns->add_option("--fraction", gr.fraction, "training fraction")->capture_default_str();
  gen_returns->add_option("--seed", gr.seed)->capture_default_str();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "fit a model");
  train_cmd->add_option("--data", ta.data, "training batch file")->required();
  train_cmd->add_option("--test", ta.test, "test batch file");
  train_cmd->add_option("--chi", ta.chi, "maximum bond dimension")->capture_default_str();
  train_cmd->add_option("--lr", ta.lr, "learning rate")->capture_default_str();
  train_cmd->add_option("--iters", ta.iters, "reconnection steps")->capture_default_str();
  train_cmd->add_option("--init", ta.init, "train, balanced, random or file")->capture_default_str();
  train_cmd->add_option("--topology-from", ta.topology_from, "model whose topology seeds --init file");
  train_cmd->add_flag("--fixed-structure", ta.fixed, "never rewire");
  train_cmd->add_option("--batch-size", ta.batch_size)->capture_default_str();
  train_cmd->add_option("--refresh", ta.refresh, "steps:K or sweep")->capture_default_str();
  train_cmd->add_option("--seed", ta.seed)->capture_default_str();
  train_cmd->add_option("--combined-updates", ta.combined)->capture_default_str();
  train_cmd->add_option("--candidate-updates", ta.candidate)->capture_default_str();
  train_cmd->add_option("--test-interval", ta.test_interval)->capture_default_str();
  train_cmd->add_option("--threads", ta.threads, "threads for test NLL evaluation")->capture_default_str();
  train_cmd->add_option("--checkpoint", ta.checkpoint, "save the model every N iterations")->capture_default_str();
  train_cmd->add_flag("--strict-zero", ta.strict, "fail on zero amplitudes instead of clamping");
  train_cmd->add_option("--out-model", ta.out_model)->capture_default_str();
  train_cmd->add_option("--out-report", ta.out_report, "CSV of per-iteration NLL");
  train_cmd->add_option("--out-dot", ta.out_dot, "final topology with BMI colors");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "print the NLL of a data set in nats");
  eval_cmd->add_option("--model", ea.model)->required();
  eval_cmd->add_option("--data", ea.data)->required();
  eval_cmd->add_option("--threads", ea.threads)->capture_default_str();
  eval_cmd->add_flag("--clamp", ea.clamp, "floor probabilities instead of reporting inf");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "draw exact samples from a model");
  sample_cmd->add_option("--model", sa.model)->required();
  sample_cmd->add_option("--count", sa.count)->capture_default_str();
  sample_cmd->add_option("--seed", sa.seed)->capture_default_str();
  sample_cmd->add_option("--out", sa.out)->required();

  ExportArgs xa;
  auto* export_cmd = app.add_subcommand("export", "write DOT and center-distance ranks");
  export_cmd->add_option("--model", xa.model)->required();
  export_cmd->add_option("--dot", xa.dot);
  export_cmd->add_option("--labels", xa.labels, "CSV variable,label,color");
  export_cmd->add_option("--rank-csv", xa.rank_csv);
  export_cmd->add_option("--center", xa.center, "centroid or eccentricity")->capture_default_str();
  export_cmd->add_flag("--exact-bmi", xa.exact, "recompute BMI by enumeration instead of using the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_patterns) run_gen_patterns(gp);
    if (*gen_polytree) run_gen_polytree(gt);
    if (*gen_idx) run_gen_idx(gi);
    if (*gen_returns) run_gen_returns(gr);
    if (*train_cmd) run_train(ta);
    if (*eval_cmd) run_eval(ea);
    if (*sample_cmd) run_sample(sa);
    if (*export_cmd) run_export(xa);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "att: %s\n", e.what());
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "att: numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const Error& e) {
    std::fprintf(stderr, "att: %s\n", e.what());
    return kExitFormat;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "att: %s\n", e.what());
    return kExitFormat;
  }
  return 0;
}
