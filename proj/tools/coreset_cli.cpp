// Command-line front end: dataset generation, one-off coreset builds,
// multi-trial experiments, and the geometry diagnostic suites.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "coreset/coreset.hpp"

namespace {

using namespace coreset;

int cmd_gen(const std::string& kind, std::uint64_t seed, const std::string& out,
            long n, long d) {
  SyntheticParams params;
  params.n = n;
  params.d = d;
  SyntheticKind k;
  if (kind == "gaussian-mean") k = SyntheticKind::gaussian_mean;
  else if (kind == "rbf-regression") k = SyntheticKind::rbf_regression;
  else if (kind == "logistic") k = SyntheticKind::logistic;
  else if (kind == "poisson") k = SyntheticKind::poisson;
  else throw InputError("unknown kind: " + kind);
  const Dataset ds = generate_synthetic(k, params, seed);
  write_csv(out, ds);
  std::cout << "wrote " << ds.size() << " rows (" << ds.x.cols()
            << " covariates) to " << out << "\n";
  return 0;
}

int cmd_build(ExperimentConfig cfg, long m, const std::string& out) {
  cfg.sizes = {m};
  cfg.trials = 1;
  cfg.validate();
  const ExperimentOutput result = run_experiment(cfg);
  if (result.rows.empty()) throw NumericalError("construction produced no rows");
  const ResultRow& row = result.rows.front();
  if (!row.error.empty())
    throw NumericalError("construction failed: " + row.error);

  nlohmann::json doc;
  doc["model"] = cfg.model;
  doc["algo"] = cfg.arm;
  doc["M"] = m;
  doc["seed"] = cfg.seed;
  doc["kl"] = row.kl;
  doc["wall_time_s"] = row.wall_s;
  doc["config_hash"] = cfg.hash();
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& [idx, val] : row.coreset) weights.push_back({idx, val});
  doc["weights"] = weights;
  std::ofstream os(out);
  if (!os) throw InputError("cannot write " + out);
  os << doc.dump(2) << "\n";
  std::cout << "coreset size " << row.coreset.size() << ", kl " << row.kl
            << ", written to " << out << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
  ExperimentConfig cfg = parse_config_file(config_path);
  if (!out_override.empty()) cfg.out_prefix = out_override;
  if (cfg.out_prefix.empty())
    throw InputError("config needs an 'out' prefix (or pass --out)");
  cfg.validate();
  const ExperimentOutput out = run_experiment(cfg);
  write_experiment(cfg, out);
  long failed = 0;
  for (const auto& r : out.rows)
    if (!r.error.empty()) ++failed;
  std::cout << out.rows.size() << " result rows (" << failed
            << " failed) -> " << cfg.out_prefix << ".csv, _agg.csv, .json\n";
  return 0;
}

int cmd_diag(const std::string& check, std::uint64_t seed) {
  DiagReport report;
  if (check == "prop1") report = check_alignment_rule(seed ? seed : 4);
  else if (check == "prop2") report = check_kl_bound(seed ? seed : 5);
  else if (check == "lemma") report = check_path_integrals(seed ? seed : 3);
  else throw InputError("unknown check: " + check);
  std::cout << report.name << "\n";
  for (const auto& line : report.lines) std::cout << "  " << line << "\n";
  std::cout << (report.pass ? "PASS" : "FAIL") << "\n";
  return report.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse weighted data summaries for Bayesian inference"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
  std::string gen_kind, gen_out;
  std::uint64_t gen_seed = 0;
  long gen_n = 0, gen_d = 0;
  gen->add_option("--kind", gen_kind,
                  "gaussian-mean | rbf-regression | logistic | poisson")
      ->required();
  gen->add_option("--seed", gen_seed, "generation seed")->required();
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->add_option("--n", gen_n, "rows (0: kind default)");
  gen->add_option("--d", gen_d, "covariate dimension (0: kind default)");

  // build
  auto* build = app.add_subcommand("build", "construct a single coreset");
  ExperimentConfig bcfg;
  long build_m = 10;
  std::string build_out = "coreset.json", build_kl = "exact";
  long build_u = 0;
  build->add_option("--model", bcfg.model,
                    "gaussian-mean | rbf-regression | logistic | poisson")
      ->required();
  build->add_option("--data", bcfg.data_csv, "input CSV (default: synthetic)");
  build->add_option("--algo", bcfg.arm,
                    "sparsevi | sparsevi-single | sparsevi-quadratic | l1 | "
                    "giga-optimal | giga-realistic | uniform")
      ->required();
  build->add_option("--M", build_m, "coreset size budget")->required();
  build->add_option("--seed", bcfg.seed, "construction seed")->required();
  build->add_option("--out", build_out, "output JSON path");
  build->add_option("--S", bcfg.samples, "samples per moment estimate");
  build->add_option("--T", bcfg.sgd_steps, "weight-update steps");
  build->add_option("--gamma0", bcfg.gamma0, "learning-rate scale");
  build->add_option("--U", build_u, "subsample size (0: full)");
  build->add_option("--S-proj", bcfg.projection_dim, "projection dimension");
  build->add_option("--n", bcfg.synth.n, "synthetic rows");
  build->add_option("--d", bcfg.synth.d, "synthetic dimension");
  build->add_option("--kl", build_kl, "exact | laplace-normalized");

  // run
  auto* run = app.add_subcommand("run", "run a configured experiment");
  std::string run_config, run_out;
  run->add_option("--config", run_config, "key = value config file")
      ->required();
  run->add_option("--out", run_out, "override the output prefix");

  // diag
  auto* diag = app.add_subcommand("diag", "geometry verification suites");
  std::string diag_check;
  std::uint64_t diag_seed = 0;
  diag->add_option("--check", diag_check, "prop1 | prop2 | lemma")->required();
  diag->add_option("--seed", diag_seed, "override the suite seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_kind, gen_seed, gen_out, gen_n, gen_d);
    if (build->parsed()) {
      if (build_u > 0) bcfg.subsample = build_u;
      bcfg.kl_mode = build_kl == "laplace-normalized"
                         ? KlMode::laplace_normalized
                         : KlMode::exact;
      return cmd_build(bcfg, build_m, build_out);
    }
    if (run->parsed()) return cmd_run(run_config, run_out);
    if (diag->parsed()) return cmd_diag(diag_check, diag_seed);
  } catch (const coreset::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const coreset::CapabilityError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const coreset::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
