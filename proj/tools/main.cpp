// Command-line driver: sample / tune / bench / diffusivity / verify.
//
// Configuration comes from flags plus an optional JSON config file
// (--config); flags take precedence. Every run requires an explicit --seed,
// and a fixed seed plus fixed config reproduces chain and stats outputs
// byte for byte. The MANIFOLD_OUT_DIR environment variable overrides the
// output directory.
//
// Seed streams: the builder of a randomized system (ngon) draws from
// fork(0) of the master seed, the sampling chain from fork(1), tuning from
// fork(2), and timed runs from fork(3).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "manifold/errors.hpp"
#include "manifold/format.hpp"
#include "manifold/harness.hpp"
#include "manifold/sampler.hpp"
#include "manifold/systems.hpp"
#include "manifold/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace manifold;

namespace {

constexpr std::uint64_t kStreamBuilder = 0;
constexpr std::uint64_t kStreamChain = 1;
constexpr std::uint64_t kStreamTune = 2;
constexpr std::uint64_t kStreamTimed = 3;

constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

/// Lets CLI11 read JSON config files: top-level scalars and arrays map to
/// the options of the subcommand they are attached to.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    json j;
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_configurable()) continue;
      std::string name = opt->get_single_name();
      if (opt->count() > 0) {
        j[name] = opt->results().size() == 1 ? json(opt->results().front())
                                             : json(opt->results());
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j = json::parse(input);
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_array()) {
        for (const auto& element : value) {
          item.inputs.push_back(element.is_string()
                                    ? element.get<std::string>()
                                    : element.dump());
        }
      } else {
        item.inputs.push_back(value.is_string() ? value.get<std::string>()
                                                : value.dump());
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

struct CommonOptions {
  std::string example;
  int n = 12;
  int s = 4;
  double ellipse_a = 2.0;
  double ellipse_b = 1.0;
  double torus_R = 1.0;
  double torus_r = 0.5;
  std::string lattice_target = "diagonal";
  std::string newton = "symmetric";
  bool pseudodet = true;
  double tol = 1e-5;
  double eta = 0.95;
  int max_iter = 100;
  double xtol = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  void addTo(CLI::App& cmd, bool with_example = true) {
    if (with_example) {
      cmd.add_option("--example", example, "System to sample")
          ->required()
          ->check(CLI::IsMember({"polymer", "lattice", "matrix", "ngon",
                                 "circle", "sphere", "ellipse", "torus"}));
      cmd.add_option("--n", n, "Vertex count (polymer, ngon)");
      cmd.add_option("--s", s, "Side length (lattice) / matrix size (matrix)");
      cmd.add_option("--a", ellipse_a, "Ellipse semi-axis a");
      cmd.add_option("--b", ellipse_b, "Ellipse semi-axis b");
      cmd.add_option("--R", torus_R, "Torus major radius");
      cmd.add_option("--r", torus_r, "Torus minor radius");
      cmd.add_option("--lattice-target", lattice_target,
                     "Diagonal rest length for the lattice energy")
          ->check(CLI::IsMember({"diagonal", "scaled"}));
    }
    cmd.add_option("--newton", newton, "Projection variant")
        ->check(CLI::IsMember({"symmetric", "traditional"}));
    cmd.add_flag("--pseudodet,!--hard", pseudodet,
                 "Include the 1/|Q| measure factor (soft constraints); "
                 "--hard samples the bare surface measure");
    cmd.add_option("--tol", tol, "Projection tolerance on |q|_inf");
    cmd.add_option("--eta", eta, "Projection error-contraction factor");
    cmd.add_option("--max-iter", max_iter, "Projection iteration cap");
    cmd.add_option("--xtol", xtol,
                   "Reverse-match tolerance (0 = tol * n_vars * 10)");
    cmd.add_option("--seed", seed, "Master seed (required; no clock default)")
        ->required();
    cmd.add_option("--out-dir", out_dir, "Output directory");
  }

  SamplerParams samplerParams() const {
    SamplerParams p;
    p.tol = tol;
    p.eta = eta;
    p.max_iter = max_iter;
    p.xtol = xtol;
    p.newton_variant = newton == "traditional" ? NewtonVariant::Traditional
                                               : NewtonVariant::Symmetric;
    p.use_pseudodet = pseudodet;
    return p;
  }

  BuiltSystem build() const {
    if (example == "polymer") return systems::buildPolymer(n);
    if (example == "lattice") {
      return systems::buildLattice(s, lattice_target == "scaled"
                                          ? systems::LatticeTarget::Scaled
                                          : systems::LatticeTarget::Diagonal);
    }
    if (example == "matrix") return systems::buildOrthogonalGroup(s);
    if (example == "ngon") {
      return systems::buildNgon(n, Rng(seed).fork(kStreamBuilder).seed());
    }
    if (example == "circle") return systems::buildCircle();
    if (example == "sphere") return systems::buildSphere();
    if (example == "ellipse") return systems::buildEllipse(ellipse_a, ellipse_b);
    if (example == "torus") return systems::buildTorus(torus_R, torus_r);
    throw std::invalid_argument("unknown example: " + example);
  }

  BuiltSystem buildSized(int size) const {
    CommonOptions copy = *this;
    copy.n = size;
    copy.s = size;
    return copy.build();
  }

  fs::path outDir() const {
    if (const char* env = std::getenv("MANIFOLD_OUT_DIR")) return env;
    return out_dir;
  }

  json configJson() const {
    json j{{"example", example},          {"newton", newton},
           {"pseudodet", pseudodet},      {"tol", tol},
           {"eta", eta},                  {"max_iter", max_iter},
           {"xtol", xtol},                {"seed", seed}};
    if (example == "polymer" || example == "ngon") j["n"] = n;
    if (example == "lattice" || example == "matrix") j["s"] = s;
    if (example == "lattice") j["lattice_target"] = lattice_target;
    if (example == "ellipse") {
      j["a"] = ellipse_a;
      j["b"] = ellipse_b;
    }
    if (example == "torus") {
      j["R"] = torus_R;
      j["r"] = torus_r;
    }
    return j;
  }
};

void installJsonConfig(CLI::App& cmd) {
  cmd.config_formatter(std::make_shared<JsonConfig>());
  cmd.set_config("--config", "", "JSON config file (flags take precedence)");
}

std::ofstream openOutput(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) {
    throw std::invalid_argument("cannot open output file: " + path.string());
  }
  return out;
}

json statsJson(const ChainStats& stats) {
  return json{
      {"n_steps", stats.n_steps},
      {"accepted", stats.accepted()},
      {"acceptance_rate", stats.acceptanceRate()},
      {"rejections",
       json{{"projection", stats.count(StepResult::RejectedProjection)},
            {"metropolis", stats.count(StepResult::RejectedMetropolis)},
            {"reverse_projection",
             stats.count(StepResult::RejectedReverseProjection)},
            {"reverse_mismatch",
             stats.count(StepResult::RejectedReverseMismatch)},
            {"singular", stats.count(StepResult::RejectedSingular)}}},
      {"mean_forward_iters", stats.meanForwardIters()},
      {"mean_forward_iters_success", stats.meanForwardItersOnSuccess()},
      {"mean_forward_iters_fail", stats.meanForwardItersOnFail()},
      {"mean_reverse_iters", stats.meanReverseIters()},
      {"reverse_attempts", stats.reverse_attempts}};
}

json tuneJson(const harness::TuneResult& tuned) {
  return json{{"sigma_a", tuned.sigma_a},
              {"measured_a", tuned.measured_a},
              {"target_a", tuned.target_a},
              {"samples_used", tuned.samples_used},
              {"bisection_iters", tuned.bisection_iters},
              {"expansions", tuned.expansions},
              {"nonmonotone_warnings", tuned.nonmonotone_warnings}};
}

// ---------------------------------------------------------------------------
// sample

struct SampleOptions {
  CommonOptions common;
  std::optional<double> sigma;
  std::optional<double> target_a;
  long n_steps = 1000;
  long thin = 1;
  long burn_in = 0;
  long tune_samples = 100000;
  long tune_burn_in = 10000;
  double sigma_init = 1.0;
  std::string chain_name = "chain.csv";
  std::string stats_name = "stats.json";
  bool no_chain = false;
  std::vector<int> components;
};

int runSample(const SampleOptions& opt) {
  const CommonOptions& c = opt.common;
  if (opt.sigma.has_value() == opt.target_a.has_value()) {
    std::cerr << "error: exactly one of --sigma / --target-a is required\n";
    return kExitConfigError;
  }

  BuiltSystem bs = c.build();
  SamplerParams params = c.samplerParams();
  Rng master(c.seed);

  json config = c.configJson();
  config["n_steps"] = opt.n_steps;
  config["thin"] = opt.thin;
  config["burn_in"] = opt.burn_in;

  std::optional<harness::TuneResult> tuned;
  if (opt.target_a) {
    config["target_a"] = *opt.target_a;
    harness::TuneOptions topts;
    topts.n_samples = opt.tune_samples;
    topts.burn_in = opt.tune_burn_in;
    topts.sigma_init = opt.sigma_init;
    Rng tune_rng = master.fork(kStreamTune);
    tuned = harness::tuneSigma(bs, params, *opt.target_a, tune_rng, topts);
    params.sigma = tuned->sigma_a;
  } else {
    config["sigma"] = *opt.sigma;
    params.sigma = *opt.sigma;
  }

  ManifoldSampler sampler(bs.system, params);
  Rng chain_rng = master.fork(kStreamChain);
  ChainState state = sampler.makeState(bs.initial);
  if (opt.burn_in > 0) sampler.run(state, chain_rng, opt.burn_in);

  std::vector<int> cols = opt.components;
  if (cols.empty()) {
    cols.resize(bs.system->numVariables());
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = int(i);
  }
  for (int col : cols) {
    if (col < 0 || col >= bs.system->numVariables()) {
      std::cerr << "error: component " << col << " out of range\n";
      return kExitConfigError;
    }
  }

  std::ofstream chain_out;
  StateRecorder recorder;
  if (!opt.no_chain) {
    chain_out = openOutput(c.outDir() / opt.chain_name);
    chain_out << "# manifold-sampler chain\n# config: " << config.dump()
              << "\n";
    chain_out << "step";
    for (int col : cols) chain_out << ",x" << col;
    chain_out << "\n";
    recorder = [&](long step, const ChainState& s) {
      chain_out << step;
      for (int col : cols) chain_out << ',' << formatDouble(s.x[col]);
      chain_out << '\n';
    };
  }

  ChainStats stats =
      sampler.run(state, chain_rng, opt.n_steps, opt.thin, recorder);

  json out{{"config", config},
           {"seed", c.seed},
           {"sigma", params.sigma},
           {"stats", statsJson(stats)}};
  if (tuned) out["tune"] = tuneJson(*tuned);
  auto stats_out = openOutput(c.outDir() / opt.stats_name);
  stats_out << out.dump(2) << "\n";

  std::cout << "sampled " << opt.n_steps << " steps, acceptance "
            << formatDouble(stats.acceptanceRate()) << ", sigma "
            << formatDouble(params.sigma) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// tune

struct TuneCmdOptions {
  CommonOptions common;
  double target_a = 0.25;
  long tune_samples = 100000;
  long tune_burn_in = 10000;
  double sigma_init = 1.0;
  std::string output;  // empty = stdout
};

int runTune(const TuneCmdOptions& opt) {
  if (!(opt.target_a > 0.0 && opt.target_a < 1.0)) {
    std::cerr << "error: --target-a must lie in (0, 1)\n";
    return kExitConfigError;
  }
  BuiltSystem bs = opt.common.build();
  harness::TuneOptions topts;
  topts.n_samples = opt.tune_samples;
  topts.burn_in = opt.tune_burn_in;
  topts.sigma_init = opt.sigma_init;
  Rng master(opt.common.seed);
  Rng tune_rng = master.fork(kStreamTune);
  harness::TuneResult tuned = harness::tuneSigma(
      bs, opt.common.samplerParams(), opt.target_a, tune_rng, topts);

  json out{{"config", opt.common.configJson()},
           {"seed", opt.common.seed},
           {"tune", tuneJson(tuned)}};
  if (opt.output.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    openOutput(opt.common.outDir() / opt.output) << out.dump(2) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  CommonOptions common;
  std::vector<int> sizes;
  long reps = 10000;
  int fillings = 3;
  std::string output;  // empty = stdout
};

int runBench(const BenchOptions& opt) {
  const std::string& ex = opt.common.example;
  if (ex != "polymer" && ex != "lattice" && ex != "matrix" && ex != "ngon") {
    std::cerr << "error: bench requires a sized example "
                 "(polymer, lattice, matrix, ngon)\n";
    return kExitConfigError;
  }
  std::vector<int> sizes = opt.sizes;
  if (sizes.empty()) sizes = {ex == "polymer" || ex == "ngon" ? opt.common.n
                                                              : opt.common.s};

  std::ostringstream csv;
  csv << "# manifold-sampler bench\n# config: " << opt.common.configJson().dump()
      << "\n";
  csv << "example,size,n_vars,m,t_chol,t_lu,chol_spread,lu_spread\n";
  Rng master(opt.common.seed);
  std::uint64_t stream = kStreamTimed;
  for (int size : sizes) {
    BuiltSystem bs = opt.common.buildSized(size);
    auto timing = harness::benchmarkFactorizations(bs, master.fork(stream++),
                                                   opt.reps, opt.fillings);
    csv << ex << ',' << size << ',' << bs.system->numVariables() << ','
        << bs.system->numConstraints() << ',' << formatDouble(timing.t_chol)
        << ',' << formatDouble(timing.t_lu) << ','
        << formatDouble(timing.chol_spread) << ','
        << formatDouble(timing.lu_spread) << '\n';
  }
  if (opt.output.empty()) {
    std::cout << csv.str();
  } else {
    openOutput(opt.common.outDir() / opt.output) << csv.str();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// diffusivity

struct DiffusivityOptions {
  CommonOptions common;
  std::vector<double> targets;
  long n_steps = 100000;
  long tune_samples = 100000;
  long tune_burn_in = 10000;
  double sigma_init = 1.0;
  std::string output;  // empty = stdout
};

int runDiffusivity(const DiffusivityOptions& opt) {
  BuiltSystem bs = opt.common.build();
  harness::TuneOptions topts;
  topts.n_samples = opt.tune_samples;
  topts.burn_in = opt.tune_burn_in;
  topts.sigma_init = opt.sigma_init;
  Rng master(opt.common.seed);
  Rng scan_rng = master.fork(kStreamTune);
  harness::DiffusivityScan scan = harness::diffusivityScan(
      bs, opt.common.samplerParams(), opt.targets, scan_rng, opt.n_steps,
      topts);
  for (const std::string& warning : scan.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }

  std::ostringstream csv;
  csv << "# manifold-sampler diffusivity\n# config: "
      << opt.common.configJson().dump() << "\n";
  csv << "a,sigma_a,mean_step_time,d_eff\n";
  for (const auto& point : scan.points) {
    csv << formatDouble(point.a) << ',' << formatDouble(point.sigma_a) << ','
        << formatDouble(point.mean_step_time) << ','
        << formatDouble(point.d_eff) << '\n';
  }
  if (opt.output.empty()) {
    std::cout << csv.str();
  } else {
    openOutput(opt.common.outDir() / opt.output) << csv.str();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// verify

int runVerify(long n_steps, std::uint64_t seed) {
  auto checks = verification::verificationSuite(n_steps, seed);
  bool all_pass = true;
  for (const auto& check : checks) {
    all_pass = all_pass && check.pass;
    std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << check.name
              << "  chi2=" << formatDouble(check.chi_square)
              << " critical=" << formatDouble(check.critical)
              << " samples=" << check.samples << "\n";
  }
  return all_pass ? 0 : kExitRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MCMC sampling on constraint manifolds"};
  app.require_subcommand(1);

  SampleOptions sample;
  CLI::App* cmd_sample = app.add_subcommand("sample", "Run a chain");
  sample.common.addTo(*cmd_sample);
  cmd_sample->add_option("--sigma", sample.sigma, "Tangent step scale");
  cmd_sample->add_option("--target-a", sample.target_a,
                         "Tune sigma to this acceptance ratio first");
  cmd_sample->add_option("--n-steps", sample.n_steps, "Chain length");
  cmd_sample->add_option("--thin", sample.thin, "Record every thin-th state")
      ->check(CLI::PositiveNumber);
  cmd_sample->add_option("--burn-in", sample.burn_in,
                         "Discarded steps before recording");
  cmd_sample->add_option("--tune-samples", sample.tune_samples,
                         "Samples per tuning estimate");
  cmd_sample->add_option("--tune-burn-in", sample.tune_burn_in,
                         "Burn-in per tuning estimate");
  cmd_sample->add_option("--sigma-init", sample.sigma_init,
                         "Initial step size for tuning");
  cmd_sample->add_option("--output-chain", sample.chain_name,
                         "Chain CSV filename (within --out-dir)");
  cmd_sample->add_option("--output-stats", sample.stats_name,
                         "Stats JSON filename (within --out-dir)");
  cmd_sample->add_flag("--no-chain", sample.no_chain,
                       "Stats-only mode: skip the chain CSV");
  cmd_sample->add_option("--components", sample.components,
                         "Subset of state components to record")
      ->delimiter(',');
  installJsonConfig(*cmd_sample);

  TuneCmdOptions tune;
  CLI::App* cmd_tune =
      app.add_subcommand("tune", "Tune sigma to a target acceptance ratio");
  tune.common.addTo(*cmd_tune);
  cmd_tune->add_option("--target-a", tune.target_a, "Target acceptance ratio")
      ->required();
  cmd_tune->add_option("--tune-samples", tune.tune_samples,
                       "Samples per acceptance estimate");
  cmd_tune->add_option("--tune-burn-in", tune.tune_burn_in,
                       "Burn-in per acceptance estimate");
  cmd_tune->add_option("--sigma-init", tune.sigma_init,
                       "Initial step size guess");
  cmd_tune->add_option("--output", tune.output,
                       "Result JSON filename (default: stdout)");
  installJsonConfig(*cmd_tune);

  BenchOptions bench;
  CLI::App* cmd_bench =
      app.add_subcommand("bench", "Time factorizations of the normal matrix");
  bench.common.addTo(*cmd_bench);
  cmd_bench->add_option("--sizes", bench.sizes, "System sizes to bench")
      ->delimiter(',');
  cmd_bench->add_option("--reps", bench.reps, "Factorizations per timing");
  cmd_bench->add_option("--fillings", bench.fillings,
                        "Random refills of the pattern");
  cmd_bench->add_option("--output", bench.output,
                        "CSV filename (default: stdout)");
  installJsonConfig(*cmd_bench);

  DiffusivityOptions diffusivity;
  CLI::App* cmd_diffusivity = app.add_subcommand(
      "diffusivity", "Effective diffusivity over target acceptance ratios");
  diffusivity.common.addTo(*cmd_diffusivity);
  cmd_diffusivity
      ->add_option("--targets", diffusivity.targets,
                   "Target acceptance ratios")
      ->required()
      ->delimiter(',');
  cmd_diffusivity->add_option("--n-steps", diffusivity.n_steps,
                              "Steps per timed run");
  cmd_diffusivity->add_option("--tune-samples", diffusivity.tune_samples,
                              "Samples per tuning estimate");
  cmd_diffusivity->add_option("--tune-burn-in", diffusivity.tune_burn_in,
                              "Burn-in per tuning estimate");
  cmd_diffusivity->add_option("--sigma-init", diffusivity.sigma_init,
                              "Initial step size for tuning");
  cmd_diffusivity->add_option("--output", diffusivity.output,
                              "CSV filename (default: stdout)");
  installJsonConfig(*cmd_diffusivity);

  long verify_steps = 1000000;
  std::uint64_t verify_seed = 0;
  CLI::App* cmd_verify = app.add_subcommand(
      "verify", "Distribution checks on the analytic manifolds");
  cmd_verify->add_option("--n-steps", verify_steps, "Steps per chain");
  cmd_verify->add_option("--seed", verify_seed, "Master seed")->required();
  installJsonConfig(*cmd_verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (cmd_sample->parsed()) return runSample(sample);
    if (cmd_tune->parsed()) return runTune(tune);
    if (cmd_bench->parsed()) return runBench(bench);
    if (cmd_diffusivity->parsed()) return runDiffusivity(diffusivity);
    if (cmd_verify->parsed()) return runVerify(verify_steps, verify_seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const BuildError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return 0;
}
