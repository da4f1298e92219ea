// mnarel: batch CLI for semiparametric inference with a non-ignorably
// missing response.  Subcommands: fit, simulate, ident.
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mnarel/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitNoConverge = 3;
constexpr int kExitIdent = 4;

int env_threads() {
  const char* v = std::getenv("MNAREL_THREADS");
  if (!v) return 1;
  int t = std::atoi(v);
  return t >= 0 ? t : 1;
}

double parse_sigma2(const std::string& s) {
  if (!s.empty() && (s[0] == 'e' || s[0] == 'E')) {
    size_t pos = 0;
    double v = std::stod(s.substr(1), &pos);
    if (pos + 1 != s.size()) throw mnar::ParseError(0, "bad --sigma2 '" + s + "'");
    return std::exp(v);
  }
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size() || v <= 0)
    throw mnar::ParseError(0, "bad --sigma2 '" + s + "'");
  return v;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  out << text;
}

struct CommonArgs {
  std::string out_path;
  std::string format = "table";
  double level = 0.95;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int boot = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--out", a.out_path, "output file (default: stdout)");
  cmd->add_option("--format", a.format, "table, json or csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  cmd->add_option("--level", a.level, "confidence level")
      ->check(CLI::Range(0.5, 0.9999));
  cmd->add_option("--seed", a.seed, "RNG seed")->each([&a](const std::string&) {
    a.seed_set = true;
  });
  cmd->add_option("--boot", a.boot, "bootstrap replications (0 = off)")
      ->check(CLI::NonNegativeNumber);
}

int cmd_fit(const std::string& data_path, const std::string& spec_path,
            const std::string& instrument, bool force, const CommonArgs& a) {
  mnar::SpecConfig cfg = mnar::read_spec_file(spec_path);
  if (!instrument.empty()) cfg.instrument = instrument;
  mnar::ModelSpec spec = mnar::build_model_spec(cfg);
  mnar::Dataset data = mnar::read_dataset_csv(data_path, cfg);
  data.validate();

  mnar::IdentifiabilityVerdict ident = mnar::check_spec(spec, &data.x);
  if (ident.status != mnar::IdentStatus::Identifiable && !force) {
    std::cerr << "identifiability check failed: " << to_string(ident.status)
              << " (" << to_string(ident.rule) << "): " << ident.explanation
              << "\nuse --force to fit anyway\n";
    return kExitIdent;
  }

  mnar::FitOptions fo;
  fo.seed = a.seed;
  mnar::FitResult fit = mnar::fit_mle(data, spec, fo);
  if (!fit.converged) {
    std::cerr << "fit did not converge (|grad| = " << fit.grad_norm << ")\n";
    return kExitNoConverge;
  }

  std::optional<mnar::IntervalEstimate> boot_ci;
  if (a.boot > 0) {
    if (!a.seed_set)
      throw mnar::ParseError(0, "--seed is required with --boot");
    mnar::BootstrapOptions bo;
    bo.fit = fo;
    bo.fit.multistarts = 1;
    bo.threads = env_threads();
    mnar::BootstrapResult br =
        mnar::bootstrap(data, spec, a.boot, a.seed, fit, bo);
    boot_ci = mnar::wald_ci_mu(fit, a.level, mnar::VarianceSource::WaldBootstrap,
                               br.se_mu, br.failures);
  }

  mnar::FitReport report =
      mnar::make_fit_report(fit, data, spec, ident, a.level, boot_ci);
  emit(mnar::format_fit_report(report, mnar::parse_format(a.format)), a.out_path);
  return kExitOk;
}

int cmd_simulate(int example, const std::string& sigma2_str, int n, int reps,
                 const CommonArgs& a) {
  if (!a.seed_set) throw mnar::ParseError(0, "--seed is required for simulate");
  mnar::ScenarioSpec scenario =
      mnar::example_scenario(example, parse_sigma2(sigma2_str), n);
  mnar::RunMcOptions opt;
  opt.with_ci = a.boot > 0;
  opt.boot_B = a.boot;
  opt.level = a.level;
  opt.threads = env_threads();
  std::vector<mnar::MCReport> rows = mnar::run_mc(scenario, reps, a.seed, opt);
  emit(mnar::format_mc_report(rows, mnar::parse_format(a.format)), a.out_path);
  return kExitOk;
}

int cmd_ident(const std::string& spec_path, const std::string& instrument,
              const CommonArgs& a) {
  mnar::SpecConfig cfg = mnar::read_spec_file(spec_path);
  if (!instrument.empty()) cfg.instrument = instrument;
  mnar::ModelSpec spec = mnar::build_model_spec(cfg);
  mnar::IdentifiabilityVerdict v = mnar::check_spec(spec);
  emit(mnar::format_ident_report(v, mnar::parse_format(a.format)), a.out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semiparametric likelihood inference for non-ignorable missing responses"};
  app.require_subcommand(1);

  CommonArgs fit_args, sim_args, ident_args;
  std::string data_path, spec_path, sim_sigma2 = "1", instrument;
  std::string ident_spec_path, ident_instrument;
  bool force = false;
  int example = 1, n = 2000, reps = 500;

  CLI::App* fit = app.add_subcommand("fit", "fit a dataset");
  fit->add_option("--data", data_path, "CSV data file")->required();
  fit->add_option("--model-spec", spec_path, "JSON model spec")->required();
  fit->add_option("--instrument", instrument, "declare an instrument column");
  fit->add_flag("--force", force, "fit despite a failing identifiability check");
  add_common(fit, fit_args);

  CLI::App* sim = app.add_subcommand("simulate", "run a Monte Carlo scenario");
  sim->add_option("--example", example, "scenario preset")->required()
      ->check(CLI::Range(1, 3));
  sim->add_option("--sigma2", sim_sigma2, "variance setting (number or eX for e^X)");
  sim->add_option("--n", n, "sample size")->check(CLI::PositiveNumber);
  sim->add_option("--reps", reps, "replications")->check(CLI::PositiveNumber);
  add_common(sim, sim_args);

  CLI::App* ident = app.add_subcommand("ident", "identifiability check only");
  ident->add_option("--model-spec", ident_spec_path, "JSON model spec")->required();
  ident->add_option("--instrument", ident_instrument, "declare an instrument column");
  add_common(ident, ident_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitParse;
  }

  try {
    if (fit->parsed()) return cmd_fit(data_path, spec_path, instrument, force, fit_args);
    if (sim->parsed()) return cmd_simulate(example, sim_sigma2, n, reps, sim_args);
    if (ident->parsed()) return cmd_ident(ident_spec_path, ident_instrument, ident_args);
  } catch (const mnar::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConverge;
  }
  return kExitParse;
}
