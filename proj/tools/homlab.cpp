// Command-line front end: homlab <cell|limit|nse|rate|check> --config <file> --out <dir> --jobs <n>
#include <iostream>

#include "CLI11.hpp"
#include "homlab/errors.hpp"
#include "homlab/experiment.hpp"

namespace {

int run(homlab::ExperimentKind kind, const std::string& config, const std::string& out_arg, int jobs) {
  using namespace homlab;
  std::string out = out_arg;
  try {
    ExperimentConfig cfg = parse_config(config);
    if (cfg.kind != kind)
      throw ConfigError("config kind '" + to_string(cfg.kind) + "' does not match subcommand '" + to_string(kind) + "'");
    if (out.empty()) out = cfg.io.output_dir;
    return run_experiment(cfg, out, jobs, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    write_error_record(out.empty() ? "." : out, "ConfigError", e.what(), 1);
    return 1;
  } catch (const StepRejected& e) {
    std::cerr << "step rejected: " << e.what() << " (suggested dt " << e.suggested_dt() << ")\n";
    write_error_record(out.empty() ? "." : out, "StepRejected", e.what(), 2);
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << " (residual " << e.residual() << ")\n";
    write_error_record(out.empty() ? "." : out, "SolverError", e.what(), 2);
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    write_error_record(out.empty() ? "." : out, "DomainError", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_error_record(out.empty() ? "." : out, "Error", e.what(), 2);
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical homogenization lab: cell problems, Darcy limit, scaled Navier-Stokes and convergence rates"};
  app.require_subcommand(1);
  struct Args {
    std::string config, out;
    int jobs = 1;
  };
  static const std::pair<const char*, homlab::ExperimentKind> kinds[] = {
      {"cell", homlab::ExperimentKind::cell},   {"limit", homlab::ExperimentKind::limit},
      {"nse", homlab::ExperimentKind::nse},     {"rate", homlab::ExperimentKind::rate},
      {"check", homlab::ExperimentKind::check},
  };
  std::vector<Args> args(std::size(kinds));
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(kinds); ++i) {
    CLI::App* sub = app.add_subcommand(kinds[i].first, std::string("run a '") + kinds[i].first + "' experiment");
    sub->add_option("--config", args[i].config, "YAML experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args[i].out, "output directory (defaults to io.output_dir)");
    sub->add_option("--jobs", args[i].jobs, "concurrent jobs")->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) return run(kinds[i].second, args[i].config, args[i].out, args[i].jobs);
  return 1;
}
