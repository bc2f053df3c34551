#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "gravdec/runner.hpp"

using namespace gravdec;

int main(int argc, char** argv) {
  CLI::App app{"Gravitational decoherence experiment runner"};
  app.require_subcommand(1);

  runner::Overrides overrides;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned threads = 1;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  std::string run_path;
  run->add_option("config", run_path, "Config file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "Override run.seed");
  auto* dir_opt = run->add_option("--out-dir", out_dir, "Output directory (default: config, then $GRAVDEC_OUT_DIR)");
  run->add_option("--threads", threads, "Worker threads for trajectory ensembles (0: hardware)")
      ->check(CLI::NonNegativeNumber);

  auto* val = app.add_subcommand("validate", "Check a config file without running it");
  std::string val_path;
  val->add_option("config", val_path, "Config file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : runner::kExitSchema;
  }

  if (*val) {
    const auto v = runner::validate_file(val_path);
    std::cout << v.text();
    return v.exit_code;
  }

  if (*seed_opt) overrides.seed = seed;
  if (*dir_opt) overrides.out_dir = out_dir;
  overrides.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;

  const auto out = runner::run_file(run_path, overrides);
  for (const auto& c : out.checks)
    std::cout << c.name << " = " << config::format_double(c.value) << (c.pass ? "  PASS" : "  FAIL") << "\n";
  for (const auto& n : out.notes) std::cout << n << "\n";
  if (!out.error.empty()) std::cerr << "error: " << out.error << "\n";
  if (!out.out_dir.empty()) std::cout << "output: " << out.out_dir << "\n";
  return out.exit_code;
}
