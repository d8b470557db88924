#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stiefel/cli/json_io.hpp"
#include "stiefel/cli/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Newton's method on the orthogonal Stiefel manifold"};
  app.set_version_flag("--version", std::string(stiefel::cli::kToolVersion));

  std::string command;
  std::string spec_path;
  bool pretty = false;
  stiefel::cli::RunFlags flags;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int max_iters = 0;

  app.add_option("command", command, "solve | classify | enumerate | check")
      ->required()
      ->check(CLI::IsMember({"solve", "classify", "enumerate", "check"}));
  app.add_option("--spec", spec_path, "problem specification (JSON)")->required();
  app.add_flag("--pretty", pretty, "human-readable output instead of JSON");
  app.add_flag("--trace", flags.trace, "include the per-iteration trace");
  auto* seed_opt = app.add_option("--seed", seed, "seed of the random initial point");
  auto* tol_opt = app.add_option("--tol", tol, "gradient tolerance (criticality tolerance for classify)")
                      ->check(CLI::PositiveNumber);
  auto* iters_opt = app.add_option("--max-iters", max_iters, "iteration limit")->check(CLI::NonNegativeNumber);
  app.add_flag("--pure-newton", flags.pure_newton, "plain Newton steps only (no fallback, no indefinite modification)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (*seed_opt) flags.seed = seed;
  if (*tol_opt) flags.tol = tol;
  if (*iters_opt) flags.max_iters = max_iters;

  const stiefel::cli::RunOutcome out = stiefel::cli::run(command, spec_path, flags);
  if (out.report.contains("error")) {
    std::cerr << "stiefel-newton: " << out.report["error"]["message"].get<std::string>() << "\n"
              << "hint: " << out.report["error"]["hint"].get<std::string>() << "\n";
  }
  if (pretty) {
    std::cout << stiefel::cli::render_pretty(out.report);
  } else {
    stiefel::cli::write_json(std::cout, out.report);
  }
  return out.exit_code;
}
