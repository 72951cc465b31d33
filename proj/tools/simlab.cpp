// Batch simulation of swipe sessions against a target-similarity oracle.
//
//   simlab run --strategies banditbo,simplebo,random --dims 4,8,16
//              --targets 10 --seeds 5 --budget 50 --out DIR
//   simlab plot --in DIR

#include "latentswipe/genkit.hpp"
#include "latentswipe/simlab.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

using namespace latentswipe;

namespace {

void print_summary(const std::vector<SummaryRow>& rows) {
  std::printf("%-10s %4s %5s %6s %10s %8s\n", "strategy", "d'", "runs", "failed", "mean_final", "sd");
  for (const auto& r : rows) {
    std::printf("%-10s %4zu %5zu %6zu %10.4f %8.4f\n", std::string(to_string(r.strategy)).c_str(), r.d_prime, r.runs,
                r.failures, r.mean_final, r.sd_final);
  }
}

std::unique_ptr<Generator> make_generator(const std::string& kind, const std::string& url, std::size_t latent_dim) {
  if (kind == "procedural") return std::make_unique<ProceduralGenerator>(latent_dim, 64);
  if (kind == "external") return std::make_unique<ExternalGenerator>(url);
  throw CLI::ValidationError("--generator", "expected procedural or external");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latentswipe simulation lab"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::vector<std::string> strategies{"banditbo", "simplebo", "random"};
  std::string out_dir;
  std::string generator_kind = "procedural";
  std::string external_url;
  std::size_t latent_dim = 64;
  std::string tie_rule = "previous";

  auto* run = app.add_subcommand("run", "run the strategy x d' x target x seed cross product");
  run->add_option("--strategies", strategies, "comma separated strategies")->delimiter(',');
  run->add_option("--dims", cfg.d_primes, "comma separated subspace sizes")->delimiter(',');
  run->add_option("--targets", cfg.targets, "targets per d'")->check(CLI::PositiveNumber);
  run->add_option("--seeds", cfg.seeds, "sessions per target")->check(CLI::PositiveNumber);
  run->add_option("--budget", cfg.budget, "comparisons per session")->check(CLI::PositiveNumber);
  run->add_option("--window", cfg.moving_average_window, "moving-average window")->check(CLI::PositiveNumber);
  run->add_option("--jobs", cfg.jobs, "worker threads, 0 = all cores");
  run->add_option("--pca-population", cfg.pca_population, "latents used to fit the subspace");
  run->add_option("--tie-rule", tie_rule, "previous or current")->check(CLI::IsMember({"previous", "current"}));
  run->add_option("--generator", generator_kind, "procedural or external");
  run->add_option("--external-url", external_url, "base URL of an external generator");
  run->add_option("--latent-dim", latent_dim, "procedural latent size")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--no-plots", "skip the PNG plots");

  std::string in_dir;
  auto* plot = app.add_subcommand("plot", "redraw plots and the summary from a results directory");
  plot->add_option("--in", in_dir, "results directory")->required();
  plot->add_option("--window", cfg.moving_average_window, "moving-average window")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cfg.strategies.clear();
      for (const auto& s : strategies) cfg.strategies.push_back(strategy_from_string(s));
      cfg.tie_rule = tie_rule == "current" ? TieRule::current_wins : TieRule::previous_wins;
      auto gen = make_generator(generator_kind, external_url, latent_dim);

      const auto t0 = std::chrono::steady_clock::now();
      const auto results = run_experiment(cfg, *gen);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      write_results(out_dir, results, cfg.moving_average_window);
      const auto rows = summarize(results, cfg.moving_average_window);
      if (!run->get_option("--no-plots")->as<bool>()) write_plots(out_dir, rows);
      print_summary(rows);
      std::printf("%zu runs in %.1f s\n", results.size(), secs);

      std::size_t failed = 0;
      for (const auto& r : results) {
        if (!r.error) continue;
        ++failed;
        std::fprintf(stderr, "run %s d'=%zu target=%zu seed=%zu failed: %s\n",
                     std::string(to_string(r.strategy)).c_str(), r.d_prime, r.target_index, r.seed_index,
                     r.error->c_str());
      }
      return failed ? 1 : 0;
    }
    const auto results = read_results(in_dir);
    const auto rows = summarize(results, cfg.moving_average_window);
    write_plots(in_dir, rows);
    print_summary(rows);
    for (const auto& r : results)
      if (r.error) return 1;
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "simlab: %s\n", e.what());
    return 2;
  }
}
