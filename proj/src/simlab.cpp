#include "latentswipe/simlab.hpp"

#include "latentswipe/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>
#include <tuple>

namespace latentswipe {

namespace {

using nlohmann::json;

std::string run_file_name(const RunResult& r) {
  return std::string(to_string(r.strategy)) + "_d" + std::to_string(r.d_prime) + "_t" +
         std::to_string(r.target_index) + "_s" + std::to_string(r.seed_index) + ".jsonl";
}

auto run_key(const RunResult& r) {
  return std::tuple(static_cast<int>(r.strategy), r.d_prime, r.target_index, r.seed_index);
}

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finaliser
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

SimilarityOracle::SimilarityOracle(const Generator& gen, std::shared_ptr<const SubspaceMap> subspace,
                                   LatentPoint target, TieRule tie_rule)
    : gen_(&gen), subspace_(std::move(subspace)), target_(std::move(target)), tie_rule_(tie_rule) {
  target_embedding_ = gen_->embed(subspace_->inverse(target_));
}

double SimilarityOracle::similarity(const LatentPoint& p) const {
  return cosine_similarity(gen_->embed(subspace_->inverse(p)), target_embedding_);
}

bool SimilarityOracle::current_wins(const LatentPoint& previous, const LatentPoint& current) const {
  const double sp = similarity(previous);
  const double sc = similarity(current);
  if (sc == sp) return tie_rule_ == TieRule::current_wins;
  return sc > sp;
}

std::vector<double> moving_average(std::span<const double> trace, std::size_t window) {
  if (window < 1) throw Error("moving_average window must be >= 1");
  std::vector<double> out(trace.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    sum += trace[i];
    if (i >= window) sum -= trace[i - window];
    const std::size_t count = std::min(i + 1, window);
    out[i] = sum / static_cast<double>(count);
  }
  return out;
}

std::vector<LatentPoint> draw_targets(const Box& box, std::size_t count, std::uint64_t seed) {
  CountingRng rng(seed);
  std::vector<LatentPoint> out;
  for (std::size_t t = 0; t < count; ++t) {
    LatentPoint p(static_cast<Eigen::Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i) p[static_cast<Eigen::Index>(i)] = rng.uniform(box[i].low, box[i].high);
    out.push_back(std::move(p));
  }
  return out;
}

std::uint64_t session_seed(const ExperimentConfig& cfg, std::size_t d_prime, std::size_t target_index,
                           std::size_t seed_index) {
  return mix(cfg.base_seed ^ mix(d_prime * 0x1000193ULL + target_index * 0x10001ULL + seed_index));
}

RunResult run_single(const Generator& gen, std::shared_ptr<const SubspaceMap> subspace, const SessionConfig& config,
                     const SimilarityOracle& oracle) {
  RunResult r;
  r.strategy = config.strategy;
  r.d_prime = config.d_prime;
  r.session_seed = config.seed;
  Session session(config, std::move(subspace));
  (void)gen;
  while (!session.finished()) {
    r.similarity_trace.push_back(oracle.similarity(session.current()));
    r.chosen_arms.push_back(session.current_arm());
    session.submit_feedback(oracle.current_wins(session.previous(), session.current()));
  }
  r.final_similarity = oracle.similarity(session.final_choice());
  return r;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, const Generator& gen) {
  if (cfg.strategies.empty() || cfg.d_primes.empty() || cfg.targets < 1 || cfg.seeds < 1 || cfg.budget < 1)
    throw Error("run_experiment: every parameter must be >= 1");
  const auto desc = gen.descriptor();
  const auto population = gen.sample_latents(cfg.pca_population, cfg.pca_seed);

  struct Cell {
    std::shared_ptr<const SubspaceMap> subspace;
    std::vector<LatentPoint> targets;
  };
  std::map<std::size_t, Cell> cells;
  for (std::size_t dp : cfg.d_primes) {
    if (cells.contains(dp)) continue;
    auto map = std::make_shared<const SubspaceMap>(fit_subspace(population, dp));
    cells[dp] = {map, draw_targets(map->search_box(kDefaultBoxConstant), cfg.targets, cfg.target_seed + dp)};
  }

  struct Job {
    Strategy strategy;
    std::size_t d_prime, target, seed;
  };
  std::vector<Job> jobs;
  for (auto s : cfg.strategies)
    for (auto dp : cfg.d_primes)
      for (std::size_t t = 0; t < cfg.targets; ++t)
        for (std::size_t k = 0; k < cfg.seeds; ++k) jobs.push_back({s, dp, t, k});

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const Cell& cell = cells.at(job.d_prime);
      SessionConfig sc;
      sc.strategy = job.strategy;
      sc.d = desc.latent_dim;
      sc.d_prime = job.d_prime;
      sc.max_comparisons = cfg.budget;
      sc.seed = session_seed(cfg, job.d_prime, job.target, job.seed);
      RunResult r;
      try {
        const SimilarityOracle oracle(gen, cell.subspace, cell.targets[job.target], cfg.tie_rule);
        r = run_single(gen, cell.subspace, sc, oracle);
      } catch (const std::exception& e) {
        r.strategy = job.strategy;
        r.d_prime = job.d_prime;
        r.session_seed = sc.seed;
        r.error = e.what();
      }
      r.target_index = job.target;
      r.seed_index = job.seed;
      results[i] = std::move(r);
    }
  };
  unsigned n_threads = cfg.jobs ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return run_key(a) < run_key(b); });
  return results;
}

std::vector<SummaryRow> summarize(std::span<const RunResult> results, std::size_t window) {
  std::map<std::pair<int, std::size_t>, std::vector<const RunResult*>> groups;
  for (const auto& r : results) groups[{static_cast<int>(r.strategy), r.d_prime}].push_back(&r);
  std::vector<SummaryRow> rows;
  for (const auto& [key, runs] : groups) {
    SummaryRow row;
    row.strategy = static_cast<Strategy>(key.first);
    row.d_prime = key.second;
    std::vector<double> finals;
    for (const auto* r : runs) {
      if (r->error) {
        ++row.failures;
        continue;
      }
      finals.push_back(r->final_similarity);
      const auto ma = moving_average(r->similarity_trace, window);
      if (row.mean_curve.size() < ma.size()) row.mean_curve.resize(ma.size(), 0.0);
      for (std::size_t i = 0; i < ma.size(); ++i) row.mean_curve[i] += ma[i];
    }
    row.runs = finals.size();
    if (!finals.empty()) {
      double sum = 0.0;
      for (double f : finals) sum += f;
      row.mean_final = sum / static_cast<double>(finals.size());
      double ss = 0.0;
      for (double f : finals) ss += (f - row.mean_final) * (f - row.mean_final);
      row.sd_final = finals.size() > 1 ? std::sqrt(ss / static_cast<double>(finals.size() - 1)) : 0.0;
      for (double& v : row.mean_curve) v /= static_cast<double>(finals.size());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_results(const std::filesystem::path& dir, std::span<const RunResult> results, std::size_t window) {
  std::filesystem::create_directories(dir / "runs");
  for (const auto& r : results) {
    std::ofstream out(dir / "runs" / run_file_name(r), std::ios::trunc);
    json head = {{"kind", "run"},
                 {"strategy", to_string(r.strategy)},
                 {"d_prime", r.d_prime},
                 {"target", r.target_index},
                 {"seed", r.seed_index},
                 {"session_seed", r.session_seed},
                 {"final_similarity", r.final_similarity}};
    if (r.error) head["error"] = *r.error;
    out << head.dump() << "\n";
    const auto ma = moving_average(r.similarity_trace, window);
    for (std::size_t i = 0; i < r.similarity_trace.size(); ++i) {
      json row = {{"kind", "step"},
                  {"iteration", i + 1},
                  {"similarity", r.similarity_trace[i]},
                  {"moving_average", ma[i]},
                  {"arm", r.chosen_arms[i] ? json(*r.chosen_arms[i]) : json(nullptr)}};
      out << row.dump() << "\n";
    }
  }
  std::ofstream summary(dir / "summary.jsonl", std::ios::trunc);
  for (const auto& row : summarize(results, window)) {
    summary << json{{"strategy", to_string(row.strategy)},
                    {"d_prime", row.d_prime},
                    {"runs", row.runs},
                    {"failures", row.failures},
                    {"mean_final_similarity", row.mean_final},
                    {"sd_final_similarity", row.sd_final},
                    {"mean_moving_average", row.mean_curve}}
                   .dump()
            << "\n";
  }
}

std::vector<RunResult> read_results(const std::filesystem::path& dir) {
  std::vector<RunResult> out;
  const auto runs = dir / "runs";
  if (!std::filesystem::is_directory(runs)) throw Error("no runs/ directory under " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(runs))
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    RunResult r;
    bool have_head = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (j.at("kind") == "run") {
        r.strategy = strategy_from_string(j.at("strategy").get<std::string>());
        r.d_prime = j.at("d_prime").get<std::size_t>();
        r.target_index = j.at("target").get<std::size_t>();
        r.seed_index = j.at("seed").get<std::size_t>();
        r.session_seed = j.at("session_seed").get<std::uint64_t>();
        r.final_similarity = j.at("final_similarity").get<double>();
        if (j.contains("error")) r.error = j.at("error").get<std::string>();
        have_head = true;
      } else {
        r.similarity_trace.push_back(j.at("similarity").get<double>());
        const auto& arm = j.at("arm");
        r.chosen_arms.push_back(arm.is_null() ? std::nullopt : std::optional<std::size_t>(arm.get<std::size_t>()));
      }
    }
    if (!have_head) throw FormatError("run file without header: " + file.string());
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return run_key(a) < run_key(b); });
  return out;
}

}  // namespace latentswipe
