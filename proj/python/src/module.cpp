#include "latentswipe/bandit.hpp"
#include "latentswipe/engine.hpp"
#include "latentswipe/errors.hpp"
#include "latentswipe/genkit.hpp"
#include "latentswipe/prefgp.hpp"
#include "latentswipe/simlab.hpp"
#include "latentswipe/subspace.hpp"

#include <cstring>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace latentswipe;

namespace {

Strategy strategy_of(const std::string& name) { return strategy_from_string(name); }

py::bytes png_bytes(const std::vector<std::uint8_t>& png) {
  return py::bytes(reinterpret_cast<const char*>(png.data()), png.size());
}

}  // namespace

PYBIND11_MODULE(_latentswipe, m) {
  m.doc() = "latentswipe core bindings";
  m.attr("__version__") = "0.1.0";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", error.ptr());
  py::register_exception<ConfigMismatch>(m, "ConfigMismatch", error.ptr());
  py::register_exception<SessionFinished>(m, "SessionFinished", error.ptr());
  py::register_exception<UnfittedModel>(m, "UnfittedModel", error.ptr());
  py::register_exception<TooFewSamples>(m, "TooFewSamples", error.ptr());

  py::class_<Interval>(m, "Interval")
      .def(py::init<double, double>(), py::arg("low"), py::arg("high"))
      .def_readwrite("low", &Interval::low)
      .def_readwrite("high", &Interval::high)
      .def("__repr__", [](const Interval& iv) {
        return "Interval(" + std::to_string(iv.low) + ", " + std::to_string(iv.high) + ")";
      });

  py::class_<SubspaceMap, std::shared_ptr<SubspaceMap>>(m, "SubspaceMap")
      .def_property_readonly("d", &SubspaceMap::d)
      .def_property_readonly("d_prime", &SubspaceMap::d_prime)
      .def_property_readonly("mean", &SubspaceMap::mean)
      .def_property_readonly("basis", &SubspaceMap::basis)
      .def_property_readonly("explained_variance", &SubspaceMap::explained_variance)
      .def("project", &SubspaceMap::project)
      .def("inverse", &SubspaceMap::inverse)
      .def("search_box", &SubspaceMap::search_box, py::arg("c") = kDefaultBoxConstant)
      .def("to_string", &SubspaceMap::to_string)
      .def_static("from_string", [](const std::string& s) { return std::make_shared<SubspaceMap>(SubspaceMap::from_string(s)); });

  m.def(
      "fit_subspace",
      [](const std::vector<Vector>& samples, std::size_t d_prime) {
        return std::make_shared<SubspaceMap>(fit_subspace(samples, d_prime));
      },
      py::arg("samples"), py::arg("d_prime"));

  py::class_<LaplaceOptions>(m, "LaplaceOptions")
      .def(py::init<>())
      .def_readwrite("likelihood_noise", &LaplaceOptions::likelihood_noise)
      .def_readwrite("newton_tol", &LaplaceOptions::newton_tol)
      .def_readwrite("max_newton_iters", &LaplaceOptions::max_newton_iters);

  py::class_<PreferenceModel>(m, "PreferenceModel")
      .def(py::init([](const std::vector<Interval>& box, LaplaceOptions options) {
             return PreferenceModel::for_box(box, options);
           }),
           py::arg("box"), py::arg("options") = LaplaceOptions{})
      .def_property_readonly("dim", &PreferenceModel::dim)
      .def_property_readonly("size", &PreferenceModel::size)
      .def_property_readonly("fitted", &PreferenceModel::fitted)
      .def_property_readonly("map_utilities", &PreferenceModel::map_utilities)
      .def("add_observation", &PreferenceModel::add_observation, py::arg("a"), py::arg("b"), py::arg("a_wins"))
      .def("fit", &PreferenceModel::fit)
      .def("posterior",
           [](const PreferenceModel& model, const Vector& x) {
             const Posterior p = model.posterior(x);
             return py::make_tuple(p.mean, p.variance);
           })
      .def("incumbent", &PreferenceModel::incumbent)
      .def("log_marginal_likelihood", &PreferenceModel::log_marginal_likelihood);

  py::class_<BanditState>(m, "BanditState")
      .def(py::init<std::size_t, double>(), py::arg("arms"), py::arg("alpha") = kDefaultBanditAlpha)
      .def_property_readonly("t", &BanditState::t)
      .def("ucb_scores", py::overload_cast<std::uint64_t>(&BanditState::ucb_scores, py::const_), py::arg("t"))
      .def("select_arm", &BanditState::select_arm)
      .def("record_reward", &BanditState::record_reward, py::arg("arm"), py::arg("reward"))
      .def("pulls", [](const BanditState& b) {
        std::vector<std::uint64_t> out;
        for (const auto& a : b.stats()) out.push_back(a.pulls);
        return out;
      });

  py::class_<SessionConfig>(m, "SessionConfig")
      .def(py::init([](const std::string& strategy, std::size_t d, std::size_t d_prime, std::uint64_t seed,
                       std::size_t budget, const std::string& pivot) {
             SessionConfig c;
             c.strategy = strategy_of(strategy);
             c.d = d;
             c.d_prime = d_prime;
             c.seed = seed;
             c.max_comparisons = budget;
             c.pivot = pivot_from_string(pivot);
             return c;
           }),
           py::arg("strategy") = "banditbo", py::arg("d") = 64, py::arg("d_prime") = 8, py::arg("seed") = 0,
           py::arg("budget") = kDefaultBudget, py::arg("pivot") = "winner")
      .def_property_readonly("strategy", [](const SessionConfig& c) { return std::string(to_string(c.strategy)); })
      .def_readonly("d", &SessionConfig::d)
      .def_readonly("d_prime", &SessionConfig::d_prime)
      .def_readonly("seed", &SessionConfig::seed)
      .def_readonly("budget", &SessionConfig::max_comparisons);

  py::class_<Session>(m, "Session")
      .def(py::init([](const SessionConfig& c, std::shared_ptr<SubspaceMap> map) {
             return Session(c, std::move(map));
           }),
           py::arg("config"), py::arg("subspace"))
      .def_property_readonly("previous", &Session::previous)
      .def_property_readonly("current", &Session::current)
      .def_property_readonly("current_arm", &Session::current_arm)
      .def_property_readonly("iteration", &Session::iteration)
      .def_property_readonly("finished", &Session::finished)
      .def_property_readonly("rng_cursor", &Session::rng_cursor)
      .def_property_readonly("box", &Session::box)
      .def("submit_feedback", &Session::submit_feedback, py::arg("current_won"),
           py::arg("decision_time_ms") = std::nullopt)
      .def("final_choice", &Session::final_choice)
      .def("shown", [](const Session& s) {
        std::vector<Vector> out;
        for (const auto& p : s.shown()) out.push_back(p.coords);
        return out;
      });

  py::class_<ProceduralGenerator, std::shared_ptr<ProceduralGenerator>>(m, "ProceduralGenerator")
      .def(py::init<std::size_t, std::size_t>(), py::arg("latent_dim") = 64, py::arg("image_size") = 256)
      .def("sample_latents", &ProceduralGenerator::sample_latents, py::arg("n"), py::arg("seed"))
      .def("embed", &ProceduralGenerator::embed)
      .def("face_parameters", &ProceduralGenerator::face_parameters)
      .def("render_png", [](const ProceduralGenerator& g, const Vector& w) { return png_bytes(g.render_png(w)); })
      .def("render",
           [](const ProceduralGenerator& g, const Vector& w) {
             const ImageBuffer img = g.render(w);
             py::array_t<std::uint8_t> out({img.height, img.width, std::size_t{3}});
             std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
             return out;
           })
      .def_property_readonly("latent_dim", [](const ProceduralGenerator& g) { return g.descriptor().latent_dim; });

  m.def("cosine_similarity", &cosine_similarity);

  py::class_<SimilarityOracle>(m, "SimilarityOracle")
      .def(py::init([](std::shared_ptr<ProceduralGenerator> gen, std::shared_ptr<SubspaceMap> map, const Vector& target) {
             return SimilarityOracle(*gen, std::move(map), target);
           }),
           py::arg("generator"), py::arg("subspace"), py::arg("target"), py::keep_alive<1, 2>())
      .def("similarity", &SimilarityOracle::similarity)
      .def("current_wins", &SimilarityOracle::current_wins, py::arg("previous"), py::arg("current"));

  m.def("moving_average", [](const std::vector<double>& trace, std::size_t window) { return moving_average(trace, window); },
        py::arg("trace"), py::arg("window") = kDefaultMovingAverageWindow);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_property(
          "strategies",
          [](const ExperimentConfig& c) {
            std::vector<std::string> out;
            for (auto s : c.strategies) out.emplace_back(to_string(s));
            return out;
          },
          [](ExperimentConfig& c, const std::vector<std::string>& names) {
            c.strategies.clear();
            for (const auto& n : names) c.strategies.push_back(strategy_of(n));
          })
      .def_readwrite("d_primes", &ExperimentConfig::d_primes)
      .def_readwrite("targets", &ExperimentConfig::targets)
      .def_readwrite("seeds", &ExperimentConfig::seeds)
      .def_readwrite("budget", &ExperimentConfig::budget)
      .def_readwrite("pca_population", &ExperimentConfig::pca_population)
      .def_readwrite("jobs", &ExperimentConfig::jobs);

  m.def(
      "run_experiment",
      [](const ExperimentConfig& cfg, std::shared_ptr<ProceduralGenerator> gen) {
        std::vector<RunResult> results;
        {
          py::gil_scoped_release release;
          results = run_experiment(cfg, *gen);
        }
        py::list out;
        for (const auto& r : results) {
          py::dict d;
          d["strategy"] = std::string(to_string(r.strategy));
          d["d_prime"] = r.d_prime;
          d["target"] = r.target_index;
          d["seed"] = r.seed_index;
          d["similarity_trace"] = r.similarity_trace;
          d["final_similarity"] = r.final_similarity;
          d["error"] = r.error;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("generator"));
}
