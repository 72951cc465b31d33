#include "latentswipe/acquire.hpp"

#include "latentswipe/errors.hpp"
#include "latentswipe/maximize1d.hpp"

#include <cmath>
#include <numbers>

namespace latentswipe {

double expected_improvement(double mean, double variance, double best) {
  const double sigma = std::sqrt(variance);
  const double delta = mean - best;
  if (sigma < 1e-12) return std::max(delta, 0.0);
  const double z = delta / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return delta * cdf + sigma * pdf;
}

std::string_view to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::ucb:
      return "ucb";
    case AcquisitionKind::expected_improvement:
      return "ei";
  }
  return "ucb";
}

AcquisitionKind acquisition_kind_from_string(std::string_view name) {
  if (name == "ucb") return AcquisitionKind::ucb;
  if (name == "ei" || name == "expected_improvement") return AcquisitionKind::expected_improvement;
  throw Error("unknown acquisition kind: " + std::string(name));
}

Acquisition::Acquisition(AcquisitionSpec spec, const PreferenceModel& model, const Box& box)
    : spec_(spec), model_(&model) {
  if (!std::isfinite(spec_.beta) || spec_.beta < 0.0) throw Error("acquisition beta must be finite and >= 0");
  if (model.dim() != box.size()) throw DimensionMismatch("acquisition: box does not match model dimension");
  if (spec_.kind == AcquisitionKind::expected_improvement && model.fitted() && !model.empty())
    best_mean_ = model.posterior(model.incumbent(box)).mean;
}

Vector Acquisition::batch(const Matrix& queries) const {
  Vector mean, variance;
  if (model_->fitted()) {
    model_->posterior_batch(queries, mean, variance);
  } else {
    if (static_cast<std::size_t>(queries.rows()) != model_->dim())
      throw DimensionMismatch("acquisition: query length does not match model dimension");
    mean = Vector::Zero(queries.cols());
    variance = Vector::Constant(queries.cols(), model_->kernel().signal_variance);
  }
  return combine(mean, variance);
}

Vector Acquisition::line(const Vector& base, std::size_t axis, const Vector& ts) const {
  Vector mean, variance;
  if (model_->fitted()) {
    model_->posterior_line(base, axis, ts, mean, variance);
  } else {
    mean = Vector::Zero(ts.size());
    variance = Vector::Constant(ts.size(), model_->kernel().signal_variance);
  }
  return combine(mean, variance);
}

Vector Acquisition::combine(const Vector& mean, const Vector& variance) const {
  Vector out(mean.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = spec_.kind == AcquisitionKind::ucb
                 ? mean[i] + spec_.beta * std::sqrt(variance[i])
                 : expected_improvement(mean[i], variance[i], best_mean_);
  }
  return out;
}

double Acquisition::operator()(const Vector& query) const { return batch(query)[0]; }

double evaluate(const AcquisitionSpec& spec, const PreferenceModel& model, const Vector& query,
                const Box& box) {
  return Acquisition(spec, model, box)(query);
}

double maximize_1d(const AcquisitionSpec& spec, const PreferenceModel& model, Interval interval) {
  if (model.dim() != 1) throw DimensionMismatch("maximize_1d needs a 1-D model");
  if (!(interval.high > interval.low)) return interval.low;
  const Acquisition acq(spec, model, Box{interval});
  auto fn = [&](const Vector& xs) { return acq.batch(xs.transpose()); };
  return grid_golden_maximize(fn, interval).x;
}

Vector maximize_nd(const AcquisitionSpec& spec, const PreferenceModel& model, const Box& box,
                   int restarts, CountingRng& rng) {
  if (restarts < 1) throw Error("maximize_nd needs restarts >= 1");
  if (model.dim() != box.size()) throw DimensionMismatch("maximize_nd: box does not match model dimension");
  for (const auto& iv : box)
    if (iv.high < iv.low) throw Error("maximize_nd: invalid box");

  const Acquisition acq(spec, model, box);
  const auto dim = static_cast<Eigen::Index>(box.size());

  Vector best_x;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Vector x(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      const auto& iv = box[static_cast<std::size_t>(j)];
      x[j] = rng.uniform(iv.low, iv.high);
    }
    double value = acq(x);
    for (int sweep = 0; sweep < kCoordinateSweeps; ++sweep) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        const auto& iv = box[static_cast<std::size_t>(j)];
        if (!(iv.high > iv.low)) continue;
        auto slice = [&](const Vector& xs) { return acq.line(x, static_cast<std::size_t>(j), xs); };
        const Maximum1d m = grid_golden_maximize(slice, iv);
        if (m.value > value) {
          x[j] = m.x;
          value = m.value;
        }
      }
    }
    if (value > best_value) {
      best_value = value;
      best_x = std::move(x);
    }
  }
  return best_x;
}

}  // namespace latentswipe
