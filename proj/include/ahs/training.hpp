#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "ahs/model.hpp"

namespace ahs {

using Rng = std::mt19937_64;
using Gradient = std::vector<RawParams>;

struct TrainConfig {
  std::size_t steps = 800;
  double lr0 = 1e-3;
  std::size_t query_batch = 6000;
  double jitter = 0.03;
  double w_cd = 1.0;
  double w_local = 1.0;
  double w_udf = 1.0;
  /// Factor on the residuals of the enabled, non-selected variants inside
  /// L_local.
  double w_aux = 0.1;
  std::uint64_t seed = 0;
  std::size_t select_period = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double alpha_min = 0.1;
  double alpha_max = 0.9;
  /// Multiplier on the Adam step of the raw apex offsets.
  double offset_step = 20.0;

  /// Throws InvalidInput on out-of-range values.
  void validate() const;
};

struct LossReport {
  std::size_t step = 0;
  double lr = 0.0;
  double l_cd = 0.0;
  double l_local = 0.0;
  double l_udf = 0.0;
  double total = 0.0;

  bool operator==(const LossReport&) const = default;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const LossReport& last_finite);

  std::size_t step() const noexcept { return step_; }
  const LossReport& last_finite() const noexcept { return last_; }

 private:
  std::size_t step_;
  LossReport last_;
};

/// Cloud point chosen uniformly plus a per-component U(-jitter, jitter) offset.
std::vector<Vec3> sample_queries(const PointCloud& cloud, std::size_t m,
                                 double jitter, Rng& rng);

std::vector<double> sample_alphas(std::size_t m, double lo, double hi, Rng& rng);

// Each loss returns its value and, when `grad` is given, adds
// weight * d(loss)/d(params) into it (one slot per cloud point).

/// Mean L1 distance from each projected query q + s(q) to its L1-nearest
/// cloud point. The nearest-point assignment is piecewise constant.
double loss_cd(const ModelState& state, std::span<const Vec3> queries,
               Gradient* grad = nullptr, double weight = 1.0);

/// Mean over points of the selected variant's neighbor residual plus
/// aux_weight times the residuals of the enabled, non-selected variants
/// (which keeps them trainable between selections).
double loss_local(const ModelState& state, Gradient* grad = nullptr,
                  double weight = 1.0, double aux_weight = 0.1);

/// Mean over points of the summed residuals of the enabled, non-selected
/// variants, unweighted.
double loss_aux(const ModelState& state, Gradient* grad = nullptr,
                double weight = 1.0);

/// Mean over queries of || s(q + a s(q)) / (1 - a) - s(q) ||.
double loss_udf(const ModelState& state, std::span<const Vec3> queries,
                std::span<const double> alphas, Gradient* grad = nullptr,
                double weight = 1.0);

double loss_udf(const ModelState& state, std::span<const Vec3> queries,
                Rng& rng, double alpha_min = 0.1, double alpha_max = 0.9);

struct LossTerms {
  double l_cd = 0.0;
  double l_local = 0.0;     // l_selected + w_aux * l_aux
  double l_udf = 0.0;
  double l_selected = 0.0;  // selected-variant residual alone
  double l_aux = 0.0;
  double total = 0.0;       // w_cd l_cd + w_local l_local + w_udf l_udf
};

/// All terms at once, sharing the field evaluations between L_CD and L_UDF.
LossTerms total_loss(const ModelState& state, std::span<const Vec3> queries,
                     std::span<const double> alphas, const TrainConfig& config,
                     Gradient* grad = nullptr);

double cosine_lr(double lr0, std::size_t step, std::size_t steps);

class Adam {
 public:
  Adam(std::size_t size, double beta1, double beta2, double eps);

  void step(std::span<double> params, std::span<const double> grad, double lr);
  /// Same, with a per-coordinate factor on the step.
  void step(std::span<double> params, std::span<const double> grad, double lr,
            std::span<const double> scale);
  /// Moments of coordinate i as if its past gradients had been multiplied
  /// by factor.
  void rescale(std::size_t i, double factor);

 private:
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct FitResult {
  ModelState state;
  std::vector<LossReport> trace;
};

using StepCallback = std::function<void(const LossReport&)>;

/// Optimizes every raw parameter; re-selects geometry at the start, every
/// select_period steps and at the end. When a point's selection changes, the
/// Adam moments of the two variants involved are rescaled by the change of
/// their weight in l_local (1 vs w_aux). Throws DivergenceError on a
/// non-finite loss.
FitResult fit(ModelState state, const TrainConfig& config,
              const StepCallback& on_step = {});

void write_loss_csv(std::ostream& out, std::span<const LossReport> trace);

}  // namespace ahs
