#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include "ahs/training.hpp"

namespace ahs {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::InvalidInput, "train config: " + what);
  };
  if (!(lr0 > 0.0)) fail("lr0 must be positive");
  if (query_batch == 0) fail("query_batch must be >= 1");
  if (!(jitter >= 0.0 && jitter <= 0.1)) fail("jitter must lie in [0, 0.1]");
  if (w_cd < 0.0 || w_local < 0.0 || w_udf < 0.0 || w_aux < 0.0) {
    fail("loss weights must be non-negative");
  }
  if (w_cd + w_local + w_udf <= 0.0) fail("all loss weights are zero");
  if (select_period == 0) fail("select_period must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    fail("betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (!(offset_step > 0.0)) fail("offset_step must be positive");
  if (!(alpha_min > 0.0 && alpha_min <= alpha_max && alpha_max < 1.0)) {
    fail("alpha range must satisfy 0 < min <= max < 1");
  }
}

DivergenceError::DivergenceError(std::size_t step, const LossReport& last_finite)
    : Error(ErrorKind::Divergence,
            "non-finite loss at step " + std::to_string(step)),
      step_(step),
      last_(last_finite) {}

double cosine_lr(double lr0, std::size_t step, std::size_t steps) {
  if (steps == 0) return lr0;
  const double t = static_cast<double>(step) / static_cast<double>(steps);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

Adam::Adam(std::size_t size, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad,
                double lr) {
  const std::vector<double> ones(params.size(), 1.0);
  step(params, grad, lr, ones);
}

void Adam::step(std::span<double> params, std::span<const double> grad,
                double lr, std::span<const double> scale) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= scale[i] * lr * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

void Adam::rescale(std::size_t i, double factor) {
  m_[i] *= factor;
  v_[i] *= factor * factor;
}

namespace {

/// Ones on the flat coordinates owned by variant v.
std::array<double, RawParams::kSize> variant_flags(Variant v) {
  RawParams marker = RawParams::zero();
  switch (v) {
    case Variant::Plane:
      marker.plane = Vec3::Ones();
      break;
    case Variant::Dihedral:
      marker.dihedral = {Vec3::Ones(), Vec3::Ones()};
      marker.dihedral_offset = Vec3::Ones();
      break;
    case Variant::Trihedral:
      marker.trihedral = {Vec3::Ones(), Vec3::Ones(), Vec3::Ones()};
      marker.trihedral_offset = Vec3::Ones();
      break;
  }
  std::array<double, RawParams::kSize> flags{};
  marker.write(flags.data());
  return flags;
}

}  // namespace

FitResult fit(ModelState state, const TrainConfig& config,
              const StepCallback& on_step) {
  config.validate();
  FitResult result;
  if (config.steps == 0) {
    result.state = std::move(state);
    return result;
  }

  const std::size_t n = state.size();
  constexpr std::size_t P = RawParams::kSize;
  Rng rng(config.seed);
  Adam adam(n * P, config.beta1, config.beta2, config.adam_eps);
  std::vector<double> flat_params(n * P);
  std::vector<double> flat_grad(n * P);
  Gradient grad(n);
  std::vector<double> step_scale(n * P, 1.0);
  {
    RawParams marker = RawParams::zero();
    marker.dihedral_offset = Vec3::Ones();
    marker.trihedral_offset = Vec3::Ones();
    std::array<double, P> flags{};
    marker.write(flags.data());
    for (std::size_t i = 0; i < n * P; ++i) {
      if (flags[i % P] != 0.0) step_scale[i] = config.offset_step;
    }
  }

  std::array<std::array<double, P>, 3> owned;
  for (const Variant v : geometry::kVariants) owned[static_cast<int>(v)] = variant_flags(v);
  std::vector<Variant> before(n);
  auto reselect = [&] {
    for (std::size_t i = 0; i < n; ++i) before[i] = state.params[i].selected;
    if (select_all(state) == 0 || config.w_aux <= 0.0) return;
    for (std::size_t i = 0; i < n; ++i) {
      const Variant now = state.params[i].selected;
      if (now == before[i]) continue;
      const auto& lost = owned[static_cast<int>(before[i])];
      const auto& won = owned[static_cast<int>(now)];
      for (std::size_t c = 0; c < P; ++c) {
        if (lost[c] != 0.0) adam.rescale(i * P + c, config.w_aux);
        if (won[c] != 0.0) adam.rescale(i * P + c, 1.0 / config.w_aux);
      }
    }
  };

  select_all(state);
  result.trace.reserve(config.steps);
  LossReport last;
  for (std::size_t t = 0; t < config.steps; ++t) {
    const double lr = cosine_lr(config.lr0, t, config.steps);
    const auto queries =
        sample_queries(*state.cloud, config.query_batch, config.jitter, rng);
    const auto alphas = sample_alphas(config.query_batch, config.alpha_min,
                                      config.alpha_max, rng);

    std::fill(grad.begin(), grad.end(), RawParams::zero());
    const LossTerms terms = total_loss(state, queries, alphas, config, &grad);

    LossReport report{t, lr, terms.l_cd, terms.l_local, terms.l_udf, terms.total};
    if (!std::isfinite(terms.total)) throw DivergenceError(t, last);

    for (std::size_t i = 0; i < n; ++i) {
      state.params[i].raw.write(&flat_params[i * P]);
      grad[i].write(&flat_grad[i * P]);
    }
    adam.step(flat_params, flat_grad, lr, step_scale);
    for (std::size_t i = 0; i < n; ++i) state.params[i].raw.read(&flat_params[i * P]);

    result.trace.push_back(report);
    last = report;
    if (on_step) on_step(report);
    if ((t + 1) % config.select_period == 0) reselect();
  }
  if (config.steps % config.select_period != 0) select_all(state);
  result.state = std::move(state);
  return result;
}

void write_loss_csv(std::ostream& out, std::span<const LossReport> trace) {
  out << "step,lr,l_cd,l_local,l_udf,total\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : trace) {
    out << r.step << ',' << r.lr << ',' << r.l_cd << ',' << r.l_local << ','
        << r.l_udf << ',' << r.total << '\n';
  }
  out.precision(old_precision);
}

}  // namespace ahs
