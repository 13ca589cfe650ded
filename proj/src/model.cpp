#include "ruinsim/model.hpp"

#include <algorithm>
#include <cmath>

#include "ruinsim/errors.hpp"

namespace ruinsim {

namespace {

constexpr double kLogSpaceLow = 1e-6;
constexpr double kLogSpaceHigh = 1e6;

void require_positive_horizon(int n) {
  if (n < 1) throw SpecError("horizon n must be at least 1");
}

// Discount product prod_{j<=i} Y_j, switched to log space once any factor is
// extreme.
class DiscountProduct {
 public:
  double apply(double y) {
    if (!log_mode_ && (y < kLogSpaceLow || y > kLogSpaceHigh)) {
      log_mode_ = true;
      log_value_ = std::log(value_);
    }
    if (log_mode_) {
      log_value_ += std::log(y);
      return std::exp(log_value_);
    }
    value_ *= y;
    return value_;
  }

 private:
  double value_ = 1.0;
  double log_value_ = 0.0;
  bool log_mode_ = false;
};

template <class Draw>
PathSample forward_path(int n, Draw&& draw) {
  require_positive_horizon(n);
  DiscountProduct discount;
  double s = 0.0;
  double m = 0.0;
  for (int i = 1; i <= n; ++i) {
    const auto [x, y] = draw();
    s += x * discount.apply(y);
    m = std::max(m, s);
  }
  return {s, m, n};
}

template <class Draw>
double backward_recursion(int n, Draw&& draw) {
  require_positive_horizon(n);
  double t = 0.0;
  for (int k = 1; k <= n; ++k) {
    const auto [x, y] = draw();
    t = (x + t) * y;
  }
  return t;
}

template <class Draw>
double max_recursion(int n, Draw&& draw) {
  require_positive_horizon(n);
  double m = 0.0;
  for (int k = 1; k <= n; ++k) {
    const auto [x, y] = draw();
    m = std::max(0.0, x + m) * y;
  }
  return m;
}

}  // namespace

std::string horizon_label(const Horizon& h) {
  if (const auto* f = std::get_if<FiniteHorizon>(&h)) return std::to_string(f->n);
  return "inf";
}

std::string to_string(Target t) { return t == Target::SumS ? "S" : "M"; }

void ModelSpec::validate() const {
  if (g.support_lower() < 0.0) throw SpecError("model: g must be supported on (0, inf)");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw SpecError("model: alpha must be positive");
  if (const auto* fgm = std::get_if<FgmDependence>(&dependence)) {
    FgmPairSpec{fgm->theta, f, g}.validate();
  }
  if (const auto* fin = std::get_if<FiniteHorizon>(&horizon)) {
    require_positive_horizon(fin->n);
  } else {
    const double tol = std::get<InfiniteHorizon>(horizon).truncation_tol;
    if (!(tol > 0.0 && tol < 1.0)) throw SpecError("model: truncation_tol must lie in (0,1)");
    if (!(mu_alpha() < 1.0)) throw PreconditionError("infinite horizon requires mu_alpha < 1");
  }
}

double ModelSpec::mu_alpha() const { return upper_moment(g, alpha); }

double ModelSpec::theta() const noexcept {
  if (const auto* fgm = std::get_if<FgmDependence>(&dependence)) return fgm->theta;
  return 0.0;
}

int truncation_level(double mu_alpha, double tol) {
  if (!(mu_alpha > 0.0 && mu_alpha < 1.0)) {
    throw PreconditionError("infinite horizon requires mu_alpha < 1");
  }
  if (!(tol > 0.0 && tol < 1.0)) throw SpecError("truncation tolerance must lie in (0,1)");
  const double n = std::ceil(std::log(tol * (1.0 - mu_alpha) / mu_alpha) / std::log(mu_alpha));
  return std::max(1, static_cast<int>(n));
}

std::pair<double, double> draw_pair(const ModelSpec& spec, RngStream& rng) {
  if (const auto* fgm = std::get_if<FgmDependence>(&spec.dependence)) {
    return sample_fgm(FgmPairSpec{fgm->theta, spec.f, spec.g}, rng);
  }
  const double x = spec.f.sample(rng);
  const double y = spec.g.sample(rng);
  return {x, y};
}

PathSimulator::PathSimulator(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  mu_alpha_ = spec_.mu_alpha();
  if (const auto* fin = std::get_if<FiniteHorizon>(&spec_.horizon)) {
    horizon_ = fin->n;
  } else {
    horizon_ = truncation_level(mu_alpha_, std::get<InfiniteHorizon>(spec_.horizon).truncation_tol);
  }
  if (const auto* fgm = std::get_if<FgmDependence>(&spec_.dependence)) {
    fgm_ = FgmPairSpec{fgm->theta, spec_.f, spec_.g};
  }
}

std::pair<double, double> PathSimulator::draw(RngStream& rng) const {
  if (fgm_) return sample_fgm(*fgm_, rng);
  const double x = spec_.f.sample(rng);
  const double y = spec_.g.sample(rng);
  return {x, y};
}

PathSample PathSimulator::path(int n, RngStream& rng) const {
  return forward_path(n, [&] { return draw(rng); });
}

void PathSimulator::prefixes(std::span<PathSample> out, RngStream& rng) const {
  DiscountProduct discount;
  double s = 0.0;
  double m = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto [x, y] = draw(rng);
    s += x * discount.apply(y);
    m = std::max(m, s);
    out[k] = {s, m, static_cast<int>(k + 1)};
  }
}

double PathSimulator::backward_sum(int n, RngStream& rng) const {
  return backward_recursion(n, [&] { return draw(rng); });
}

double PathSimulator::recursive_max(int n, RngStream& rng) const {
  return max_recursion(n, [&] { return draw(rng); });
}

PathSample simulate_path(const ModelSpec& spec, int n, RngStream& rng) {
  return forward_path(n, [&] { return draw_pair(spec, rng); });
}

double simulate_T(const ModelSpec& spec, int n, RngStream& rng) {
  return backward_recursion(n, [&] { return draw_pair(spec, rng); });
}

double simulate_M_recursive(const ModelSpec& spec, int n, RngStream& rng) {
  return max_recursion(n, [&] { return draw_pair(spec, rng); });
}

PathSample simulate_truncated_infinite(const ModelSpec& spec, RngStream& rng) {
  const auto* inf = std::get_if<InfiniteHorizon>(&spec.horizon);
  const double tol = inf ? inf->truncation_tol : 1e-6;
  const int n = truncation_level(spec.mu_alpha(), tol);
  return simulate_path(spec, n, rng);
}

}  // namespace ruinsim
