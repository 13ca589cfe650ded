#include "ruinsim/distributions.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/lambert_w.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "ruinsim/errors.hpp"
#include "ruinsim/quadrature.hpp"

namespace ruinsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* what) {
  if (!ok) throw SpecError(what);
}

// Solves alpha t + beta log1p(t) = y for t >= 0. With s = 1 + t this is
// s = (beta/alpha) W((alpha/beta) e^{(y+alpha)/beta}); when the argument of the
// Lambert W would overflow, Halley iteration inside the bracket
// [(y - beta log1p(y/alpha)) / alpha, y / alpha] takes over.
double rv_star_log_quantile(const RvStarLaw& law, double y) {
  if (y <= 0.0) return 0.0;
  const double a = law.alpha;
  const double b = law.beta;
  const double exponent = (y + a) / b;
  if (exponent < 700.0) {
    const double t = (b / a) * boost::math::lambert_w0((a / b) * std::exp(exponent)) - 1.0;
    return std::max(t, 0.0);
  }
  double lo = std::max(0.0, (y - b * std::log1p(y / a)) / a);
  double hi = y / a;
  double t = lo;
  for (int iter = 0; iter < 200; ++iter) {
    const double h = a * t + b * std::log1p(t) - y;
    if (h < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    const double inv = 1.0 / (1.0 + t);
    const double d1 = a + b * inv;
    const double d2 = -b * inv * inv;
    double next = t - 2.0 * h * d1 / (2.0 * d1 * d1 - h * d2);
    if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - t);
    t = next;
    if (step <= 1e-12 * (1.0 + t) || hi - lo <= 1e-15 * (1.0 + t)) break;
  }
  return t;
}

double normal_upper_quantile(double w) {
  // z with Pr(N(0,1) > z) = w.
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * w);
}

double normal_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double base_tail(const BaseLaw& law, double x) {
  return std::visit(
      Overloaded{
          [x](const RvStarLaw& l) {
            if (x <= l.scale) return 1.0;
            const double t = std::log(x / l.scale);
            return std::exp(-l.alpha * t - l.beta * std::log1p(t));
          },
          [x](const ParetoLaw& l) {
            if (x <= l.scale) return 1.0;
            return std::pow(x / l.scale, -l.alpha);
          },
          [x](const LognormalLaw& l) {
            if (x <= 0.0) return 1.0;
            return normal_tail((std::log(x) - l.mu) / l.sigma);
          },
      },
      law);
}

double base_density(const BaseLaw& law, double x) {
  return std::visit(
      Overloaded{
          [x](const RvStarLaw& l) {
            if (x < l.scale) return 0.0;
            const double t = std::log(x / l.scale);
            const double tail = std::exp(-l.alpha * t - l.beta * std::log1p(t));
            return tail * (l.alpha + l.beta / (1.0 + t)) / x;
          },
          [x](const ParetoLaw& l) {
            if (x < l.scale) return 0.0;
            return l.alpha / x * std::pow(x / l.scale, -l.alpha);
          },
          [x](const LognormalLaw& l) {
            if (x <= 0.0) return 0.0;
            const double z = (std::log(x) - l.mu) / l.sigma;
            return std::exp(-0.5 * z * z) / (x * l.sigma * std::sqrt(2.0 * std::numbers::pi));
          },
      },
      law);
}

// Quantile given y = -log(tail probability).
double base_quantile_from_log_tail(const BaseLaw& law, double y, double w) {
  return std::visit(
      Overloaded{
          [y](const RvStarLaw& l) { return l.scale * std::exp(rv_star_log_quantile(l, y)); },
          [y](const ParetoLaw& l) { return l.scale * std::exp(y / l.alpha); },
          [w](const LognormalLaw& l) {
            return std::exp(l.mu + l.sigma * normal_upper_quantile(w));
          },
      },
      law);
}

double base_support_lower(const BaseLaw& law) {
  return std::visit(Overloaded{
                        [](const RvStarLaw& l) { return l.scale; },
                        [](const ParetoLaw& l) { return l.scale; },
                        [](const LognormalLaw&) { return 0.0; },
                    },
                    law);
}

double base_moment(const BaseLaw& law, double a) {
  return std::visit(
      Overloaded{
          [a](const RvStarLaw& l) {
            if (a > l.alpha) return kInf;
            if (a == l.alpha) return std::pow(l.scale, a) * (1.0 + a / (l.beta - 1.0));
            const double gap = l.alpha - a;
            const double beta = l.beta;
            const double integral = integrate(
                [gap, beta](double t) { return std::exp(-gap * t - beta * std::log1p(t)); }, 0.0,
                kInf, {.rel_tol = 1e-12, .abs_tol = 1e-15});
            return std::pow(l.scale, a) * (1.0 + a * integral);
          },
          [a](const ParetoLaw& l) {
            if (a >= l.alpha) return kInf;
            return std::pow(l.scale, a) * l.alpha / (l.alpha - a);
          },
          [a](const LognormalLaw& l) {
            return std::exp(a * l.mu + 0.5 * a * a * l.sigma * l.sigma);
          },
      },
      law);
}

// Integral over [0, inf) of a x^{a-1} h(x) dx, a > 0, for bounded h that
// decays beyond the last breakpoint. For a < 1 the first piece uses z = x^a
// to remove the x^{a-1} singularity; the far tail is integrated on a log axis.
double power_weighted_integral(const std::function<double(double)>& h, double a,
                               std::vector<double> breakpoints) {
  const QuadratureOptions opts{.rel_tol = 1e-11, .abs_tol = 1e-16};
  breakpoints.push_back(1.0);
  std::erase_if(breakpoints, [](double b) { return !(b > 0.0) || !std::isfinite(b); });
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

  auto weighted = [&](double x) { return a * std::pow(x, a - 1.0) * h(x); };
  double total = a < 1.0 ? integrate([&](double z) { return h(std::pow(z, 1.0 / a)); }, 0.0,
                                     std::pow(breakpoints.front(), a), opts)
                         : integrate(weighted, 0.0, breakpoints.front(), opts);
  total += integrate_piecewise(weighted, breakpoints, opts);

  const double s0 = std::log(breakpoints.back());
  auto in_log = [&](double s) {
    const double hv = h(std::exp(s));
    if (hv == 0.0) return 0.0;
    return std::copysign(a * std::exp(a * s + std::log(std::abs(hv))), hv);
  };
  const std::vector<double> log_points{s0,       s0 + 0.5,  s0 + 1.0,  s0 + 2.0, s0 + 4.0,
                                       s0 + 8.0, s0 + 16.0, s0 + 32.0, s0 + 64.0};
  total += integrate_piecewise(in_log, log_points, opts);
  total += integrate(in_log, log_points.back(), kInf, opts);
  return total;
}

}  // namespace

TailDistribution TailDistribution::rv_star(double alpha, double beta, double scale) {
  require(alpha > 0.0 && std::isfinite(alpha), "rvstar: alpha must be positive");
  require(beta > 1.0 && std::isfinite(beta), "rvstar: beta must exceed 1");
  require(scale > 0.0 && std::isfinite(scale), "rvstar: scale must be positive");
  return TailDistribution(RvStarLaw{alpha, beta, scale});
}

TailDistribution TailDistribution::pareto(double alpha, double scale) {
  require(alpha > 0.0 && std::isfinite(alpha), "pareto: alpha must be positive");
  require(scale > 0.0 && std::isfinite(scale), "pareto: scale must be positive");
  return TailDistribution(ParetoLaw{alpha, scale});
}

TailDistribution TailDistribution::lognormal(double mu, double sigma) {
  require(std::isfinite(mu), "lognormal: mu must be finite");
  require(sigma > 0.0 && std::isfinite(sigma), "lognormal: sigma must be positive");
  return TailDistribution(LognormalLaw{mu, sigma});
}

TailDistribution TailDistribution::shifted(const TailDistribution& inner, double offset) {
  require(std::isfinite(offset), "shifted: offset must be finite");
  TailDistribution out(inner.base_);
  out.offset_ = inner.offset_ + offset;
  out.shifted_ = true;
  return out;
}

LawKind TailDistribution::kind() const noexcept {
  if (shifted_) return LawKind::Shifted;
  return std::visit(Overloaded{
                        [](const RvStarLaw&) { return LawKind::RvStar; },
                        [](const ParetoLaw&) { return LawKind::Pareto; },
                        [](const LognormalLaw&) { return LawKind::Lognormal; },
                    },
                    base_);
}

TailDistribution TailDistribution::inner() const { return TailDistribution(base_); }

double TailDistribution::support_lower() const noexcept {
  return base_support_lower(base_) + offset_;
}

double TailDistribution::tail(double x) const { return base_tail(base_, x - offset_); }

double TailDistribution::density(double x) const { return base_density(base_, x - offset_); }

double TailDistribution::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile: u must lie in (0,1)");
  if (const auto* l = std::get_if<LognormalLaw>(&base_)) {
    return std::exp(l->mu - l->sigma * normal_upper_quantile(u)) + offset_;
  }
  return base_quantile_from_log_tail(base_, -std::log1p(-u), 1.0 - u) + offset_;
}

double TailDistribution::tail_quantile(double w) const {
  if (!(w > 0.0 && w < 1.0)) throw std::domain_error("tail_quantile: w must lie in (0,1)");
  return base_quantile_from_log_tail(base_, -std::log(w), w) + offset_;
}

std::optional<double> TailDistribution::tail_index() const noexcept {
  return std::visit(Overloaded{
                        [](const RvStarLaw& l) -> std::optional<double> { return l.alpha; },
                        [](const ParetoLaw& l) -> std::optional<double> { return l.alpha; },
                        [](const LognormalLaw&) -> std::optional<double> { return std::nullopt; },
                    },
                    base_);
}

std::string TailDistribution::describe() const {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const RvStarLaw& l) {
                   out << "RVStar(alpha=" << l.alpha << ", beta=" << l.beta
                       << ", scale=" << l.scale << ")";
                 },
                 [&](const ParetoLaw& l) {
                   out << "Pareto(alpha=" << l.alpha << ", scale=" << l.scale << ")";
                 },
                 [&](const LognormalLaw& l) {
                   out << "Lognormal(mu=" << l.mu << ", sigma=" << l.sigma << ")";
                 },
             },
             base_);
  if (shifted_) {
    std::string inner = out.str();
    out.str("");
    out << "Shifted(" << inner << ", offset=" << offset_ << ")";
  }
  return out.str();
}

double upper_moment(const TailDistribution& d, double a) {
  if (!(a >= 0.0)) throw std::domain_error("upper_moment: order must be nonnegative");
  if (a == 0.0) return d.tail(0.0);
  const double inner_moment = base_moment(d.base(), a);
  if (!std::isfinite(inner_moment)) return kInf;
  if (!d.is_shifted() || d.offset() == 0.0) return inner_moment;

  // E(xi + o)_+^a = E xi^a + int a x^{a-1} [Pr(xi > x - o) - Pr(xi > x)] dx.
  // The bracket decays one power faster than the tail itself.
  const TailDistribution inner = d.inner();
  const double o = d.offset();
  const double lower = inner.support_lower();
  auto diff = [&](double x) { return inner.tail(x - o) - inner.tail(x); };
  const double correction = power_weighted_integral(diff, a, {lower, lower + o, 2.0 * lower});
  return std::max(0.0, inner_moment + correction);
}

double checked_quantile(const TailDistribution& d, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("checked_quantile: u must lie in (0,1)");
  return d.quantile(std::sqrt(u));
}

double checked_upper_moment(const TailDistribution& d, double a) {
  if (!(a >= 0.0)) throw std::domain_error("checked_upper_moment: order must be nonnegative");
  if (a == 0.0) {
    const double below = d.cdf(0.0);
    return 1.0 - below * below;
  }
  const double single = upper_moment(d, a);
  if (!std::isfinite(single)) return kInf;
  // 1 - F^2 = 2 Fbar - Fbar^2.
  const double lower = d.support_lower();
  auto squared = [&](double x) {
    const double t = d.tail(x);
    return t * t;
  };
  const double sq = power_weighted_integral(squared, a, {lower, 2.0 * lower});
  return 2.0 * single - sq;
}

void FgmPairSpec::validate() const {
  require(theta >= -1.0 && theta <= 1.0, "fgm: theta must lie in [-1, 1]");
  require(g.support_lower() >= 0.0, "fgm: g must be supported on (0, inf)");
}

double fgm_conditional_quantile(double theta, double u, double w) {
  const double k = theta * (1.0 - 2.0 * u);
  if (k == 0.0) return w;
  // Root of k v^2 - (1 + k) v + w = 0 in [0,1], in the cancellation-free form.
  const double b = 1.0 + k;
  const double disc = std::max(0.0, b * b - 4.0 * k * w);
  return std::clamp(2.0 * w / (b + std::sqrt(disc)), 0.0, 1.0);
}

std::pair<double, double> sample_fgm(const FgmPairSpec& spec, RngStream& rng) {
  const double u = rng.uniform();
  const double w = rng.uniform();
  const double v = fgm_conditional_quantile(spec.theta, u, w);
  // u, v live on a lattice where 1 - u is exact; route the upper half through
  // tail_quantile for accuracy far in the tail.
  auto invert = [](const TailDistribution& d, double p) {
    if (p <= 0.0) return d.support_lower();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return p < 0.5 ? d.quantile(p) : d.tail_quantile(1.0 - p);
  };
  return {invert(spec.f, u), invert(spec.g, v)};
}

}  // namespace ruinsim
