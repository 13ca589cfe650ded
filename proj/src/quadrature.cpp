#include "ruinsim/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

namespace ruinsim {

namespace {

constexpr unsigned kOrder = 21;
using Kronrod = boost::math::quadrature::gauss_kronrod<double, kOrder>;
using Gauss = boost::math::quadrature::gauss<double, (kOrder - 1) / 2>;

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

// 21-point Kronrod rule with the embedded 10-point Gauss rule; the node
// tables come from Boost.Math, the layout mirrors its non-adaptive kernel.
template <class F>
Segment apply_rule(const F& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const auto& xk = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  double fc = f(mid);
  double kronrod = fc * wk[0];
  double gauss = 0.0;
  for (unsigned i = 1; i < xk.size(); i += 2) {
    const double fp = f(mid + half * xk[i]);
    const double fm = f(mid - half * xk[i]);
    kronrod += (fp + fm) * wk[i];
    gauss += (fp + fm) * wg[i / 2];
  }
  for (unsigned i = 2; i < xk.size(); i += 2) {
    const double fp = f(mid + half * xk[i]);
    const double fm = f(mid - half * xk[i]);
    kronrod += (fp + fm) * wk[i];
  }
  const double value = kronrod * half;
  const double error = std::max(std::abs((kronrod - gauss) * half),
                                std::abs(value) * 4.0 * std::numeric_limits<double>::epsilon());
  return {a, b, value, error};
}

constexpr std::size_t kMaxSegments = 4000;

double integrate_finite(const std::function<double(double)>& f, double a, double b,
                        const QuadratureOptions& options) {
  std::priority_queue<Segment> heap;
  Segment first = apply_rule(f, a, b);
  double total = first.value;
  double total_error = first.error;
  heap.push(first);
  std::size_t segments = 1;
  const auto converged = [&] {
    return total_error <= std::max(options.abs_tol, options.rel_tol * std::abs(total));
  };
  while (!converged()) {
    if (segments >= kMaxSegments) break;
    const Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval at machine resolution
    heap.pop();
    const Segment left = apply_rule(f, worst.a, mid);
    const Segment right = apply_rule(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++segments;
  }
  // Re-sum to shed the drift of the incremental updates.
  total = 0.0;
  total_error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_error += heap.top().error;
    heap.pop();
  }
  if (!std::isfinite(total)) {
    std::ostringstream msg;
    msg << "quadrature produced a non-finite value on [" << a << ", " << b << "]";
    throw QuadratureError(msg.str());
  }
  if (total_error > std::max(options.abs_tol, options.rel_tol * std::abs(total))) {
    std::ostringstream msg;
    msg << "quadrature did not converge on [" << a << ", " << b << "]: value=" << total
        << " error=" << total_error << " segments=" << segments;
    throw QuadratureError(msg.str());
  }
  return total;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& options) {
  if (a == b) return 0.0;
  if (std::isinf(b)) {
    // x = a + t / (1 - t), t in [0, 1).
    auto mapped = [&](double t) {
      if (t >= 1.0) return 0.0;
      const double one_minus = 1.0 - t;
      const double value = f(a + t / one_minus);
      return value == 0.0 ? 0.0 : value / (one_minus * one_minus);
    };
    return integrate_finite(mapped, 0.0, 1.0, options);
  }
  return integrate_finite(f, a, b, options);
}

double integrate_piecewise(const std::function<double(double)>& f,
                           std::span<const double> breakpoints,
                           const QuadratureOptions& options) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (breakpoints[i + 1] > breakpoints[i]) {
      total += integrate(f, breakpoints[i], breakpoints[i + 1], options);
    }
  }
  return total;
}

}  // namespace ruinsim
