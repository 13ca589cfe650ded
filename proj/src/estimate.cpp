#include "ruinsim/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "ruinsim/errors.hpp"
#include "ruinsim/rng.hpp"
#include "ruinsim/stats.hpp"
#include "ruinsim/tailcalc.hpp"

namespace ruinsim {
namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr double kZ95OneSided = 1.6448536269514722;
constexpr std::uint64_t kMinSamples = 10'000;
constexpr std::uint64_t kWilsonBelow = 30;

void check_inputs(const std::vector<double>& x_grid, const MonteCarloOptions& mc) {
  if (mc.samples < kMinSamples) throw SpecError("estimate: samples must be at least 10000");
  if (x_grid.empty()) throw SpecError("estimate: empty x grid");
  if (!std::is_sorted(x_grid.begin(), x_grid.end())) {
    throw SpecError("estimate: x grid must be sorted ascending");
  }
  for (double x : x_grid) {
    if (!std::isfinite(x)) throw SpecError("estimate: non-finite grid point");
  }
}

// Bin j holds values exceeding exactly j grid points.
class GridCounter {
 public:
  explicit GridCounter(const std::vector<double>* grid) : grid_(grid), bins_(grid->size() + 1) {}

  void add(double v) noexcept {
    const auto idx = std::lower_bound(grid_->begin(), grid_->end(), v) - grid_->begin();
    ++bins_[static_cast<std::size_t>(idx)];
  }

  void merge(const GridCounter& other) noexcept {
    for (std::size_t i = 0; i < bins_.size(); ++i) bins_[i] += other.bins_[i];
  }

  /// hits[j] = #{v > grid[j]}.
  std::vector<std::uint64_t> hits() const {
    std::vector<std::uint64_t> out(grid_->size());
    std::uint64_t above = 0;
    for (std::size_t j = grid_->size(); j-- > 0;) {
      above += bins_[j + 1];
      out[j] = above;
    }
    return out;
  }

 private:
  const std::vector<double>* grid_;
  std::vector<std::uint64_t> bins_;
};

std::vector<TailEstimate> to_estimates(const std::vector<double>& grid, const GridCounter& counter,
                                       Target target, const Horizon& horizon,
                                       std::uint64_t samples) {
  const auto hits = counter.hits();
  std::vector<TailEstimate> out;
  out.reserve(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    out.push_back(tail_estimate_from_hits(grid[j], target, horizon, hits[j], samples));
  }
  return out;
}

struct Counters {
  std::vector<GridCounter> sum;
  std::vector<GridCounter> max;
};

}  // namespace

std::string to_string(EstimateMethod m) {
  return m == EstimateMethod::CrudeMC ? "CrudeMC" : "Quadrature";
}

TailEstimate tail_estimate_from_hits(double x, Target target, const Horizon& horizon,
                                     std::uint64_t hits, std::uint64_t samples) {
  if (samples == 0) throw SpecError("estimate: zero samples");
  TailEstimate e;
  e.x = x;
  e.target = target;
  e.horizon = horizon;
  e.samples = samples;
  e.hits = hits;
  e.method = EstimateMethod::CrudeMC;
  const double n = static_cast<double>(samples);
  e.p_hat = static_cast<double>(hits) / n;
  e.se = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
  if (hits == 0) {
    e.zero_hits = true;
    e.ci_lo = 0.0;
    e.ci_hi = wilson_interval(0, samples, kZ95OneSided).hi;
  } else if (hits < kWilsonBelow) {
    const auto w = wilson_interval(hits, samples, kZ95);
    e.ci_lo = std::min(w.lo, e.p_hat);
    e.ci_hi = std::max(w.hi, e.p_hat);
  } else {
    e.ci_lo = std::max(0.0, e.p_hat - kZ95 * e.se);
    e.ci_hi = std::min(1.0, e.p_hat + kZ95 * e.se);
  }
  return e;
}

TailSweep estimate_tails(const ModelSpec& spec, const std::vector<double>& x_grid,
                         const MonteCarloOptions& mc, Route route) {
  check_inputs(x_grid, mc);
  const PathSimulator sim(spec);
  const int n = sim.horizon();
  const auto purpose = route == Route::Forward ? StreamPurpose::Tail : StreamPurpose::TailRecursive;
  const auto shards = run_shards<Counters>(
      mc.samples, mc.shards, mc.workers, [&](std::uint32_t shard, std::uint64_t count) {
        RngStream rng(mc.seed, stream_id(purpose, shard));
        Counters c{{GridCounter(&x_grid)}, {GridCounter(&x_grid)}};
        for (std::uint64_t i = 0; i < count; ++i) {
          if (route == Route::Forward) {
            const auto p = sim.path(n, rng);
            c.sum[0].add(p.s);
            c.max[0].add(p.m);
          } else {
            c.sum[0].add(sim.backward_sum(n, rng));
            c.max[0].add(sim.recursive_max(n, rng));
          }
        }
        return c;
      });
  GridCounter sum(&x_grid);
  GridCounter max(&x_grid);
  for (const auto& c : shards) {
    sum.merge(c.sum[0]);
    max.merge(c.max[0]);
  }
  return {to_estimates(x_grid, sum, Target::SumS, spec.horizon, mc.samples),
          to_estimates(x_grid, max, Target::MaxM, spec.horizon, mc.samples)};
}

std::vector<TailSweep> estimate_tails_prefix(const ModelSpec& spec, std::vector<int> horizons,
                                             const std::vector<double>& x_grid,
                                             const MonteCarloOptions& mc) {
  check_inputs(x_grid, mc);
  if (horizons.empty()) throw SpecError("estimate: no horizons");
  for (int h : horizons) {
    if (h < 1) throw SpecError("estimate: horizons must be positive");
  }
  const int longest = *std::max_element(horizons.begin(), horizons.end());
  ModelSpec finite = spec;
  finite.horizon = FiniteHorizon{longest};
  const PathSimulator sim(finite);
  const std::size_t k = horizons.size();
  const auto shards = run_shards<Counters>(
      mc.samples, mc.shards, mc.workers, [&](std::uint32_t shard, std::uint64_t count) {
        RngStream rng(mc.seed, stream_id(StreamPurpose::Tail, shard));
        Counters c{std::vector<GridCounter>(k, GridCounter(&x_grid)),
                   std::vector<GridCounter>(k, GridCounter(&x_grid))};
        std::vector<PathSample> buf(static_cast<std::size_t>(longest));
        for (std::uint64_t i = 0; i < count; ++i) {
          sim.prefixes(buf, rng);
          for (std::size_t j = 0; j < k; ++j) {
            const auto& p = buf[static_cast<std::size_t>(horizons[j] - 1)];
            c.sum[j].add(p.s);
            c.max[j].add(p.m);
          }
        }
        return c;
      });
  std::vector<TailSweep> out;
  for (std::size_t j = 0; j < k; ++j) {
    GridCounter sum(&x_grid);
    GridCounter max(&x_grid);
    for (const auto& c : shards) {
      sum.merge(c.sum[j]);
      max.merge(c.max[j]);
    }
    const Horizon h = FiniteHorizon{horizons[j]};
    out.push_back({to_estimates(x_grid, sum, Target::SumS, h, mc.samples),
                   to_estimates(x_grid, max, Target::MaxM, h, mc.samples)});
  }
  return out;
}

std::vector<TailEstimate> estimate_tail(const ModelSpec& spec, Target target,
                                        const std::vector<double>& x_grid,
                                        const MonteCarloOptions& mc) {
  auto sweep = estimate_tails(spec, x_grid, mc);
  return target == Target::SumS ? std::move(sweep.sum) : std::move(sweep.max);
}

double quadrature_tail_n1(const TailDistribution& f, const TailDistribution& g, double x) {
  if (!(x > 0.0)) throw SpecError("quadrature_tail_n1: x must be positive");
  return product_tail(f, g, x);
}

std::vector<TailEstimate> quadrature_estimates(const TailDistribution& f,
                                               const TailDistribution& g, Target target,
                                               const std::vector<double>& x_grid) {
  std::vector<TailEstimate> out;
  for (double x : x_grid) {
    TailEstimate e;
    e.x = x;
    e.target = target;
    e.horizon = FiniteHorizon{1};
    e.p_hat = quadrature_tail_n1(f, g, x);
    e.ci_lo = e.p_hat;
    e.ci_hi = e.p_hat;
    e.method = EstimateMethod::Quadrature;
    out.push_back(e);
  }
  return out;
}

std::vector<double> default_x_grid(const TailDistribution& f, const TailDistribution& g,
                                   int points, double tail_hi, double tail_lo) {
  if (points < 2) throw SpecError("x grid: need at least 2 points");
  if (!(tail_lo > 0.0 && tail_lo < tail_hi && tail_hi < 1.0)) {
    throw SpecError("x grid: need 0 < quantile_lo < quantile_hi < 1");
  }
  const double top = quadrature_tail_n1(f, g, std::numeric_limits<double>::min());
  if (tail_hi >= top) throw SpecError("x grid: Pr(X_+ Y > 0) is below quantile_hi");
  // Solve ln Pr(X_+ Y > e^u) = ln w on the log axis.
  const auto solve = [&](double w) {
    const auto fn = [&](double u) { return std::log(quadrature_tail_n1(f, g, std::exp(u))) - std::log(w); };
    double lo = 0.0;
    double hi = 0.0;
    while (fn(lo) < 0.0) lo -= 4.0;
    hi = lo + 4.0;
    while (fn(hi) > 0.0) {
      lo = hi;
      hi += 4.0;
      if (hi > 700.0) throw SpecError("x grid: tail quantile beyond the double range");
    }
    boost::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(
        fn, lo, hi, boost::math::tools::eps_tolerance<double>(40), iters);
    return std::exp(0.5 * (r.first + r.second));
  };
  return log_grid(solve(tail_hi), solve(tail_lo), points);
}

std::vector<RatioDiagnostic> ratio_join(const std::vector<TailEstimate>& estimates,
                                        const std::function<double(double)>& asymptotic) {
  std::vector<RatioDiagnostic> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) {
    RatioDiagnostic r;
    r.x = e.x;
    r.estimate = e;
    r.asymptotic = asymptotic(e.x);
    r.ratio = e.p_hat / r.asymptotic;
    r.ratio_lo = e.ci_lo / r.asymptotic;
    r.ratio_hi = e.ci_hi / r.asymptotic;
    out.push_back(r);
  }
  return out;
}

std::vector<RatioDiagnostic> ratio_table(const ModelSpec& spec, Target target,
                                         const std::vector<double>& x_grid,
                                         const MonteCarloOptions& tail_mc,
                                         const MonteCarloOptions& moment_mc) {
  const auto coeffs = coefficients(spec, moment_mc);
  const auto estimates = estimate_tail(spec, target, x_grid, tail_mc);
  return ratio_join(estimates, [&](double x) {
    return asymptotic_tail(coeffs, target, spec.f, spec.g, x);
  });
}

}  // namespace ruinsim
