#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ruinsim/asymptotics.hpp"
#include "ruinsim/distributions.hpp"
#include "ruinsim/model.hpp"
#include "ruinsim/parallel.hpp"

namespace ruinsim {

enum class EstimateMethod { CrudeMC, Quadrature };

std::string to_string(EstimateMethod m);

/// How paths are generated: forward sums, or the backward recursion for S
/// together with the max recursion for M (independent draws for each).
enum class Route { Forward, Recursive };

struct TailEstimate {
  double x = 0.0;
  Target target = Target::SumS;
  Horizon horizon = FiniteHorizon{1};
  double p_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  EstimateMethod method = EstimateMethod::CrudeMC;
  bool zero_hits = false;
};

/// Crude MC estimate from a hit count. 95% Wilson interval below 30 hits,
/// normal interval otherwise; zero hits report the one-sided Wilson bound.
TailEstimate tail_estimate_from_hits(double x, Target target, const Horizon& horizon,
                                     std::uint64_t hits, std::uint64_t samples);

struct TailSweep {
  std::vector<TailEstimate> sum;
  std::vector<TailEstimate> max;

  const std::vector<TailEstimate>& at(Target t) const { return t == Target::SumS ? sum : max; }
};

/// Pr(S > x) and Pr(M > x) at the spec horizon for every grid x from one
/// sweep. Requires samples >= 1e4 and an ascending grid.
TailSweep estimate_tails(const ModelSpec& spec, const std::vector<double>& x_grid,
                         const MonteCarloOptions& mc, Route route = Route::Forward);

/// One forward sweep of length max(horizons); each horizon is read off the
/// path prefixes. The spec horizon is ignored.
std::vector<TailSweep> estimate_tails_prefix(const ModelSpec& spec, std::vector<int> horizons,
                                             const std::vector<double>& x_grid,
                                             const MonteCarloOptions& mc);

std::vector<TailEstimate> estimate_tail(const ModelSpec& spec, Target target,
                                        const std::vector<double>& x_grid,
                                        const MonteCarloOptions& mc);

/// Pr(X_+ Y > x) for independent X ~ f, Y ~ g; requires x > 0.
double quadrature_tail_n1(const TailDistribution& f, const TailDistribution& g, double x);

/// quadrature_tail_n1 over a grid, as exact (se = 0) estimates at n = 1.
std::vector<TailEstimate> quadrature_estimates(const TailDistribution& f,
                                               const TailDistribution& g, Target target,
                                               const std::vector<double>& x_grid);

/// `points` log-spaced x between the points where Pr(X_+ Y > x) equals
/// tail_hi and tail_lo (independent n = 1 product, by quadrature).
std::vector<double> default_x_grid(const TailDistribution& f, const TailDistribution& g,
                                   int points = 20, double tail_hi = 1e-1,
                                   double tail_lo = 1e-5);

struct RatioDiagnostic {
  double x = 0.0;
  TailEstimate estimate;
  double asymptotic = 0.0;
  double ratio = 0.0;
  double ratio_lo = 0.0;
  double ratio_hi = 0.0;
};

std::vector<RatioDiagnostic> ratio_join(const std::vector<TailEstimate>& estimates,
                                        const std::function<double(double)>& asymptotic);

/// Estimates at the spec horizon joined with A F(x) + B G(x) (or C for S),
/// coefficients from moment_mc.
std::vector<RatioDiagnostic> ratio_table(const ModelSpec& spec, Target target,
                                         const std::vector<double>& x_grid,
                                         const MonteCarloOptions& tail_mc,
                                         const MonteCarloOptions& moment_mc);

}  // namespace ruinsim
