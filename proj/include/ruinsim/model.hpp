#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>

#include "ruinsim/distributions.hpp"
#include "ruinsim/rng.hpp"

namespace ruinsim {

struct Independent {};
struct FgmDependence {
  double theta;
};
using Dependence = std::variant<Independent, FgmDependence>;

struct FiniteHorizon {
  int n;
};
struct InfiniteHorizon {
  double truncation_tol;
};
using Horizon = std::variant<FiniteHorizon, InfiniteHorizon>;

std::string horizon_label(const Horizon& h);

/// Which functional of the path a tail probability refers to.
enum class Target { SumS, MaxM };

std::string to_string(Target t);

/// X ~ f is the per-period net loss, Y ~ g the per-period discount factor.
/// Pairs (X_i, Y_i) are i.i.d. across i; within a pair they are independent
/// or FGM-coupled.
struct ModelSpec {
  TailDistribution f;
  TailDistribution g;
  Dependence dependence = Independent{};
  double alpha = 0.0;
  Horizon horizon = FiniteHorizon{1};

  /// Throws SpecError on structural problems and PreconditionError when an
  /// infinite horizon is requested with mu_alpha >= 1.
  void validate() const;

  /// E Y^alpha.
  double mu_alpha() const;
  /// theta of the FGM coupling, 0 when independent.
  double theta() const noexcept;
};

struct PathSample {
  double s;    // S_n
  double m;    // M_n = max_{0<=k<=n} S_k
  int n_used;  // horizon actually simulated
};

/// Smallest N with mu^{N+1} / (1 - mu) <= tol, i.e.
/// N = ceil(ln(tol (1 - mu) / mu) / ln mu). Requires 0 < mu < 1.
int truncation_level(double mu_alpha, double tol);

/// Draws one (X, Y) pair honoring the dependence structure.
std::pair<double, double> draw_pair(const ModelSpec& spec, RngStream& rng);

/// Caches the validated spec together with mu_alpha and the effective horizon.
class PathSimulator {
 public:
  explicit PathSimulator(ModelSpec spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  double mu_alpha() const noexcept { return mu_alpha_; }
  /// n for a finite horizon, the truncation level for an infinite one.
  int horizon() const noexcept { return horizon_; }

  std::pair<double, double> draw(RngStream& rng) const;

  /// Forward evaluation of S_k = sum_{i<=k} X_i prod_{j<=i} Y_j and M_n.
  PathSample path(int n, RngStream& rng) const;
  /// Same single path, recording (S_k, M_k) for k = 1..out.size().
  void prefixes(std::span<PathSample> out, RngStream& rng) const;
  /// Backward recursion T_k = (X_k + T_{k-1}) Y_k.
  double backward_sum(int n, RngStream& rng) const;
  /// Distributional recursion M_k = (X_k + M_{k-1})_+ Y_k.
  double recursive_max(int n, RngStream& rng) const;
  /// (S_N, M_N) at the spec horizon (truncation level when infinite).
  PathSample at_horizon(RngStream& rng) const { return path(horizon_, rng); }

 private:
  ModelSpec spec_;
  double mu_alpha_ = 0.0;
  int horizon_ = 1;
  std::optional<FgmPairSpec> fgm_;
};

PathSample simulate_path(const ModelSpec& spec, int n, RngStream& rng);
double simulate_T(const ModelSpec& spec, int n, RngStream& rng);
double simulate_M_recursive(const ModelSpec& spec, int n, RngStream& rng);
/// Recomputes mu_alpha on each call; loops should hold a PathSimulator.
PathSample simulate_truncated_infinite(const ModelSpec& spec, RngStream& rng);

}  // namespace ruinsim
