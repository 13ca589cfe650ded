#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "ruinsim/rng.hpp"

namespace ruinsim {

/// Log-damped Pareto law: tail (x/scale)^-alpha * (1 + ln(x/scale))^-beta
/// for x >= scale. Its log-transform has tail e^{-alpha t}(1+t)^{-beta}, which
/// is convolution equivalent with finite moment generating function at alpha.
struct RvStarLaw {
  double alpha;
  double beta;
  double scale;
};

/// Tail (x/scale)^-alpha for x >= scale.
struct ParetoLaw {
  double alpha;
  double scale;
};

/// exp(N(mu, sigma^2)).
struct LognormalLaw {
  double mu;
  double sigma;
};

using BaseLaw = std::variant<RvStarLaw, ParetoLaw, LognormalLaw>;

enum class LawKind { RvStar, Pareto, Lognormal, Shifted };

/// A one-dimensional law exposed through its tail, quantile, density and
/// sampler. Immutable after construction; parameters are validated by the
/// named constructors.
class TailDistribution {
 public:
  static TailDistribution rv_star(double alpha, double beta, double scale);
  static TailDistribution pareto(double alpha, double scale);
  static TailDistribution lognormal(double mu, double sigma);
  /// Law of xi + offset where xi ~ inner. Nested shifts collapse into one.
  static TailDistribution shifted(const TailDistribution& inner, double offset);

  LawKind kind() const noexcept;
  bool is_shifted() const noexcept { return shifted_; }
  double offset() const noexcept { return offset_; }
  const BaseLaw& base() const noexcept { return base_; }
  /// The unshifted law.
  TailDistribution inner() const;

  double support_lower() const noexcept;

  /// Pr(xi > x).
  double tail(double x) const;
  double cdf(double x) const { return 1.0 - tail(x); }
  double density(double x) const;

  /// Generalized inverse of the CDF, u in (0,1).
  double quantile(double u) const;
  /// quantile(1 - w), accurate for small w.
  double tail_quantile(double w) const;

  double sample(RngStream& rng) const { return tail_quantile(rng.uniform()); }

  /// Regular-variation index of the tail; nullopt for lognormal laws, whose
  /// tails are lighter than every power.
  std::optional<double> tail_index() const noexcept;

  std::string describe() const;

 private:
  explicit TailDistribution(BaseLaw base) : base_(base) {}

  BaseLaw base_;
  double offset_ = 0.0;
  bool shifted_ = false;
};

/// E[xi_+^a]. Returns +infinity when the moment diverges. a = 0 gives Pr(xi > 0).
double upper_moment(const TailDistribution& d, double a);

/// Quantile of the law of max(xi_1, xi_2), i.e. of the squared CDF.
double checked_quantile(const TailDistribution& d, double u);

/// E[max(xi_1, xi_2)_+^a] by quadrature against the squared CDF.
double checked_upper_moment(const TailDistribution& d, double a);

struct FgmPairSpec {
  double theta;
  TailDistribution f;
  TailDistribution g;

  /// Throws SpecError unless theta in [-1, 1] and g is supported on [0, inf).
  void validate() const;
};

/// Solves v (1 + k (1 - v)) = w for v in [0,1], k = theta (1 - 2u): the
/// inverse of the FGM conditional CDF of V given U = u.
double fgm_conditional_quantile(double theta, double u, double w);

/// One (X, Y) pair with marginals f, g coupled through the FGM copula.
std::pair<double, double> sample_fgm(const FgmPairSpec& spec, RngStream& rng);

}  // namespace ruinsim
