#pragma once

#include <string>
#include <vector>

#include "ruinsim/distributions.hpp"
#include "ruinsim/model.hpp"
#include "ruinsim/parallel.hpp"

namespace ruinsim {

enum class ScenarioCase { InsuranceDominant, FinanceDominant, Balanced, Violated };

std::string to_string(ScenarioCase c);

struct ScenarioClass {
  ScenarioCase scenario;
  double effective_alpha;  // NaN when Violated
  std::string reason;
};

/// Decides which dominance case of the convex-combination assumption a pair
/// (F, G) of catalog laws realizes. Only configurations whose membership is
/// known analytically are certified:
///   - RVStar F (possibly shifted) with G lognormal, of larger index, or RVStar
///     with the same index but a larger beta: InsuranceDominant.
///   - the mirror image: FinanceDominant.
///   - both RVStar with equal alpha and beta: Balanced.
/// Everything else, including Pareto at the dominating index, is Violated.
ScenarioClass classify(const TailDistribution& f, const TailDistribution& g);

/// A, B, C coefficients of Pr(M > x) ~ A F(x) + B G(x) and
/// Pr(S > x) ~ A F(x) + C G(x), at finite n or n = infinity.
struct CoefficientSet {
  double alpha = 0.0;
  double mu_alpha = 0.0;
  double theta = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  Horizon horizon = FiniteHorizon{1};
  double se_b = 0.0;
  double se_c = 0.0;
  std::uint64_t samples = 0;
};

/// Throws AssumptionError when classify() is Violated and SpecError when
/// spec.alpha differs from the effective index.
ScenarioClass certify(const TailDistribution& f, const TailDistribution& g, double alpha);

/// A_n = sum_{i<=n} mu^i, B_n = sum_{k<=n} mu^{n-k-1} E M_k^alpha and C_n the
/// same with S_{k,+}. The moments come from one sweep of path prefixes; the
/// standard errors are those of the per-path totals.
CoefficientSet coeff_finite(const ModelSpec& spec, int n, const MonteCarloOptions& mc);

/// A = mu/(1-mu), B = E M_inf^alpha / (mu (1-mu)), C likewise with S_{inf,+};
/// the limits are represented by paths truncated at truncation_level().
CoefficientSet coeff_infinite(const ModelSpec& spec, double truncation_tol,
                              const MonteCarloOptions& mc);

/// FGM-coupled coefficients. A' uses E Ycheck^alpha by quadrature; B', C' mix
/// E(M_{n-i} + X)_+^alpha and E(M_{n-i} + Xcheck)_+^alpha with X, Xcheck drawn
/// independently of the simulated prefix.
CoefficientSet coeff_fgm_finite(const FgmPairSpec& pair, double alpha, int n,
                                const MonteCarloOptions& mc);
CoefficientSet coeff_fgm_infinite(const FgmPairSpec& pair, double alpha, double truncation_tol,
                                  const MonteCarloOptions& mc);

/// E M_k^p and E S_{k,+}^p for k = 1..n from one sweep of path prefixes.
/// At p = alpha these quantities have infinite variance: the estimates
/// converge slowly from below and the standard errors understate the error.
struct PrefixMoments {
  std::vector<double> m;
  std::vector<double> s;
  std::vector<double> se_m;
  std::vector<double> se_s;
};
PrefixMoments prefix_moments(const ModelSpec& spec, int n, double power,
                             const MonteCarloOptions& mc);

/// Dispatches on the dependence and horizon of spec.
CoefficientSet coefficients(const ModelSpec& spec, const MonteCarloOptions& mc);

/// weight_f * F(x) + weight_g * G(x) with tails F, G.
double asymptotic_tail(double weight_f, double weight_g, const TailDistribution& f,
                       const TailDistribution& g, double x);
/// A F(x) + B G(x) for MaxM, A F(x) + C G(x) for SumS.
double asymptotic_tail(const CoefficientSet& coeffs, Target target, const TailDistribution& f,
                       const TailDistribution& g, double x);

}  // namespace ruinsim
