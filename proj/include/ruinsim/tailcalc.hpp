#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ruinsim/distributions.hpp"
#include "ruinsim/model.hpp"
#include "ruinsim/parallel.hpp"

namespace ruinsim {

/// Law V of ln(xi) given xi > 0 for a source law U of xi:
/// V(x, inf) = U(e^x, inf) / U(0, inf).
class LogTransformTail {
 public:
  explicit LogTransformTail(TailDistribution source);

  const TailDistribution& source() const noexcept { return source_; }
  /// Pr(xi > 0).
  double mass() const noexcept { return mass_; }
  double tail(double x) const;
  double density(double x) const;
  /// ln(w mass)-quantile of the source, i.e. the x with tail(x) = w.
  double tail_quantile(double w) const;
  /// ln of the source's lower support point, -inf when that is <= 0.
  double support_lower() const noexcept { return lower_; }
  /// support_lower() when finite, otherwise a point below which V has
  /// probability at most 1e-15.
  double lower_cutoff() const noexcept { return cutoff_; }

 private:
  TailDistribution source_;
  double mass_;
  double lower_;
  double cutoff_;
};

/// Integral of e^{alpha x} dV(x) = E[xi^alpha | xi > 0]; +inf when divergent.
double v_hat(const LogTransformTail& v, double alpha);

/// Pr(xi_1 xi_2 > x) for xi_2 > 0, by quadrature of
/// integral_0^inf U_1(x / U_2^{-1}(1 - e^{-r}), inf) e^{-r} dr.
double product_tail(const TailDistribution& d1, const TailDistribution& d2, double x);

/// sum_i (prod_{j != i} E xi_j^alpha) U_i(x, inf). Throws PreconditionError if a
/// moment is infinite.
double product_tail_expansion(const std::vector<TailDistribution>& ds, double alpha, double x);

/// sum_i (prod_{j != i} vhat_j(alpha)) V_i(x, inf).
double sum_tail_expansion(const std::vector<LogTransformTail>& vs, double alpha, double x);

/// Pr(V_1 + ... + V_n > x) for n in {1, 2, 3} by nested adaptive quadrature.
/// Throws QuadratureError with diagnostics when the quadrature fails.
double convolve_tail_oracle(const std::vector<LogTransformTail>& vs, double x);

struct VerificationRow {
  int n = 0;
  double x = 0.0;
  double observed = 0.0;
  double predicted = 0.0;
  double se = 0.0;  // of observed; 0 for quadrature
  std::uint64_t hits = 0;
  double ratio() const { return observed / predicted; }
};

/// Outcome of one numeric check. pass == (max_rel_err <= tolerance), where
/// max_rel_err is the check's test statistic (documented per verifier).
struct VerificationReport {
  std::string lemma_id;
  std::vector<VerificationRow> rows;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::uint64_t samples = 0;
  std::uint64_t zero_hit_cells = 0;
  std::optional<double> x0;        // potter
  std::optional<bool> monotone;    // remainder
  std::vector<std::string> notes;

  void finalize() { pass = max_rel_err <= tolerance; }
};

/// Monte Carlo check of V^{n*}(x) <= K (vhat + eps)^n V(x) on the products of
/// n = 1..n_max draws of g. Cell ratios estimate / ((mu + eps)^n G(x, inf));
/// K(n) is the running maximum over n' <= n over cells with at least 30 hits.
/// Statistic: K(n_max) / K(n_max / 2) - 1, tolerance 0.1.
VerificationReport verify_kesten(const TailDistribution& g, double alpha, double eps, int n_max,
                                 std::vector<double> x_grid, const MonteCarloOptions& mc);

/// Ratios Pr(S_H - S_n > x) / (F(x, inf) + G(x, inf)) with H = max(n_list) plus
/// the truncation level at tol 1e-6. The default grid takes, for w in
/// {1e-2, 1e-3, 1e-4}, the larger of the two w-tail quantiles. Statistic: the largest ratio at the
/// largest n. monotone records whether ratios are nonincreasing in n within
/// 2 standard errors.
VerificationReport verify_remainder(const ModelSpec& spec, std::vector<int> n_list,
                                    std::vector<double> x_grid, const MonteCarloOptions& mc,
                                    double tolerance = 0.05);

/// Convolution oracle over V(x, inf) against n vhat(alpha)^{n-1} for n = 2, 3.
/// Statistic: max relative deviation.
VerificationReport verify_pakes(const LogTransformTail& v, double alpha,
                                std::vector<double> x_grid, double tolerance = 0.1);

/// Quadrature product tail against the product expansion for two factors.
VerificationReport verify_product(const TailDistribution& d1, const TailDistribution& d2,
                                  double alpha, std::vector<double> x_grid,
                                  double tolerance = 0.1);

/// Convolution oracle against the sum expansion.
VerificationReport verify_sum(const std::vector<LogTransformTail>& vs, double alpha,
                              std::vector<double> x_grid, double tolerance = 0.1);

/// Searches the smallest x0 (in steps of 0.5 on the log axis above the
/// support) such that
///   (1/b) min(e^{-(a+e)y}, e^{-(a-e)y}) <= V(x+y)/V(x) <= b max(...)
/// for all grid x, x + y >= x0. Statistic: the largest envelope violation
/// at the reported x0 (0 when found), tolerance 0.
VerificationReport verify_potter(const LogTransformTail& v, double alpha, double b = 1.1,
                                 double eps = 0.1);

/// `points` logarithmically spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int points);

}  // namespace ruinsim
