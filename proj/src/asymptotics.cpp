#include "ruinsim/asymptotics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "ruinsim/errors.hpp"
#include "ruinsim/stats.hpp"

namespace ruinsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_rv_star(const TailDistribution& d) {
  return std::holds_alternative<RvStarLaw>(d.base());
}

double beta_of(const TailDistribution& d) { return std::get<RvStarLaw>(d.base()).beta; }

// +inf for laws lighter than every power.
double index_of(const TailDistribution& d) {
  return d.tail_index().value_or(std::numeric_limits<double>::infinity());
}

// True when dominant is RVStar and the other tail is o(dominant tail).
bool dominates(const TailDistribution& dominant, const TailDistribution& other) {
  if (!is_rv_star(dominant)) return false;
  const double a = index_of(dominant);
  const double b = index_of(other);
  if (b > a) return true;
  if (b < a) return false;
  // Equal index: only an RVStar with a larger beta is lighter by a log power.
  return is_rv_star(other) && beta_of(other) > beta_of(dominant);
}

double positive_power(double v, double alpha) {
  if (v <= 0.0) return 0.0;
  return alpha == 2.0 ? v * v : std::pow(v, alpha);
}

struct Totals {
  MeanAccumulator b;
  MeanAccumulator c;
};

// Runs per_path(state, rng, b_total, c_total) over mc.samples sharded paths and
// merges the accumulators in shard order.
template <class PerPath>
Totals sweep(const MonteCarloOptions& mc, PerPath per_path) {
  const auto shards = run_shards<Totals>(
      mc.samples, mc.shards, mc.workers, [&](std::uint32_t shard, std::uint64_t count) {
        RngStream rng(mc.seed, stream_id(StreamPurpose::Moments, shard));
        Totals t;
        auto state = per_path.make_state();
        for (std::uint64_t i = 0; i < count; ++i) {
          double b = 0.0;
          double c = 0.0;
          per_path(state, rng, b, c);
          t.b.add(b);
          t.c.add(c);
        }
        return t;
      });
  Totals total;
  for (const auto& t : shards) {
    total.b.merge(t.b);
    total.c.merge(t.c);
  }
  return total;
}

// mu^{n-k-1} for k = 1..n, stored at index k-1.
std::vector<double> finite_weights(double mu, int n) {
  std::vector<double> w(n);
  for (int k = 1; k <= n; ++k) w[k - 1] = std::pow(mu, n - k - 1);
  return w;
}

double geometric_sum(double mu, int n) {
  double sum = 0.0;
  double term = 1.0;
  for (int i = 1; i <= n; ++i) {
    term *= mu;
    sum += term;
  }
  return sum;
}

void require_samples(const MonteCarloOptions& mc) {
  if (mc.samples < 2) throw SpecError("moment sweep needs at least 2 samples");
  if (mc.shards == 0) throw SpecError("moment sweep needs at least one shard");
}

struct PrefixSweep {
  const PathSimulator* sim;
  int n;
  double alpha;
  std::vector<double> weights;
  std::vector<PathSample> make_state() const { return std::vector<PathSample>(n); }
  void operator()(std::vector<PathSample>& buf, RngStream& rng, double& b, double& c) const {
    sim->prefixes(buf, rng);
    for (int k = 0; k < n; ++k) {
      b += weights[k] * positive_power(buf[k].m, alpha);
      c += weights[k] * positive_power(buf[k].s, alpha);
    }
  }
};

struct HorizonSweep {
  const PathSimulator* sim;
  double alpha;
  int make_state() const { return 0; }
  void operator()(int, RngStream& rng, double& b, double& c) const {
    const PathSample p = sim->at_horizon(rng);
    b = positive_power(p.m, alpha);
    c = positive_power(p.s, alpha);
  }
};

// (1-theta) E(P + X)_+^alpha + theta E(P + Xcheck)_+^alpha summed over the
// prefixes P_k, k = 0..len-1 (P_0 = 0), with weights[k].
struct FgmSweep {
  const PathSimulator* sim;
  const FgmPairSpec* pair;
  double alpha;
  double theta;
  int len;
  std::vector<double> weights;
  std::vector<PathSample> make_state() const { return std::vector<PathSample>(len); }
  void operator()(std::vector<PathSample>& buf, RngStream& rng, double& b, double& c) const {
    if (len > 1) sim->prefixes(std::span(buf).subspan(1), rng);
    buf[0] = {0.0, 0.0, 0};
    const double x = pair->f.sample(rng);
    const double x_check = checked_quantile(pair->f, rng.uniform());
    for (int k = 0; k < len; ++k) {
      if (weights[k] == 0.0) continue;
      const auto mixed = [&](double p) {
        return (1.0 - theta) * positive_power(p + x, alpha) +
               theta * positive_power(p + x_check, alpha);
      };
      b += weights[k] * mixed(buf[k].m);
      c += weights[k] * mixed(buf[k].s);
    }
  }
};

ModelSpec fgm_model(const FgmPairSpec& pair, double alpha, Horizon horizon) {
  return ModelSpec{pair.f, pair.g, FgmDependence{pair.theta}, alpha, horizon};
}

}  // namespace

std::string to_string(ScenarioCase c) {
  switch (c) {
    case ScenarioCase::InsuranceDominant:
      return "InsuranceDominant";
    case ScenarioCase::FinanceDominant:
      return "FinanceDominant";
    case ScenarioCase::Balanced:
      return "Balanced";
    case ScenarioCase::Violated:
      return "Violated";
  }
  return "Violated";
}

ScenarioClass classify(const TailDistribution& f, const TailDistribution& g) {
  if (is_rv_star(f) && is_rv_star(g) && index_of(f) == index_of(g) &&
      beta_of(f) == beta_of(g)) {
    return {ScenarioCase::Balanced, index_of(f), "both RVStar with equal alpha and beta"};
  }
  if (dominates(f, g)) {
    return {ScenarioCase::InsuranceDominant, index_of(f), "RVStar F with G tail o(F tail)"};
  }
  if (dominates(g, f)) {
    return {ScenarioCase::FinanceDominant, index_of(g), "RVStar G with F tail o(G tail)"};
  }
  std::ostringstream why;
  why << "no certified case for F = " << f.describe() << ", G = " << g.describe();
  if (!is_rv_star(f) && !is_rv_star(g)) {
    why << " (neither law is RVStar)";
  } else {
    why << " (the dominating tail is not RVStar or the indices are incompatible)";
  }
  return {ScenarioCase::Violated, kNaN, why.str()};
}

ScenarioClass certify(const TailDistribution& f, const TailDistribution& g, double alpha) {
  const ScenarioClass cls = classify(f, g);
  if (cls.scenario == ScenarioCase::Violated) {
    throw AssumptionError("assumption 2.1 not certified for this configuration: " + cls.reason);
  }
  if (std::abs(alpha - cls.effective_alpha) > 1e-12 * cls.effective_alpha) {
    std::ostringstream msg;
    msg << "model alpha " << alpha << " differs from the effective index "
        << cls.effective_alpha;
    throw SpecError(msg.str());
  }
  return cls;
}

CoefficientSet coeff_finite(const ModelSpec& spec, int n, const MonteCarloOptions& mc) {
  if (n < 1) throw SpecError("horizon n must be at least 1");
  require_samples(mc);
  certify(spec.f, spec.g, spec.alpha);
  ModelSpec finite = spec;
  finite.horizon = FiniteHorizon{n};
  const PathSimulator sim(finite);
  const double mu = sim.mu_alpha();

  const Totals t = sweep(mc, PrefixSweep{&sim, n, spec.alpha, finite_weights(mu, n)});
  CoefficientSet out;
  out.alpha = spec.alpha;
  out.mu_alpha = mu;
  out.theta = spec.theta();
  out.a = geometric_sum(mu, n);
  out.b = t.b.mean();
  out.c = t.c.mean();
  out.horizon = FiniteHorizon{n};
  out.se_b = t.b.standard_error();
  out.se_c = t.c.standard_error();
  out.samples = mc.samples;
  return out;
}

PrefixMoments prefix_moments(const ModelSpec& spec, int n, double power,
                             const MonteCarloOptions& mc) {
  if (n < 1) throw SpecError("horizon n must be at least 1");
  require_samples(mc);
  ModelSpec finite = spec;
  finite.horizon = FiniteHorizon{n};
  const PathSimulator sim(finite);
  using Accumulators = std::vector<Totals>;
  const auto shards = run_shards<Accumulators>(
      mc.samples, mc.shards, mc.workers, [&](std::uint32_t shard, std::uint64_t count) {
        RngStream rng(mc.seed, stream_id(StreamPurpose::Moments, shard));
        Accumulators acc(n);
        std::vector<PathSample> buf(n);
        for (std::uint64_t i = 0; i < count; ++i) {
          sim.prefixes(buf, rng);
          for (int k = 0; k < n; ++k) {
            acc[k].b.add(positive_power(buf[k].m, power));
            acc[k].c.add(positive_power(buf[k].s, power));
          }
        }
        return acc;
      });
  Accumulators total(n);
  for (const auto& shard : shards) {
    for (int k = 0; k < n; ++k) {
      total[k].b.merge(shard[k].b);
      total[k].c.merge(shard[k].c);
    }
  }
  PrefixMoments out;
  for (const auto& t : total) {
    out.m.push_back(t.b.mean());
    out.s.push_back(t.c.mean());
    out.se_m.push_back(t.b.standard_error());
    out.se_s.push_back(t.c.standard_error());
  }
  return out;
}

CoefficientSet coeff_infinite(const ModelSpec& spec, double truncation_tol,
                              const MonteCarloOptions& mc) {
  require_samples(mc);
  certify(spec.f, spec.g, spec.alpha);
  ModelSpec inf = spec;
  inf.horizon = InfiniteHorizon{truncation_tol};
  const PathSimulator sim(inf);
  const double mu = sim.mu_alpha();

  const Totals t = sweep(mc, HorizonSweep{&sim, spec.alpha});
  const double scale = 1.0 / (mu * (1.0 - mu));
  CoefficientSet out;
  out.alpha = spec.alpha;
  out.mu_alpha = mu;
  out.theta = spec.theta();
  out.a = mu / (1.0 - mu);
  out.b = scale * t.b.mean();
  out.c = scale * t.c.mean();
  out.horizon = InfiniteHorizon{truncation_tol};
  out.se_b = scale * t.b.standard_error();
  out.se_c = scale * t.c.standard_error();
  out.samples = mc.samples;
  return out;
}

CoefficientSet coeff_fgm_finite(const FgmPairSpec& pair, double alpha, int n,
                                const MonteCarloOptions& mc) {
  if (n < 1) throw SpecError("horizon n must be at least 1");
  require_samples(mc);
  pair.validate();
  certify(pair.f, pair.g, alpha);
  const PathSimulator sim(fgm_model(pair, alpha, FiniteHorizon{n}));
  const double mu = sim.mu_alpha();
  const double y_check = checked_upper_moment(pair.g, alpha);

  // Term i uses M_{n-i}: prefix k = n - i carries weight mu^{n-k-1}.
  std::vector<double> weights(n);
  for (int k = 0; k < n; ++k) weights[k] = std::pow(mu, n - k - 1);
  const Totals t = sweep(mc, FgmSweep{&sim, &pair, alpha, pair.theta, n, weights});

  CoefficientSet out;
  out.alpha = alpha;
  out.mu_alpha = mu;
  out.theta = pair.theta;
  out.a = ((1.0 - pair.theta) * mu + pair.theta * y_check) * geometric_sum(mu, n) / mu;
  out.b = t.b.mean();
  out.c = t.c.mean();
  out.horizon = FiniteHorizon{n};
  out.se_b = t.b.standard_error();
  out.se_c = t.c.standard_error();
  out.samples = mc.samples;
  return out;
}

CoefficientSet coeff_fgm_infinite(const FgmPairSpec& pair, double alpha, double truncation_tol,
                                  const MonteCarloOptions& mc) {
  require_samples(mc);
  pair.validate();
  certify(pair.f, pair.g, alpha);
  const PathSimulator sim(fgm_model(pair, alpha, InfiniteHorizon{truncation_tol}));
  const double mu = sim.mu_alpha();
  const double y_check = checked_upper_moment(pair.g, alpha);

  // A single term on (M_N, S_N) with M_N standing in for M_inf.
  const int horizon = sim.horizon();
  std::vector<double> weights(horizon + 1, 0.0);
  weights[horizon] = 1.0 / (1.0 - mu);
  const Totals t =
      sweep(mc, FgmSweep{&sim, &pair, alpha, pair.theta, horizon + 1, std::move(weights)});

  CoefficientSet out;
  out.alpha = alpha;
  out.mu_alpha = mu;
  out.theta = pair.theta;
  out.a = ((1.0 - pair.theta) * mu + pair.theta * y_check) / (1.0 - mu);
  out.b = t.b.mean();
  out.c = t.c.mean();
  out.horizon = InfiniteHorizon{truncation_tol};
  out.se_b = t.b.standard_error();
  out.se_c = t.c.standard_error();
  out.samples = mc.samples;
  return out;
}

CoefficientSet coefficients(const ModelSpec& spec, const MonteCarloOptions& mc) {
  if (const auto* fgm = std::get_if<FgmDependence>(&spec.dependence)) {
    const FgmPairSpec pair{fgm->theta, spec.f, spec.g};
    if (const auto* fin = std::get_if<FiniteHorizon>(&spec.horizon)) {
      return coeff_fgm_finite(pair, spec.alpha, fin->n, mc);
    }
    return coeff_fgm_infinite(pair, spec.alpha,
                              std::get<InfiniteHorizon>(spec.horizon).truncation_tol, mc);
  }
  if (const auto* fin = std::get_if<FiniteHorizon>(&spec.horizon)) {
    return coeff_finite(spec, fin->n, mc);
  }
  return coeff_infinite(spec, std::get<InfiniteHorizon>(spec.horizon).truncation_tol, mc);
}

double asymptotic_tail(double weight_f, double weight_g, const TailDistribution& f,
                       const TailDistribution& g, double x) {
  return weight_f * f.tail(x) + weight_g * g.tail(x);
}

double asymptotic_tail(const CoefficientSet& coeffs, Target target, const TailDistribution& f,
                       const TailDistribution& g, double x) {
  return asymptotic_tail(coeffs.a, target == Target::MaxM ? coeffs.b : coeffs.c, f, g, x);
}

}  // namespace ruinsim
