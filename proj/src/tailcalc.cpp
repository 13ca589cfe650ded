#include "ruinsim/tailcalc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "ruinsim/errors.hpp"
#include "ruinsim/quadrature.hpp"
#include "ruinsim/stats.hpp"

namespace ruinsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr QuadratureOptions kOuter{1e-9, 1e-300};
constexpr QuadratureOptions kInner{1e-11, 1e-300};
constexpr std::uint64_t kKestenMinHits = 30;

double find_cutoff(const TailDistribution& source, double mass) {
  // Bisection for the point where Pr(V <= x) drops to 1e-15.
  const double base = source.cdf(0.0);
  const auto lower_prob = [&](double x) { return (source.cdf(std::exp(x)) - base) / mass; };
  double lo = -745.0;
  double hi = std::log(source.quantile(base + 0.5 * mass));
  if (lower_prob(lo) > 1e-15) return lo;
  for (int i = 0; i < 200 && hi - lo > 1e-9 * (1.0 + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (lower_prob(mid) > 1e-15) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

// Pr(V_1 + V_2 > x), split at s: V_2 <= s, V_1 <= x - s, and both large.
double convolve2(const LogTransformTail& v1, const LogTransformTail& v2, double x,
                 const QuadratureOptions& opts) {
  const double l1 = v1.lower_cutoff();
  const double l2 = v2.lower_cutoff();
  if (x <= l1 + l2) return 1.0;
  const double s = l2 + 0.5 * (x - l1 - l2);
  const double first = integrate(
      [&](double v) { return v2.density(v) * v1.tail(x - v); }, l2, s, opts);
  const double second = integrate(
      [&](double v) { return v1.density(v) * v2.tail(x - v); }, l1, x - s, opts);
  return first + second + v1.tail(x - s) * v2.tail(s);
}

// Pr(V_1 + W > x) with W = V_2 + ... given through its tail.
double convolve_n(const std::vector<LogTransformTail>& vs, std::size_t first, double x,
                  const QuadratureOptions& opts);

double convolve_rest_tail(const std::vector<LogTransformTail>& vs, std::size_t first, double x) {
  if (vs.size() - first == 1) return vs[first].tail(x);
  return convolve_n(vs, first, x, kInner);
}

double convolve_n(const std::vector<LogTransformTail>& vs, std::size_t first, double x,
                  const QuadratureOptions& opts) {
  if (vs.size() - first == 2) return convolve2(vs[first], vs[first + 1], x, opts);
  const LogTransformTail& v1 = vs[first];
  double rest_lower = 0.0;
  for (std::size_t i = first + 1; i < vs.size(); ++i) rest_lower += vs[i].lower_cutoff();
  const double l1 = v1.lower_cutoff();
  if (x <= l1 + rest_lower) return 1.0;
  // Integrate V_1's density against the tail of the rest up to the point where
  // that tail is 1, then add Pr(V_1 > x - rest_lower).
  const double top = x - rest_lower;
  const double mid = l1 + 0.5 * (top - l1);
  const auto integrand = [&](double v) {
    return v1.density(v) * convolve_rest_tail(vs, first + 1, x - v);
  };
  const std::array<double, 3> pts{l1, mid, top};
  return integrate_piecewise(integrand, pts, opts) + v1.tail(top);
}

double row_rel_err(const VerificationRow& r) { return std::abs(r.observed / r.predicted - 1.0); }

}  // namespace

LogTransformTail::LogTransformTail(TailDistribution source) : source_(std::move(source)) {
  mass_ = source_.tail(0.0);
  if (!(mass_ > 0.0)) throw SpecError("log transform needs Pr(xi > 0) > 0");
  const double lower = source_.support_lower();
  lower_ = lower > 0.0 ? std::log(lower) : -kInf;
  cutoff_ = std::isfinite(lower_) ? lower_ : find_cutoff(source_, mass_);
}

double LogTransformTail::tail(double x) const {
  if (x == -kInf) return 1.0;
  return source_.tail(std::exp(x)) / mass_;
}

double LogTransformTail::density(double x) const {
  const double e = std::exp(x);
  return source_.density(e) * e / mass_;
}

double LogTransformTail::tail_quantile(double w) const {
  return std::log(source_.tail_quantile(w * mass_));
}

double v_hat(const LogTransformTail& v, double alpha) {
  if (alpha == 0.0) return 1.0;
  return upper_moment(v.source(), alpha) / v.mass();
}

double product_tail(const TailDistribution& d1, const TailDistribution& d2, double x) {
  if (d2.support_lower() < 0.0) throw SpecError("product_tail: second factor must be positive");
  const auto integrand = [&](double r) {
    const double y = d2.tail_quantile(std::exp(-r));
    return d1.tail(x / y) * std::exp(-r);
  };
  std::vector<double> pts{0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 740.0};
  if (d1.support_lower() > 0.0 && x > 0.0) {
    // Beyond y = x / lower the integrand is e^{-r} exactly.
    const double w = d2.tail(x / d1.support_lower());
    if (w > 0.0 && w < 1.0) pts.push_back(-std::log(w));
  }
  std::sort(pts.begin(), pts.end());
  return integrate_piecewise(integrand, pts, QuadratureOptions{1e-10, 1e-300});
}

double product_tail_expansion(const std::vector<TailDistribution>& ds, double alpha, double x) {
  std::vector<double> moments;
  for (const auto& d : ds) {
    const double m = upper_moment(d, alpha);
    if (!std::isfinite(m)) {
      throw PreconditionError("product expansion: infinite moment for " + d.describe());
    }
    moments.push_back(m);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double weight = 1.0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
      if (j != i) weight *= moments[j];
    }
    total += weight * ds[i].tail(x);
  }
  return total;
}

double sum_tail_expansion(const std::vector<LogTransformTail>& vs, double alpha, double x) {
  std::vector<double> hats;
  for (const auto& v : vs) {
    const double h = v_hat(v, alpha);
    if (!std::isfinite(h)) {
      throw PreconditionError("sum expansion: infinite vhat for " + v.source().describe());
    }
    hats.push_back(h);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    double weight = 1.0;
    for (std::size_t j = 0; j < vs.size(); ++j) {
      if (j != i) weight *= hats[j];
    }
    total += weight * vs[i].tail(x);
  }
  return total;
}

double convolve_tail_oracle(const std::vector<LogTransformTail>& vs, double x) {
  if (vs.empty() || vs.size() > 3) throw SpecError("convolution oracle supports 1 to 3 summands");
  if (vs.size() == 1) return vs[0].tail(x);
  try {
    return convolve_n(vs, 0, x, kOuter);
  } catch (const QuadratureError& e) {
    std::ostringstream msg;
    msg << "convolution oracle failed for n = " << vs.size() << " at x = " << x << ": "
        << e.what();
    throw QuadratureError(msg.str());
  }
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi >= lo) || points < 1) throw SpecError("log_grid: need 0 < lo <= hi");
  std::vector<double> grid(points);
  if (points == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) grid[i] = lo * std::exp(step * i);
  grid.back() = hi;
  return grid;
}

VerificationReport verify_kesten(const TailDistribution& g, double alpha, double eps, int n_max,
                                 std::vector<double> x_grid, const MonteCarloOptions& mc) {
  if (g.support_lower() < 0.0) throw SpecError("kesten: g must be positive");
  const double mu = upper_moment(g, alpha);
  if (!std::isfinite(mu)) {
    throw PreconditionError("kesten: vhat(alpha) is infinite for " + g.describe());
  }
  if (n_max < 2) throw SpecError("kesten: n_max must be at least 2");
  if (x_grid.empty()) x_grid = log_grid(1.0, g.tail_quantile(1e-4), 12);
  std::sort(x_grid.begin(), x_grid.end());
  const std::size_t nx = x_grid.size();
  std::vector<double> log_x(nx);
  for (std::size_t j = 0; j < nx; ++j) log_x[j] = std::log(x_grid[j]);

  // counts[n][j]: paths whose log product at step n lands in (log_x[j-1], log_x[j]].
  using Counts = std::vector<std::uint64_t>;
  const auto shards = run_shards<Counts>(
      mc.samples, mc.shards, mc.workers, [&](std::uint32_t shard, std::uint64_t count) {
        RngStream rng(mc.seed, stream_id(StreamPurpose::Kesten, shard));
        Counts c(static_cast<std::size_t>(n_max) * (nx + 1), 0);
        for (std::uint64_t i = 0; i < count; ++i) {
          double lp = 0.0;
          for (int n = 0; n < n_max; ++n) {
            lp += std::log(g.sample(rng));
            const auto idx = std::lower_bound(log_x.begin(), log_x.end(), lp) - log_x.begin();
            ++c[n * (nx + 1) + idx];
          }
        }
        return c;
      });
  Counts total(static_cast<std::size_t>(n_max) * (nx + 1), 0);
  for (const auto& c : shards) {
    for (std::size_t k = 0; k < c.size(); ++k) total[k] += c[k];
  }

  VerificationReport rep;
  rep.lemma_id = "kesten";
  rep.samples = mc.samples;
  rep.tolerance = 0.1;
  std::vector<double> k_hat(n_max + 1, 0.0);
  double running = 0.0;
  std::uint64_t sparse = 0;
  for (int n = 1; n <= n_max; ++n) {
    const std::uint64_t* c = &total[(n - 1) * (nx + 1)];
    // hits above x_j = sum of bins with index > j.
    std::uint64_t above = 0;
    std::vector<std::uint64_t> hits(nx);
    for (std::size_t j = nx; j-- > 0;) {
      above += c[j + 1];
      hits[j] = above;
    }
    for (std::size_t j = 0; j < nx; ++j) {
      VerificationRow row;
      row.n = n;
      row.x = x_grid[j];
      row.hits = hits[j];
      const double p = static_cast<double>(hits[j]) / static_cast<double>(mc.samples);
      row.observed = p;
      row.se = std::sqrt(p * (1.0 - p) / static_cast<double>(mc.samples));
      row.predicted = std::pow(mu + eps, n) * g.tail(x_grid[j]);
      if (hits[j] == 0) {
        ++rep.zero_hit_cells;
      } else if (hits[j] < kKestenMinHits) {
        ++sparse;
      } else {
        running = std::max(running, row.ratio());
      }
      rep.rows.push_back(row);
    }
    k_hat[n] = running;
  }
  const double half = k_hat[n_max / 2];
  if (!(half > 0.0) || !std::isfinite(k_hat[n_max])) {
    rep.max_rel_err = kInf;
    rep.notes.push_back("no finite K estimate");
  } else {
    rep.max_rel_err = k_hat[n_max] / half - 1.0;
  }
  std::ostringstream note;
  note << "K(" << n_max << ") = " << k_hat[n_max] << ", K(" << n_max / 2 << ") = " << half
       << ", cells excluded: " << rep.zero_hit_cells << " without hits, " << sparse
       << " with fewer than " << kKestenMinHits;
  rep.notes.push_back(note.str());
  rep.finalize();
  return rep;
}

VerificationReport verify_remainder(const ModelSpec& spec, std::vector<int> n_list,
                                    std::vector<double> x_grid, const MonteCarloOptions& mc,
                                    double tolerance) {
  if (n_list.empty()) throw SpecError("remainder: empty n list");
  if (x_grid.empty()) {
    for (double w : {1e-2, 1e-3, 1e-4}) {
      x_grid.push_back(std::max(spec.f.tail_quantile(w), spec.g.tail_quantile(w)));
    }
  }
  std::sort(n_list.begin(), n_list.end());
  std::sort(x_grid.begin(), x_grid.end());
  if (n_list.front() < 1) throw SpecError("remainder: n must be at least 1");
  ModelSpec inf = spec;
  inf.horizon = InfiniteHorizon{1e-6};
  const PathSimulator trunc(inf);  // validates mu_alpha < 1
  const int horizon = n_list.back() + trunc.horizon();
  ModelSpec fin = spec;
  fin.horizon = FiniteHorizon{horizon};
  const PathSimulator sim(fin);

  const std::size_t nn = n_list.size();
  const std::size_t nx = x_grid.size();
  using Counts = std::vector<std::uint64_t>;
  const auto shards = run_shards<Counts>(
      mc.samples, mc.shards, mc.workers, [&](std::uint32_t shard, std::uint64_t count) {
        RngStream rng(mc.seed, stream_id(StreamPurpose::Remainder, shard));
        Counts c(nn * nx, 0);
        std::vector<PathSample> buf(horizon);
        for (std::uint64_t i = 0; i < count; ++i) {
          sim.prefixes(buf, rng);
          const double s_h = buf.back().s;
          for (std::size_t a = 0; a < nn; ++a) {
            const double r = s_h - buf[n_list[a] - 1].s;
            const auto idx = std::lower_bound(x_grid.begin(), x_grid.end(), r) - x_grid.begin();
            for (std::ptrdiff_t j = 0; j < idx; ++j) ++c[a * nx + j];
          }
        }
        return c;
      });
  Counts total(nn * nx, 0);
  for (const auto& c : shards) {
    for (std::size_t k = 0; k < c.size(); ++k) total[k] += c[k];
  }

  VerificationReport rep;
  rep.lemma_id = "remainder";
  rep.samples = mc.samples;
  rep.tolerance = tolerance;
  bool monotone = true;
  const double trials = static_cast<double>(mc.samples);
  for (std::size_t a = 0; a < nn; ++a) {
    for (std::size_t j = 0; j < nx; ++j) {
      VerificationRow row;
      row.n = n_list[a];
      row.x = x_grid[j];
      row.hits = total[a * nx + j];
      const double p = static_cast<double>(row.hits) / trials;
      row.observed = p;
      row.se = std::sqrt(p * (1.0 - p) / trials);
      row.predicted = spec.f.tail(row.x) + spec.g.tail(row.x);
      if (row.hits == 0) ++rep.zero_hit_cells;
      if (a > 0) {
        const VerificationRow& prev = rep.rows[(a - 1) * nx + j];
        const double slack = 2.0 * std::hypot(row.se, prev.se);
        if (row.observed > prev.observed + slack) monotone = false;
      }
      rep.rows.push_back(row);
    }
  }
  for (std::size_t j = 0; j < nx; ++j) {
    rep.max_rel_err = std::max(rep.max_rel_err, rep.rows[(nn - 1) * nx + j].ratio());
  }
  rep.monotone = monotone;
  std::ostringstream note;
  note << "simulated horizon " << horizon << "; ratios nonincreasing in n within 2 SE: "
       << (monotone ? "yes" : "no");
  rep.notes.push_back(note.str());
  rep.finalize();
  return rep;
}

VerificationReport verify_pakes(const LogTransformTail& v, double alpha,
                                std::vector<double> x_grid, double tolerance) {
  const double hat = v_hat(v, alpha);
  if (!std::isfinite(hat)) throw PreconditionError("pakes: vhat(alpha) is infinite");
  if (x_grid.empty()) {
    for (double w : {1e-6, 1e-8, 1e-10}) x_grid.push_back(v.tail_quantile(w));
  }
  VerificationReport rep;
  rep.lemma_id = "pakes";
  rep.tolerance = tolerance;
  for (int n : {2, 3}) {
    const std::vector<LogTransformTail> vs(n, v);
    for (double x : x_grid) {
      VerificationRow row;
      row.n = n;
      row.x = x;
      row.observed = convolve_tail_oracle(vs, x) / v.tail(x);
      row.predicted = n * std::pow(hat, n - 1);
      rep.max_rel_err = std::max(rep.max_rel_err, row_rel_err(row));
      rep.rows.push_back(row);
    }
  }
  rep.finalize();
  return rep;
}

VerificationReport verify_product(const TailDistribution& d1, const TailDistribution& d2,
                                  double alpha, std::vector<double> x_grid, double tolerance) {
  if (x_grid.empty()) x_grid = log_grid(10.0, 1e3, 5);
  VerificationReport rep;
  rep.lemma_id = "c2";
  rep.tolerance = tolerance;
  for (double x : x_grid) {
    VerificationRow row;
    row.n = 2;
    row.x = x;
    row.observed = product_tail(d1, d2, x);
    row.predicted = product_tail_expansion({d1, d2}, alpha, x);
    rep.max_rel_err = std::max(rep.max_rel_err, row_rel_err(row));
    rep.rows.push_back(row);
  }
  rep.finalize();
  return rep;
}

VerificationReport verify_sum(const std::vector<LogTransformTail>& vs, double alpha,
                              std::vector<double> x_grid, double tolerance) {
  if (vs.empty()) throw SpecError("l2: no summands");
  if (x_grid.empty()) {
    for (double w : {1e-4, 1e-6, 1e-8}) x_grid.push_back(vs[0].tail_quantile(w));
  }
  VerificationReport rep;
  rep.lemma_id = "l2";
  rep.tolerance = tolerance;
  for (double x : x_grid) {
    VerificationRow row;
    row.n = static_cast<int>(vs.size());
    row.x = x;
    row.observed = convolve_tail_oracle(vs, x);
    row.predicted = sum_tail_expansion(vs, alpha, x);
    rep.max_rel_err = std::max(rep.max_rel_err, row_rel_err(row));
    rep.rows.push_back(row);
  }
  rep.finalize();
  return rep;
}

VerificationReport verify_potter(const LogTransformTail& v, double alpha, double b, double eps) {
  if (!(b > 1.0) || !(eps > 0.0)) throw SpecError("potter: need b > 1 and eps > 0");
  const double start = v.lower_cutoff();
  constexpr double kSpan = 60.0;   // extent of the x and y grid on the log axis
  constexpr double kStep = 0.25;
  constexpr double kSearch = 60.0; // how far above the support x0 is searched

  // Largest log-violation of the envelope for x, x + y in [x0, x0 + kSpan].
  const auto violation = [&](double x0) {
    double worst = 0.0;
    for (double x = x0; x <= x0 + kSpan; x += kStep) {
      const double vx = v.tail(x);
      if (!(vx > 0.0)) continue;
      for (double z = x0; z <= x0 + kSpan; z += kStep) {
        const double vz = v.tail(z);
        if (!(vz > 0.0)) continue;
        const double y = z - x;
        const double r = std::log(vz / vx);
        const double e1 = -(alpha + eps) * y;
        const double e2 = -(alpha - eps) * y;
        const double upper = std::log(b) + std::max(e1, e2);
        const double lower = -std::log(b) + std::min(e1, e2);
        worst = std::max({worst, r - upper, lower - r});
      }
    }
    return worst;
  };

  VerificationReport rep;
  rep.lemma_id = "potter";
  rep.tolerance = 0.0;
  double last = kInf;
  for (double x0 = start; x0 <= start + kSearch; x0 += 0.5) {
    last = violation(x0);
    if (last <= 0.0) {
      rep.x0 = x0;
      break;
    }
  }
  rep.max_rel_err = rep.x0 ? 0.0 : std::expm1(last);
  std::ostringstream note;
  if (rep.x0) {
    note << "x0 = " << *rep.x0 << " on the log axis (" << std::exp(*rep.x0)
         << " on the original scale)";
  } else {
    note << "no x0 within " << kSearch << " log units above the support";
  }
  rep.notes.push_back(note.str());
  for (double y : {-2.0, -0.5, 0.5, 2.0}) {
    const double x = (rep.x0 ? *rep.x0 : start) + 5.0;
    VerificationRow row;
    row.x = x + y;
    row.observed = v.tail(x + y) / v.tail(x);
    row.predicted = std::exp(-alpha * y);
    rep.rows.push_back(row);
  }
  rep.finalize();
  return rep;
}

}  // namespace ruinsim
