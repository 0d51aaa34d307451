#include "csslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "csslab/types.hpp"

namespace csslab {

namespace {

struct Block {
  double sup = 0;
  int count = 0;
};

// Sup over samples with lo <= t' < hi.
Block block_sup(const TimeSeries& s, double lo, double hi) {
  const auto b = std::lower_bound(s.times.begin(), s.times.end(), lo);
  const auto e = std::lower_bound(s.times.begin(), s.times.end(), hi);
  Block out;
  for (auto it = b; it < e; ++it) {
    out.sup = std::max(out.sup, s.values[it - s.times.begin()]);
    ++out.count;
  }
  return out;
}

double bracket(double t, double eta) { return std::sqrt(t * t + eta * eta); }

}  // namespace

void validate_series(const TimeSeries& s) {
  require(!s.times.empty(), "time series is empty");
  require(s.times.size() == s.values.size(), "time series columns differ in length");
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    require(std::isfinite(s.times[i]) && s.times[i] < 0, "sample times must be negative");
    require(std::isfinite(s.values[i]) && s.values[i] >= 0, "sample values must be nonnegative");
    if (i > 0) require(s.times[i] > s.times[i - 1], "sample times must be strictly increasing");
  }
}

int dyadic_count(double t, double eta) {
  if (eta == 0.0) return -1;
  return static_cast<int>(std::ceil(std::max(0.0, std::log2(std::abs(t) / eta))));
}

TMaxResult t_maximal_detail(const TimeSeries& series, double t, double eta, double s) {
  require(eta >= 0, "eta must be nonnegative");
  require(t < 0 && t >= series.times.front(), "t outside the sampled range");
  TMaxResult res;
  const int n = dyadic_count(t, eta);
  for (int j = 0;; ++j) {
    const double lo = std::ldexp(t, -j);
    const bool final_block = n >= 0 && j == n;
    const Block blk = block_sup(series, lo, final_block ? 0.0 : std::ldexp(t, -(j + 1)));
    if (n >= 0) {
      if (blk.count == 0) throw NumericalError("maximal function: dyadic block " + std::to_string(j) + " has no samples");
    } else if (blk.count == 0) {
      res.truncated = true;
      break;
    }
    res.value += std::pow(2.0, j * s) / (double(j) * j + 1.0) * blk.sup;
    res.last_block = j;
    if (final_block) break;
    if (n < 0 && blk.count < 2) {
      res.truncated = true;
      break;
    }
    if (j > 2000) throw NumericalError("maximal function: block index overflow");
  }
  return res;
}

double t_maximal(const TimeSeries& series, double t, double eta, double s) {
  return t_maximal_detail(series, t, eta, s).value;
}

TimeSeries t_maximal_series(const TimeSeries& series, double eta, double s) {
  TimeSeries out;
  out.times = series.times;
  out.values.reserve(series.times.size());
  for (double t : series.times) out.values.push_back(t_maximal(series, t, eta, s));
  return out;
}

EnvReport env_properties_check(const TimeSeries& series, double eta, double s, double p, double q,
                               double eval_fraction) {
  validate_series(series);
  require(eta >= 0, "eta must be nonnegative");
  require(s >= 0, "weight exponent s must be nonnegative");
  const double inv_p = p > 0 ? 1.0 / p : 0.0;
  require(p <= 0 || p >= 1, "need 1 <= p <= inf");
  require(inv_p + q + s > 0, "integral bound needs 1/p + q + s > 0");

  const TimeSeries tf = t_maximal_series(series, eta, s);
  TimeSeries weighted = series;
  for (std::size_t i = 0; i < weighted.times.size(); ++i)
    weighted.values[i] *= std::pow(bracket(weighted.times[i], eta), q);

  EnvReport rep;
  rep.idempotence_min = rep.weight_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double tf_i = tf.values[i];
    if (tf_i > 0) rep.domination_max = std::max(rep.domination_max, series.values[i] / tf_i);
  }
  rep.domination = rep.domination_max <= 1.0;

  const double t_limit = eval_fraction * series.times.front();
  for (std::size_t i = 0; i < series.times.size() && series.times[i] <= t_limit; ++i) {
    const double t = series.times[i], tf_i = tf.values[i];
    if (!(tf_i > 0)) continue;
    ++rep.evaluated;
    const double idem = t_maximal(tf, t, eta, s) / tf_i;
    rep.idempotence_min = std::min(rep.idempotence_min, idem);
    rep.idempotence_max = std::max(rep.idempotence_max, idem);

    const double lhs = t_maximal(weighted, t, eta, s);
    const double rhs = std::pow(bracket(t, eta), q) * t_maximal(series, t, eta, s - q);
    if (rhs > 0) {
      rep.weight_min = std::min(rep.weight_min, lhs / rhs);
      rep.weight_max = std::max(rep.weight_max, lhs / rhs);
    }

    // Trapezoid over samples in [t, 0), closed by a constant piece up to 0.
    double norm = 0;
    const std::size_t k_end = series.times.size();
    auto g = [&](std::size_t k) { return std::pow(bracket(tf.times[k], eta), q) * tf.values[k]; };
    if (inv_p == 0) {
      for (std::size_t k = i; k < k_end; ++k) norm = std::max(norm, g(k));
    } else {
      for (std::size_t k = i; k + 1 < k_end; ++k)
        norm += 0.5 * (std::pow(g(k), p) + std::pow(g(k + 1), p)) * (tf.times[k + 1] - tf.times[k]);
      norm += std::pow(g(k_end - 1), p) * (0.0 - tf.times[k_end - 1]);
      norm = std::pow(norm, inv_p);
    }
    rep.integral_max = std::max(rep.integral_max, norm / (std::pow(bracket(t, eta), q + inv_p) * tf_i));
  }
  if (rep.evaluated == 0) rep.idempotence_min = rep.weight_min = 0;
  return rep;
}

}  // namespace csslab
