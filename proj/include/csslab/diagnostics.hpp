#pragma once

#include <vector>

namespace csslab {

// Sampled nonnegative series on [t_0, 0): strictly increasing negative times.
struct TimeSeries {
  std::vector<double> times, values;
};
void validate_series(const TimeSeries& s);

struct TMaxResult {
  double value = 0;
  int last_block = -1;     // index of the last dyadic block summed
  bool truncated = false;  // eta = 0 sum stopped at an under-sampled block
};

/// Dyadic maximal function sum_{j <= n(t)} 2^{js} (j^2+1)^{-1} a[f; t, j], with
/// block sups taken over the available samples. For eta > 0 an empty block is a
/// gap error; for eta = 0 the sum stops after the first block holding fewer than
/// two samples.
TMaxResult t_maximal_detail(const TimeSeries& series, double t, double eta, double s);
double t_maximal(const TimeSeries& series, double t, double eta, double s);
// n(t) for eta > 0; -1 stands for infinity.
int dyadic_count(double t, double eta);

// Maximal function at every sample, as a new series.
TimeSeries t_maximal_series(const TimeSeries& series, double eta, double s);

struct EnvReport {
  double domination_max = 0;  // max f / T[f]; <= 1 means domination holds
  bool domination = false;
  double idempotence_min = 0, idempotence_max = 0;  // T[T[f]] / T[f]
  double weight_min = 0, weight_max = 0;            // T^{s}[<t>^q f] / (<t>^q T^{s-q}[f])
  double integral_max = 0;  // ||<.>^q T[f]||_{L^p[t,0)} / (<t>^{q+1/p} T[f](t))
  int evaluated = 0;
};
// Structural properties checked on the sampled series, evaluated at samples with
// t <= eval_fraction * t_0 so every dyadic block is populated. p <= 0 means p = inf.
EnvReport env_properties_check(const TimeSeries& series, double eta, double s, double p, double q,
                               double eval_fraction = 0.25);

}  // namespace csslab
