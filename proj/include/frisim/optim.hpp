// SPDX-License-Identifier: Apache-2.0
//
// Derivative-free search over box-bounded parameter vectors, plus greedy
// codebook alignment of the surface phases.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "frisim/channel.hpp"
#include "frisim/em_core.hpp"
#include "frisim/errors.hpp"

namespace frisim::optim {

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const { return lower.size(); }
};

struct PolicyVector {
  std::vector<double> values;
  Bounds bounds;

  // Clamps into the box; returns the number of clamped coordinates.
  std::size_t project() {
    std::size_t n = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double c = std::clamp(values[i], bounds.lower[i], bounds.upper[i]);
      n += c != values[i];
      values[i] = c;
    }
    return n;
  }
};

using Objective = std::function<double(std::span<const double>)>;

struct SearchResult {
  PolicyVector best;
  double best_objective = -std::numeric_limits<double>::infinity();
  std::vector<double> running_best;  // after each evaluation
};

inline void check_bounds(const Bounds& b) {
  if (b.lower.size() != b.upper.size() || b.lower.empty())
    throw DimensionMismatch("bounds: lower/upper must be non-empty and of equal length");
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!(b.lower[i] <= b.upper[i])) throw DomainError("bounds: lower exceeds upper");
}

// Uniform sampling inside the box; evaluation i only depends on (seed, i), so
// a larger budget extends the sequence of a smaller one.
inline SearchResult random_search(const Objective& objective, const Bounds& bounds, std::size_t budget,
                                  std::uint64_t seed) {
  check_bounds(bounds);
  if (budget < 1) throw DomainError("random_search: budget must be >= 1");
  std::mt19937_64 rng(seed);
  SearchResult r;
  r.best.bounds = bounds;
  std::vector<double> x(bounds.size());
  for (std::size_t k = 0; k < budget; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = std::uniform_real_distribution<double>(bounds.lower[i], bounds.upper[i])(rng);
    const double f = objective(x);
    if (f > r.best_objective || k == 0) {
      r.best_objective = f;
      r.best.values = x;
    }
    r.running_best.push_back(r.best_objective);
  }
  return r;
}

struct CemOptions {
  std::size_t population = 40;
  double elite_frac = 0.2;
  std::size_t iterations = 50;
  double init_std_frac = 0.3;  // initial std as a fraction of each box width
  double smoothing = 1.0;      // weight of the new elite statistics in the refit
  double min_std_frac = 0.02;  // floor on the search std, as a fraction of each box width
};

struct CemIteration {
  std::size_t iteration;
  double elite_mean;    // mean objective of this iteration's elites
  double best_so_far;
  double mean_std;      // average search std across coordinates after the refit
  double total_variance;
};

struct CemResult {
  PolicyVector best;
  double best_objective = -std::numeric_limits<double>::infinity();
  std::vector<CemIteration> history;
  std::vector<double> final_mean;
  std::size_t evaluations = 0;
};

// Cross-entropy method with a diagonal Gaussian search distribution refit to
// the elite set every iteration. `init` (optional) sets the initial mean.
inline CemResult cem_optimize(const Objective& objective, const Bounds& bounds, const CemOptions& opt,
                              std::uint64_t seed, std::span<const double> init = {}) {
  check_bounds(bounds);
  if (opt.population < 4) throw DomainError("cem_optimize: population must be >= 4");
  if (!(opt.elite_frac > 0.0 && opt.elite_frac <= 0.5)) throw DomainError("cem_optimize: elite_frac must lie in (0, 0.5]");
  if (!(opt.smoothing > 0.0 && opt.smoothing <= 1.0)) throw DomainError("cem_optimize: smoothing must lie in (0, 1]");
  const std::size_t n = bounds.size();
  const std::size_t elites = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(opt.elite_frac * opt.population)));

  std::vector<double> mean(n), stdev(n), min_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double width = bounds.upper[i] - bounds.lower[i];
    mean[i] = init.size() == n ? std::clamp(init[i], bounds.lower[i], bounds.upper[i])
                               : 0.5 * (bounds.lower[i] + bounds.upper[i]);
    stdev[i] = opt.init_std_frac * width;
    min_std[i] = opt.min_std_frac * width;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CemResult r;
  r.best.bounds = bounds;
  std::vector<std::vector<double>> samples(opt.population, std::vector<double>(n));
  std::vector<double> scores(opt.population);
  std::vector<std::size_t> order(opt.population);

  for (std::size_t it = 0; it < opt.iterations; ++it) {
    for (std::size_t k = 0; k < opt.population; ++k) {
      for (std::size_t i = 0; i < n; ++i)
        samples[k][i] = std::clamp(mean[i] + stdev[i] * gauss(rng), bounds.lower[i], bounds.upper[i]);
      scores[k] = objective(samples[k]);
      ++r.evaluations;
      if (scores[k] > r.best_objective || r.best.values.empty()) {
        r.best_objective = scores[k];
        r.best.values = samples[k];
      }
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double elite_mean = 0.0, mean_std = 0.0, total_var = 0.0;
    for (std::size_t e = 0; e < elites; ++e) elite_mean += scores[order[e]];
    elite_mean /= static_cast<double>(elites);
    for (std::size_t i = 0; i < n; ++i) {
      double mu = 0.0;
      for (std::size_t e = 0; e < elites; ++e) mu += samples[order[e]][i];
      mu /= static_cast<double>(elites);
      double var = 0.0;
      for (std::size_t e = 0; e < elites; ++e) var += (samples[order[e]][i] - mu) * (samples[order[e]][i] - mu);
      var /= static_cast<double>(elites);
      mean[i] = opt.smoothing * mu + (1.0 - opt.smoothing) * mean[i];
      stdev[i] = std::max(min_std[i], opt.smoothing * std::sqrt(var) + (1.0 - opt.smoothing) * stdev[i]);
      mean_std += stdev[i];
      total_var += stdev[i] * stdev[i];
    }
    r.history.push_back({it, elite_mean, r.best_objective, mean_std / static_cast<double>(n), total_var});
  }
  r.final_mean = mean;
  return r;
}

struct GreedyAlignment {
  std::vector<int> indices;        // codebook index per element
  std::vector<double> objective;   // |composite| after initialization and each sweep
  int sweeps = 0;
};

// Coordinate ascent over codebook phases maximizing
//   | direct + sum_m conj(h_rx[m]) * delta_m(theta_m) e^{j theta_m} * h_af[m] |
// where delta_m comes from the fitted model at the element's incidence
// angle (or a constant `amplitude_override` when >= 0).
inline GreedyAlignment greedy_phase_align(std::complex<double> direct, std::span<const std::complex<double>> h_rx,
                                          std::span<const std::complex<double>> h_af,
                                          std::span<const double> incident_deg, const em::FitCoefficients& fit,
                                          int bits, int max_sweeps = 10, double amplitude_override = -1.0) {
  using cplx = std::complex<double>;
  const std::size_t m_count = h_rx.size();
  if (h_af.size() != m_count || incident_deg.size() != m_count)
    throw DimensionMismatch("greedy_phase_align: vector lengths differ");
  const int n_codes = 1 << bits;
  (void)em::quantize_phase_index(0.0, bits);  // validates bits

  // contribution[m * n_codes + k] of element m at codeword k
  std::vector<cplx> contrib(m_count * n_codes);
  for (std::size_t m = 0; m < m_count; ++m) {
    const cplx base = std::conj(h_rx[m]) * h_af[m];
    for (int k = 0; k < n_codes; ++k) {
      const double th = em::codeword(k, bits);
      const double amp =
          amplitude_override >= 0.0 ? amplitude_override : em::fitted_amplitude(th, incident_deg[m], fit).value;
      contrib[m * n_codes + k] = base * std::polar(amp, th);
    }
  }

  GreedyAlignment g;
  g.indices.assign(m_count, 0);
  cplx total = direct;
  // Independent start: each element as close to the direct path as possible.
  for (std::size_t m = 0; m < m_count; ++m) {
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_codes; ++k) {
      const double v = std::abs(direct + contrib[m * n_codes + k]);
      if (v > best_val) {
        best_val = v;
        best = k;
      }
    }
    g.indices[m] = best;
    total += contrib[m * n_codes + best];
  }
  g.objective.push_back(std::abs(total));

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (std::size_t m = 0; m < m_count; ++m) {
      const cplx rest = total - contrib[m * n_codes + g.indices[m]];
      int best = g.indices[m];
      double best_val = std::abs(total);
      for (int k = 0; k < n_codes; ++k) {
        const double v = std::abs(rest + contrib[m * n_codes + k]);
        if (v > best_val) {
          best_val = v;
          best = k;
        }
      }
      if (best != g.indices[m]) {
        g.indices[m] = best;
        total = rest + contrib[m * n_codes + best];
        changed = true;
      }
    }
    ++g.sweeps;
    g.objective.push_back(std::abs(total));
    if (!changed) break;
  }
  return g;
}

// Aligns the surface towards Bob for a channel set whose composites are not
// needed.
inline GreedyAlignment greedy_phase_align(const channel::ChannelSet& ch, std::span<const double> incident_deg,
                                          const em::FitCoefficients& fit, int bits) {
  return greedy_phase_align(ch.ab, ch.fb, ch.af, incident_deg, fit, bits);
}

}  // namespace frisim::optim
