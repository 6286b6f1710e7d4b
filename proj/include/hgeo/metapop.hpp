#pragma once

// Deterministic meta-population dynamics. Inside region n:
//
//   dS_n/dt = -alpha I_n S_n / N_n
//   dI_n/dt = -beta I_n + alpha I_n S_n / N_n
//
// and both compartments U in {S, I} are exchanged between regions as
//
//   sum_{m != n} w(m -> n) U_m - w(n -> m) U_n
//
// with w the per-capita coupling of the region graph. Integrated with
// fixed-step classical RK4.

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hgeo/arrivals.hpp"
#include "hgeo/csv.hpp"
#include "hgeo/error.hpp"
#include "hgeo/region_graph.hpp"

namespace hgeo {

struct SIParams {
  double alpha = 0.0;    // transmission rate per unit time
  double beta = 0.0;     // removal rate per unit time
  double dt = 0.01;      // integration step
  double horizon = 1.0;  // end time

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidParameter, "alpha must be >= 0");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidParameter, "beta must be >= 0");
    if (!(dt > 0.0) || !std::isfinite(horizon) || dt > horizon) {
      throw Error(ErrorCode::InvalidParameter, "need 0 < dt <= horizon");
    }
  }
};

struct SimState {
  std::vector<double> S;
  std::vector<double> I;
};

struct StateDerivative {
  std::vector<double> dS;
  std::vector<double> dI;
};

namespace detail {

inline void derivative_into(std::span<const double> S, std::span<const double> I, const RegionGraph& graph,
                            const SIParams& params, std::span<double> dS, std::span<double> dI) {
  const auto n = graph.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double infection = params.alpha * I[i] * S[i] / graph.region(i).population;
    dS[i] = -infection;
    dI[i] = infection - params.beta * I[i];
  }
  for (std::size_t from = 0; from < n; ++from) {
    for (const auto& e : graph.out_edges(from)) {
      const double s = e.rate * S[from];
      const double inf = e.rate * I[from];
      dS[from] -= s;
      dS[e.to] += s;
      dI[from] -= inf;
      dI[e.to] += inf;
    }
  }
}

}  // namespace detail

inline StateDerivative derivative(const SimState& state, const RegionGraph& graph, const SIParams& params) {
  const auto n = graph.size();
  if (state.S.size() != n || state.I.size() != n) {
    throw Error(ErrorCode::InvalidParameter, "state dimension does not match graph");
  }
  StateDerivative d{std::vector<double>(n), std::vector<double>(n)};
  detail::derivative_into(state.S, state.I, graph, params, d.dS, d.dI);
  return d;
}

/// Sampled trajectory; compartments stored sample-major.
class Trajectory {
 public:
  Trajectory(std::size_t regions, SIParams params) : regions_(regions), params_(params) {}

  std::size_t regions() const noexcept { return regions_; }
  std::size_t samples() const noexcept { return times_.size(); }
  const std::vector<double>& times() const noexcept { return times_; }
  const SIParams& params() const noexcept { return params_; }
  /// Negative round-off values clamped to zero during integration.
  std::size_t clamped() const noexcept { return clamped_; }

  double S(std::size_t k, std::size_t region) const { return S_[k * regions_ + region]; }
  double I(std::size_t k, std::size_t region) const { return I_[k * regions_ + region]; }

  SimState state(std::size_t k) const {
    auto b = static_cast<std::ptrdiff_t>(k * regions_);
    auto e = b + static_cast<std::ptrdiff_t>(regions_);
    return {{S_.begin() + b, S_.begin() + e}, {I_.begin() + b, I_.begin() + e}};
  }

  void push(double t, std::span<const double> S, std::span<const double> I) {
    times_.push_back(t);
    S_.insert(S_.end(), S.begin(), S.end());
    I_.insert(I_.end(), I.begin(), I.end());
  }

  void add_clamped(std::size_t c) { clamped_ += c; }

 private:
  std::size_t regions_;
  SIParams params_;
  std::vector<double> times_;
  std::vector<double> S_;
  std::vector<double> I_;
  std::size_t clamped_ = 0;
};

enum class RunKind { Outbreak, Null };

inline constexpr double kNegativeTolerance = 1e-6;  // relative to N_n

/// Fixed-step RK4 from S = N (less the seed infections) and I = 0 except at
/// the seed. The final step is shortened so the last sample lands exactly on
/// the horizon. A zero initial infection is only accepted for RunKind::Null.
inline Trajectory simulate(const RegionGraph& graph, const SIParams& params, std::size_t seed,
                           double initial_infected, RunKind kind = RunKind::Outbreak) {
  params.validate();
  const auto n = graph.size();
  if (seed >= n) throw Error(ErrorCode::UnknownRegionId, "seed index out of range");
  const double seed_pop = graph.region(seed).population;
  if (kind == RunKind::Null) {
    if (initial_infected != 0.0) throw Error(ErrorCode::InvalidParameter, "a null run has no initial infection");
  } else if (!(initial_infected > 0.0) || initial_infected > seed_pop) {
    throw Error(ErrorCode::InvalidParameter, "need 0 < initial_infected <= N_seed");
  }

  std::vector<double> S(n), I(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) S[i] = graph.region(i).population;
  S[seed] -= initial_infected;
  I[seed] = initial_infected;

  Trajectory traj(n, params);
  traj.push(0.0, S, I);

  std::vector<double> k1s(n), k1i(n), k2s(n), k2i(n), k3s(n), k3i(n), k4s(n), k4i(n), ts(n), ti(n);
  const auto steps = static_cast<std::size_t>(std::ceil(params.horizon / params.dt - 1e-9));
  double t = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_next = k == steps ? params.horizon : static_cast<double>(k) * params.dt;
    const double h = t_next - t;

    detail::derivative_into(S, I, graph, params, k1s, k1i);
    for (std::size_t i = 0; i < n; ++i) {
      ts[i] = S[i] + 0.5 * h * k1s[i];
      ti[i] = I[i] + 0.5 * h * k1i[i];
    }
    detail::derivative_into(ts, ti, graph, params, k2s, k2i);
    for (std::size_t i = 0; i < n; ++i) {
      ts[i] = S[i] + 0.5 * h * k2s[i];
      ti[i] = I[i] + 0.5 * h * k2i[i];
    }
    detail::derivative_into(ts, ti, graph, params, k3s, k3i);
    for (std::size_t i = 0; i < n; ++i) {
      ts[i] = S[i] + h * k3s[i];
      ti[i] = I[i] + h * k3i[i];
    }
    detail::derivative_into(ts, ti, graph, params, k4s, k4i);

    std::size_t clamped = 0;
    for (std::size_t i = 0; i < n; ++i) {
      S[i] += h / 6.0 * (k1s[i] + 2.0 * k2s[i] + 2.0 * k3s[i] + k4s[i]);
      I[i] += h / 6.0 * (k1i[i] + 2.0 * k2i[i] + 2.0 * k3i[i] + k4i[i]);
      const double floor = -kNegativeTolerance * graph.region(i).population;
      for (double* v : {&S[i], &I[i]}) {
        if (*v < 0.0) {
          if (*v < floor) {
            throw Error(ErrorCode::StepTooLarge, "compartment of region '" + graph.region(i).id +
                                                     "' went negative at t=" + csv::format_number(t_next));
          }
          *v = 0.0;
          ++clamped;
        }
      }
    }
    traj.add_clamped(clamped);
    traj.push(t_next, S, I);
    t = t_next;
  }
  return traj;
}

/// Earliest time at which I_n / N_n reaches epsilon, linearly interpolated
/// between the bracketing samples. Regions that never cross are absent.
inline ArrivalTable arrival_times(const Trajectory& traj, const RegionGraph& graph, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::InvalidParameter, "need 0 < epsilon < 1");
  if (traj.regions() != graph.size()) throw Error(ErrorCode::InvalidParameter, "trajectory does not match graph");

  ArrivalTable table(Provenance::Simulated, 0.0);
  const auto& times = traj.times();
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const double pop = graph.region(i).population;
    double prev = 0.0;
    for (std::size_t k = 0; k < traj.samples(); ++k) {
      const double x = traj.I(k, i) / pop;
      if (x >= epsilon) {
        double t = times[k];
        if (k > 0 && x > prev) t = times[k - 1] + (epsilon - prev) / (x - prev) * (times[k] - times[k - 1]);
        table.set(graph.region(i).id, t);
        break;
      }
      prev = x;
    }
  }
  return table;
}

/// CSV `time,region_id,S,I`; every `sample_every`-th sample plus the last one.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const RegionGraph& graph,
                                 std::size_t sample_every = 1) {
  if (sample_every == 0) sample_every = 1;
  out << "time,region_id,S,I\n";
  const auto last = traj.samples() - 1;
  for (std::size_t k = 0; k < traj.samples(); ++k) {
    if (k % sample_every != 0 && k != last) continue;
    const auto t = csv::format_number(traj.times()[k]);
    for (std::size_t i = 0; i < traj.regions(); ++i) {
      out << t << ',' << csv::escape(graph.region(i).id) << ',' << csv::format_number(traj.S(k, i)) << ','
          << csv::format_number(traj.I(k, i)) << '\n';
    }
  }
}

}  // namespace hgeo
