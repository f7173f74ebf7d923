#pragma once

// Adiabatic preparation: the effective spin model is driven with
// J(t) = J sin(pi t / (2 t_f)) from a product state, and the trajectory is
// compared against the instantaneous Rydberg-RK ground state of the sector.

#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "rydgauge/basis.hpp"
#include "rydgauge/errors.hpp"
#include "rydgauge/geometry.hpp"
#include "rydgauge/hamiltonian.hpp"
#include "rydgauge/lattice.hpp"
#include "rydgauge/observables.hpp"
#include "rydgauge/solver.hpp"

namespace rydgauge {

struct PulseSpec {
  double J = 1.0;
  double t_f = 40.0;
  double dt = 0.01;  ///< time step; 0.01/J is the usual choice

  double J_at(double t) const { return J * std::sin(std::numbers::pi * t / (2.0 * t_f)); }
  void validate() const {
    if (!(t_f > 0.0)) throw Error("pulse: t_f must be positive");
    if (!(dt > 0.0)) throw Error("pulse: dt must be positive");
    if (!(J > 0.0)) throw Error("pulse: J must be positive");
  }
};

struct AdiabaticOptions {
  double delta = 0.1;       ///< intra-pair offset field delta sum_p S^z_p
  int record_every = 10;    ///< trajectory rows every this many steps (last step always)
  bool track_fidelity = true;
  EffectiveSpinOptions model{};
  EvolveOptions evolve{};
  LanczosOptions lanczos{};
};

struct TrajectoryRow {
  double t = 0.0;
  double J_t = 0.0;
  double energy = 0.0;
  double s00z = 0.0;
  double spipiz = 0.0;
  double spipix = 0.0;
  double fidelity = 0.0;  ///< NaN when not tracked
  double norm = 1.0;
};

struct AdiabaticResult {
  std::vector<TrajectoryRow> trajectory;
  StructureFactorReport final_report;
  RvbsDiagnostic diagnostic;
  double final_fidelity = 0.0;
  EvolveStats stats;
  std::vector<cplx> final_state;
};

/// Product state the sweep starts from: the blockade sector reference aligned
/// with the detuning (all down for delta > 0, all up otherwise).
inline std::uint64_t adiabatic_initial_state(const Lattice& lat, double delta) {
  return delta > 0.0 ? 0 : low_mask(lat.num_spins());
}

/// Ground state of the sector Rydberg-RK model at coupling J, in the full space.
inline std::vector<cplx> instantaneous_ground_state(const Lattice& lat, const Basis& sector,
                                                    const BlockadeSolution& sol, double J,
                                                    double delta, const LanczosOptions& opt) {
  const auto H = build_rydberg_rk(lat, sector, J, sol.Lambda, delta);
  LanczosOptions o = opt;
  o.count_degeneracy = false;
  const auto gs = sector.size() <= kDenseLimit ? [&] {
    const auto sp = dense_spectrum(H, true);
    return GroundState{sp.values[0], sp.vector(0), 0.0, 0, 1};
  }()
                                               : ground_state(H, o);
  return to_complex(embed(sector, gs.vector, lat.num_spins()));
}

/// Fills `res` as it goes, so a failed propagation leaves the rows recorded
/// so far in res.trajectory.
inline void adiabatic_sweep(const Lattice& lat, const BlockadeSolution& sol, const PulseSpec& pulse,
                            const AdiabaticOptions& opt, AdiabaticResult& res) {
  pulse.validate();
  if (lat.kind() == LatticeKind::chain) throw Error("adiabatic_sweep: ladder or square lattice required");
  const int n = lat.num_spins();
  const Basis full = Basis::full(lat.spec(), n);
  const Basis sector = enumerate_sector(lat);

  const SparseOperator drive = transverse_field(n);
  const SparseOperator diag = build_effective_spin(lat, sol.geometry, 0.0, opt.delta, opt.model);
  OperatorFamily H;
  H.add([&](double t) { return pulse.J_at(t); }, drive);
  H.add([](double) { return 1.0; }, diag);

  std::vector<cplx> v0(full.size(), cplx{});
  v0[adiabatic_initial_state(lat, opt.delta)] = 1.0;

  const auto grid = uniform_grid(0.0, pulse.t_f, pulse.dt);
  res = AdiabaticResult{};
  auto record = [&](std::size_t k, double t, const std::vector<cplx>& v) {
    const bool last = k + 1 == grid.size();
    if (!last && k % static_cast<std::size_t>(std::max(1, opt.record_every)) != 0) return;
    TrajectoryRow row;
    row.t = t;
    row.J_t = pulse.J_at(t);
    row.energy = H.expectation(t, v);
    row.s00z = structure_factor(lat, full, v, Axis::z, {0.0, 0.0});
    row.spipiz = structure_factor(lat, full, v, Axis::z, {kPi, kPi});
    row.spipix = structure_factor(lat, full, v, Axis::x, {kPi, kPi});
    row.norm = detail::norm(v);
    row.fidelity = std::nan("");
    if (opt.track_fidelity) {
      if (row.J_t > 0.0) {
        row.fidelity = fidelity(instantaneous_ground_state(lat, sector, sol, row.J_t, opt.delta, opt.lanczos), v);
      } else {
        // at J = 0 the sector ground state is the aligned product state
        std::vector<cplx> ref(v.size(), cplx{});
        ref[adiabatic_initial_state(lat, opt.delta)] = 1.0;
        row.fidelity = fidelity(ref, v);
      }
    }
    res.trajectory.push_back(row);
  };
  res.final_state = evolve(H, v0, grid, record, opt.evolve, &res.stats);
  res.final_report = structure_factor_report(lat, full, res.final_state);
  res.diagnostic = rvbs_signature(res.final_report);
  res.final_fidelity = fidelity(
      instantaneous_ground_state(lat, sector, sol, pulse.J_at(grid.back()), opt.delta, opt.lanczos),
      res.final_state);
}

inline AdiabaticResult adiabatic_sweep(const Lattice& lat, const BlockadeSolution& sol,
                                       const PulseSpec& pulse, const AdiabaticOptions& opt = {}) {
  AdiabaticResult res;
  adiabatic_sweep(lat, sol, pulse, opt, res);
  return res;
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
  os << "t,J_t,energy,S00z,Spipiz,Spipix,fidelity_instantaneous\n";
  os.precision(12);
  for (const auto& r : rows)
    os << r.t << ',' << r.J_t << ',' << r.energy << ',' << r.s00z << ',' << r.spipiz << ','
       << r.spipix << ',' << r.fidelity << '\n';
}

inline nlohmann::json to_json(const AdiabaticResult& r) {
  return {{"final_fidelity", r.final_fidelity},
          {"rvbs", to_json(r.diagnostic)},
          {"structure_factors", to_json(r.final_report)},
          {"steps", r.stats.steps},
          {"substeps", r.stats.substeps},
          {"max_step_error", r.stats.max_error}};
}

}  // namespace rydgauge
