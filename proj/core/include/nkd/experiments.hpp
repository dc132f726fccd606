#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nkd/bitstream.hpp"
#include "nkd/channel_math.hpp"
#include "nkd/session.hpp"

namespace nkd {

/// A one-dimensional parameter sweep.
struct SweepSpec {
  enum class Variable { kAlpha, kTau };
  Variable variable = Variable::kAlpha;
  std::vector<double> values;
  std::size_t samples = 100000;
  std::size_t repetitions = 1;

  /// Values must lie in their parameter domain and samples >= 1000.
  void validate() const;
};

/// Seed of sweep point `point`, repetition `rep`.
Seed point_seed(Seed master, std::size_t point, std::size_t rep) noexcept;

/// Runs fn(i) for i in [0, count) on a small worker pool. Results must be
/// written to per-index slots so the outcome is independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

/// Formats a real for CSV output with 6 significant digits.
std::string csv_real(double v);

// --- Repetition-channel error rates versus alpha (alpha = beta) ------------

struct Fig3Row {
  double alpha = 0.0;
  double eps2_analytic = 0.0;
  double delta2_analytic = 0.0;
  double eps2_mc = 0.0;
  double delta2_mc = 0.0;
  std::size_t accepted = 0;
  std::size_t offered = 0;
  TiePolicy policy = TiePolicy::kCountAsError;
};

struct Fig3Options {
  std::vector<double> alphas{0.05, 0.10, 0.16, 0.25, 0.35, 0.45};
  std::size_t samples = 100000;  // N-groups per point
  unsigned n_rep = 2;
  double gamma = 0.0;
  Seed seed{1};
  TiePolicy policy = TiePolicy::kCountAsError;
};

/// Invalid alphas are reported through `skipped` and left out of the result.
std::vector<Fig3Row> run_fig3(const Fig3Options& options, std::vector<std::string>* skipped = nullptr);
void write_fig3_csv(std::ostream& os, const std::vector<Fig3Row>& rows);

// --- First-exchange acceptance under tampering ------------------------------

struct Fig4Row {
  double tau = 0.0;
  double expected_ptotal = 0.0;  // untampered reference the monitor compares against
  double measured_ptotal = 0.0;  // mean over repetitions
  double sigma = 0.0;            // binomial sigma of one measurement under the reference
  double z = 0.0;                // mean z over repetitions
  double measured_std = 0.0;     // sample std-dev of measured_ptotal across repetitions
  std::size_t reps = 0;
  std::vector<double> z_per_rep;
};

struct Fig4Options {
  std::vector<double> taus{0.0, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05};
  std::size_t initial_bits = 500000;
  double alpha = 0.16;
  double beta = 0.16;
  std::size_t repetitions = 1;
  Seed seed{1};
};

std::vector<Fig4Row> run_fig4(const Fig4Options& options, std::vector<std::string>* skipped = nullptr);
void write_fig4_csv(std::ostream& os, const std::vector<Fig4Row>& rows);

// --- Final key after the full protocol under tampering ---------------------

struct Fig5Row {
  double tau = 0.0;
  double pre_pa_len = 0.0;
  double k_estimate = 0.0;
  double final_key_bits = 0.0;  // bits actually emitted (0 whenever the alarm fires)
  double key_rate = 0.0;        // rate unaware parties would reach
  double eve_key_agreement = 0.0;
  double alarm = 0.0;           // fraction of repetitions that raised the alarm
  std::size_t reps = 0;
};

struct Fig5Options {
  std::vector<double> taus{0.0, 0.01, 0.02, 0.03, 0.04, 0.05};
  std::size_t initial_bits = 500000;
  double alpha = 0.16;
  double beta = 0.16;
  unsigned rounds = 4;
  std::size_t repetitions = 1;
  Seed seed{1};
};

std::vector<Fig5Row> run_fig5(const Fig5Options& options, std::vector<std::string>* skipped = nullptr);
void write_fig5_csv(std::ostream& os, const std::vector<Fig5Row>& rows);

/// Session configuration used by the tamper sweeps for one point.
SessionConfig tamper_sweep_config(double tau, std::size_t initial_bits, double alpha, double beta,
                                  unsigned rounds, Seed seed);

}  // namespace nkd
