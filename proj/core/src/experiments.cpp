#include "nkd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "nkd/adversary.hpp"
#include "nkd/distillation.hpp"

namespace nkd {

void SweepSpec::validate() const {
  if (samples < 1000) throw std::invalid_argument("sweep needs at least 1000 samples per point");
  if (repetitions == 0) throw std::invalid_argument("sweep needs at least one repetition");
  for (double v : values) {
    const bool ok = variable == Variable::kAlpha ? (v > 0.0 && v < 1.0) : (v >= 0.0 && v <= 1.0);
    if (!ok) throw std::invalid_argument("sweep value outside its parameter domain");
  }
}

Seed point_seed(Seed master, std::size_t point, std::size_t rep) noexcept {
  return derive_seed(master, point, rep);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1U, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string csv_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------

std::vector<Fig3Row> run_fig3(const Fig3Options& options, std::vector<std::string>* skipped) {
  if (options.samples < 1000) throw std::invalid_argument("fig3: samples must be at least 1000");
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < options.alphas.size(); ++i) {
    const double a = options.alphas[i];
    if (a > 0.0 && a < 1.0) {
      valid.push_back(i);
    } else if (skipped) {
      skipped->push_back("alpha=" + csv_real(a) + ": outside (0, 1)");
    }
  }

  std::vector<Fig3Row> rows(valid.size());
  parallel_for(valid.size(), [&](std::size_t slot) {
    const std::size_t idx = valid[slot];
    const double alpha = options.alphas[idx];
    const Seed seed = point_seed(options.seed, idx, 0);

    Generator block_rng(seed, stream::kRandomBlock);
    Generator alice_rng(seed, stream::kAliceNoise);
    Generator bob_rng(seed, stream::kBobNoise);
    Generator eve_rng(seed, stream::kEveNoise);
    Generator message_rng(seed, stream::kMessage);
    Generator tie_rng(seed, stream::kEveTieBreak);

    const BitBlock r = block_rng.uniform_bits(options.samples * options.n_rep);
    const BitBlock x = r ^ alice_rng.biased_bits(r.size(), alpha);
    const BitBlock y = r ^ bob_rng.biased_bits(r.size(), alpha);
    const BitBlock z = wiretap(r, options.gamma, eve_rng);
    const RoundTranscript t = run_round(x, y, z, options.n_rep, message_rng, tie_rng);

    Fig3Row row;
    row.alpha = alpha;
    row.policy = options.policy;
    row.eps2_analytic = bob_error_n(convolve_flip(alpha, alpha), options.n_rep);
    row.delta2_analytic = eve_error_n(alpha, alpha, options.gamma, options.n_rep, options.policy);
    row.accepted = t.accepted;
    row.offered = t.offered;
    if (t.accepted > 0) {
      row.eps2_mc = static_cast<double>(hamming_distance(t.alice_next, t.bob_next)) /
                    static_cast<double>(t.accepted);
      row.delta2_mc = score_eve(t.eve_next, t.eve_tie_mask, t.alice_next, options.policy);
    }
    rows[slot] = row;
  });
  return rows;
}

void write_fig3_csv(std::ostream& os, const std::vector<Fig3Row>& rows) {
  os << "alpha,eps2_analytic,delta2_analytic,eps2_mc,delta2_mc,accepted,offered,tie_policy\n";
  for (const auto& r : rows) {
    os << csv_real(r.alpha) << ',' << csv_real(r.eps2_analytic) << ','
       << csv_real(r.delta2_analytic) << ',' << csv_real(r.eps2_mc) << ',' << csv_real(r.delta2_mc)
       << ',' << r.accepted << ',' << r.offered << ',' << to_string(r.policy) << '\n';
  }
}

// ---------------------------------------------------------------------------

SessionConfig tamper_sweep_config(double tau, std::size_t initial_bits, double alpha, double beta,
                                  unsigned rounds, Seed seed) {
  SessionConfig config;
  config.initial_bits = initial_bits;
  config.alpha = alpha;
  config.beta = beta;
  config.rounds = rounds;
  config.seed = seed;
  config.eve = tau > 0.0 ? EveStrategy::tamper(tau) : EveStrategy::passive();
  config.abort_on_alarm = false;
  return config;
}

namespace {

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::size_t> valid_taus(const std::vector<double>& taus, std::vector<std::string>* skipped) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (taus[i] >= 0.0 && taus[i] <= 1.0) {
      valid.push_back(i);
    } else if (skipped) {
      skipped->push_back("tau=" + csv_real(taus[i]) + ": outside [0, 1]");
    }
  }
  return valid;
}

}  // namespace

std::vector<Fig4Row> run_fig4(const Fig4Options& options, std::vector<std::string>* skipped) {
  if (options.repetitions == 0) throw std::invalid_argument("fig4: repetitions must be at least 1");
  NoiseParams{options.alpha, options.beta, 0.0, 0.0}.validate();
  const auto valid = valid_taus(options.taus, skipped);
  const std::size_t reps = options.repetitions;

  std::vector<PTotalSample> samples(valid.size() * reps);
  parallel_for(samples.size(), [&](std::size_t job) {
    const std::size_t idx = valid[job / reps];
    const std::size_t rep = job % reps;
    const SessionConfig config =
        tamper_sweep_config(options.taus[idx], options.initial_bits, options.alpha, options.beta, 1,
                            point_seed(options.seed, idx, rep));
    samples[job] = simulate_first_exchange(config);
  });

  const double expected = p_total(convolve_flip(options.alpha, options.beta), 2);
  std::vector<Fig4Row> rows;
  for (std::size_t slot = 0; slot < valid.size(); ++slot) {
    Fig4Row row;
    row.tau = options.taus[valid[slot]];
    row.expected_ptotal = expected;
    row.reps = reps;
    std::vector<double> measured;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto& s = samples[slot * reps + rep];
      measured.push_back(s.measured);
      row.z_per_rep.push_back(s.z);
      row.sigma = std::sqrt(expected * (1.0 - expected) / static_cast<double>(std::max<std::size_t>(s.offered, 1)));
    }
    row.measured_ptotal = mean(measured);
    row.measured_std = sample_std(measured);
    row.z = mean(row.z_per_rep);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_fig4_csv(std::ostream& os, const std::vector<Fig4Row>& rows) {
  os << "tau,expected_ptotal,measured_ptotal,sigma,z,measured_std,reps\n";
  for (const auto& r : rows) {
    os << csv_real(r.tau) << ',' << csv_real(r.expected_ptotal) << ','
       << csv_real(r.measured_ptotal) << ',' << csv_real(r.sigma) << ',' << csv_real(r.z) << ','
       << csv_real(r.measured_std) << ',' << r.reps << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<Fig5Row> run_fig5(const Fig5Options& options, std::vector<std::string>* skipped) {
  if (options.repetitions == 0) throw std::invalid_argument("fig5: repetitions must be at least 1");
  const auto valid = valid_taus(options.taus, skipped);
  const std::size_t reps = options.repetitions;

  std::vector<KeyResult> results(valid.size() * reps);
  parallel_for(results.size(), [&](std::size_t job) {
    const std::size_t idx = valid[job / reps];
    const SessionConfig config =
        tamper_sweep_config(options.taus[idx], options.initial_bits, options.alpha, options.beta,
                            options.rounds, point_seed(options.seed, idx, job % reps));
    results[job] = run_local_simulation(config);
  });

  std::vector<Fig5Row> rows;
  for (std::size_t slot = 0; slot < valid.size(); ++slot) {
    Fig5Row row;
    row.tau = options.taus[valid[slot]];
    row.reps = reps;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto& r = results[slot * reps + rep];
      row.pre_pa_len += static_cast<double>(r.pre_pa_len);
      row.k_estimate += r.k_estimate;
      row.final_key_bits += r.tamper_alarm ? 0.0 : static_cast<double>(r.final_key.size());
      row.key_rate += r.key_rate;
      row.eve_key_agreement += r.eve_key_agreement;
      row.alarm += r.tamper_alarm ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(reps);
    row.pre_pa_len /= n;
    row.k_estimate /= n;
    row.final_key_bits /= n;
    row.key_rate /= n;
    row.eve_key_agreement /= n;
    row.alarm /= n;
    rows.push_back(row);
  }
  return rows;
}

void write_fig5_csv(std::ostream& os, const std::vector<Fig5Row>& rows) {
  os << "tau,pre_pa_len,k_estimate,final_key_bits,key_rate,eve_key_agreement,alarm\n";
  for (const auto& r : rows) {
    os << csv_real(r.tau) << ',' << csv_real(r.pre_pa_len) << ',' << csv_real(r.k_estimate) << ','
       << csv_real(r.final_key_bits) << ',' << csv_real(r.key_rate) << ','
       << csv_real(r.eve_key_agreement) << ',' << csv_real(r.alarm) << '\n';
  }
}

}  // namespace nkd
