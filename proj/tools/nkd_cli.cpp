// nkd: figure reproduction, ad-hoc sessions and the two-process key agreement demo.

#include <chrono>
#include <cinttypes>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "nkd/adversary.hpp"
#include "nkd/bitstream.hpp"
#include "nkd/experiments.hpp"
#include "nkd/session.hpp"
#include "nkd/transport.hpp"

namespace {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConnection = 2,
  kExitProtocol = 3,
  kExitConfirmation = 4,
  kExitTamperAlarm = 5,
  kExitEmptyKey = 6,
};

int exit_code_for(nkd::SessionStatus status) {
  switch (status) {
    case nkd::SessionStatus::kOk:
      return kExitOk;
    case nkd::SessionStatus::kTamperAlarm:
      return kExitTamperAlarm;
    case nkd::SessionStatus::kEmptyKey:
      return kExitEmptyKey;
    case nkd::SessionStatus::kConfirmationFailed:
      return kExitConfirmation;
    case nkd::SessionStatus::kConfigMismatch:
    case nkd::SessionStatus::kProtocolViolation:
      return kExitProtocol;
  }
  return kExitProtocol;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += nkd::csv_real(values[i]);
  }
  return out;
}

void print_config(const std::string& canonical, std::uint64_t digest) {
  std::fprintf(stderr, "config: %s\nconfig digest: %016" PRIx64 "\n", canonical.c_str(), digest);
}

void print_config(const std::string& canonical) { print_config(canonical, fnv1a(canonical)); }

/// Writes CSV to --out, or stdout when no file is given.
template <typename Writer>
void emit_csv(const std::string& out_path, Writer&& write) {
  if (out_path.empty() || out_path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + out_path);
  write(file);
}

void report_skipped(const std::vector<std::string>& skipped) {
  for (const auto& s : skipped) std::fprintf(stderr, "skipped %s\n", s.c_str());
}

struct SessionFlags {
  double alpha = 0.16;
  double beta = -1.0;  // defaults to alpha
  double gamma = 0.0;
  double tau = 0.0;
  std::size_t bits = 500000;
  unsigned rounds = 4;
  unsigned n_rep = 2;
  std::uint64_t seed = 1;
  std::uint64_t nonce = 0;
  std::string eve = "passive";
  bool eve_incorporate = false;
  std::size_t safety = 64;
  double alarm_sigma = 3.0;
  bool no_abort = false;

  void add_to(CLI::App* app) {
    app->add_option("--alpha", alpha, "Alice's local flip probability");
    app->add_option("--beta", beta, "Bob's local flip probability (default: alpha)");
    app->add_option("--gamma", gamma, "Eve's local flip probability");
    app->add_option("--tau", tau, "Tamper flip probability");
    app->add_option("--bits", bits, "Initial exchange length in bits");
    app->add_option("--rounds", rounds, "Distillation rounds");
    app->add_option("--nrep", n_rep, "Repetition factor N");
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--nonce", nonce, "Session nonce for the public hash stream");
    app->add_option("--eve", eve, "Eve strategy")->check(CLI::IsMember({"passive", "tamper"}));
    app->add_flag("--eve-incorporate", eve_incorporate, "Tamperer folds T into her own copy");
    app->add_option("--safety", safety, "Privacy-amplification safety bits");
    app->add_option("--alarm-sigma", alarm_sigma, "P_Total alarm threshold in sigma");
    app->add_flag("--no-abort", no_abort, "Record the tamper alarm but finish the protocol");
  }

  nkd::SessionConfig config() const {
    nkd::SessionConfig c;
    c.alpha = alpha;
    c.beta = beta < 0.0 ? alpha : beta;
    c.initial_bits = bits;
    c.rounds = rounds;
    c.n_rep = n_rep;
    c.seed = nkd::Seed{seed};
    c.nonce = nonce;
    c.safety_bits = safety;
    c.ptotal_alarm_sigma = alarm_sigma;
    c.abort_on_alarm = !no_abort;
    c.eve = eve == "tamper" ? nkd::EveStrategy::tamper(tau, eve_incorporate, gamma)
                            : nkd::EveStrategy::passive(gamma);
    return c;
  }
};

std::string describe(const nkd::SessionConfig& c) {
  std::ostringstream os;
  os << "bits=" << c.initial_bits << " alpha=" << c.alpha << " beta=" << c.beta << " nrep=" << c.n_rep
     << " rounds=" << c.rounds << " kappa=" << c.kappa << " safety=" << c.safety_bits
     << " alarm_sigma=" << c.ptotal_alarm_sigma << " seed=" << c.seed.value << " nonce=" << c.nonce
     << " eve=" << (c.eve.kind == nkd::EveKind::kTamper ? "tamper" : "passive")
     << " gamma=" << c.eve.gamma << " tau=" << c.eve.tau
     << " incorporate=" << c.eve.incorporate_tamper << " abort_on_alarm=" << c.abort_on_alarm;
  return os.str();
}

void write_key_file(const std::string& path, const nkd::BitBlock& key) {
  if (path.empty()) return;
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + path);
  file << key.to_hex() << '\n';
}

/// The peer may not be listening yet; retry refused connections for a while.
std::unique_ptr<nkd::TcpEndpoint> connect_with_retry(const std::string& host, std::uint16_t port,
                                                     double wait_seconds) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(wait_seconds);
  for (;;) {
    try {
      return nkd::TcpEndpoint::connect(host, port);
    } catch (const std::system_error&) {
      if (std::chrono::steady_clock::now() >= deadline) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }
}

nkd::BitBlock read_key_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path);
  std::string text;
  file >> text;
  return nkd::BitBlock::from_hex(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nkd: secret-key agreement from locally added noise"};
  app.require_subcommand(1);

  // fig3 ---------------------------------------------------------------------
  nkd::Fig3Options fig3;
  std::uint64_t fig3_seed = 1;
  std::string fig3_policy = "count-as-error";
  std::string fig3_out;
  auto* cmd_fig3 = app.add_subcommand("fig3", "Repetition-channel errors vs alpha (alpha = beta)");
  cmd_fig3->add_option("--alphas", fig3.alphas, "Alpha grid")->delimiter(',');
  cmd_fig3->add_option("--samples", fig3.samples, "N-groups per point");
  cmd_fig3->add_option("--gamma", fig3.gamma, "Eve's local flip probability");
  cmd_fig3->add_option("--seed", fig3_seed, "Master seed");
  cmd_fig3->add_option("--tie-policy", fig3_policy, "Scoring of Eve's ties")
      ->check(CLI::IsMember({"count-as-error", "half-credit", "random-guess"}));
  cmd_fig3->add_option("--out", fig3_out, "CSV output path (default stdout)");

  // fig4 ---------------------------------------------------------------------
  nkd::Fig4Options fig4;
  std::uint64_t fig4_seed = 1;
  double fig4_beta = -1.0;
  std::string fig4_out;
  auto* cmd_fig4 = app.add_subcommand("fig4", "First-exchange acceptance rate under tampering");
  cmd_fig4->add_option("--taus", fig4.taus, "Tamper-rate grid")->delimiter(',');
  cmd_fig4->add_option("--bits", fig4.initial_bits, "Initial exchange length in bits");
  cmd_fig4->add_option("--alpha", fig4.alpha, "Local flip probability");
  cmd_fig4->add_option("--beta", fig4_beta, "Bob's local flip probability (default: alpha)");
  cmd_fig4->add_option("--reps", fig4.repetitions, "Independent seeds per point");
  cmd_fig4->add_option("--seed", fig4_seed, "Master seed");
  cmd_fig4->add_option("--out", fig4_out, "CSV output path (default stdout)");

  // fig5 ---------------------------------------------------------------------
  nkd::Fig5Options fig5;
  std::uint64_t fig5_seed = 1;
  double fig5_beta = -1.0;
  std::string fig5_out;
  auto* cmd_fig5 = app.add_subcommand("fig5", "Final key after the full protocol under tampering");
  cmd_fig5->add_option("--taus", fig5.taus, "Tamper-rate grid")->delimiter(',');
  cmd_fig5->add_option("--bits", fig5.initial_bits, "Initial exchange length in bits");
  cmd_fig5->add_option("--alpha", fig5.alpha, "Local flip probability");
  cmd_fig5->add_option("--beta", fig5_beta, "Bob's local flip probability (default: alpha)");
  cmd_fig5->add_option("--rounds", fig5.rounds, "Distillation rounds");
  cmd_fig5->add_option("--reps", fig5.repetitions, "Independent seeds per point");
  cmd_fig5->add_option("--seed", fig5_seed, "Master seed");
  cmd_fig5->add_option("--out", fig5_out, "CSV output path (default stdout)");

  // run ----------------------------------------------------------------------
  SessionFlags run_flags;
  std::string run_out;
  std::string run_key;
  auto* cmd_run = app.add_subcommand("run", "One in-process session with a full report");
  run_flags.add_to(cmd_run);
  cmd_run->add_option("--out", run_out, "Append the session summary as a CSV row");
  cmd_run->add_option("--key-out", run_key, "Write Alice's key as <len>:<hex>");

  // agree --------------------------------------------------------------------
  SessionFlags agree_flags;
  std::string role;
  bool listen = false;
  std::string connect_to;
  std::uint16_t port = nkd::kDefaultPort;
  std::string key_out;
  std::string transcript;
  double connect_wait = 10.0;
  auto* cmd_agree = app.add_subcommand("agree", "Two-process key agreement over TCP");
  agree_flags.add_to(cmd_agree);
  cmd_agree->add_option("--role", role, "alice or bob")
      ->required()
      ->check(CLI::IsMember({"alice", "bob"}));
  cmd_agree->add_flag("--listen", listen, "Wait for the peer (alice)");
  cmd_agree->add_option("--connect", connect_to, "host[:port] of the listening peer (bob)");
  cmd_agree->add_option("--port", port, "TCP port");
  cmd_agree->add_option("--connect-wait", connect_wait, "Seconds to keep retrying --connect");
  cmd_agree->add_option("--key-out", key_out, "Key file (<len>:<hex>)");
  cmd_agree->add_option("--transcript", transcript, "Append every frame to this .nkt file (alice)");

  // replay -------------------------------------------------------------------
  std::string replay_file;
  std::string replay_key;
  std::uint64_t replay_seed = 1;
  double replay_gamma = 0.0;
  auto* cmd_replay = app.add_subcommand("replay", "Run a passive Eve over a recorded .nkt transcript");
  cmd_replay->add_option("--transcript", replay_file, "Transcript file")->required();
  cmd_replay->add_option("--key", replay_key, "Alice's key file, to score Eve's guess");
  cmd_replay->add_option("--seed", replay_seed, "Eve's seed");
  cmd_replay->add_option("--gamma", replay_gamma, "Eve's local flip probability");

  // health -------------------------------------------------------------------
  std::size_t health_bits = 10000000;
  unsigned health_block = 8;
  std::uint64_t health_seed = 1;
  double health_sigma = 4.0;
  auto* cmd_health = app.add_subcommand("health", "Universal statistical test of the generator");
  cmd_health->add_option("--bits", health_bits, "Sample length");
  cmd_health->add_option("--block", health_block, "Block length L in [6, 16]");
  cmd_health->add_option("--seed", health_seed, "Seed");
  cmd_health->add_option("--sigma", health_sigma, "Pass threshold in sigma");

  CLI11_PARSE(app, argc, argv);
  // A vanished peer or reader must surface as an error code, not a signal.
  std::signal(SIGPIPE, SIG_IGN);

  try {
    if (*cmd_fig3) {
      fig3.seed = nkd::Seed{fig3_seed};
      fig3.policy = nkd::parse_tie_policy(fig3_policy);
      print_config("fig3 alphas=" + join(fig3.alphas) + " samples=" + std::to_string(fig3.samples) +
                   " nrep=2 gamma=" + nkd::csv_real(fig3.gamma) + " seed=" + std::to_string(fig3_seed) +
                   " tie_policy=" + fig3_policy);
      std::vector<std::string> skipped;
      const auto rows = nkd::run_fig3(fig3, &skipped);
      report_skipped(skipped);
      emit_csv(fig3_out, [&](std::ostream& os) { nkd::write_fig3_csv(os, rows); });
      return kExitOk;
    }
    if (*cmd_fig4) {
      fig4.seed = nkd::Seed{fig4_seed};
      fig4.beta = fig4_beta < 0.0 ? fig4.alpha : fig4_beta;
      print_config("fig4 taus=" + join(fig4.taus) + " bits=" + std::to_string(fig4.initial_bits) +
                   " alpha=" + nkd::csv_real(fig4.alpha) + " beta=" + nkd::csv_real(fig4.beta) +
                   " reps=" + std::to_string(fig4.repetitions) + " seed=" + std::to_string(fig4_seed));
      std::vector<std::string> skipped;
      const auto rows = nkd::run_fig4(fig4, &skipped);
      report_skipped(skipped);
      emit_csv(fig4_out, [&](std::ostream& os) { nkd::write_fig4_csv(os, rows); });
      return kExitOk;
    }
    if (*cmd_fig5) {
      fig5.seed = nkd::Seed{fig5_seed};
      fig5.beta = fig5_beta < 0.0 ? fig5.alpha : fig5_beta;
      print_config("fig5 taus=" + join(fig5.taus) + " bits=" + std::to_string(fig5.initial_bits) +
                   " alpha=" + nkd::csv_real(fig5.alpha) + " beta=" + nkd::csv_real(fig5.beta) +
                   " rounds=" + std::to_string(fig5.rounds) + " reps=" +
                   std::to_string(fig5.repetitions) + " seed=" + std::to_string(fig5_seed));
      std::vector<std::string> skipped;
      const auto rows = nkd::run_fig5(fig5, &skipped);
      report_skipped(skipped);
      emit_csv(fig5_out, [&](std::ostream& os) { nkd::write_fig5_csv(os, rows); });
      return kExitOk;
    }
    if (*cmd_run) {
      const auto config = run_flags.config();
      print_config("run " + describe(config), config.digest());
      const auto outcome = nkd::simulate_session(config);
      std::cout << outcome.result.report();
      std::cout << "Bob status:           " << nkd::to_string(outcome.bob_status) << '\n';
      if (!run_out.empty()) {
        std::ofstream file(run_out, std::ios::app);
        if (file.tellp() == 0) file << nkd::KeyResult::csv_header() << '\n';
        file << outcome.result.csv_row() << '\n';
      }
      write_key_file(run_key, outcome.result.final_key);
      return exit_code_for(outcome.result.status);
    }
    if (*cmd_agree) {
      const auto config = agree_flags.config();
      config.validate();
      print_config("agree role=" + role + " " + describe(config), config.digest());
      if (role == "alice") {
        std::unique_ptr<nkd::TcpEndpoint> endpoint;
        try {
          if (listen || connect_to.empty()) {
            nkd::TcpListener listener(port);
            std::fprintf(stderr, "alice: listening on port %u\n", static_cast<unsigned>(listener.port()));
            endpoint = listener.accept();
          } else {
            const auto colon = connect_to.rfind(':');
            const auto host = connect_to.substr(0, colon);
            const auto p = colon == std::string::npos
                               ? port
                               : static_cast<std::uint16_t>(std::stoul(connect_to.substr(colon + 1)));
            endpoint = connect_with_retry(host, p, connect_wait);
          }
        } catch (const std::system_error& e) {
          std::fprintf(stderr, "connection failed: %s\n", e.what());
          return kExitConnection;
        }
        std::vector<nkd::Wire::Observer> taps;
        if (!transcript.empty()) taps.emplace_back(nkd::TranscriptWriter(transcript));
        const auto result = nkd::run_alice(*endpoint, config, std::move(taps));
        std::cout << result.report();
        std::cout << nkd::KeyResult::csv_header() << '\n' << result.csv_row() << '\n';
        if (result.status == nkd::SessionStatus::kOk) write_key_file(key_out, result.final_key);
        return exit_code_for(result.status);
      }
      std::unique_ptr<nkd::TcpEndpoint> endpoint;
      try {
        if (listen) {
          nkd::TcpListener listener(port);
          endpoint = listener.accept();
        } else {
          const std::string target = connect_to.empty() ? "127.0.0.1" : connect_to;
          const auto colon = target.rfind(':');
          const auto host = target.substr(0, colon);
          const auto p = colon == std::string::npos
                             ? port
                             : static_cast<std::uint16_t>(std::stoul(target.substr(colon + 1)));
          endpoint = connect_with_retry(host, p, connect_wait);
        }
      } catch (const std::system_error& e) {
        std::fprintf(stderr, "connection failed: %s\n", e.what());
        return kExitConnection;
      }
      const auto outcome = nkd::run_bob(*endpoint, config);
      std::cout << "bob: " << nkd::to_string(outcome.status) << ", key " << outcome.key.size()
                << " bits\n";
      if (outcome.status == nkd::SessionStatus::kOk) write_key_file(key_out, outcome.key);
      return exit_code_for(outcome.status);
    }
    if (*cmd_replay) {
      const auto frames = nkd::read_transcript(replay_file);
      nkd::Eavesdropper eve(nkd::EveStrategy::passive(replay_gamma), nkd::Seed{replay_seed});
      for (const auto& f : frames) eve.observe(f);
      std::cout << "frames: " << frames.size() << '\n';
      for (std::size_t i = 0; i < eve.rounds().size(); ++i) {
        const auto& r = eve.rounds()[i];
        std::cout << "round " << i + 1 << ": accepted " << r.accepted << '/' << r.offered
                  << ", ties " << r.tie_mask.popcount() << '\n';
      }
      std::cout << "eve_in_sync: " << (eve.in_sync() ? 1 : 0) << '\n';
      std::cout << "eve_prepa_len: " << eve.current().size() << '\n';
      if (eve.key_guess()) {
        std::cout << "eve_key_bits: " << eve.key_guess()->size() << '\n';
        if (!replay_key.empty()) {
          const auto key = read_key_file(replay_key);
          if (key.size() == eve.key_guess()->size() && !key.empty()) {
            std::cout << "eve_key_agreement: "
                      << nkd::csv_real(nkd::agreement_fraction(*eve.key_guess(), key)) << '\n';
          } else {
            std::cout << "eve_key_agreement: n/a (length mismatch)\n";
          }
        }
      }
      return kExitOk;
    }
    if (*cmd_health) {
      nkd::Generator gen(nkd::Seed{health_seed}, nkd::stream::kRandomBlock);
      const auto bits = gen.uniform_bits(health_bits);
      try {
        const auto r = nkd::rng_health_test(bits, health_block);
        std::printf("L=%u Q=%zu K=%zu statistic=%.7f expected=%.7f sigma=%.3g z=%.3f -> %s\n",
                    r.block_len, r.init_blocks, r.test_blocks, r.statistic, r.expected, r.sigma,
                    r.z_score(), r.passes(health_sigma) ? "pass" : "FAIL");
        return r.passes(health_sigma) ? kExitOk : kExitProtocol;
      } catch (const nkd::InsufficientDataError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitUsage;
      }
    }
  } catch (const nkd::ProtocolError& e) {
    std::fprintf(stderr, "protocol error: %s\n", e.what());
    return kExitProtocol;
  } catch (const std::system_error& e) {
    std::fprintf(stderr, "connection error: %s\n", e.what());
    return kExitConnection;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
