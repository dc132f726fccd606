#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace nkd {

/// How an even split in Eve's majority vote is scored.
enum class TiePolicy {
  kCountAsError,  // every tie is an error (closed-form repetition-channel result)
  kHalfCredit,    // ties weigh 1/2
  kRandomGuess,   // Eve flips a fair coin; analytically identical to half credit
};

std::string_view to_string(TiePolicy policy) noexcept;
/// Accepts "count-as-error", "half-credit", "random-guess".
TiePolicy parse_tie_policy(std::string_view text);

/// Local flip probabilities of Alice, Bob and Eve plus the tamper rate.
struct NoiseParams {
  double alpha = 0.16;
  double beta = 0.16;
  double gamma = 0.0;
  double tau = 0.0;

  /// Enforces 0 < alpha, beta < 1 and 0 <= gamma, tau <= 1.
  void validate() const;
};

/// Per-position joint law of (Bob's flip, Eve's flip) relative to Alice.
/// p<b><e>: b = 1 when Bob's bit differs from Alice's, e likewise for Eve.
struct JointWeights {
  double p00 = 0.0;
  double p01 = 0.0;
  double p10 = 0.0;
  double p11 = 0.0;
};

/// Analytic quantities of one repetition virtual channel.
struct ChannelPoint {
  double epsilon = 0.0;  // Alice-Bob composed flip rate
  double delta = 0.0;    // Alice-Eve composed flip rate
  unsigned n_rep = 0;
  double epsilon_n = 0.0;  // Bob's error on accepted groups
  double delta_n = 0.0;    // Eve's majority-vote error on accepted groups
  double p_total = 0.0;    // acceptance probability
  JointWeights weights;
};

/// Flip rate of two cascaded binary symmetric channels: p + q - 2pq.
double convolve_flip(double p, double q);

/// Error of Bob's unanimous decode: eps^N / ((1-eps)^N + eps^N).
double bob_error_n(double epsilon, unsigned n_rep);

/// Acceptance probability of an N-group: (1-eps)^N + eps^N.
double p_total(double epsilon, unsigned n_rep);

/// Joint weights from independent local noise at rates alpha, beta, gamma.
JointWeights joint_weights(double alpha, double beta, double gamma);

/// Eve's error against Alice's message bit, conditioned on Bob accepting.
///
/// Sums C(N,w)(p00^{N-w} p01^w + p10^{N-w} p11^w) over the w at which the
/// majority is wrong and normalizes by the acceptance probability. The
/// w = N/2 term (even N only) is weighted by the tie policy.
double eve_error_n(double alpha, double beta, double gamma, unsigned n_rep, TiePolicy policy);

ChannelPoint evaluate_channel(const NoiseParams& params, unsigned n_rep, TiePolicy policy);

enum class TamperModel {
  kLinear,  // eps + tau * (1 - 2 alpha)
  kExact,        // ((beta (+) tau) (+) alpha)
};

double tampered_epsilon(const NoiseParams& params, TamperModel model);

/// -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
double binary_entropy(double p);

/// 1 - h(err): mutual information of a BSC with uniform input.
double bsc_mutual_info(double err);

struct RoundForecast {
  double epsilon = 0.0;       // Bob's residual error after this round
  double p_total = 0.0;       // acceptance probability during this round
  double expected_len = 0.0;  // string length after this round
};

/// Iterates the repetition channel: entry i describes round i + 1.
/// len_{i+1} = floor(len_i / N) * p_total(eps_i, N).
std::vector<RoundForecast> round_recursion(double epsilon0, unsigned n_rep, unsigned rounds,
                                           std::size_t initial_bits);

}  // namespace nkd
