#include "nkd/channel_math.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nkd {

namespace {

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(what) + ": probability outside [0, 1]");
  }
}

void require_rep(unsigned n_rep) {
  if (n_rep == 0) throw std::invalid_argument("repetition factor must be at least 1");
}

double binomial(unsigned n, unsigned k) {
  double c = 1.0;
  for (unsigned i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

}  // namespace

std::string_view to_string(TiePolicy policy) noexcept {
  switch (policy) {
    case TiePolicy::kCountAsError:
      return "count-as-error";
    case TiePolicy::kHalfCredit:
      return "half-credit";
    case TiePolicy::kRandomGuess:
      return "random-guess";
  }
  return "unknown";
}

TiePolicy parse_tie_policy(std::string_view text) {
  if (text == "count-as-error") return TiePolicy::kCountAsError;
  if (text == "half-credit") return TiePolicy::kHalfCredit;
  if (text == "random-guess") return TiePolicy::kRandomGuess;
  throw std::invalid_argument("unknown tie policy: " + std::string(text));
}

void NoiseParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  require_probability(gamma, "gamma");
  require_probability(tau, "tau");
}

double convolve_flip(double p, double q) {
  require_probability(p, "convolve_flip");
  require_probability(q, "convolve_flip");
  return p + q - 2.0 * p * q;
}

double p_total(double epsilon, unsigned n_rep) {
  require_probability(epsilon, "p_total");
  require_rep(n_rep);
  return std::pow(1.0 - epsilon, n_rep) + std::pow(epsilon, n_rep);
}

double bob_error_n(double epsilon, unsigned n_rep) {
  require_probability(epsilon, "bob_error_n");
  require_rep(n_rep);
  const double err = std::pow(epsilon, n_rep);
  return err / (std::pow(1.0 - epsilon, n_rep) + err);
}

JointWeights joint_weights(double alpha, double beta, double gamma) {
  require_probability(alpha, "joint_weights");
  require_probability(beta, "joint_weights");
  require_probability(gamma, "joint_weights");
  // Bob flips when N^A != N^B, Eve flips when N^A != N^E.
  const double a0 = 1.0 - alpha;
  const double b0 = 1.0 - beta;
  const double g0 = 1.0 - gamma;
  JointWeights w;
  w.p00 = a0 * b0 * g0 + alpha * beta * gamma;
  w.p01 = a0 * b0 * gamma + alpha * beta * g0;
  w.p10 = a0 * beta * g0 + alpha * b0 * gamma;
  w.p11 = a0 * beta * gamma + alpha * b0 * g0;
  return w;
}

double eve_error_n(double alpha, double beta, double gamma, unsigned n_rep, TiePolicy policy) {
  require_rep(n_rep);
  const JointWeights w = joint_weights(alpha, beta, gamma);
  double accepted = 0.0;
  double wrong = 0.0;
  for (unsigned k = 0; k <= n_rep; ++k) {
    const double term = binomial(n_rep, k) * (std::pow(w.p00, n_rep - k) * std::pow(w.p01, k) +
                                             std::pow(w.p10, n_rep - k) * std::pow(w.p11, k));
    accepted += term;
    if (2 * k > n_rep) {
      wrong += term;
    } else if (2 * k == n_rep) {
      wrong += policy == TiePolicy::kCountAsError ? term : 0.5 * term;
    }
  }
  return wrong / accepted;
}

ChannelPoint evaluate_channel(const NoiseParams& params, unsigned n_rep, TiePolicy policy) {
  ChannelPoint point;
  point.epsilon = convolve_flip(params.alpha, params.beta);
  point.delta = convolve_flip(params.alpha, params.gamma);
  point.n_rep = n_rep;
  point.epsilon_n = bob_error_n(point.epsilon, n_rep);
  point.delta_n = eve_error_n(params.alpha, params.beta, params.gamma, n_rep, policy);
  point.p_total = p_total(point.epsilon, n_rep);
  point.weights = joint_weights(params.alpha, params.beta, params.gamma);
  return point;
}

double tampered_epsilon(const NoiseParams& params, TamperModel model) {
  require_probability(params.alpha, "tampered_epsilon");
  require_probability(params.beta, "tampered_epsilon");
  require_probability(params.tau, "tampered_epsilon");
  if (model == TamperModel::kLinear) {
    return convolve_flip(params.alpha, params.beta) + params.tau * (1.0 - 2.0 * params.alpha);
  }
  return convolve_flip(convolve_flip(params.beta, params.tau), params.alpha);
}

double binary_entropy(double p) {
  require_probability(p, "binary_entropy");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double bsc_mutual_info(double err) { return 1.0 - binary_entropy(err); }

std::vector<RoundForecast> round_recursion(double epsilon0, unsigned n_rep, unsigned rounds,
                                           std::size_t initial_bits) {
  require_probability(epsilon0, "round_recursion");
  require_rep(n_rep);
  if (rounds == 0) throw std::invalid_argument("round_recursion: rounds must be at least 1");
  std::vector<RoundForecast> out;
  out.reserve(rounds);
  double eps = epsilon0;
  double len = static_cast<double>(initial_bits);
  for (unsigned r = 0; r < rounds; ++r) {
    RoundForecast f;
    f.p_total = p_total(eps, n_rep);
    f.expected_len = std::floor(len / n_rep) * f.p_total;
    f.epsilon = bob_error_n(eps, n_rep);
    out.push_back(f);
    eps = f.epsilon;
    len = f.expected_len;
  }
  return out;
}

}  // namespace nkd
