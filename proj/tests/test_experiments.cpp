#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>

#include "nkd/experiments.hpp"

namespace {

bool all_cells_finite(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      if (cell == "nan" || cell == "inf" || cell == "-inf" || cell == "-nan") return false;
    }
  }
  return true;
}

}  // namespace

TEST(Experiments, ParallelForVisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  nkd::parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(nkd::parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Experiments, CsvReal) {
  EXPECT_EQ(nkd::csv_real(0.1190524), "0.119052");
  EXPECT_EQ(nkd::csv_real(14450), "14450");
}

TEST(Experiments, SweepSpecValidation) {
  nkd::SweepSpec s;
  s.values = {0.1, 0.2};
  EXPECT_NO_THROW(s.validate());
  s.samples = 999;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.samples = 1000;
  s.values = {1.0};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.variable = nkd::SweepSpec::Variable::kTau;
  EXPECT_NO_THROW(s.validate());
}

TEST(Experiments, Fig3AgreesWithAnalytic) {
  nkd::Fig3Options o;
  const auto rows = nkd::run_fig3(o);
  ASSERT_EQ(rows.size(), 6U);
  for (const auto& r : rows) {
    EXPECT_LT(std::fabs(r.eps2_mc - r.eps2_analytic), 0.01) << r.alpha;
    EXPECT_LT(std::fabs(r.delta2_mc - r.delta2_analytic), 0.01) << r.alpha;
    EXPECT_GT(r.delta2_mc, r.eps2_mc) << r.alpha;
    EXPECT_EQ(r.offered, o.samples);
  }
}

TEST(Experiments, Fig3SkipsInvalidRowsAndIsReproducible) {
  nkd::Fig3Options o;
  o.alphas = {0.16, 0.0, 1.2, 0.3};
  o.samples = 5000;
  std::vector<std::string> skipped;
  const auto rows = nkd::run_fig3(o, &skipped);
  EXPECT_EQ(rows.size(), 2U);
  EXPECT_EQ(skipped.size(), 2U);
  std::ostringstream a, b;
  nkd::write_fig3_csv(a, rows);
  nkd::write_fig3_csv(b, nkd::run_fig3(o));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_TRUE(all_cells_finite(a.str()));
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "alpha,eps2_analytic,delta2_analytic,eps2_mc,delta2_mc,accepted,offered,tie_policy");
}

TEST(Experiments, Fig4SmallSweep) {
  nkd::Fig4Options o;
  o.taus = {0.0, 0.05, -1.0};
  o.repetitions = 2;
  std::vector<std::string> skipped;
  const auto rows = nkd::run_fig4(o, &skipped);
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(skipped.size(), 1U);
  EXPECT_LT(std::fabs(rows[0].z), 4.0);
  EXPECT_LT(rows[1].z, -10.0);
  EXPECT_NEAR(rows[0].sigma, 0.00098, 1e-5);
  std::ostringstream a, b;
  nkd::write_fig4_csv(a, rows);
  nkd::write_fig4_csv(b, nkd::run_fig4(o));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_TRUE(all_cells_finite(a.str()));
}

TEST(Experiments, Fig5SmallSweep) {
  nkd::Fig5Options o;
  o.taus = {0.0, 0.05};
  const auto rows = nkd::run_fig5(o);
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[0].alarm, 0.0);
  EXPECT_GT(rows[0].final_key_bits, 0.0);
  EXPECT_EQ(rows[1].alarm, 1.0);
  EXPECT_EQ(rows[1].final_key_bits, 0.0);
  std::ostringstream a;
  nkd::write_fig5_csv(a, rows);
  EXPECT_TRUE(all_cells_finite(a.str()));
}

TEST(Experiments, TamperSweepConfig) {
  const auto passive = nkd::tamper_sweep_config(0.0, 1000, 0.16, 0.16, 2, nkd::Seed{1});
  EXPECT_EQ(passive.eve.kind, nkd::EveKind::kPassive);
  EXPECT_FALSE(passive.abort_on_alarm);
  const auto active = nkd::tamper_sweep_config(0.02, 1000, 0.16, 0.16, 2, nkd::Seed{1});
  EXPECT_EQ(active.eve.kind, nkd::EveKind::kTamper);
  EXPECT_DOUBLE_EQ(active.eve.tau, 0.02);
}
