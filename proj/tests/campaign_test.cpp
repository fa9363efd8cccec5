#include "gbfuzz/campaign.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

namespace gbf {
namespace {

CampaignConfig small_config(const std::string& program) {
  CampaignConfig cfg;
  cfg.program_name = program;
  cfg.max_iterations = 8;
  cfg.inner_budget = 8;
  cfg.label_count = 2;
  cfg.switch_period = 0;
  cfg.flush_period = 0;
  cfg.rng_seed = 42;
  return cfg;
}

TEST(Campaign, FirstIterationIsVanillaAndRunsNoTaint) {
  // Unpulled bandit arms are taken in index order, so iteration one picks
  // the Vanilla strategy and must not execute any taint inference.
  Campaign c(small_config("fig_branches"), CampaignMode::Full);
  c.one_iteration();
  EXPECT_EQ(c.counters().taint_executions, 0u);
  EXPECT_GT(c.counters().executions, 0u);
}

TEST(Campaign, DataflowIterationRespectsTaintBudget) {
  auto cfg = small_config("fig_branches");
  cfg.taint_repeats = 2;
  Campaign c(cfg, CampaignMode::Full);
  c.one_iteration();  // vanilla
  const uint64_t before = c.counters().taint_executions;
  EXPECT_EQ(before, 0u);
  c.one_iteration();  // data-flow (second unpulled arm)
  const uint64_t spent = c.counters().taint_executions - before;
  // repeats * 2 * ceil(log2 1024) mutated executions, no crash probes here.
  EXPECT_EQ(spent, 2u * 20u);
}

TEST(Campaign, AdmittedSeedsStrictlyIncreasedCoverage) {
  auto cfg = small_config("fig_branches");
  cfg.max_iterations = 12;
  Campaign c(cfg, CampaignMode::Full);
  const size_t initial = c.pool().size();
  for (int i = 0; i < 12; ++i) c.one_iteration();
  for (size_t i = initial; i < c.pool().size(); ++i) {
    EXPECT_GT(c.pool().at(i).last_cov_increase, 0u);
  }
  EXPECT_EQ(c.counters().admissions, c.pool().size() - initial);
}

TEST(Campaign, InnerBudgetZeroOnlyDoesBookkeeping) {
  auto cfg = small_config("fig_branches");
  cfg.inner_budget = 0;
  Campaign c(cfg, CampaignMode::Full);
  const size_t pool_before = c.pool().size();
  const size_t cov_before = c.coverage_size();
  c.one_iteration();
  EXPECT_EQ(c.pool().size(), pool_before);
  EXPECT_EQ(c.coverage_size(), cov_before);
  EXPECT_EQ(c.counters().iterations, 1u);
}

TEST(Campaign, UpdateEventsMatchAlgorithmStructure) {
  auto cfg = small_config("fig_branches");
  cfg.max_iterations = 5;
  cfg.inner_budget = 6;
  Campaign c(cfg, CampaignMode::Full);
  for (int i = 0; i < 5; ++i) c.one_iteration();
  EXPECT_EQ(c.counters().step_update_events, 5u * 6u);
  EXPECT_EQ(c.counters().iteration_update_events, 5u);
}

TEST(Campaign, CoverageMonotoneOutsideFlushWindows) {
  auto cfg = small_config("fig_branches");
  cfg.max_iterations = 20;
  Campaign c(cfg, CampaignMode::Full);
  size_t prev = c.coverage_size();
  for (int i = 0; i < 20; ++i) {
    c.one_iteration();
    EXPECT_GE(c.coverage_size(), prev);
    prev = c.coverage_size();
  }
}

TEST(Campaign, BaselineNeverTouchesBandits) {
  auto cfg = small_config("magic_deep");
  cfg.max_iterations = 10;
  const CampaignResult res = run_generic_baseline(cfg);
  EXPECT_EQ(res.counters.bandit_selects, 0u);
  EXPECT_EQ(res.counters.bandit_updates, 0u);
  EXPECT_EQ(res.counters.taint_executions, 0u);
  EXPECT_EQ(res.counters.flushes, 0u);
  EXPECT_EQ(res.counters.label_switches, 0u);
  EXPECT_GT(res.counters.executions, 0u);
}

TEST(Campaign, DeterministicReplayProducesIdenticalStats) {
  for (bool baseline : {false, true}) {
    auto cfg = small_config("fig_loopcount");
    cfg.max_iterations = 15;
    cfg.flush_period = 5;
    cfg.flush_window = 2;
    std::ostringstream s1, s2, t1, t2;
    if (baseline) {
      run_generic_baseline(cfg, &s1, &t1);
      run_generic_baseline(cfg, &s2, &t2);
    } else {
      run_campaign(cfg, &s1, &t1);
      run_campaign(cfg, &s2, &t2);
    }
    EXPECT_EQ(s1.str(), s2.str());
    EXPECT_EQ(t1.str(), t2.str());
    EXPECT_FALSE(s1.str().empty());
  }
}

TEST(Campaign, DifferentRngSeedsDiverge) {
  auto cfg = small_config("fig_branches");
  std::ostringstream s1, s2;
  run_campaign(cfg, &s1);
  cfg.rng_seed = 43;
  run_campaign(cfg, &s2);
  EXPECT_NE(s1.str(), s2.str());
}

TEST(Campaign, QuietFlushWindowRestoresSnapshot) {
  // One immutable behavior: every flush window finds nothing, so the pool
  // and the coverage return to the snapshot each time.
  CampaignConfig cfg;
  cfg.program_source = "input 2\nlet a = x[0]\n";
  cfg.max_iterations = 30;
  cfg.inner_budget = 4;
  cfg.flush_period = 5;
  cfg.flush_window = 2;
  cfg.label_count = 1;
  cfg.rng_seed = 7;
  const CampaignResult res = run_campaign(cfg);
  EXPECT_GE(res.counters.flushes, 3u);
  EXPECT_EQ(res.pool_size, 1u);  // nothing beyond the initial seed survives
}

TEST(Campaign, LabelSwitchRebuildKeepsCoverageConsistent) {
  auto cfg = small_config("fig_branches");
  cfg.max_iterations = 12;
  cfg.label_count = 4;
  cfg.switch_period = 3;
  const CampaignResult res = run_campaign(cfg);
  EXPECT_GE(res.counters.label_switches, 3u);
  EXPECT_GT(res.coverage_size, 0u);
}

TEST(Campaign, ExecutionBudgetStopsTheRun) {
  auto cfg = small_config("fig_branches");
  cfg.max_iterations = 100000;
  cfg.max_executions = 500;
  const CampaignResult res = run_campaign(cfg);
  EXPECT_GE(res.counters.executions, 500u);
  // One iteration may overshoot by at most its own cost.
  EXPECT_LT(res.counters.executions, 500u + 2000u);
}

TEST(Campaign, FindsCrashSiteOnMagicDeepWithSolver) {
  CampaignConfig cfg;
  cfg.program_name = "magic_deep";
  cfg.max_iterations = 4000;
  cfg.max_executions = 150000;
  cfg.inner_budget = 32;
  cfg.label_count = 1;
  cfg.switch_period = 0;
  cfg.flush_period = 0;
  cfg.rng_seed = 5;
  const CampaignResult res = run_campaign(cfg);
  EXPECT_TRUE(res.crash_found);
  EXPECT_EQ(res.first_crash_site, 1u);
}

TEST(Campaign, ResultReportsGroundTruthEdges) {
  auto cfg = small_config("fig_branches");
  const CampaignResult res = run_campaign(cfg);
  EXPECT_FALSE(res.pool_true_edges.empty());
  for (size_t i = 1; i < res.pool_true_edges.size(); ++i) {
    EXPECT_LT(res.pool_true_edges[i - 1], res.pool_true_edges[i]);  // sorted
  }
}

TEST(Campaign, CorpusRoundTripThroughResume) {
  const auto dir =
      std::filesystem::temp_directory_path() / "gbfuzz_campaign_corpus";
  std::filesystem::remove_all(dir);
  auto cfg = small_config("fig_branches");
  cfg.corpus_out = dir.string();
  const CampaignResult first = run_campaign(cfg);
  ASSERT_GT(first.pool_size, 0u);

  CampaignConfig resume = small_config("fig_branches");
  resume.corpus_in = dir.string();
  resume.max_iterations = 1;
  const CampaignResult second = run_campaign(resume);
  EXPECT_GE(second.pool_size, first.pool_size);  // reloaded seeds survive
  std::filesystem::remove_all(dir);
}

TEST(Config, ParseAndRenderRoundTrip) {
  CampaignConfig cfg;
  apply_config_entry(cfg, "max_iterations", "123");
  apply_config_entry(cfg, "bandit_gamma", "0.5");
  apply_config_entry(cfg, "program", "magic_deep");
  EXPECT_EQ(cfg.max_iterations, 123u);
  EXPECT_DOUBLE_EQ(cfg.bandit_gamma, 0.5);
  EXPECT_EQ(cfg.program_name, "magic_deep");
  EXPECT_THROW(apply_config_entry(cfg, "no_such_key", "1"),
               std::invalid_argument);
  EXPECT_THROW(apply_config_entry(cfg, "max_iterations", "abc"),
               std::invalid_argument);
  EXPECT_NE(config_to_string(cfg).find("max_iterations = 123"),
            std::string::npos);
}

}  // namespace
}  // namespace gbf
