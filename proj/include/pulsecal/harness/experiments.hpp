#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pulsecal/conformal.hpp"
#include "pulsecal/harness/config.hpp"
#include "pulsecal/harness/csv_io.hpp"
#include "pulsecal/pipeline.hpp"
#include "pulsecal/ranking.hpp"
#include "pulsecal/scorekit.hpp"

namespace pulsecal::harness {

// Method labels used in coverage tables beyond the Method enum.
inline constexpr const char* kPooledLabel = "split-conformal-pooled";

struct CoverageLine {
  std::string group;
  std::string method;
  double alpha = 0.0;
  std::size_t n = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
};

/// Streaming counterpart of coverage_report: rows keyed by (group, method,
/// alpha index) in order of first appearance.
class CoverageAccumulator {
 public:
  void add(const std::string& group, const std::string& method, std::size_t alpha_index,
           double alpha, const Interval& interval, double actual);
  std::vector<CoverageLine> lines() const;

 private:
  struct Bucket {
    CoverageLine line;
    std::size_t alpha_index = 0;
    std::size_t hits = 0;
    double width_sum = 0.0;
  };
  std::vector<Bucket> buckets_;
};

struct CalibrationStudy {
  std::vector<CoverageLine> by_horizon;
  std::vector<CoverageLine> curve;
  std::vector<CoverageLine> by_agent;
  std::vector<CoverageLine> by_stratum;
  std::vector<CoverageLine> by_stratum_horizon;
  // One line per horizon: "h,stable_fallback,volatile_fallback".
  std::vector<std::string> fallbacks;
};

/// Holds out the last test_fraction of every series, fits and calibrates on
/// the rest, and scores every method on the held-out targets.
CalibrationStudy run_calibration_study(const Dataset& data, const RunConfig& config);

// ---------------------------------------------------------------------------

struct ShiftStudyOptions {
  std::size_t horizon = 1;
  double alpha = 0.2;
  double gamma = 0.05;
  std::size_t pre_window = 500;
  std::size_t final_window = 1000;
  double train_fraction = 0.7;
  double reversion_rate = forecast::kDefaultReversionRate;
};

struct ShiftStep {
  long offset = 0;  // issue step minus event index
  double hour = 0.0;
  double actual = 0.0;
  double working_alpha = 0.0;
  Interval aci;
  Interval split;
  Interval parametric;
};

struct ShiftSummary {
  std::string agent_id;
  std::size_t event_index = 0;
  double pre_mean_width = 0.0;
  double post6_mean_width = 0.0;
  double width_ratio = 0.0;
  double split_half_width = 0.0;
  double split_pre_mean_width = 0.0;
  double split_post6_mean_width = 0.0;
  std::size_t post_steps = 0;
  double post_miscoverage = 0.0;
  double split_post_miscoverage = 0.0;
  double parametric_post_miscoverage = 0.0;
  double final_alpha_mean = 0.0;
  double telescoping_error = 0.0;
};

struct ShiftStudy {
  ShiftSummary summary;
  std::vector<ShiftStep> steps;
};

/// Calibrates on the history ending pre_window points before the event,
/// then runs ACI, fixed split conformal and the parametric band through the
/// event. Steps are indexed by issue time; windows are [event - pre_window,
/// event) and [event, event + 6).
ShiftStudy run_shift_study(const ScoreSeries& series, std::size_t event_index,
                           const ShiftStudyOptions& options);

struct PanelSummary {
  std::size_t streams = 0;
  double pre_mean_width = 0.0;
  double post6_mean_width = 0.0;
  double width_ratio = 0.0;
  double final_alpha_mean = 0.0;
  double max_miscoverage_gap = 0.0;
  double max_telescoping_error = 0.0;
  std::size_t min_post_steps = 0;
};

// Ratio of panel means; gap is the largest |miscoverage - alpha| of any stream.
PanelSummary summarize_panel(std::span<const ShiftSummary> runs, double alpha);

// ---------------------------------------------------------------------------

struct RankStudyOptions {
  double alpha = 0.2;
  double fdr_q = 0.2;
  std::size_t horizon = 24;
  double train_fraction = conformal::kDefaultTrainFraction;
  double reversion_rate = forecast::kDefaultReversionRate;
};

struct RankStudy {
  std::vector<ranking::AgentEntry> entries;
  std::vector<ranking::RankDecision> decisions;
  ranking::Leaderboard per_pair;
  ranking::Leaderboard fdr;
  std::optional<double> per_pair_false_rate;
  std::optional<double> fdr_false_rate;
};

/// Scores every agent by its latest value and decides every pair from the
/// latest difference against its own difference-series calibration. True
/// values, when given, align with series and produce false-ranking rates.
RankStudy run_rank_study(std::span<const ScoreSeries> series, const RankStudyOptions& options,
                         std::span<const double> true_values = {});

// ---------------------------------------------------------------------------

struct DirichletRow {
  double concentration = 0.0;
  scorekit::TauSummary tau;
};

struct PerturbationRow {
  std::string agent_id;
  double composite = 0.0;
  std::size_t rank = 0;  // 1-based
  int unstable = 0;
};

struct BootstrapRow {
  std::string agent_id;
  std::size_t observations = 0;
  Interval ci;
};

struct SensitivityStudy {
  std::vector<DirichletRow> dirichlet;
  std::vector<PerturbationRow> u_model;
  std::vector<BootstrapRow> bootstrap;
};

SensitivityStudy run_sensitivity_study(const Dataset& data, const RunConfig& config);

// ---------------------------------------------------------------------------

struct PipelineStudy {
  std::vector<pipeline::StageUncertainty> stages;
  double independence = 0.0;
  double worst_case = 0.0;
  std::vector<pipeline::SweepRow> additive;
  std::vector<pipeline::SweepRow> multiplicative;
};

PipelineStudy run_pipeline_study(const RunConfig& config);

}  // namespace pulsecal::harness
