#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coopalign/harness/config.hpp"

namespace coopalign::harness {

/// One (scenario, method, neighbor) alignment attempt against the ego.
struct AlignmentRow {
  std::string scenario_id;
  int co_visible = -1;
  std::string method;
  int neighbor = 0;
  bool pose_returned = false;
  bool success = false;             ///< pose returned and translation error < 3 m
  double translation_error_m = 0.0;  ///< NaN without a pose
  double rotation_error_deg = 0.0;   ///< NaN without a pose
  std::size_t bytes = 0;             ///< message the neighbor sends for this exchange
  double time_s = 0.0;               ///< median wall time; 0 unless timing is enabled
};

struct MethodAggregate {
  std::string method;
  int co_visible = -1;  ///< -1: pooled over every scenario family
  std::size_t alignments = 0;
  std::size_t successes = 0;
  double success_rate_pct = 0.0;
  double mean_bytes = 0.0;
  double log2_mean_bytes = 0.0;
  double mean_time_s = 0.0;
};

struct AlignmentReport {
  std::vector<AlignmentRow> rows;
  std::vector<MethodAggregate> aggregates;
  bool timed = false;
};

inline constexpr double kSuccessTranslationM = 3.0;

/// Seed of scenario s under a root seed; shared by every benchmark entry point.
std::uint64_t scenario_seed(std::uint64_t root, std::size_t s);
/// Seed of the pose-estimation and noise draws of scenario s.
std::uint64_t pipeline_seed(std::uint64_t root, std::size_t s);
/// "s0007" style identifier of scenario s.
std::string scenario_name(std::size_t s);

/// Aggregates per method (pooled) and, when rows carry several co-visible
/// families, per method and family. Order follows first appearance.
std::vector<MethodAggregate> aggregate_alignment(const std::vector<AlignmentRow>& rows);

/// Evaluates every configured aligner on the same seeded scenarios. With
/// `measure_time` each alignment call is timed (median of timing_repeats runs
/// on a monotonic clock, excluding scenario generation).
AlignmentReport run_alignment_benchmark(const ExperimentConfig& cfg, bool measure_time = false);

struct SweepRow {
  std::string scenario_id;
  std::string method;
  double sigma_t = 0.0;
  double sigma_r_deg = 0.0;
  double iou_thr = 0.0;
  double ap = 0.0;
};

/// AP pooled over all scenarios for one (method, noise level, threshold).
struct SweepCell {
  std::string method;
  double sigma_t = 0.0;
  double sigma_r_deg = 0.0;
  double iou_thr = 0.0;
  double pooled_ap = 0.0;
  std::size_t scenarios = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;
};

/// Detection AP per noise level for no-fusion (ego only), baseline (GNSS
/// poses, coarse alignment only) and pastat (PGC poses with confidence
/// embedding and FSA). Every level shares the same scenarios and
/// standard-normal draws.
SweepReport run_noise_sweep(const ExperimentConfig& cfg);

/// align.csv and align.json; align_timing.csv/json as well when timed.
void emit_alignment_report(const AlignmentReport& report, const std::filesystem::path& dir);
/// sweep.csv and sweep.json.
void emit_sweep_report(const SweepReport& report, const std::filesystem::path& dir);

/// Stable text renderings used by the emitters.
std::string alignment_csv(const AlignmentReport& report);
std::string alignment_json(const AlignmentReport& report);
std::string sweep_csv(const SweepReport& report);
std::string sweep_json(const SweepReport& report);

/// Fixed-precision number formatting shared by every CSV writer; NaN prints
/// as "nan".
std::string format_fixed(double v, int digits = 6);

}  // namespace coopalign::harness
