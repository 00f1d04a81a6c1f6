#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stereoforge/disparity.hpp"
#include "stereoforge/raster.hpp"

namespace stereoforge::metrics {

/// Pooled error statistics over one or more (pred, gt) pairs. A pixel counts
/// when it is valid in both maps; gt-valid pixels missing from pred reduce
/// coverage but not the metrics.
class ErrorAccumulator {
 public:
  /// Thresholds (px) whose Bad-tau percentages are tracked. 3.0 is always
  /// included for D1-all.
  explicit ErrorAccumulator(std::vector<double> thresholds = {1.0, 2.0, 3.0},
                            bool kitti_relative_d1 = false);

  void add(const DisparityMap& pred, const DisparityMap& gt);

  std::size_t n_valid() const noexcept { return n_valid_; }
  std::size_t n_gt() const noexcept { return n_gt_; }

  double epe() const;
  double bad(double tau) const;
  double d1_all() const;
  double coverage() const;

 private:
  std::vector<double> thresholds_;
  std::vector<std::size_t> over_;
  bool kitti_relative_;
  std::size_t d1_count_ = 0;
  std::size_t n_valid_ = 0;
  std::size_t n_gt_ = 0;
  double abs_sum_ = 0.0;
  double abs_comp_ = 0.0;
};

/// Mean |pred - gt| over pixels valid in both. Throws NoOverlap.
double epe(const DisparityMap& pred, const DisparityMap& gt);

/// 100 * |{p : |pred - gt| > tau}| / n_valid (strict inequality).
double bad_tau(const DisparityMap& pred, const DisparityMap& gt, double tau);

/// Bad-3.0 by default. With `kitti_relative` an outlier must also exceed 5%
/// of the ground-truth disparity.
double d1_all(const DisparityMap& pred, const DisparityMap& gt, bool kitti_relative = false);

struct MetricReport {
  double epe = 0.0;
  std::map<double, double> bad;
  double d1_all = 0.0;
  std::size_t n_valid = 0;
  double coverage = 0.0;
};

MetricReport evaluate(const DisparityMap& pred, const DisparityMap& gt,
                      std::vector<double> thresholds = {1.0, 2.0, 3.0},
                      bool kitti_relative = false);
MetricReport report(const ErrorAccumulator& acc);

// ---------------------------------------------------------------------------
// Four-benchmark aggregation.

/// Rounds half away from zero to two decimals, tolerating binary
/// representation error of decimal ties such as 7.635.
double round2(double v);

struct MeanValue {
  double value = 0.0;
  double rounded = 0.0;
};

/// Arithmetic mean of exactly four benchmark values (K12, K15, Midd, E3D).
MeanValue dataset_mean(std::span<const double> values);

inline constexpr double kMeanTolerance = 0.005;

struct MeanCheck {
  MeanValue computed;
  double printed = 0.0;
  bool consistent = false;
};

/// Compares a published mean against the mean of its cells; inconsistent
/// rows are reported, never coerced.
MeanCheck check_printed_mean(std::span<const double> cells, double printed);

// ---------------------------------------------------------------------------

/// 2x downsample of a disparity map: top-left sample of each 2x2 block,
/// value halved, validity carried over.
DisparityMap half_resolution(const DisparityMap& map);
/// 2x2 box-filter downsample, rounded.
RasterImage half_resolution(const RasterImage& img);

// ---------------------------------------------------------------------------
// Records.

enum class Benchmark { Kitti12, Kitti15, Middlebury, Eth3d };

inline constexpr Benchmark kBenchmarks[4] = {Benchmark::Kitti12, Benchmark::Kitti15,
                                             Benchmark::Middlebury, Benchmark::Eth3d};

std::string_view to_string(Benchmark b);
/// Accepts the short ids (K12, K15, Midd, E3D) and common long names.
std::optional<Benchmark> parse_benchmark(std::string_view id);
/// d1 for both KITTI sets, bad2 for Middlebury, bad1 for ETH3D.
std::string_view designated_metric(Benchmark b);

struct EvalRecord {
  std::string model_id;
  std::string dataset_id;
  std::string metric;
  double value = 0.0;
  std::size_t n_valid = 0;
  double coverage = 1.0;
  /// Training set the model was fine-tuned on, when ranking datasets.
  std::optional<std::string> train_dataset;
};

nlohmann::ordered_json to_json(const EvalRecord& r);
EvalRecord record_from_json(const nlohmann::json& j);
std::vector<EvalRecord> read_records_jsonl(std::string_view text);
std::string write_records_jsonl(std::span<const EvalRecord> records);

}  // namespace stereoforge::metrics
