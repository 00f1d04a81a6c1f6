#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stereoforge/metrics.hpp"

namespace stereoforge::mix {

struct DatasetRef {
  std::string id;
  std::string manifest_path;
  std::int64_t sample_count = 0;
  std::vector<std::string> tags;

  friend bool operator==(const DatasetRef&, const DatasetRef&) = default;
};

struct RankedEntry {
  DatasetRef dataset;
  /// Mean of the four benchmark errors; lower ranks first.
  double mean_error = 0.0;
  /// K12, K15, Midd, E3D.
  std::array<double, 4> metrics{};
};

using RankedList = std::vector<RankedEntry>;
using Catalog = std::map<std::string, DatasetRef>;

/// Groups records by training set (train_dataset, else model_id), takes the
/// designated metric of each benchmark, averages the four and sorts ascending
/// by mean, ties by id. Throws MissingMetric when a group lacks a benchmark.
/// Catalog entries supply manifest paths and sample counts.
RankedList rank_datasets(std::span<const metrics::EvalRecord> records, const Catalog& catalog = {});

enum class WeightMode { SampleCount, Uniform };

std::string_view to_string(WeightMode m);
WeightMode parse_weight_mode(std::string_view text);

struct RankingSnapshotEntry {
  std::string id;
  double mean_error = 0.0;

  friend bool operator==(const RankingSnapshotEntry&, const RankingSnapshotEntry&) = default;
};

struct MixPlan {
  int k = 0;
  std::vector<DatasetRef> members;
  /// Parallel to members; positive, summing to 1.
  std::vector<double> weights;
  WeightMode mode = WeightMode::SampleCount;
  std::vector<RankingSnapshotEntry> created_from;

  friend bool operator==(const MixPlan&, const MixPlan&) = default;
};

/// Union of the top-k ranked datasets. Throws KOutOfRange.
MixPlan build_mix(const RankedList& ranked, int k, WeightMode mode = WeightMode::SampleCount);

/// Deterministic manifest JSON with fixed key order.
std::string emit_manifest(const MixPlan& plan);
MixPlan parse_manifest(std::string_view text);

/// Largest-remainder quotas of weight * total, shuffled by `seed`.
std::vector<std::string> draw_schedule(const MixPlan& plan, std::size_t total_samples,
                                       std::uint64_t seed);

/// Ranking handoff between the `rank` and `mixplan` commands.
std::string emit_ranking(const RankedList& ranked);
RankedList parse_ranking(std::string_view text);

/// Catalog file: {"datasets": [{id, manifest_path, sample_count, tags}]}.
Catalog parse_catalog(std::string_view text);

}  // namespace stereoforge::mix
