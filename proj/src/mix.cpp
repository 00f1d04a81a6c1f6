#include "stereoforge/mix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "stereoforge/error.hpp"
#include "stereoforge/rng.hpp"

namespace stereoforge::mix {

using nlohmann::json;
using nlohmann::ordered_json;

RankedList rank_datasets(std::span<const metrics::EvalRecord> records, const Catalog& catalog) {
  std::map<std::string, std::array<std::optional<double>, 4>> groups;
  for (const auto& r : records) {
    const auto bench = metrics::parse_benchmark(r.dataset_id);
    if (!bench || r.metric != metrics::designated_metric(*bench)) continue;
    const std::string& key = r.train_dataset ? *r.train_dataset : r.model_id;
    auto& slot = groups[key][static_cast<std::size_t>(*bench)];
    if (slot)
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate " + std::string(metrics::to_string(*bench)) + " record for " + key);
    slot = r.value;
  }
  if (groups.empty()) throw Error(ErrorCode::MissingMetric, "no benchmark records to rank");

  RankedList ranked;
  for (const auto& [id, cells] : groups) {
    RankedEntry e;
    for (std::size_t b = 0; b < 4; ++b) {
      if (!cells[b])
        throw Error(ErrorCode::MissingMetric,
                    id + " lacks " + std::string(metrics::to_string(metrics::kBenchmarks[b])) + " (" +
                        std::string(metrics::designated_metric(metrics::kBenchmarks[b])) + ")");
      e.metrics[b] = *cells[b];
    }
    e.mean_error = metrics::dataset_mean(e.metrics).value;
    if (const auto it = catalog.find(id); it != catalog.end())
      e.dataset = it->second;
    else
      e.dataset.id = id;
    ranked.push_back(std::move(e));
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.mean_error != b.mean_error) return a.mean_error < b.mean_error;
    return a.dataset.id < b.dataset.id;
  });
  return ranked;
}

std::string_view to_string(WeightMode m) {
  return m == WeightMode::SampleCount ? "sample_count" : "uniform";
}

WeightMode parse_weight_mode(std::string_view text) {
  if (text == "sample_count") return WeightMode::SampleCount;
  if (text == "uniform") return WeightMode::Uniform;
  throw Error(ErrorCode::InvalidConfig, "unknown weight mode '" + std::string(text) + "'");
}

MixPlan build_mix(const RankedList& ranked, int k, WeightMode mode) {
  if (k < 1 || static_cast<std::size_t>(k) > ranked.size())
    throw Error(ErrorCode::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " +
                                            std::to_string(ranked.size()) + "]");
  MixPlan plan;
  plan.k = k;
  plan.mode = mode;
  for (const auto& e : ranked) plan.created_from.push_back({e.dataset.id, e.mean_error});
  std::int64_t total = 0;
  for (int i = 0; i < k; ++i) {
    const DatasetRef& d = ranked[static_cast<std::size_t>(i)].dataset;
    if (mode == WeightMode::SampleCount && d.sample_count <= 0)
      throw Error(ErrorCode::InvalidArgument,
                  d.id + " has no sample count; supply a catalog or use uniform weighting");
    plan.members.push_back(d);
    total += d.sample_count;
  }
  for (const auto& d : plan.members)
    plan.weights.push_back(mode == WeightMode::Uniform
                               ? 1.0 / static_cast<double>(k)
                               : static_cast<double>(d.sample_count) / static_cast<double>(total));
  return plan;
}

namespace {

ordered_json dataset_json(const DatasetRef& d) {
  ordered_json j;
  j["id"] = d.id;
  j["manifest_path"] = d.manifest_path;
  j["sample_count"] = d.sample_count;
  if (!d.tags.empty()) j["tags"] = d.tags;
  return j;
}

DatasetRef dataset_from_json(const json& j) {
  DatasetRef d;
  d.id = j.at("id").get<std::string>();
  d.manifest_path = j.value("manifest_path", std::string{});
  d.sample_count = j.value("sample_count", std::int64_t{0});
  if (j.contains("tags")) d.tags = j.at("tags").get<std::vector<std::string>>();
  if (d.sample_count < 0) throw Error(ErrorCode::InvalidArgument, d.id + ": negative sample_count");
  return d;
}

template <typename F>
auto parse_json_document(std::string_view text, const char* what, F&& f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad ") + what + ": " + e.what());
  }
}

}  // namespace

std::string emit_manifest(const MixPlan& plan) {
  ordered_json j;
  j["k"] = plan.k;
  j["weighting"] = std::string(to_string(plan.mode));
  j["members"] = ordered_json::array();
  for (std::size_t i = 0; i < plan.members.size(); ++i) {
    ordered_json m = dataset_json(plan.members[i]);
    m["weight"] = plan.weights[i];
    j["members"].push_back(std::move(m));
  }
  j["created_from"] = ordered_json::array();
  for (const auto& e : plan.created_from)
    j["created_from"].push_back(ordered_json{{"id", e.id}, {"mean_error", e.mean_error}});
  return j.dump(2) + "\n";
}

MixPlan parse_manifest(std::string_view text) {
  return parse_json_document(text, "manifest", [](const json& j) {
    MixPlan plan;
    plan.k = j.at("k").get<int>();
    plan.mode = parse_weight_mode(j.value("weighting", std::string("sample_count")));
    for (const auto& m : j.at("members")) {
      plan.members.push_back(dataset_from_json(m));
      plan.weights.push_back(m.at("weight").get<double>());
    }
    for (const auto& e : j.at("created_from"))
      plan.created_from.push_back({e.at("id").get<std::string>(), e.at("mean_error").get<double>()});
    if (plan.k != static_cast<int>(plan.members.size()))
      throw Error(ErrorCode::InvalidArgument, "manifest k does not match its member count");
    return plan;
  });
}

std::vector<std::string> draw_schedule(const MixPlan& plan, std::size_t total_samples,
                                       std::uint64_t seed) {
  if (total_samples < 1) throw Error(ErrorCode::InvalidArgument, "total_samples must be >= 1");
  if (plan.members.empty() || plan.members.size() != plan.weights.size())
    throw Error(ErrorCode::InvalidArgument, "plan has no members");
  const std::size_t n = plan.members.size();
  std::vector<std::size_t> quota(n);
  std::vector<double> remainder(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = plan.weights[i] * static_cast<double>(total_samples);
    quota[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - std::floor(exact);
    assigned += quota[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Largest remainder first; ties keep rank order.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total_samples; i = (i + 1) % n, ++assigned) ++quota[order[i]];
  // Floating weights summing slightly above 1 can overshoot; trim from the end.
  for (std::size_t i = n; assigned > total_samples && i-- > 0;) {
    const std::size_t take = std::min(quota[order[i]], assigned - total_samples);
    quota[order[i]] -= take;
    assigned -= take;
  }

  std::vector<std::string> seq;
  seq.reserve(total_samples);
  for (std::size_t i = 0; i < n; ++i) seq.insert(seq.end(), quota[i], plan.members[i].id);
  Rng rng(seed);
  for (std::size_t i = seq.size(); i > 1; --i) std::swap(seq[i - 1], seq[rng.below(i)]);
  return seq;
}

std::string emit_ranking(const RankedList& ranked) {
  ordered_json j;
  j["ranking"] = ordered_json::array();
  int rank = 1;
  for (const auto& e : ranked) {
    ordered_json r;
    r["rank"] = rank++;
    r["dataset"] = dataset_json(e.dataset);
    r["mean_error"] = e.mean_error;
    r["mean_error_rounded"] = metrics::round2(e.mean_error);
    ordered_json m;
    for (std::size_t b = 0; b < 4; ++b) m[std::string(metrics::to_string(metrics::kBenchmarks[b]))] = e.metrics[b];
    r["metrics"] = std::move(m);
    j["ranking"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

RankedList parse_ranking(std::string_view text) {
  return parse_json_document(text, "ranking", [](const json& j) {
    RankedList out;
    for (const auto& r : j.at("ranking")) {
      RankedEntry e;
      e.dataset = dataset_from_json(r.at("dataset"));
      e.mean_error = r.at("mean_error").get<double>();
      if (r.contains("metrics"))
        for (std::size_t b = 0; b < 4; ++b)
          e.metrics[b] = r.at("metrics").value(std::string(metrics::to_string(metrics::kBenchmarks[b])), 0.0);
      out.push_back(std::move(e));
    }
    return out;
  });
}

Catalog parse_catalog(std::string_view text) {
  return parse_json_document(text, "catalog", [](const json& j) {
    Catalog out;
    for (const auto& d : j.at("datasets")) {
      DatasetRef ref = dataset_from_json(d);
      if (!out.emplace(ref.id, ref).second)
        throw Error(ErrorCode::InvalidArgument, "duplicate dataset id " + ref.id);
    }
    return out;
  });
}

}  // namespace stereoforge::mix
