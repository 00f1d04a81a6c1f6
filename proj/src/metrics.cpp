#include "stereoforge/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "stereoforge/error.hpp"

namespace stereoforge::metrics {

ErrorAccumulator::ErrorAccumulator(std::vector<double> thresholds, bool kitti_relative_d1)
    : thresholds_(std::move(thresholds)), kitti_relative_(kitti_relative_d1) {
  for (double t : thresholds_)
    if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "thresholds must be positive");
  std::sort(thresholds_.begin(), thresholds_.end());
  thresholds_.erase(std::unique(thresholds_.begin(), thresholds_.end()), thresholds_.end());
  over_.assign(thresholds_.size(), 0);
}

void ErrorAccumulator::add(const DisparityMap& pred, const DisparityMap& gt) {
  if (!pred.same_shape(gt))
    throw Error(ErrorCode::DimensionMismatch, "prediction and ground truth differ in size");
  const auto pv = pred.values();
  const auto pm = pred.mask();
  const auto gv = gt.values();
  const auto gm = gt.mask();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (!gm[i]) continue;
    ++n_gt_;
    if (!pm[i]) continue;
    ++n_valid_;
    const double err = std::abs(static_cast<double>(pv[i]) - static_cast<double>(gv[i]));
    // Neumaier step.
    const double t = abs_sum_ + err;
    abs_comp_ += abs_sum_ >= err ? (abs_sum_ - t) + err : (err - t) + abs_sum_;
    abs_sum_ = t;
    for (std::size_t k = 0; k < thresholds_.size(); ++k)
      if (err > thresholds_[k]) ++over_[k];
    if (err > 3.0 && (!kitti_relative_ || err > 0.05 * std::abs(static_cast<double>(gv[i]))))
      ++d1_count_;
  }
}

namespace {

void require_overlap(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::NoOverlap, "no pixel is valid in both maps");
}

double percent(std::size_t part, std::size_t whole) {
  return 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

double ErrorAccumulator::epe() const {
  require_overlap(n_valid_);
  return (abs_sum_ + abs_comp_) / static_cast<double>(n_valid_);
}

double ErrorAccumulator::bad(double tau) const {
  require_overlap(n_valid_);
  const auto it = std::find(thresholds_.begin(), thresholds_.end(), tau);
  if (it == thresholds_.end())
    throw Error(ErrorCode::InvalidArgument, "threshold " + std::to_string(tau) + " not tracked");
  return percent(over_[static_cast<std::size_t>(it - thresholds_.begin())], n_valid_);
}

double ErrorAccumulator::d1_all() const {
  require_overlap(n_valid_);
  return percent(d1_count_, n_valid_);
}

double ErrorAccumulator::coverage() const {
  if (n_gt_ == 0) throw Error(ErrorCode::NoOverlap, "ground truth has no valid pixels");
  return static_cast<double>(n_valid_) / static_cast<double>(n_gt_);
}

double epe(const DisparityMap& pred, const DisparityMap& gt) {
  ErrorAccumulator acc({1.0});
  acc.add(pred, gt);
  return acc.epe();
}

double bad_tau(const DisparityMap& pred, const DisparityMap& gt, double tau) {
  ErrorAccumulator acc({tau});
  acc.add(pred, gt);
  return acc.bad(tau);
}

double d1_all(const DisparityMap& pred, const DisparityMap& gt, bool kitti_relative) {
  ErrorAccumulator acc({3.0}, kitti_relative);
  acc.add(pred, gt);
  return acc.d1_all();
}

MetricReport report(const ErrorAccumulator& acc) {
  MetricReport r;
  r.epe = acc.epe();
  r.d1_all = acc.d1_all();
  r.n_valid = acc.n_valid();
  r.coverage = acc.coverage();
  return r;
}

MetricReport evaluate(const DisparityMap& pred, const DisparityMap& gt,
                      std::vector<double> thresholds, bool kitti_relative) {
  ErrorAccumulator acc(thresholds, kitti_relative);
  acc.add(pred, gt);
  MetricReport r = report(acc);
  for (double t : thresholds) r.bad[t] = acc.bad(t);
  return r;
}

double round2(double v) {
  // Decimal ties like 7.635 are stored a hair below the tie; the nudge is far
  // below the 0.01 resolution and far above double rounding noise.
  const double scaled = v * 100.0;
  return std::round(scaled + std::copysign(1e-7, scaled)) / 100.0;
}

MeanValue dataset_mean(std::span<const double> values) {
  if (values.size() != 4)
    throw Error(ErrorCode::ArityMismatch,
                "benchmark mean needs exactly 4 values, got " + std::to_string(values.size()));
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "benchmark value is not finite");
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  const double mean = (sum + comp) / 4.0;
  return {mean, round2(mean)};
}

MeanCheck check_printed_mean(std::span<const double> cells, double printed) {
  MeanCheck c;
  c.computed = dataset_mean(cells);
  c.printed = printed;
  c.consistent = std::abs(c.computed.value - printed) <= kMeanTolerance + 1e-9;
  return c;
}

DisparityMap half_resolution(const DisparityMap& map) {
  if (map.width() < 2 || map.height() < 2)
    throw Error(ErrorCode::ImageTooSmall, "half resolution needs at least 2x2");
  DisparityMap out(map.width() / 2, map.height() / 2, 0.0f, false);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      if (map.valid(2 * x, 2 * y)) out.set(x, y, map.at(2 * x, 2 * y) * 0.5f);
  return out;
}

RasterImage half_resolution(const RasterImage& img) {
  if (img.width() < 2 || img.height() < 2)
    throw Error(ErrorCode::ImageTooSmall, "half resolution needs at least 2x2");
  RasterImage out(img.width() / 2, img.height() / 2, img.channels());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const unsigned s = img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                           img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c);
        out.at(x, y, c) = static_cast<std::uint8_t>((s + 2) / 4);
      }
  return out;
}

std::string_view to_string(Benchmark b) {
  switch (b) {
    case Benchmark::Kitti12: return "K12";
    case Benchmark::Kitti15: return "K15";
    case Benchmark::Middlebury: return "Midd";
    case Benchmark::Eth3d: return "E3D";
  }
  return "?";
}

std::optional<Benchmark> parse_benchmark(std::string_view id) {
  std::string s(id);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "k12" || s == "kitti12" || s == "kitti2012") return Benchmark::Kitti12;
  if (s == "k15" || s == "kitti15" || s == "kitti2015") return Benchmark::Kitti15;
  if (s == "midd" || s == "middlebury") return Benchmark::Middlebury;
  if (s == "e3d" || s == "eth3d") return Benchmark::Eth3d;
  return std::nullopt;
}

std::string_view designated_metric(Benchmark b) {
  switch (b) {
    case Benchmark::Kitti12:
    case Benchmark::Kitti15: return "d1";
    case Benchmark::Middlebury: return "bad2";
    case Benchmark::Eth3d: return "bad1";
  }
  return "";
}

nlohmann::ordered_json to_json(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["model_id"] = r.model_id;
  j["dataset_id"] = r.dataset_id;
  j["metric"] = r.metric;
  j["value"] = r.value;
  j["n_valid"] = r.n_valid;
  j["coverage"] = r.coverage;
  if (r.train_dataset) j["train_dataset"] = *r.train_dataset;
  return j;
}

EvalRecord record_from_json(const nlohmann::json& j) {
  try {
    EvalRecord r;
    r.model_id = j.at("model_id").get<std::string>();
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    r.value = j.at("value").get<double>();
    r.n_valid = j.value("n_valid", std::size_t{0});
    r.coverage = j.value("coverage", 1.0);
    if (j.contains("train_dataset")) r.train_dataset = j.at("train_dataset").get<std::string>();
    if (!std::isfinite(r.value)) throw Error(ErrorCode::InvalidArgument, "record value not finite");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad evaluation record: ") + e.what());
  }
}

std::vector<EvalRecord> read_records_jsonl(std::string_view text) {
  std::vector<EvalRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string write_records_jsonl(std::span<const EvalRecord> records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

}  // namespace stereoforge::metrics
