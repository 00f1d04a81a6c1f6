#include <fnmatch.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stereoforge/disparity.hpp"
#include "stereoforge/error.hpp"
#include "stereoforge/fill.hpp"
#include "stereoforge/imgio.hpp"
#include "stereoforge/metrics.hpp"
#include "stereoforge/mix.hpp"
#include "stereoforge/pipeline.hpp"
#include "stereoforge/sgm.hpp"

namespace fs = std::filesystem;
using namespace stereoforge;

namespace {

std::string read_text(const fs::path& p) {
  const auto bytes = imgio::read_file(p);
  return std::string(bytes.begin(), bytes.end());
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.empty() || p == "-") {
    std::cout << text;
    return;
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  imgio::write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Wildcards are matched in the last path component only.
std::vector<fs::path> expand_glob(const std::string& pattern) {
  const fs::path p(pattern);
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  const std::string name = p.filename().string();
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && fnmatch(name.c_str(), entry.path().filename().c_str(), 0) == 0)
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

bool is_disparity_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".pfm" || ext == ".png";
}

// Ground truth for `pred` shares its stem; any supported extension.
fs::path find_gt(const fs::path& gt_dir, const fs::path& pred) {
  for (const char* ext : {".pfm", ".png"}) {
    fs::path cand = gt_dir / pred.stem();
    cand += ext;
    if (fs::exists(cand)) return cand;
  }
  return {};
}

DisparityMap load_disp(const fs::path& p) {
  try {
    return DisparityMap(imgio::read_float_map(imgio::read_file(p)));
  } catch (const Error& e) {
    rethrow_with_context(e, p.string());
  }
}

struct Options {
  // synth
  std::string list, out, config;
  int workers = 0;
  // stats
  std::string disp_glob, svg, stats_out;
  double bin_width = 1.0;
  // eval
  std::string pred, gt, metric = "d1", model_id = "model", dataset_id = "dataset";
  bool half_res = false, kitti_d1 = false;
  // rank / mixplan
  std::string records, catalog, ranking, schedule_out;
  int k = 0;
  bool uniform = false;
  std::size_t schedule_total = 0;
  std::uint64_t seed = 0;
  // match
  std::string left, right;
  sgm::MatchParams match;
  bool no_lr = false;
  // fill
  std::string strategy, input, mask, cmd;
  std::vector<std::string> bg;
};

int cmd_synth(const Options& o) {
  pipeline::PipelineConfig cfg;
  if (!o.config.empty()) {
    cfg = pipeline::load_config(o.config);
  } else {
    pipeline::apply_env_overrides(cfg);
  }
  if (o.workers > 0) cfg.workers = o.workers;
  const auto summary = pipeline::run_batch(o.list, cfg, o.out);
  std::cerr << summary.succeeded << "/" << summary.total << " samples written to " << o.out << "\n";
  for (const auto& f : summary.failures) std::cerr << "failed [" << f.index << "] " << f.error << "\n";
  return summary.ok() ? 0 : 1;
}

int cmd_stats(const Options& o) {
  const auto files = expand_glob(o.disp_glob);
  if (files.empty()) throw Error(ErrorCode::InvalidArgument, "no files match " + o.disp_glob);
  std::vector<float> values;
  for (const auto& f : files) {
    const DisparityMap d = load_disp(f);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.mask()[i]) values.push_back(d.values()[i]);
  }
  const DispStats stats = disparity_stats(std::move(values), o.bin_width);
  write_text(o.svg, emit_histogram_svg(stats));
  nlohmann::ordered_json j{{"files", files.size()}, {"count", stats.count}, {"min", stats.min},
                           {"max", stats.max},     {"mean", stats.mean},   {"median", stats.median}};
  write_text(o.stats_out, j.dump(2) + "\n");
  return 0;
}

int cmd_eval(const Options& o) {
  double tau = 0.0;
  if (o.metric == "bad1") tau = 1.0;
  else if (o.metric == "bad2") tau = 2.0;
  else if (o.metric != "epe" && o.metric != "d1")
    throw Error(ErrorCode::InvalidArgument, "unknown metric " + o.metric);

  metrics::ErrorAccumulator acc({1.0, 2.0, 3.0}, o.kitti_d1);
  std::size_t pairs = 0;
  std::vector<fs::path> preds;
  for (const auto& e : fs::directory_iterator(o.pred))
    if (e.is_regular_file() && is_disparity_file(e.path())) preds.push_back(e.path());
  std::sort(preds.begin(), preds.end());
  for (const auto& p : preds) {
    const fs::path g = find_gt(o.gt, p);
    if (g.empty()) {
      std::cerr << "no ground truth for " << p.string() << ", skipped\n";
      continue;
    }
    DisparityMap pred = load_disp(p);
    DisparityMap gt = load_disp(g);
    if (o.half_res) {
      if (pred.width() == gt.width() && pred.height() == gt.height()) pred = metrics::half_resolution(pred);
      gt = metrics::half_resolution(gt);
    }
    try {
      acc.add(pred, gt);
    } catch (const Error& e) {
      rethrow_with_context(e, p.string());
    }
    ++pairs;
  }
  if (pairs == 0) throw Error(ErrorCode::NoValidPixels, "no prediction/ground-truth pairs in " + o.pred);

  metrics::EvalRecord rec;
  rec.model_id = o.model_id;
  rec.dataset_id = o.dataset_id;
  rec.metric = o.metric;
  rec.value = o.metric == "epe" ? acc.epe() : o.metric == "d1" ? acc.d1_all() : acc.bad(tau);
  rec.n_valid = acc.n_valid();
  rec.coverage = acc.coverage();
  std::cout << metrics::to_json(rec).dump() << "\n";
  return 0;
}

int cmd_rank(const Options& o) {
  const auto records = metrics::read_records_jsonl(read_text(o.records));
  const mix::Catalog catalog = o.catalog.empty() ? mix::Catalog{} : mix::parse_catalog(read_text(o.catalog));
  write_text(o.out, mix::emit_ranking(mix::rank_datasets(records, catalog)));
  return 0;
}

int cmd_mixplan(const Options& o) {
  const auto ranked = mix::parse_ranking(read_text(o.ranking));
  const auto plan = mix::build_mix(ranked, o.k, o.uniform ? mix::WeightMode::Uniform : mix::WeightMode::SampleCount);
  write_text(o.out, mix::emit_manifest(plan));
  if (o.schedule_total > 0) {
    std::string lines;
    for (const auto& id : mix::draw_schedule(plan, o.schedule_total, o.seed)) lines += id + "\n";
    write_text(o.schedule_out, lines);
  }
  return 0;
}

RasterImage load_image(const fs::path& p) {
  try {
    return imgio::read_image(imgio::read_file(p));
  } catch (const Error& e) {
    rethrow_with_context(e, p.string());
  }
}

int cmd_match(const Options& o) {
  sgm::MatchParams params = o.match;
  params.lr_check = !o.no_lr;
  const DisparityMap d = sgm::match(load_image(o.left), load_image(o.right), params);
  imgio::write_file(o.out, imgio::write_pfm(d));
  return 0;
}

int cmd_fill(const Options& o) {
  FillConfig cfg;
  cfg.strategy = parse_fill_strategy(o.strategy);
  cfg.background_pool = o.bg;
  cfg.external_cmd = o.cmd;
  cfg.seed = o.seed;
  cfg.validate();
  const RasterImage img = load_image(o.input);
  int w = 0, h = 0;
  PixelMask mask;
  try {
    mask = imgio::read_mask_png(imgio::read_file(o.mask), w, h);
  } catch (const Error& e) {
    rethrow_with_context(e, o.mask);
  }
  if (w != img.width() || h != img.height())
    throw Error(ErrorCode::DimensionMismatch, o.mask + " does not match " + o.input);
  Rng rng(o.seed);
  const FillOutcome filled = fill_holes(img, mask, cfg, rng, fs::temp_directory_path() / "stereoforge");
  imgio::write_file(o.out, imgio::write_image(filled.image));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-stereo synthesis, disparity evaluation and dataset mixing"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "Synthesize stereo pairs from an image/depth list");
  synth->add_option("--list", o.list, "List file, one 'image depth' pair per line")->required();
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--config", o.config, "key = value config file");
  synth->add_option("--workers", o.workers, "Worker threads (overrides the config)");

  auto* stats = app.add_subcommand("stats", "Disparity histogram over a set of maps");
  stats->add_option("--disp-glob", o.disp_glob, "Glob of PFM/PNG16 disparity maps")->required();
  stats->add_option("--svg", o.svg, "Histogram SVG output")->required();
  stats->add_option("--bin-width", o.bin_width, "Histogram bin width in px");
  stats->add_option("--json", o.stats_out, "Summary JSON output (default stdout)");

  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred", o.pred, "Prediction directory")->required();
  eval->add_option("--gt", o.gt, "Ground-truth directory")->required();
  eval->add_option("--metric", o.metric, "epe, bad1, bad2 or d1")
      ->check(CLI::IsMember({"epe", "bad1", "bad2", "d1"}));
  eval->add_flag("--half-res", o.half_res, "Evaluate at half resolution");
  eval->add_flag("--kitti-d1", o.kitti_d1, "D1 also requires a 5% relative error");
  eval->add_option("--model-id", o.model_id);
  eval->add_option("--dataset-id", o.dataset_id);

  auto* rank = app.add_subcommand("rank", "Rank training datasets by mean cross-domain error");
  rank->add_option("--records", o.records, "Evaluation records (JSON lines)")->required();
  rank->add_option("--catalog", o.catalog, "Dataset catalog JSON");
  rank->add_option("--out", o.out, "Ranking JSON output (default stdout)");

  auto* mixplan = app.add_subcommand("mixplan", "Build the top-k mixture manifest");
  mixplan->add_option("--ranking", o.ranking, "Ranking JSON")->required();
  mixplan->add_option("--k", o.k, "Number of datasets")->required();
  mixplan->add_flag("--uniform", o.uniform, "Uniform instead of sample-count weights");
  mixplan->add_option("--out", o.out, "Manifest output (default stdout)");
  mixplan->add_option("--schedule-total", o.schedule_total, "Also draw a schedule of this many samples");
  mixplan->add_option("--schedule-out", o.schedule_out, "Schedule output (default stdout)");
  mixplan->add_option("--seed", o.seed, "Schedule seed");

  auto* match = app.add_subcommand("match", "Census + SGM disparity for a rectified pair");
  match->add_option("--left", o.left)->required();
  match->add_option("--right", o.right)->required();
  match->add_option("--dmax", o.match.d_max)->required();
  match->add_option("--out", o.out, "Output PFM")->required();
  match->add_option("--p1", o.match.p1);
  match->add_option("--p2", o.match.p2);
  match->add_option("--paths", o.match.paths)->check(CLI::IsMember({4, 8}));
  match->add_option("--census-window", o.match.census_window);
  match->add_flag("--no-lr", o.no_lr, "Skip the left-right check");
  match->add_flag("--subpixel", o.match.subpixel, "Parabola sub-pixel refinement");

  auto* fill = app.add_subcommand("fill", "Fill masked pixels (mask 255 = hole)");
  fill->add_option("--strategy", o.strategy, "random_texture, background_extend or external")->required();
  fill->add_option("--input", o.input)->required();
  fill->add_option("--mask", o.mask)->required();
  fill->add_option("--out", o.out)->required();
  fill->add_option("--bg", o.bg, "Background images for random_texture");
  fill->add_option("--cmd", o.cmd, "External command with {input} {mask} {output}");
  fill->add_option("--seed", o.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(o);
    if (stats->parsed()) return cmd_stats(o);
    if (eval->parsed()) return cmd_eval(o);
    if (rank->parsed()) return cmd_rank(o);
    if (mixplan->parsed()) return cmd_mixplan(o);
    if (match->parsed()) return cmd_match(o);
    if (fill->parsed()) return cmd_fill(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
