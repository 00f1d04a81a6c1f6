#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "stereoforge/error.hpp"
#include "stereoforge/imgio.hpp"
#include "stereoforge/pipeline.hpp"

namespace stereoforge::pipeline {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, key + ": expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<int>(d)) throw Error(ErrorCode::InvalidConfig, key + ": expected an integer");
  return static_cast<int>(d);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used, 0);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, key + ": expected an unsigned integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::InvalidConfig, key + ": expected a boolean, got '" + v + "'");
}

}  // namespace

void PipelineConfig::validate() const {
  synth.validate();
  if (min_width < 1 || min_height < 1)
    throw Error(ErrorCode::InvalidConfig, "minimum dimensions must be positive");
  if (crop_width < 1 || crop_height < 1)
    throw Error(ErrorCode::InvalidConfig, "crop dimensions must be positive");
  // Resized samples are at least min_width x min_height, so this keeps every crop in bounds.
  if (crop_width > min_width || crop_height > min_height)
    throw Error(ErrorCode::InvalidConfig, "crop must fit inside the minimum dimensions");
  if (workers < 1) throw Error(ErrorCode::InvalidConfig, "workers must be >= 1");
  if (!(hist_bin_width > 0.0)) throw Error(ErrorCode::InvalidConfig, "hist_bin_width must be > 0");
  fill.validate();
}

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"disp_min", [&](auto& k, auto& v) { cfg.synth.disp_min = to_double(k, v); }},
      {"disp_max", [&](auto& k, auto& v) { cfg.synth.disp_max = to_double(k, v); }},
      {"scale_mode", [&](auto&, auto& v) { cfg.synth.scale_mode = parse_scale_mode(v); }},
      {"fill_strategy", [&](auto&, auto& v) { cfg.fill.strategy = parse_fill_strategy(v); }},
      {"background_pool",
       [&](auto&, auto& v) {
         cfg.fill.background_pool.clear();
         std::istringstream in(v);
         std::string item;
         while (std::getline(in, item, ',')) {
           item = trim(item);
           if (item.empty()) continue;
           std::filesystem::path p(item);
           if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
           cfg.fill.background_pool.push_back(p.string());
         }
       }},
      {"external_cmd", [&](auto&, auto& v) { cfg.fill.external_cmd = v; }},
      {"min_width", [&](auto& k, auto& v) { cfg.min_width = to_int(k, v); }},
      {"min_height", [&](auto& k, auto& v) { cfg.min_height = to_int(k, v); }},
      {"crop_height", [&](auto& k, auto& v) { cfg.crop_height = to_int(k, v); }},
      {"crop_width", [&](auto& k, auto& v) { cfg.crop_width = to_int(k, v); }},
      {"workers", [&](auto& k, auto& v) { cfg.workers = to_int(k, v); }},
      {"global_seed", [&](auto& k, auto& v) { cfg.global_seed = to_u64(k, v); }},
      {"hist_bin_width", [&](auto& k, auto& v) { cfg.hist_bin_width = to_double(k, v); }},
      {"jitter", [&](auto& k, auto& v) { cfg.augment.jitter = to_bool(k, v); }},
      {"erase", [&](auto& k, auto& v) { cfg.augment.erase = to_bool(k, v); }},
      {"erase_probability", [&](auto& k, auto& v) { cfg.augment.erase_probability = to_double(k, v); }},
  };

  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  cfg.validate();
  return cfg;
}

void apply_env_overrides(PipelineConfig& cfg) {
  if (const char* seed = std::getenv(kSeedEnvVar); seed && *seed)
    cfg.global_seed = to_u64(kSeedEnvVar, seed);
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const auto bytes = imgio::read_file(path);
  PipelineConfig cfg;
  try {
    cfg = parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                       path.parent_path());
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
  apply_env_overrides(cfg);
  return cfg;
}

}  // namespace stereoforge::pipeline
