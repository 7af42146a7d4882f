#include "sfdet/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <initializer_list>
#include <sstream>

#include <fmt/core.h>

#include "sfdet/error.hpp"

namespace sfdet {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* ctx) {
  if (!j.is_object()) throw Error(std::string(ctx) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) throw Error(std::string(ctx) + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out, const char* ctx) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(std::string(ctx) + ": bad value for '" + key + "'");
  }
}

Json rounded(const std::vector<double>& values) {
  Json arr = Json::array();
  for (double v : values) arr.push_back(round6(v));
  return arr;
}

}  // namespace

double round6(double v) {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no "-0"
}

std::string fixed6(double v) { return fmt::format("{:.6f}", round6(v)); }

Json to_json(const AnchorSpec& spec) {
  return Json{{"base_sizes", spec.base_sizes},
              {"aspect_ratios", spec.aspect_ratios},
              {"strides", spec.strides},
              {"scales_per_size", spec.scales_per_size}};
}

AnchorSpec anchor_spec_from_json(const Json& j, AnchorSpec defaults) {
  constexpr const char* ctx = "anchor spec";
  check_keys(j, {"base_sizes", "aspect_ratios", "strides", "scales_per_size"}, ctx);
  read_opt(j, "base_sizes", defaults.base_sizes, ctx);
  read_opt(j, "aspect_ratios", defaults.aspect_ratios, ctx);
  read_opt(j, "strides", defaults.strides, ctx);
  read_opt(j, "scales_per_size", defaults.scales_per_size, ctx);
  return defaults;
}

Json to_json(const Kernel& k) {
  return Json{{"kind", std::string(to_string(k.kind))}, {"size", k.size}, {"weights", rounded(k.weights)}};
}

Kernel kernel_from_json(const Json& j) {
  constexpr const char* ctx = "kernel";
  check_keys(j, {"kind", "size", "weights"}, ctx);
  std::string kind = "unsharp";
  int size = 5;
  read_opt(j, "kind", kind, ctx);
  read_opt(j, "size", size, ctx);
  if (j.contains("weights")) {
    std::vector<double> weights;
    read_opt(j, "weights", weights, ctx);
    return kernel_from_weights(parse_kernel_kind(kind), size, std::move(weights));
  }
  return make_kernel(parse_kernel_kind(kind), size);
}

Json to_json(const PipelineConfig& cfg) {
  return Json{{"k_pre", cfg.k_pre},
              {"k_post", cfg.k_post},
              {"nms_iou_threshold", cfg.nms_iou_threshold},
              {"hpf_enabled", cfg.hpf_enabled},
              {"hpf_kernel", to_json(cfg.hpf_kernel)}};
}

PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig defaults) {
  constexpr const char* ctx = "pipeline";
  check_keys(j, {"k_pre", "k_post", "nms_iou_threshold", "hpf_enabled", "hpf_kernel"}, ctx);
  read_opt(j, "k_pre", defaults.k_pre, ctx);
  read_opt(j, "k_post", defaults.k_post, ctx);
  read_opt(j, "nms_iou_threshold", defaults.nms_iou_threshold, ctx);
  read_opt(j, "hpf_enabled", defaults.hpf_enabled, ctx);
  if (j.contains("hpf_kernel")) defaults.hpf_kernel = kernel_from_json(j.at("hpf_kernel"));
  defaults.validate();
  return defaults;
}

Json to_json(const ModelConfig& m) {
  return Json{{"name", m.name},
              {"backbone_gflops", m.backbone_gflops},
              {"hpf_kernel_side", m.hpf_kernel_side},
              {"neck",
               {{"in_channels", m.neck.in_channels},
                {"out_channels", m.neck.out_channels},
                {"input_image_side", m.neck.input_image_side},
                {"levels", m.neck.levels},
                {"extra_level_via_pool", m.neck.extra_level_via_pool}}},
              {"rpn",
               {{"channels", m.rpn.channels},
                {"anchors_per_location", m.rpn.anchors_per_location},
                {"reg_params_per_anchor", m.rpn.reg_params_per_anchor},
                {"levels", m.rpn.levels}}},
              {"roi_head",
               {{"num_rois", m.roi_head.num_rois},
                {"roi_feature_side", m.roi_head.roi_feature_side},
                {"roi_channels", m.roi_head.roi_channels},
                {"fc_dims", m.roi_head.fc_dims},
                {"num_classes", m.roi_head.num_classes},
                {"reg_params", m.roi_head.reg_params},
                {"background_class", m.roi_head.background_class}}}};
}

ModelConfig model_config_from_json(const Json& j) {
  constexpr const char* ctx = "model config";
  check_keys(j, {"name", "backbone_gflops", "hpf_kernel_side", "neck", "rpn", "roi_head"}, ctx);
  if (!j.contains("backbone_gflops")) throw Error("model config: 'backbone_gflops' is required");
  ModelConfig m;
  read_opt(j, "name", m.name, ctx);
  read_opt(j, "backbone_gflops", m.backbone_gflops, ctx);
  read_opt(j, "hpf_kernel_side", m.hpf_kernel_side, ctx);
  if (j.contains("neck")) {
    const Json& n = j.at("neck");
    check_keys(n, {"in_channels", "out_channels", "input_image_side", "levels", "extra_level_via_pool"}, "neck");
    read_opt(n, "in_channels", m.neck.in_channels, "neck");
    read_opt(n, "out_channels", m.neck.out_channels, "neck");
    read_opt(n, "input_image_side", m.neck.input_image_side, "neck");
    read_opt(n, "levels", m.neck.levels, "neck");
    read_opt(n, "extra_level_via_pool", m.neck.extra_level_via_pool, "neck");
  }
  if (j.contains("rpn")) {
    const Json& r = j.at("rpn");
    check_keys(r, {"channels", "anchors_per_location", "reg_params_per_anchor", "levels"}, "rpn");
    read_opt(r, "channels", m.rpn.channels, "rpn");
    read_opt(r, "anchors_per_location", m.rpn.anchors_per_location, "rpn");
    read_opt(r, "reg_params_per_anchor", m.rpn.reg_params_per_anchor, "rpn");
    read_opt(r, "levels", m.rpn.levels, "rpn");
  }
  if (j.contains("roi_head")) {
    const Json& r = j.at("roi_head");
    check_keys(r,
               {"num_rois", "roi_feature_side", "roi_channels", "fc_dims", "num_classes", "reg_params",
                "background_class"},
               "roi_head");
    read_opt(r, "num_rois", m.roi_head.num_rois, "roi_head");
    read_opt(r, "roi_feature_side", m.roi_head.roi_feature_side, "roi_head");
    read_opt(r, "roi_channels", m.roi_head.roi_channels, "roi_head");
    read_opt(r, "fc_dims", m.roi_head.fc_dims, "roi_head");
    read_opt(r, "num_classes", m.roi_head.num_classes, "roi_head");
    read_opt(r, "reg_params", m.roi_head.reg_params, "roi_head");
    read_opt(r, "background_class", m.roi_head.background_class, "roi_head");
  }
  if (!(m.backbone_gflops >= 0.0)) throw Error("model config: backbone_gflops must be non-negative");
  if (m.hpf_kernel_side <= 0 || m.hpf_kernel_side % 2 == 0) throw Error("model config: hpf_kernel_side must be odd");
  m.neck.validate();
  m.rpn.validate();
  m.roi_head.validate();
  return m;
}

Json to_json(const CostBreakdown& c) {
  return Json{{"backbone", round6(c.backbone_gflops)}, {"neck", round6(c.neck_gflops)},
              {"rpn", round6(c.rpn_gflops)},           {"high_pass_filter", round6(c.filter_gflops)},
              {"roi_head", round6(c.roi_head_gflops)}, {"total", round6(c.total_gflops)}};
}

Json to_json(const CoverageReport& r) {
  Json levels = Json::array();
  for (const LevelCoverage& l : r.levels) {
    levels.push_back(Json{{"level", l.level},
                          {"stride", round6(l.stride)},
                          {"base_size", round6(l.base_size)},
                          {"matched_count", l.matched_count},
                          {"matched_fraction", round6(l.matched_fraction)}});
  }
  return Json{{"object_count", r.object_count},
              {"levels", levels},
              {"unmatched_count", r.unmatched_count},
              {"unmatched_fraction", round6(r.unmatched_fraction)}};
}

Json to_json(const std::vector<Proposal>& props) {
  Json arr = Json::array();
  for (const Proposal& p : props) {
    arr.push_back(Json{{"cx", round6(p.box.cx)},
                       {"cy", round6(p.box.cy)},
                       {"w", round6(p.box.w)},
                       {"h", round6(p.box.h)},
                       {"theta", round6(p.box.theta)},
                       {"score", round6(p.score)},
                       {"anchor", {p.source_anchor.i, p.source_anchor.j, p.source_anchor.k}}});
  }
  return arr;
}

Json to_json(const std::vector<BudgetRow>& rows) {
  Json arr = Json::array();
  for (const BudgetRow& r : rows) {
    arr.push_back(Json{{"budget", r.budget},
                       {"proposal_count", r.proposal_count},
                       {"mean_pairwise_iou", round6(r.mean_pairwise_iou)}});
  }
  return arr;
}

Json to_json(const std::vector<TileWindow>& windows) {
  Json arr = Json::array();
  for (const TileWindow& w : windows) {
    arr.push_back(Json{{"x_offset", round6(w.x_offset)},
                       {"y_offset", round6(w.y_offset)},
                       {"width", round6(w.width)},
                       {"height", round6(w.height)}});
  }
  return arr;
}

Json to_json(const SizeHistogram& h) {
  return Json{{"bin_edges", rounded(h.bin_edges)},
              {"counts", h.counts},
              {"underflow", h.underflow},
              {"overflow", h.overflow}};
}

std::string coverage_csv(const CoverageReport& r) {
  std::string out = "level,matched_count,matched_fraction\n";
  for (const LevelCoverage& l : r.levels) {
    out += fmt::format("{},{},{}\n", l.level, l.matched_count, fixed6(l.matched_fraction));
  }
  out += fmt::format("unmatched,{},{}\n", r.unmatched_count, fixed6(r.unmatched_fraction));
  return out;
}

std::string proposals_csv(const std::vector<Proposal>& props) {
  std::string out = "cx,cy,w,h,theta,score\n";
  for (const Proposal& p : props) {
    out += fmt::format("{},{},{},{},{},{}\n", fixed6(p.box.cx), fixed6(p.box.cy), fixed6(p.box.w), fixed6(p.box.h),
                       fixed6(p.box.theta), fixed6(p.score));
  }
  return out;
}

std::string budget_csv(const std::vector<BudgetRow>& rows) {
  std::string out = "budget,proposal_count,mean_pairwise_iou\n";
  for (const BudgetRow& r : rows) out += fmt::format("{},{},{}\n", r.budget, r.proposal_count, fixed6(r.mean_pairwise_iou));
  return out;
}

std::string tiles_csv(const std::vector<TileWindow>& windows) {
  std::string out = "x_offset,y_offset,width,height\n";
  for (const TileWindow& w : windows) {
    out += fmt::format("{},{},{},{}\n", fixed6(w.x_offset), fixed6(w.y_offset), fixed6(w.width), fixed6(w.height));
  }
  return out;
}

std::string histogram_csv(const SizeHistogram& h) {
  std::string out = "bin_low,bin_high,count\n";
  out += fmt::format("-inf,{},{}\n", fixed6(h.bin_edges.front()), h.underflow);
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out += fmt::format("{},{},{}\n", fixed6(h.bin_edges[b]), fixed6(h.bin_edges[b + 1]), h.counts[b]);
  }
  out += fmt::format("{},inf,{}\n", fixed6(h.bin_edges.back()), h.overflow);
  return out;
}

std::vector<Proposal> parse_proposals_csv(const std::string& text) {
  std::vector<Proposal> out;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("cx", 0) == 0) continue;
    double v[6];
    std::size_t start = 0;
    for (int n = 0; n < 6; ++n) {
      const std::size_t end = n < 5 ? line.find(',', start) : line.size();
      if (end == std::string::npos) throw Error("proposal CSV line " + std::to_string(line_no) + ": expected 6 fields");
      const char* first = line.data() + start;
      const char* last = line.data() + end;
      const auto [ptr, ec] = std::from_chars(first, last, v[n]);
      if (ec != std::errc() || ptr != last) {
        throw Error("proposal CSV line " + std::to_string(line_no) + ": bad number");
      }
      start = end + 1;
    }
    if (v[2] < 0.0 || v[3] < 0.0) throw Error("proposal CSV line " + std::to_string(line_no) + ": negative extent");
    if (!(v[5] >= 0.0 && v[5] <= 1.0)) {
      throw Error("proposal CSV line " + std::to_string(line_no) + ": score outside [0, 1]");
    }
    out.push_back({make_obox(v[0], v[1], v[2], v[3], v[4]), v[5], {}});
  }
  return out;
}

std::string cost_table(const std::string& model, const CostBreakdown& baseline, const CostBreakdown& simplified) {
  const auto row = [](const std::string& name, const CostBreakdown& c, bool with_filter) {
    return fmt::format("{:<28} {:>10.1f} {:>8.1f} {:>8.1f} {:>18} {:>9.1f} {:>9.1f}\n", name, c.backbone_gflops,
                       c.neck_gflops, c.rpn_gflops, with_filter ? fmt::format("{:.3f}", c.filter_gflops) : "-",
                       c.roi_head_gflops, c.total_gflops);
  };
  std::string out = fmt::format("{:<28} {:>10} {:>8} {:>8} {:>18} {:>9} {:>9}\n", "Model (GFLOPs)", "Backbone",
                                "Neck", "RPN", "High-pass filter", "RoI Head", "Total");
  out += row(model, baseline, baseline.filter_gflops > 0.0);
  out += row("Ours - " + model, simplified, simplified.filter_gflops > 0.0);
  out += fmt::format("reduction: neck {:.1f}%  rpn {:.1f}%  total {:.1f}%\n",
                     100.0 * (1.0 - simplified.neck_gflops / baseline.neck_gflops),
                     100.0 * (1.0 - simplified.rpn_gflops / baseline.rpn_gflops),
                     100.0 * reduction_fraction(baseline, simplified));
  return out;
}

}  // namespace sfdet
