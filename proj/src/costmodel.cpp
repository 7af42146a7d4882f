#include "sfdet/costmodel.hpp"

#include <algorithm>
#include <cmath>

#include "sfdet/error.hpp"

namespace sfdet {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

void require_strides(const std::vector<int>& levels, const char* what) {
  if (levels.empty()) throw Error(std::string(what) + ": no levels");
  for (std::size_t n = 0; n < levels.size(); ++n) {
    if (!is_power_of_two(levels[n])) throw Error(std::string(what) + ": strides must be powers of 2");
    if (n > 0 && levels[n] <= levels[n - 1]) throw Error(std::string(what) + ": strides must ascend");
  }
}

int side_at(int input_side, int stride) { return (input_side + stride - 1) / stride; }

}  // namespace

void NeckConfig::validate() const {
  require_strides(levels, "neck");
  if (in_channels.empty() || in_channels.size() > levels.size()) {
    throw Error("neck: need one lateral input per backbone stage, at most one per level");
  }
  if (std::any_of(in_channels.begin(), in_channels.end(), [](int c) { return c <= 0; }) || out_channels <= 0 ||
      input_image_side <= 0) {
    throw Error("neck: channel counts and input side must be positive");
  }
}

void RpnConfig::validate() const {
  require_strides(levels, "rpn");
  if (channels <= 0 || anchors_per_location <= 0 || reg_params_per_anchor <= 0) {
    throw Error("rpn: counts must be positive");
  }
}

void RoiHeadConfig::validate() const {
  if (num_rois <= 0 || roi_feature_side <= 0 || roi_channels <= 0 || num_classes <= 0 || reg_params <= 0) {
    throw Error("roi head: counts must be positive");
  }
  if (fc_dims.empty() || std::any_of(fc_dims.begin(), fc_dims.end(), [](int d) { return d <= 0; })) {
    throw Error("roi head: fc dims must be non-empty and positive");
  }
}

double conv_cost(int kernel_side, int in_ch, int out_ch, int out_h, int out_w) {
  if (kernel_side <= 0 || in_ch <= 0 || out_ch <= 0 || out_h <= 0 || out_w <= 0) {
    throw Error("conv_cost arguments must be positive");
  }
  return static_cast<double>(kernel_side) * kernel_side * in_ch * out_ch * out_h * out_w / 1e9;
}

double neck_cost(const NeckConfig& cfg, const std::vector<int>& keep_levels) {
  cfg.validate();
  if (keep_levels.empty()) throw Error("neck_cost: keep_levels is empty");

  const std::size_t laterals = cfg.in_channels.size();
  std::vector<bool> keep(cfg.levels.size(), false);
  for (int s : keep_levels) {
    const auto it = std::find(cfg.levels.begin(), cfg.levels.end(), s);
    if (it == cfg.levels.end()) throw Error("neck_cost: stride " + std::to_string(s) + " is not a neck level");
    keep[static_cast<std::size_t>(it - cfg.levels.begin())] = true;
  }

  // Lowest lateral whose output is needed; everything above it feeds the
  // top-down sum.
  std::size_t first_lateral = laterals;
  bool need_top_output = false;
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    if (!keep[l]) continue;
    if (l < laterals) {
      first_lateral = std::min(first_lateral, l);
    } else {
      first_lateral = std::min(first_lateral, laterals - 1);
      if (cfg.extra_level_via_pool) need_top_output = true;
    }
  }

  double total = 0.0;
  for (std::size_t l = first_lateral; l < laterals; ++l) {
    const int side = side_at(cfg.input_image_side, cfg.levels[l]);
    total += conv_cost(1, cfg.in_channels[l], cfg.out_channels, side, side);
  }
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    const int side = side_at(cfg.input_image_side, cfg.levels[l]);
    if (l < laterals) {
      if (keep[l] || (need_top_output && l == laterals - 1)) {
        total += conv_cost(3, cfg.out_channels, cfg.out_channels, side, side);
      }
    } else if (!cfg.extra_level_via_pool) {
      // Strided 3x3 conv per extra level; each one feeds the next.
      const bool needed =
          std::any_of(keep.begin() + static_cast<std::ptrdiff_t>(l), keep.end(), [](bool k) { return k; });
      if (needed) total += conv_cost(3, cfg.out_channels, cfg.out_channels, side, side);
    }
  }
  return total;
}

double rpn_cost(const RpnConfig& cfg, int input_image_side) {
  cfg.validate();
  if (input_image_side <= 0) throw Error("rpn_cost: input side must be positive");
  double total = 0.0;
  for (int stride : cfg.levels) {
    const int side = side_at(input_image_side, stride);
    total += conv_cost(3, cfg.channels, cfg.channels, side, side);
    total += conv_cost(1, cfg.channels, cfg.anchors_per_location, side, side);
    total += conv_cost(1, cfg.channels, cfg.anchors_per_location * cfg.reg_params_per_anchor, side, side);
  }
  return total;
}

double filter_cost(int map_h, int map_w, int channels, int kernel_side) {
  if (map_h <= 0 || map_w <= 0 || channels <= 0 || kernel_side <= 0) {
    throw Error("filter_cost arguments must be positive");
  }
  return static_cast<double>(kernel_side) * kernel_side * map_h * map_w * channels / 1e9;
}

double roi_head_cost(const RoiHeadConfig& cfg) {
  cfg.validate();
  double per_roi = 0.0;
  double width = static_cast<double>(cfg.roi_feature_side) * cfg.roi_feature_side * cfg.roi_channels;
  for (int d : cfg.fc_dims) {
    per_roi += width * d;
    width = d;
  }
  const int cls_outputs = cfg.num_classes + (cfg.background_class ? 1 : 0);
  per_roi += width * cls_outputs + width * cfg.reg_params;
  return per_roi * cfg.num_rois / 1e9;
}

CostBreakdown detector_cost(double backbone_gflops, const NeckConfig& neck, const RpnConfig& rpn,
                            const RoiHeadConfig& roi, bool simplified, bool hpf, int hpf_kernel_side) {
  if (!(backbone_gflops >= 0.0)) throw Error("backbone cost must be non-negative");
  CostBreakdown out;
  out.backbone_gflops = backbone_gflops;

  RpnConfig rpn_used = rpn;
  if (simplified) {
    out.neck_gflops = neck_cost(neck, {kSimplifiedStride});
    rpn_used.levels = {kSimplifiedStride};
    rpn_used.anchors_per_location = rpn.anchors_per_location * kSimplifiedAnchorFactor;
  } else {
    out.neck_gflops = neck_cost(neck, neck.levels);
  }
  out.rpn_gflops = rpn_cost(rpn_used, neck.input_image_side);
  if (hpf) {
    for (int stride : rpn_used.levels) {
      const int side = side_at(neck.input_image_side, stride);
      out.filter_gflops += filter_cost(side, side, rpn_used.anchors_per_location, hpf_kernel_side);
    }
  }
  out.roi_head_gflops = roi_head_cost(roi);
  out.total_gflops =
      out.backbone_gflops + out.neck_gflops + out.rpn_gflops + out.filter_gflops + out.roi_head_gflops;
  return out;
}

double reduction_fraction(const CostBreakdown& baseline, const CostBreakdown& simplified) {
  if (!(baseline.total_gflops > 0.0)) throw Error("baseline total must be positive");
  return 1.0 - simplified.total_gflops / baseline.total_gflops;
}

std::vector<ModelConfig> bundled_models() {
  ModelConfig orcnn;
  orcnn.name = "oriented-rcnn";
  orcnn.backbone_gflops = 86.1;
  orcnn.neck.in_channels = {256, 512, 1024, 2048};

  ModelConfig lsk_t;
  lsk_t.name = "lsknet-t";
  lsk_t.backbone_gflops = 19.0;
  lsk_t.neck.in_channels = {32, 64, 160, 256};

  ModelConfig lsk_s;
  lsk_s.name = "lsknet-s";
  lsk_s.backbone_gflops = 54.3;
  lsk_s.neck.in_channels = {64, 128, 320, 512};

  return {orcnn, lsk_t, lsk_s};
}

}  // namespace sfdet
