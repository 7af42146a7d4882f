#pragma once

#include <string>
#include <vector>

namespace sfdet {

// All costs count one multiply-accumulate as one FLOP and are reported in
// GFLOPs. Biases, normalization, activations, upsampling and NMS are not
// counted.

struct NeckConfig {
  std::vector<int> in_channels{256, 512, 1024, 2048};  // backbone stages feeding laterals, finest first
  int out_channels = 256;
  int input_image_side = 1024;
  std::vector<int> levels{4, 8, 16, 32, 64};  // output strides, finest first
  bool extra_level_via_pool = true;

  void validate() const;
};

struct RpnConfig {
  int channels = 256;
  int anchors_per_location = 3;
  int reg_params_per_anchor = 6;
  std::vector<int> levels{4, 8, 16, 32, 64};

  void validate() const;
};

struct RoiHeadConfig {
  int num_rois = 1000;
  int roi_feature_side = 7;
  int roi_channels = 256;
  std::vector<int> fc_dims{1024, 1024};
  int num_classes = 16;
  int reg_params = 5;                // class-agnostic box regression
  bool background_class = true;      // classifier emits num_classes + 1 logits

  void validate() const;
};

struct CostBreakdown {
  double backbone_gflops = 0.0;
  double neck_gflops = 0.0;
  double rpn_gflops = 0.0;
  double filter_gflops = 0.0;
  double roi_head_gflops = 0.0;
  double total_gflops = 0.0;
};

double conv_cost(int kernel_side, int in_ch, int out_ch, int out_h, int out_w);

/// Lateral 1x1 convs for every stage on the top-down path of a kept level,
/// plus 3x3 output convs on kept levels. Pooled extra levels are free but
/// need the top lateral output.
double neck_cost(const NeckConfig& cfg, const std::vector<int>& keep_levels);

/// Shared 3x3 conv plus 1x1 classification and regression convs per level.
double rpn_cost(const RpnConfig& cfg, int input_image_side);

double filter_cost(int map_h, int map_w, int channels, int kernel_side);

/// Flatten -> fc chain -> classification and regression layers, per RoI.
double roi_head_cost(const RoiHeadConfig& cfg);

inline constexpr int kSimplifiedStride = 8;
inline constexpr int kSimplifiedAnchorFactor = 5;

/// Baseline or simplified (single stride-8 level, anchors x5) breakdown.
/// With `hpf`, the score-map filter on the RPN output is costed too.
CostBreakdown detector_cost(double backbone_gflops, const NeckConfig& neck, const RpnConfig& rpn,
                            const RoiHeadConfig& roi, bool simplified, bool hpf, int hpf_kernel_side = 5);

double reduction_fraction(const CostBreakdown& baseline, const CostBreakdown& simplified);

/// A named detector: backbone constant plus component configs.
struct ModelConfig {
  std::string name;
  double backbone_gflops = 0.0;
  NeckConfig neck;
  RpnConfig rpn;
  RoiHeadConfig roi_head;
  int hpf_kernel_side = 5;
};

/// Oriented R-CNN (R50), LSKNet-T and LSKNet-S presets.
std::vector<ModelConfig> bundled_models();

}  // namespace sfdet
