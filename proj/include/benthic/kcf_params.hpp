#pragma once

#include <string>
#include <string_view>

namespace benthic {

enum class FeatureMode { kGrayscale, kHog };
enum class KernelType { kGaussian, kLinear };

std::string_view to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(std::string_view name);
std::string_view to_string(KernelType kernel);
KernelType kernel_type_from_string(std::string_view name);

struct KcfParams {
  double lambda = 1e-4;
  double kernel_sigma = 0.5;
  double output_sigma_factor = 0.1;
  double padding = 2.5;
  double learning_rate = 0.02;
  int cell_size = 4;
  FeatureMode feature_mode = FeatureMode::kHog;
  KernelType kernel = KernelType::kGaussian;
  // Parabolic refinement of the response peak to sub-cell precision.
  bool subpixel = true;

  static KcfParams defaults(FeatureMode mode) {
    KcfParams p;
    p.feature_mode = mode;
    p.cell_size = mode == FeatureMode::kHog ? 4 : 1;
    return p;
  }

  // Throws std::invalid_argument naming the first violated bound.
  void validate() const;
};

}  // namespace benthic
