#include "benthic/kcf_params.hpp"

#include <cmath>
#include <stdexcept>

namespace benthic {

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::kHog ? "hog" : "grayscale";
}

FeatureMode feature_mode_from_string(std::string_view name) {
  if (name == "hog") return FeatureMode::kHog;
  if (name == "grayscale" || name == "gray") return FeatureMode::kGrayscale;
  throw std::invalid_argument("unknown feature mode: " + std::string(name));
}

std::string_view to_string(KernelType kernel) {
  return kernel == KernelType::kLinear ? "linear" : "gaussian";
}

KernelType kernel_type_from_string(std::string_view name) {
  if (name == "gaussian") return KernelType::kGaussian;
  if (name == "linear") return KernelType::kLinear;
  throw std::invalid_argument("unknown kernel: " + std::string(name));
}

void KcfParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("kcf: lambda must be >= 0");
  if (!(kernel_sigma > 0.0)) throw std::invalid_argument("kcf: kernel_sigma must be > 0");
  if (!(output_sigma_factor > 0.0)) {
    throw std::invalid_argument("kcf: output_sigma_factor must be > 0");
  }
  if (!(padding >= 1.0)) throw std::invalid_argument("kcf: padding must be >= 1");
  if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) {
    throw std::invalid_argument("kcf: learning_rate must be in [0, 1]");
  }
  if (cell_size < 1) throw std::invalid_argument("kcf: cell_size must be >= 1");
}

}  // namespace benthic
