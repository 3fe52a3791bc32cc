#pragma once

#include "tsfm/tensor.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsfm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigInvariantViolation : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct OddSpatialDim : Error {
  using Error::Error;
};
struct SkipShapeMismatch : Error {
  using Error::Error;
};
struct TokenCountMismatch : Error {
  using Error::Error;
};
struct DivisibilityError : Error {
  using Error::Error;
};

struct TransformerConfig {
  int layers = 12;
  int hidden = 768;
  int heads = 12;
  int mlp_ratio = 4;
  Index pos_tokens = 840;

  bool operator==(const TransformerConfig&) const = default;
};

/// Architectural hyperparameters of the U-shaped network.
/// Stage s runs at 1/2^s resolution with base_channels * 2^s channels.
struct ModelConfig {
  int in_channels = 1;
  int num_classes = 2;
  int num_stages = 3;
  int base_channels = 8;
  std::vector<int> blocks_per_stage = {1, 1, 1};
  TransformerConfig transformer;
  std::array<Index, 3> patch_size = {16, 16, 32};
  std::string preset_name;

  int channels_at(int stage) const { return base_channels << stage; }
  Index downsample_factor() const { return Index(1) << (num_stages - 1); }

  std::array<Index, 3> bottleneck_grid() const {
    const Index f = downsample_factor();
    return {patch_size[0] / f, patch_size[1] / f, patch_size[2] / f};
  }

  /// Throws ConfigInvariantViolation with a description of the first failure.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Named presets: "toy", "base", "full16b".
ModelConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Closed-form total parameter count; never allocates weights.
std::int64_t param_count(const ModelConfig& cfg);

/// Stable hash of the architecture (preset_name excluded); hex string.
std::string config_fingerprint(const ModelConfig& cfg);

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& json_text);

enum class ParamKind {
  conv_weight,   // Kaiming-normal, LeakyReLU gain
  linear_weight, // truncated normal, std 0.02
  pos_embed,     // truncated normal, std 0.02
  gamma,         // ones
  zeros,         // biases, betas, and the zero-initialized output projection
};

/// Enumerates every weight of the architecture in forward order.
/// build() allocates from this walk; checkpoints serialize in this order.
void for_each_param(const ModelConfig& cfg,
                    const std::function<void(const std::string&, const Shape&, ParamKind)>& fn);

inline bool is_transformer_param(const std::string& name) {
  return name.rfind("bot.tr.", 0) == 0;
}
inline bool is_head_param(const std::string& name) { return name.rfind("head.", 0) == 0; }
inline bool is_cnn_param(const std::string& name) {
  return !is_transformer_param(name) && !is_head_param(name);
}

}  // namespace tsfm
