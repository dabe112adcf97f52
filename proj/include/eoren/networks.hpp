#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "eoren/siren.hpp"

namespace eoren {

/// SIREN initialization, deterministic in `seed`:
///   first layer weights  U(-1/fan_in, 1/fan_in)
///   later layer weights  U(-sqrt(6/fan_in)/omega0, sqrt(6/fan_in)/omega0)
///   biases               U(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// `layer_dims` must start with 2 and have at least three entries.
SirenParams siren_init(const std::vector<int>& layer_dims, double omega0,
                       std::uint64_t seed);

/// Per-channel affine map h(v) = alpha * v + beta.
struct ChannelTuner {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  int channels() const noexcept { return static_cast<int>(alpha.size()); }
  void validate() const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& values) const;

  friend bool operator==(const ChannelTuner& a, const ChannelTuner& b) {
    return a.alpha.size() == b.alpha.size() && a.beta.size() == b.beta.size() &&
           a.alpha == b.alpha && a.beta == b.beta;
  }
};

/// Identity tuner: alpha = 1, beta = 0.
ChannelTuner tuner_init(int channels);

/// Edge-oriented network g followed by the channel tuner h.
struct EorenModel {
  SirenParams edge;
  ChannelTuner tuner;

  void validate() const;
  friend bool operator==(const EorenModel&, const EorenModel&) = default;
};

Eigen::MatrixXd eoren_forward(const EorenModel& model, const Eigen::Matrix2Xd& coords);

/// Values and input-Jacobian of h(g(x)); the Jacobian is alpha * dg/dx per
/// channel.
JacobianBatch eoren_forward_with_input_jacobian(const EorenModel& model,
                                                const Eigen::Matrix2Xd& coords);

/// Least-squares alpha, beta per channel minimizing sum (alpha g + beta - f)^2.
/// Throws DegenerateChannel when a channel of `g_values` has zero variance.
ChannelTuner closed_form_tuner(const Eigen::MatrixXd& g_values,
                               const Eigen::MatrixXd& targets);

/// Same fit, but degenerate channels fall back to alpha = 1,
/// beta = mean(f) - mean(g).
ChannelTuner closed_form_tuner_or_shift(const Eigen::MatrixXd& g_values,
                                        const Eigen::MatrixXd& targets);

/// Checkpoint layout (all integers uint32 LE, reals float64 LE):
///   "EORENCKP" magic, version, dim count, dims..., omega0,
///   per layer: weight row-major (out x in), bias,
///   tuner flag (0/1), then alpha[C], beta[C] when the flag is 1.
struct Checkpoint {
  SirenParams edge;
  std::optional<ChannelTuner> tuner;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eoren
