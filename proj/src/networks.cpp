#include "eoren/networks.hpp"

#include <cmath>
#include <random>
#include <string>

#include "byte_stream.hpp"
#include "eoren/error.hpp"
#include "eoren/io_util.hpp"

namespace eoren {
namespace {

// Uniform on [lo, hi) from the top 53 bits; independent of the standard
// library's distribution implementation.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

}  // namespace

SirenParams siren_init(const std::vector<int>& layer_dims, double omega0,
                       std::uint64_t seed) {
  if (layer_dims.size() < 3) {
    throw ConfigError("layer_dims needs input, at least one hidden layer and output");
  }
  if (layer_dims.front() != 2) {
    throw ConfigError("layer_dims must start with 2");
  }
  for (int d : layer_dims) {
    if (d < 1) throw ConfigError("layer widths must be >= 1");
  }
  if (!(omega0 > 0.0)) {
    throw ConfigError("omega0 must be positive");
  }

  std::mt19937_64 rng(seed);
  SirenParams params;
  params.omega0 = omega0;
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const int fan_in = layer_dims[i];
    const int fan_out = layer_dims[i + 1];
    const double w_bound =
        i == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / omega0;
    const double b_bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd(fan_out)};
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        layer.weight(r, c) = uniform(rng, -w_bound, w_bound);
      }
    }
    for (int r = 0; r < fan_out; ++r) {
      layer.bias[r] = uniform(rng, -b_bound, b_bound);
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

void ChannelTuner::validate() const {
  if (alpha.size() < 1 || alpha.size() != beta.size()) {
    throw ConfigError("tuner alpha/beta lengths must match and be >= 1");
  }
  if (!alpha.allFinite() || !beta.allFinite()) {
    throw ConfigError("tuner has non-finite entries");
  }
}

Eigen::MatrixXd ChannelTuner::apply(const Eigen::MatrixXd& values) const {
  if (values.rows() != alpha.size()) {
    throw ShapeError("tuner has " + std::to_string(alpha.size()) +
                     " channels, values have " + std::to_string(values.rows()));
  }
  Eigen::MatrixXd out = alpha.asDiagonal() * values;
  out.colwise() += beta;
  return out;
}

ChannelTuner tuner_init(int channels) {
  if (channels < 1) {
    throw ConfigError("tuner needs at least one channel");
  }
  return {Eigen::VectorXd::Ones(channels), Eigen::VectorXd::Zero(channels)};
}

void EorenModel::validate() const {
  edge.validate();
  tuner.validate();
  if (tuner.channels() != edge.output_dim()) {
    throw ShapeError("tuner channels " + std::to_string(tuner.channels()) +
                     " != edge output " + std::to_string(edge.output_dim()));
  }
}

Eigen::MatrixXd eoren_forward(const EorenModel& model, const Eigen::Matrix2Xd& coords) {
  model.validate();
  return model.tuner.apply(forward(model.edge, coords));
}

JacobianBatch eoren_forward_with_input_jacobian(const EorenModel& model,
                                                const Eigen::Matrix2Xd& coords) {
  model.validate();
  JacobianBatch g = forward_with_input_jacobian(model.edge, coords);
  g.values = model.tuner.apply(g.values);
  g.dx = model.tuner.alpha.asDiagonal() * g.dx;
  g.dy = model.tuner.alpha.asDiagonal() * g.dy;
  return g;
}

namespace {

struct ChannelFit {
  double alpha;
  double beta;
  bool degenerate;
};

ChannelFit fit_channel(const Eigen::MatrixXd& g, const Eigen::MatrixXd& f, int ch) {
  const auto gr = g.row(ch).array();
  const auto fr = f.row(ch).array();
  const double g_mean = gr.mean();
  const double f_mean = fr.mean();
  const double sxx = (gr - g_mean).square().sum();
  const double sxy = ((gr - g_mean) * (fr - f_mean)).sum();
  const double n = static_cast<double>(g.cols());
  const double scale = std::max(1.0, g_mean * g_mean);
  if (sxx / n <= 1e-24 * scale) {
    return {1.0, f_mean - g_mean, true};
  }
  const double alpha = sxy / sxx;
  return {alpha, f_mean - alpha * g_mean, false};
}

void check_fit_inputs(const Eigen::MatrixXd& g, const Eigen::MatrixXd& f) {
  if (g.rows() != f.rows() || g.cols() != f.cols()) {
    throw ShapeError("tuner fit: value and target shapes differ");
  }
  if (g.rows() < 1 || g.cols() < 2) {
    throw ConfigError("tuner fit needs at least one channel and two samples");
  }
}

}  // namespace

ChannelTuner closed_form_tuner(const Eigen::MatrixXd& g_values,
                               const Eigen::MatrixXd& targets) {
  check_fit_inputs(g_values, targets);
  ChannelTuner t{Eigen::VectorXd(g_values.rows()), Eigen::VectorXd(g_values.rows())};
  for (int ch = 0; ch < g_values.rows(); ++ch) {
    const ChannelFit fit = fit_channel(g_values, targets, ch);
    if (fit.degenerate) {
      throw DegenerateChannel(
          "channel " + std::to_string(ch) + " of the edge output has zero variance",
          ch);
    }
    t.alpha[ch] = fit.alpha;
    t.beta[ch] = fit.beta;
  }
  return t;
}

ChannelTuner closed_form_tuner_or_shift(const Eigen::MatrixXd& g_values,
                                        const Eigen::MatrixXd& targets) {
  check_fit_inputs(g_values, targets);
  ChannelTuner t{Eigen::VectorXd(g_values.rows()), Eigen::VectorXd(g_values.rows())};
  for (int ch = 0; ch < g_values.rows(); ++ch) {
    const ChannelFit fit = fit_channel(g_values, targets, ch);
    t.alpha[ch] = fit.alpha;
    t.beta[ch] = fit.beta;
  }
  return t;
}

namespace {
constexpr char kMagic[] = "EORENCKP";
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.edge.validate();
  if (ckpt.tuner) {
    ckpt.tuner->validate();
    if (ckpt.tuner->channels() != ckpt.edge.output_dim()) {
      throw ShapeError("checkpoint tuner does not match edge output");
    }
  }
  detail::ByteWriter w;
  w.raw(std::string_view(kMagic, 8));
  w.u32(kCheckpointVersion);
  const auto dims = ckpt.edge.layer_dims();
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) w.u32(static_cast<std::uint32_t>(d));
  w.f64(ckpt.edge.omega0);
  for (const auto& layer : ckpt.edge.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.f64(layer.weight(r, c));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) w.f64(layer.bias[r]);
  }
  w.u32(ckpt.tuner ? 1u : 0u);
  if (ckpt.tuner) {
    for (Eigen::Index c = 0; c < ckpt.tuner->alpha.size(); ++c) w.f64(ckpt.tuner->alpha[c]);
    for (Eigen::Index c = 0; c < ckpt.tuner->beta.size(); ++c) w.f64(ckpt.tuner->beta[c]);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  if (r.raw(8) != std::string_view(kMagic, 8)) {
    throw DecodeError("checkpoint: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DecodeError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t n_dims = r.u32();
  if (n_dims < 3 || n_dims > 64) {
    throw DecodeError("checkpoint: implausible layer count");
  }
  std::vector<int> dims(n_dims);
  for (auto& d : dims) {
    const std::uint32_t v = r.u32();
    if (v < 1 || v > (1u << 20)) throw DecodeError("checkpoint: implausible width");
    d = static_cast<int>(v);
  }

  Checkpoint ckpt;
  ckpt.edge.omega0 = r.f64();
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer{Eigen::MatrixXd(dims[i + 1], dims[i]), Eigen::VectorXd(dims[i + 1])};
    for (Eigen::Index row = 0; row < layer.weight.rows(); ++row) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(row, c) = r.f64();
    }
    for (Eigen::Index row = 0; row < layer.bias.size(); ++row) layer.bias[row] = r.f64();
    ckpt.edge.layers.push_back(std::move(layer));
  }
  const std::uint32_t has_tuner = r.u32();
  if (has_tuner > 1) throw DecodeError("checkpoint: bad tuner flag");
  if (has_tuner == 1) {
    const int c = dims.back();
    ChannelTuner t{Eigen::VectorXd(c), Eigen::VectorXd(c)};
    for (int i = 0; i < c; ++i) t.alpha[i] = r.f64();
    for (int i = 0; i < c; ++i) t.beta[i] = r.f64();
    ckpt.tuner = std::move(t);
  }
  if (r.remaining() != 0) {
    throw DecodeError("checkpoint: trailing bytes");
  }
  try {
    ckpt.edge.validate();
    if (ckpt.tuner) ckpt.tuner->validate();
  } catch (const ConfigError& e) {
    throw DecodeError(std::string("checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_binary_file(path));
}

}  // namespace eoren
