#include "eoren/siren.hpp"

#include <cmath>
#include <string>

#include "eoren/error.hpp"

namespace eoren {

std::vector<int> SirenParams::layer_dims() const {
  std::vector<int> dims;
  if (layers.empty()) return dims;
  dims.push_back(static_cast<int>(layers.front().weight.cols()));
  for (const auto& layer : layers) {
    dims.push_back(static_cast<int>(layer.weight.rows()));
  }
  return dims;
}

int SirenParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
}

int SirenParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
}

void SirenParams::validate() const {
  if (layers.size() < 2) {
    throw ConfigError("network needs at least one hidden layer");
  }
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) {
    throw ConfigError("omega0 must be positive");
  }
  if (input_dim() != 2) {
    throw ConfigError("network input must be 2-D coordinates, got " +
                      std::to_string(input_dim()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weight.rows() < 1 || l.bias.size() != l.weight.rows()) {
      throw ConfigError("layer " + std::to_string(i) + " bias does not match weight");
    }
    if (i > 0 && l.weight.cols() != layers[i - 1].weight.rows()) {
      throw ConfigError("layer " + std::to_string(i) + " input width " +
                        std::to_string(l.weight.cols()) + " != previous output " +
                        std::to_string(layers[i - 1].weight.rows()));
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw ConfigError("layer " + std::to_string(i) + " has non-finite entries");
    }
  }
}

ParameterGradients ParameterGradients::zeros_like(const SirenParams& params) {
  ParameterGradients g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

ParameterGradients& ParameterGradients::operator+=(const ParameterGradients& other) {
  if (other.layers.size() != layers.size()) {
    throw ShapeError("gradient layer counts differ");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += other.layers[i].weight;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

bool ParameterGradients::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

namespace {

void check_coords(const SirenParams& params, const Eigen::Matrix2Xd& coords) {
  params.validate();
  if (coords.cols() < 1) {
    throw ShapeError("coordinate batch is empty");
  }
}

}  // namespace

ForwardTrace::ForwardTrace(const SirenParams& params,
                           const Eigen::Matrix2Xd& coords, bool with_tangents)
    : with_tangents_(with_tangents),
      batch_(coords.cols()),
      omega0_(params.omega0),
      coords_(coords) {
  check_coords(params, coords);
  const std::size_t n_hidden = params.layers.size() - 1;
  const Eigen::Index b = batch_;
  hidden_.resize(n_hidden);

  if (with_tangents_) {
    tangent_in_.resize(params.layers.size());
    tangent_in_[0] = Eigen::MatrixXd::Zero(2, 2 * b);
    tangent_in_[0].topLeftCorner(1, b).setOnes();
    tangent_in_[0].bottomRightCorner(1, b).setOnes();
  }

  Eigen::MatrixXd z;
  for (std::size_t i = 0; i < n_hidden; ++i) {
    const auto& layer = params.layers[i];
    auto& h = hidden_[i];
    if (i == 0) {
      z.noalias() = layer.weight * coords_;
    } else {
      z.noalias() = layer.weight * hidden_[i - 1].sin_z;
    }
    z.colwise() += layer.bias;

    h.sin_z.resize(z.rows(), z.cols());
    h.cos_z.resize(z.rows(), z.cols());
    detail::scaled_sin_cos(z.data(), static_cast<std::size_t>(z.size()), omega0_,
                           h.sin_z.data(), h.cos_z.data());

    if (with_tangents_) {
      h.tangent.noalias() = layer.weight * tangent_in_[i];
      // J_{i+1} = diag(omega0 cos(omega0 z)) * W_i * J_i, per axis block.
      Eigen::MatrixXd next(z.rows(), 2 * b);
      next.leftCols(b).array() = omega0_ * h.cos_z.array() * h.tangent.leftCols(b).array();
      next.rightCols(b).array() = omega0_ * h.cos_z.array() * h.tangent.rightCols(b).array();
      tangent_in_[i + 1] = std::move(next);
    }
  }

  const auto& out = params.layers.back();
  values_.noalias() = out.weight * hidden_.back().sin_z;
  values_.colwise() += out.bias;
  if (with_tangents_) {
    output_tangent_.noalias() = out.weight * tangent_in_.back();
  }
}

Eigen::MatrixXd ForwardTrace::dx() const {
  if (!with_tangents_) throw ConfigError("trace was built without tangents");
  return output_tangent_.leftCols(batch_);
}

Eigen::MatrixXd ForwardTrace::dy() const {
  if (!with_tangents_) throw ConfigError("trace was built without tangents");
  return output_tangent_.rightCols(batch_);
}

ParameterGradients backward(const SirenParams& params, const ForwardTrace& trace,
                            const Eigen::MatrixXd* value_residuals,
                            const JacobianResiduals* jacobian_residuals) {
  const Eigen::Index b = trace.batch_;
  const Eigen::Index channels = params.output_dim();
  const auto check = [&](const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != channels || m.cols() != b) {
      throw ShapeError(std::string(what) + " residuals are " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                       ", expected " + std::to_string(channels) + "x" +
                       std::to_string(b));
    }
    if (!m.allFinite()) {
      throw NumericalError(std::string(what) + " residuals are not finite");
    }
  };
  if (value_residuals != nullptr) check(*value_residuals, "value");
  const bool tangents = jacobian_residuals != nullptr;
  if (tangents) {
    if (!trace.with_tangents_) {
      throw ConfigError("jacobian loss needs a trace built with tangents");
    }
    check(jacobian_residuals->dx, "jacobian dx");
    check(jacobian_residuals->dy, "jacobian dy");
  }

  const double w0 = trace.omega0_;
  const std::size_t n_layers = params.layers.size();
  ParameterGradients grads = ParameterGradients::zeros_like(params);

  // Upstream adjoints of the current layer's input: value (N x B) and
  // tangent (N x 2B).
  Eigen::MatrixXd d_value;
  Eigen::MatrixXd d_tangent;

  {
    const auto& out = params.layers.back();
    auto& g = grads.layers.back();
    const auto& input = trace.hidden_.back().sin_z;
    Eigen::MatrixXd g_value = value_residuals != nullptr
                                  ? *value_residuals
                                  : Eigen::MatrixXd::Zero(channels, b);
    g.weight.noalias() = g_value * input.transpose();
    g.bias = g_value.rowwise().sum();
    d_value.noalias() = out.weight.transpose() * g_value;
    if (tangents) {
      Eigen::MatrixXd g_tangent(channels, 2 * b);
      g_tangent.leftCols(b) = jacobian_residuals->dx;
      g_tangent.rightCols(b) = jacobian_residuals->dy;
      g.weight.noalias() += g_tangent * trace.tangent_in_[n_layers - 1].transpose();
      d_tangent.noalias() = out.weight.transpose() * g_tangent;
    }
  }

  Eigen::MatrixXd dz;
  Eigen::MatrixXd dp;
  for (std::size_t k = n_layers - 1; k-- > 0;) {
    const auto& h = trace.hidden_[k];
    const auto& layer = params.layers[k];
    auto& g = grads.layers[k];

    // a = sin(w0 z) contributes w0 cos(w0 z) * da.
    dz = w0 * (d_value.array() * h.cos_z.array());
    if (tangents) {
      // J_out = c * P with c = w0 cos(w0 z) and P = W J_in (per axis).
      const auto dtx = d_tangent.leftCols(b).array();
      const auto dty = d_tangent.rightCols(b).array();
      const auto px = h.tangent.leftCols(b).array();
      const auto py = h.tangent.rightCols(b).array();
      // dc/dz = -w0^2 sin(w0 z)
      dz.array() -= (w0 * w0) * h.sin_z.array() * (dtx * px + dty * py);
      dp.resize(dz.rows(), 2 * b);
      dp.leftCols(b).array() = w0 * h.cos_z.array() * dtx;
      dp.rightCols(b).array() = w0 * h.cos_z.array() * dty;
    }

    if (k == 0) {
      g.weight.noalias() = dz * trace.coords_.transpose();
    } else {
      g.weight.noalias() = dz * trace.hidden_[k - 1].sin_z.transpose();
    }
    g.bias = dz.rowwise().sum();
    if (tangents) {
      g.weight.noalias() += dp * trace.tangent_in_[k].transpose();
    }

    if (k > 0) {
      d_value.noalias() = layer.weight.transpose() * dz;
      if (tangents) {
        d_tangent.noalias() = layer.weight.transpose() * dp;
      }
    }
  }
  return grads;
}

Eigen::MatrixXd forward(const SirenParams& params, const Eigen::Matrix2Xd& coords) {
  return ForwardTrace(params, coords, false).values();
}

JacobianBatch forward_with_input_jacobian(const SirenParams& params,
                                          const Eigen::Matrix2Xd& coords) {
  const ForwardTrace trace(params, coords, true);
  return {trace.values(), trace.dx(), trace.dy()};
}

ParameterGradients backward_value_loss(const SirenParams& params,
                                       const Eigen::Matrix2Xd& coords,
                                       const Eigen::MatrixXd& residuals) {
  const ForwardTrace trace(params, coords, false);
  return backward(params, trace, &residuals, nullptr);
}

ParameterGradients backward_jacobian_loss(const SirenParams& params,
                                          const Eigen::Matrix2Xd& coords,
                                          const JacobianResiduals& residuals) {
  const ForwardTrace trace(params, coords, true);
  return backward(params, trace, nullptr, &residuals);
}

JacobianBatch finite_difference_jacobian(const SirenParams& params,
                                         const Eigen::Matrix2Xd& coords,
                                         double step) {
  if (!(step > 0.0)) {
    throw ConfigError("finite-difference step must be positive");
  }
  JacobianBatch out;
  out.values = forward(params, coords);
  Eigen::MatrixXd* slots[2] = {&out.dx, &out.dy};
  for (int axis = 0; axis < 2; ++axis) {
    Eigen::Matrix2Xd plus = coords;
    Eigen::Matrix2Xd minus = coords;
    plus.row(axis).array() += step;
    minus.row(axis).array() -= step;
    *slots[axis] = (forward(params, plus) - forward(params, minus)) / (2.0 * step);
  }
  return out;
}

std::vector<std::span<double>> parameter_spans(SirenParams& params) {
  std::vector<std::span<double>> spans;
  for (auto& l : params.layers) {
    spans.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    spans.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return spans;
}

std::vector<std::span<const double>> gradient_spans(const ParameterGradients& grads) {
  std::vector<std::span<const double>> spans;
  for (const auto& l : grads.layers) {
    spans.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    spans.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return spans;
}

}  // namespace eoren
