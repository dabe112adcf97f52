#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace eoren {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weight.rows() == b.weight.rows() &&
           a.weight.cols() == b.weight.cols() && a.bias.size() == b.bias.size() &&
           a.weight == b.weight && a.bias == b.bias;
  }
};

/// Sine-activated MLP. Every layer but the last computes
/// sin(omega0 * (W x + b)); the last one is affine.
struct SirenParams {
  std::vector<DenseLayer> layers;
  double omega0 = 30.0;

  /// [in, hidden..., out], derived from the weight shapes.
  std::vector<int> layer_dims() const;
  int input_dim() const;
  int output_dim() const;

  /// Throws ConfigError unless shapes chain, input is 2-D, omega0 > 0 and
  /// every entry is finite.
  void validate() const;

  friend bool operator==(const SirenParams&, const SirenParams&) = default;
};

/// dL/dtheta for every array of a SirenParams, shape-matched.
struct ParameterGradients {
  std::vector<DenseLayer> layers;

  static ParameterGradients zeros_like(const SirenParams& params);
  ParameterGradients& operator+=(const ParameterGradients& other);
  bool all_finite() const;
};

/// Network values and their derivatives with respect to the two input
/// coordinates. All matrices are channels x batch.
struct JacobianBatch {
  Eigen::MatrixXd values;
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};

/// dL/d(dPhi/dx) and dL/d(dPhi/dy), channels x batch.
struct JacobianResiduals {
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};

/// Cached intermediates of one batched forward pass, consumed by backward().
/// Tangents (input derivatives) are carried only when requested.
class ForwardTrace {
 public:
  ForwardTrace(const SirenParams& params, const Eigen::Matrix2Xd& coords,
               bool with_tangents);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  bool has_tangents() const noexcept { return with_tangents_; }
  /// Input-Jacobian blocks; only valid when has_tangents().
  Eigen::MatrixXd dx() const;
  Eigen::MatrixXd dy() const;
  Eigen::Index batch() const noexcept { return batch_; }

 private:
  friend ParameterGradients backward(const SirenParams&, const ForwardTrace&,
                                     const Eigen::MatrixXd*,
                                     const JacobianResiduals*);

  struct Hidden {
    Eigen::MatrixXd sin_z;    // sin(omega0 * z), also the next layer's input
    Eigen::MatrixXd cos_z;    // cos(omega0 * z)
    Eigen::MatrixXd tangent;  // W * [Jx | Jy], N x 2B
  };

  bool with_tangents_;
  Eigen::Index batch_;
  double omega0_;
  Eigen::Matrix2Xd coords_;
  std::vector<Hidden> hidden_;
  // Per-layer input tangents [Jx | Jy]; the first is [e_x | e_y].
  std::vector<Eigen::MatrixXd> tangent_in_;
  Eigen::MatrixXd values_;
  Eigen::MatrixXd output_tangent_;  // C x 2B
};

/// Reverse accumulation through a traced pass. Either residual may be null;
/// jacobian residuals require a trace built with tangents.
ParameterGradients backward(const SirenParams& params, const ForwardTrace& trace,
                            const Eigen::MatrixXd* value_residuals,
                            const JacobianResiduals* jacobian_residuals);

Eigen::MatrixXd forward(const SirenParams& params, const Eigen::Matrix2Xd& coords);

JacobianBatch forward_with_input_jacobian(const SirenParams& params,
                                          const Eigen::Matrix2Xd& coords);

/// Gradients of a loss on the outputs; residuals = dL/dPhi.
ParameterGradients backward_value_loss(const SirenParams& params,
                                       const Eigen::Matrix2Xd& coords,
                                       const Eigen::MatrixXd& residuals);

/// Gradients of a loss on the input-Jacobian. Differentiates through the
/// tangent recurrence, so the cosine terms contribute second derivatives.
ParameterGradients backward_jacobian_loss(const SirenParams& params,
                                          const Eigen::Matrix2Xd& coords,
                                          const JacobianResiduals& residuals);

/// Central-difference input-Jacobian. Diagnostic and test use only.
JacobianBatch finite_difference_jacobian(const SirenParams& params,
                                         const Eigen::Matrix2Xd& coords,
                                         double step);

/// Mutable views over every parameter array in layer order (weight, bias).
std::vector<std::span<double>> parameter_spans(SirenParams& params);
std::vector<std::span<const double>> gradient_spans(const ParameterGradients& grads);

namespace detail {
/// s[i] = sin(omega * z[i]), c[i] = cos(omega * z[i]).
void scaled_sin_cos(const double* z, std::size_t n, double omega, double* s,
                    double* c) noexcept;
}  // namespace detail

}  // namespace eoren
