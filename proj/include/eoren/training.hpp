#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eoren/image.hpp"
#include "eoren/networks.hpp"
#include "eoren/siren.hpp"

namespace eoren {

enum class TrainMode { kPixel, kGrad, kEoren, kCompose };
enum class TunerSolver { kGradient, kClosedForm };
enum class ComposeLoss { kBlended, kWeighted };

std::string to_string(TrainMode mode);
std::string to_string(TunerSolver solver);
std::string to_string(ComposeLoss loss);

struct TrainConfig {
  TrainMode mode = TrainMode::kEoren;
  int epochs_total = 1000;
  int epochs_tuner = 50;
  double lr_edge = 1e-4;
  double lr_tuner = 1e-2;
  double lambda = 0.5;
  std::vector<int> hidden_dims = {256, 256, 256};
  double omega0 = 30.0;
  std::uint64_t seed = 0;
  int log_every = 10;
  TunerSolver tuner_solver = TunerSolver::kGradient;
  ComposeLoss compose_loss = ComposeLoss::kBlended;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// [2, hidden_dims..., channels]
  std::vector<int> layer_dims(int channels) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct HistoryRecord {
  int step = 0;  // parameter updates applied before this record
  double grad_loss = 0.0;
  double pixel_loss = 0.0;
  double psnr = 0.0;

  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

struct TrainHistory {
  std::vector<HistoryRecord> records;

  /// "step,grad_loss,pixel_loss,psnr" header plus one line per record.
  std::string to_csv() const;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

// ---------------------------------------------------------------- losses

struct PixelLoss {
  double value = 0.0;
  Eigen::MatrixXd residuals;  // dL/dpred
};

/// Mean squared error over all entries and its gradient 2 (pred - target) / N.
PixelLoss pixel_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

struct GradientTarget {
  Eigen::MatrixXd dx;
  Eigen::MatrixXd dy;
};

struct GradientLoss {
  double value = 0.0;
  JacobianResiduals residuals;
};

/// Mean squared error over both Jacobian blocks (N = 2 * C * B entries).
GradientLoss gradient_loss(const Eigen::MatrixXd& pred_dx, const Eigen::MatrixXd& pred_dy,
                           const GradientTarget& target);

// ---------------------------------------------------------------- optimizer

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;

  /// Zeroed moments shaped like `params`.
  static AdamState zeros_like(std::span<const std::span<double>> params);
};

/// One bias-corrected Adam update, in place.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamOptions& options);

// ---------------------------------------------------------------- problems

/// One supervision source: signed-range pixels and their GMA gradients.
struct WeightedTarget {
  double weight = 1.0;
  Eigen::MatrixXd pixels;
  GradientTarget gradient;
};

/// Everything a fit needs from its input image(s). Losses are weighted sums
/// over `terms`; the reference target (blend of all terms) drives the
/// diagnostics recorded in the history.
struct FitProblem {
  CoordinateGrid grid;
  int channels = 0;
  std::vector<WeightedTarget> terms;
  Eigen::MatrixXd reference_pixels;
  GradientTarget reference_gradient;
};

/// Single-image problem. The image is mapped to signed range and its targets
/// are GMA Sobel gradients.
FitProblem make_problem(const ImageBuffer& image);

/// Composition problem for lambda * f1 + (1 - lambda) * f2. Blended mode uses
/// one pre-blended target; weighted mode keeps both targets with weights
/// lambda and 1 - lambda (zero-weight terms are dropped).
FitProblem make_compose_problem(const ImageBuffer& f1, const ImageBuffer& f2,
                                double lambda, ComposeLoss loss);

/// Pixel-loss and gradient-loss objectives of a problem, as weighted sums.
PixelLoss problem_pixel_loss(const FitProblem& problem, const Eigen::MatrixXd& pred);
GradientLoss problem_gradient_loss(const FitProblem& problem,
                                   const Eigen::MatrixXd& pred_dx,
                                   const Eigen::MatrixXd& pred_dy);

/// PSNR in dB of a signed-range prediction against the problem's reference,
/// both mapped to [0, 1] (prediction clamped), peak 1.
double problem_psnr(const FitProblem& problem, const Eigen::MatrixXd& pred);

// ---------------------------------------------------------------- trainers

/// Full-batch Adam on the gradient loss. Copyable, so a run can be branched
/// and continued.
class GradientFitter {
 public:
  GradientFitter(const FitProblem& problem, SirenParams init, AdamOptions options);

  /// Applies `steps` updates. Records history at every multiple of
  /// `log_every` before each update, and after the last update when
  /// `record_final` is set.
  void run(int steps, int log_every, bool record_final, TrainHistory& history);

  const SirenParams& params() const noexcept { return params_; }
  int steps_done() const noexcept { return steps_done_; }

 private:
  const FitProblem* problem_;
  SirenParams params_;
  AdamOptions options_;
  AdamState adam_;
  int steps_done_ = 0;
};

/// Trains only alpha and beta against the pixel objective for
/// cfg.epochs_tuner steps (or solves it exactly with the closed-form
/// solver). The edge network is represented only by its frozen outputs.
ChannelTuner tune_channels(const FitProblem& problem, const JacobianBatch& edge_output,
                           const TrainConfig& cfg, int step_offset,
                           TrainHistory& history);

struct SirenRun {
  SirenParams params;
  TrainHistory history;
};

struct EorenRun {
  EorenModel model;
  TrainHistory history;
};

SirenRun train_pixel(const ImageBuffer& image, const TrainConfig& cfg);
SirenRun train_grad(const ImageBuffer& image, const TrainConfig& cfg);
EorenRun train_eoren(const ImageBuffer& image, const TrainConfig& cfg);
EorenRun train_compose(const ImageBuffer& f1, const ImageBuffer& f2,
                       const TrainConfig& cfg);

/// Two-stage fit on a prepared problem: gradient loss on the edge network
/// for (epochs_total - epochs_tuner) steps, then channel tuning.
EorenRun train_eoren_problem(const FitProblem& problem, const TrainConfig& cfg);

/// Keeps glibc from returning the per-step temporaries to the kernel after
/// every step. Process-wide; call once from main.
void configure_allocator();

}  // namespace eoren
