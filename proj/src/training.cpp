#include "eoren/training.hpp"

#include <malloc.h>

#include <cmath>
#include <string>

#include "eoren/error.hpp"
#include "eoren/format.hpp"
#include "eoren/gma.hpp"
#include "eoren/metrics.hpp"

namespace eoren {

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kPixel: return "pixel";
    case TrainMode::kGrad: return "grad";
    case TrainMode::kEoren: return "eoren";
    case TrainMode::kCompose: return "compose";
  }
  return "?";
}

std::string to_string(TunerSolver solver) {
  return solver == TunerSolver::kGradient ? "gradient" : "closed_form";
}

std::string to_string(ComposeLoss loss) {
  return loss == ComposeLoss::kBlended ? "blended" : "weighted";
}

void TrainConfig::validate() const {
  if (epochs_total < 1) throw ConfigError("epochs_total must be >= 1");
  if (epochs_tuner < 0 || epochs_tuner > epochs_total) {
    throw ConfigError("epochs_tuner must lie in [0, epochs_total]");
  }
  if ((mode == TrainMode::kEoren || mode == TrainMode::kCompose) &&
      epochs_tuner >= epochs_total) {
    throw ConfigError("epochs_tuner must be smaller than epochs_total for two-stage fits");
  }
  if (!(lr_edge > 0.0) || !std::isfinite(lr_edge)) throw ConfigError("lr_edge must be > 0");
  if (!(lr_tuner > 0.0) || !std::isfinite(lr_tuner)) throw ConfigError("lr_tuner must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (hidden_dims.empty()) throw ConfigError("hidden_dims needs at least one layer");
  for (int d : hidden_dims) {
    if (d < 1) throw ConfigError("hidden_dims entries must be >= 1");
  }
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw ConfigError("omega0 must be > 0");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
}

std::vector<int> TrainConfig::layer_dims(int channels) const {
  std::vector<int> dims{2};
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(channels);
  return dims;
}

std::string TrainHistory::to_csv() const {
  std::string out = "step,grad_loss,pixel_loss,psnr\n";
  for (const auto& r : records) {
    out += std::to_string(r.step);
    out += ',';
    out += format_real(r.grad_loss);
    out += ',';
    out += format_real(r.pixel_loss);
    out += ',';
    out += std::isinf(r.psnr) ? std::string("inf") : format_real(r.psnr);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- losses

namespace {

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + " differ");
  }
  if (a.size() == 0) throw ShapeError(std::string(what) + ": empty input");
  if (!a.allFinite() || !b.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite input");
  }
}

}  // namespace

PixelLoss pixel_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  check_same_shape(pred, target, "pixel_loss");
  const double n = static_cast<double>(pred.size());
  PixelLoss out;
  out.residuals = pred - target;
  out.value = out.residuals.squaredNorm() / n;
  out.residuals *= 2.0 / n;
  return out;
}

GradientLoss gradient_loss(const Eigen::MatrixXd& pred_dx, const Eigen::MatrixXd& pred_dy,
                           const GradientTarget& target) {
  check_same_shape(pred_dx, target.dx, "gradient_loss");
  check_same_shape(pred_dy, target.dy, "gradient_loss");
  const double n = 2.0 * static_cast<double>(pred_dx.size());
  GradientLoss out;
  out.residuals.dx = pred_dx - target.dx;
  out.residuals.dy = pred_dy - target.dy;
  out.value = (out.residuals.dx.squaredNorm() + out.residuals.dy.squaredNorm()) / n;
  out.residuals.dx *= 2.0 / n;
  out.residuals.dy *= 2.0 / n;
  return out;
}

// ---------------------------------------------------------------- optimizer

AdamState AdamState::zeros_like(std::span<const std::span<double>> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamOptions& opt) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw ShapeError("adam: parameter, gradient and state counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() || params[k].size() != state.m[k].size() ||
        params[k].size() != state.v[k].size()) {
      throw ShapeError("adam: array " + std::to_string(k) + " sizes differ");
    }
  }
  if (!(opt.lr > 0.0)) throw ConfigError("adam: learning rate must be > 0");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    const auto g = grads[k];
    const auto p = params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
  }
}

// ---------------------------------------------------------------- problems

namespace {

WeightedTarget target_from_image(const ImageBuffer& image, double weight) {
  if (image.range() != ValueRange::kUnit) {
    throw ConfigError("training images must be unit-range");
  }
  const ImageBuffer signed_image = normalize_signed(image);
  const GradientField field = gma_sobel(signed_image);
  return {weight, to_channel_matrix(signed_image), {gx_matrix(field), gy_matrix(field)}};
}

// Endpoints return one operand untouched so lambda in {0, 1} reproduces the
// single-image targets bit for bit.
Eigen::MatrixXd blend(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double lambda) {
  if (lambda == 1.0) return a;
  if (lambda == 0.0) return b;
  return lambda * a + (1.0 - lambda) * b;
}

}  // namespace

FitProblem make_problem(const ImageBuffer& image) {
  FitProblem p;
  p.grid = make_grid(image.width(), image.height());
  p.channels = image.channels();
  p.terms.push_back(target_from_image(image, 1.0));
  p.reference_pixels = p.terms.front().pixels;
  p.reference_gradient = p.terms.front().gradient;
  return p;
}

FitProblem make_compose_problem(const ImageBuffer& f1, const ImageBuffer& f2,
                                double lambda, ComposeLoss loss) {
  if (!f1.same_shape(f2)) {
    throw ShapeError("composition inputs must have identical dimensions");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("lambda must lie in [0, 1]");
  }
  const WeightedTarget t1 = target_from_image(f1, lambda);
  const WeightedTarget t2 = target_from_image(f2, 1.0 - lambda);

  FitProblem p;
  p.grid = make_grid(f1.width(), f1.height());
  p.channels = f1.channels();
  p.reference_pixels = blend(t1.pixels, t2.pixels, lambda);
  p.reference_gradient = {blend(t1.gradient.dx, t2.gradient.dx, lambda),
                          blend(t1.gradient.dy, t2.gradient.dy, lambda)};
  if (loss == ComposeLoss::kBlended) {
    p.terms.push_back({1.0, p.reference_pixels, p.reference_gradient});
  } else {
    for (const auto* t : {&t1, &t2}) {
      if (t->weight > 0.0) p.terms.push_back(*t);
    }
  }
  return p;
}

PixelLoss problem_pixel_loss(const FitProblem& problem, const Eigen::MatrixXd& pred) {
  PixelLoss total;
  for (const auto& term : problem.terms) {
    PixelLoss l = pixel_loss(pred, term.pixels);
    if (total.residuals.size() == 0) {
      total.value = term.weight * l.value;
      total.residuals = term.weight * l.residuals;
    } else {
      total.value += term.weight * l.value;
      total.residuals += term.weight * l.residuals;
    }
  }
  return total;
}

GradientLoss problem_gradient_loss(const FitProblem& problem, const Eigen::MatrixXd& pred_dx,
                                   const Eigen::MatrixXd& pred_dy) {
  GradientLoss total;
  for (const auto& term : problem.terms) {
    GradientLoss l = gradient_loss(pred_dx, pred_dy, term.gradient);
    if (total.residuals.dx.size() == 0) {
      total.value = term.weight * l.value;
      total.residuals.dx = term.weight * l.residuals.dx;
      total.residuals.dy = term.weight * l.residuals.dy;
    } else {
      total.value += term.weight * l.value;
      total.residuals.dx += term.weight * l.residuals.dx;
      total.residuals.dy += term.weight * l.residuals.dy;
    }
  }
  return total;
}

double problem_psnr(const FitProblem& problem, const Eigen::MatrixXd& pred) {
  const Eigen::MatrixXd p = (0.5 * (pred.array() + 1.0)).cwiseMax(0.0).cwiseMin(1.0);
  const Eigen::MatrixXd r = 0.5 * (problem.reference_pixels.array() + 1.0);
  return psnr({p.data(), static_cast<std::size_t>(p.size())},
              {r.data(), static_cast<std::size_t>(r.size())});
}

namespace {

void check_finite_loss(double value, const char* what, int step) {
  if (!std::isfinite(value)) {
    throw NumericalError(std::string(what) + " became non-finite at step " +
                         std::to_string(step));
  }
}

HistoryRecord make_record(const FitProblem& problem, int step,
                          const Eigen::MatrixXd& values, const Eigen::MatrixXd& dx,
                          const Eigen::MatrixXd& dy) {
  return {step, problem_gradient_loss(problem, dx, dy).value,
          problem_pixel_loss(problem, values).value, problem_psnr(problem, values)};
}

}  // namespace

// ---------------------------------------------------------------- trainers

GradientFitter::GradientFitter(const FitProblem& problem, SirenParams init,
                               AdamOptions options)
    : problem_(&problem), params_(std::move(init)), options_(options) {
  params_.validate();
  if (params_.output_dim() != problem.channels) {
    throw ShapeError("network output does not match image channels");
  }
  adam_ = AdamState::zeros_like(parameter_spans(params_));
}

void GradientFitter::run(int steps, int log_every, bool record_final,
                         TrainHistory& history) {
  const FitProblem& problem = *problem_;
  for (int i = 0; i < steps; ++i) {
    const ForwardTrace trace(params_, problem.grid.points, true);
    const Eigen::MatrixXd dx = trace.dx();
    const Eigen::MatrixXd dy = trace.dy();
    const GradientLoss loss = problem_gradient_loss(problem, dx, dy);
    check_finite_loss(loss.value, "gradient loss", steps_done_);
    if (steps_done_ % log_every == 0) {
      history.records.push_back({steps_done_, loss.value,
                                 problem_pixel_loss(problem, trace.values()).value,
                                 problem_psnr(problem, trace.values())});
    }
    const ParameterGradients grads = backward(params_, trace, nullptr, &loss.residuals);
    adam_step(parameter_spans(params_), gradient_spans(grads), adam_, options_);
    ++steps_done_;
  }
  if (record_final) {
    const JacobianBatch out = forward_with_input_jacobian(params_, problem.grid.points);
    HistoryRecord rec = make_record(problem, steps_done_, out.values, out.dx, out.dy);
    check_finite_loss(rec.grad_loss, "gradient loss", steps_done_);
    history.records.push_back(rec);
  }
}

ChannelTuner tune_channels(const FitProblem& problem, const JacobianBatch& edge_output,
                           const TrainConfig& cfg, int step_offset,
                           TrainHistory& history) {
  const Eigen::MatrixXd& g = edge_output.values;
  if (g.rows() != problem.channels || g.cols() != problem.grid.points.cols()) {
    throw ShapeError("edge output does not match the problem");
  }
  const auto record = [&](int step, const ChannelTuner& t) {
    const Eigen::MatrixXd values = t.apply(g);
    const Eigen::MatrixXd dx = t.alpha.asDiagonal() * edge_output.dx;
    const Eigen::MatrixXd dy = t.alpha.asDiagonal() * edge_output.dy;
    HistoryRecord rec = make_record(problem, step, values, dx, dy);
    check_finite_loss(rec.pixel_loss, "pixel loss", step);
    history.records.push_back(rec);
  };

  if (cfg.tuner_solver == TunerSolver::kClosedForm) {
    ChannelTuner t = closed_form_tuner_or_shift(g, problem.reference_pixels);
    record(step_offset + cfg.epochs_tuner, t);
    return t;
  }

  ChannelTuner t = tuner_init(problem.channels);
  std::vector<std::span<double>> params{
      {t.alpha.data(), static_cast<std::size_t>(t.alpha.size())},
      {t.beta.data(), static_cast<std::size_t>(t.beta.size())}};
  AdamState adam = AdamState::zeros_like(params);
  const AdamOptions options{cfg.lr_tuner};
  Eigen::VectorXd d_alpha(problem.channels);
  Eigen::VectorXd d_beta(problem.channels);
  for (int i = 0; i < cfg.epochs_tuner; ++i) {
    const int step = step_offset + i;
    if (step % cfg.log_every == 0) record(step, t);
    const PixelLoss loss = problem_pixel_loss(problem, t.apply(g));
    check_finite_loss(loss.value, "pixel loss", step);
    // Phi = alpha * g + beta per channel.
    d_alpha = loss.residuals.cwiseProduct(g).rowwise().sum();
    d_beta = loss.residuals.rowwise().sum();
    const std::vector<std::span<const double>> grads{
        {d_alpha.data(), static_cast<std::size_t>(d_alpha.size())},
        {d_beta.data(), static_cast<std::size_t>(d_beta.size())}};
    adam_step(params, grads, adam, options);
  }
  record(step_offset + cfg.epochs_tuner, t);
  return t;
}

namespace {

void require_mode(const TrainConfig& cfg, TrainMode mode) {
  cfg.validate();
  if (cfg.mode != mode) {
    throw ConfigError("config mode is " + to_string(cfg.mode) + ", expected " +
                      to_string(mode));
  }
}

SirenParams initial_params(const TrainConfig& cfg, int channels) {
  return siren_init(cfg.layer_dims(channels), cfg.omega0, cfg.seed);
}

}  // namespace

SirenRun train_pixel(const ImageBuffer& image, const TrainConfig& cfg) {
  require_mode(cfg, TrainMode::kPixel);
  const FitProblem problem = make_problem(image);
  SirenParams params = initial_params(cfg, problem.channels);
  AdamState adam = AdamState::zeros_like(parameter_spans(params));
  const AdamOptions options{cfg.lr_edge};
  TrainHistory history;
  for (int step = 0; step < cfg.epochs_total; ++step) {
    const bool log = step % cfg.log_every == 0;
    // Tangents only feed the logged gradient loss; values are identical
    // either way.
    const ForwardTrace trace(params, problem.grid.points, log);
    const PixelLoss loss = problem_pixel_loss(problem, trace.values());
    check_finite_loss(loss.value, "pixel loss", step);
    if (log) {
      history.records.push_back(
          {step, problem_gradient_loss(problem, trace.dx(), trace.dy()).value, loss.value,
           problem_psnr(problem, trace.values())});
    }
    const ParameterGradients grads = backward(params, trace, &loss.residuals, nullptr);
    adam_step(parameter_spans(params), gradient_spans(grads), adam, options);
  }
  const JacobianBatch out = forward_with_input_jacobian(params, problem.grid.points);
  HistoryRecord rec = make_record(problem, cfg.epochs_total, out.values, out.dx, out.dy);
  check_finite_loss(rec.pixel_loss, "pixel loss", cfg.epochs_total);
  history.records.push_back(rec);
  return {std::move(params), std::move(history)};
}

SirenRun train_grad(const ImageBuffer& image, const TrainConfig& cfg) {
  require_mode(cfg, TrainMode::kGrad);
  const FitProblem problem = make_problem(image);
  GradientFitter fitter(problem, initial_params(cfg, problem.channels),
                        AdamOptions{cfg.lr_edge});
  TrainHistory history;
  fitter.run(cfg.epochs_total, cfg.log_every, true, history);
  return {fitter.params(), std::move(history)};
}

EorenRun train_eoren_problem(const FitProblem& problem, const TrainConfig& cfg) {
  cfg.validate();
  const int edge_steps = cfg.epochs_total - cfg.epochs_tuner;
  GradientFitter fitter(problem, initial_params(cfg, problem.channels),
                        AdamOptions{cfg.lr_edge});
  TrainHistory history;
  fitter.run(edge_steps, cfg.log_every, false, history);

  // The tuner only ever sees the frozen edge outputs, so no loss from this
  // stage can reach the edge parameters.
  const SirenParams& edge = fitter.params();
  const JacobianBatch g = forward_with_input_jacobian(edge, problem.grid.points);
  ChannelTuner tuner = tune_channels(problem, g, cfg, edge_steps, history);
  return {EorenModel{edge, std::move(tuner)}, std::move(history)};
}

EorenRun train_eoren(const ImageBuffer& image, const TrainConfig& cfg) {
  require_mode(cfg, TrainMode::kEoren);
  return train_eoren_problem(make_problem(image), cfg);
}

EorenRun train_compose(const ImageBuffer& f1, const ImageBuffer& f2,
                       const TrainConfig& cfg) {
  require_mode(cfg, TrainMode::kCompose);
  return train_eoren_problem(make_compose_problem(f1, f2, cfg.lambda, cfg.compose_loss),
                             cfg);
}

void configure_allocator() {
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
}

}  // namespace eoren
