#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eoren/config.hpp"
#include "eoren/error.hpp"
#include "eoren/format.hpp"
#include "eoren/gma.hpp"
#include "eoren/io_util.hpp"
#include "eoren/metrics.hpp"
#include "eoren/networks.hpp"
#include "eoren/png_io.hpp"
#include "eoren/training.hpp"

namespace eoren::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kHistogramBins = 64;

struct OutputFile {
  fs::path path;
  std::vector<unsigned char> bytes;
};

std::vector<unsigned char> text_bytes(const std::string& s) {
  return {s.begin(), s.end()};
}

// Everything is rendered in memory before the first write; if a write fails
// the files written so far are removed again.
void commit(const std::vector<OutputFile>& files) {
  std::vector<fs::path> written;
  try {
    for (const auto& f : files) {
      if (f.path.has_parent_path()) fs::create_directories(f.path.parent_path());
      write_file_atomic(f.path, f.bytes);
      written.push_back(f.path);
    }
  } catch (const std::exception& e) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (dynamic_cast<const IoError*>(&e) != nullptr) throw;
    throw IoError(std::string("writing outputs: ") + e.what());
  }
}

struct InputRef {
  std::string role;
  std::string path;
};

struct RunRecord {
  std::string command;
  std::optional<TrainConfig> config;
  std::vector<InputRef> inputs;
  json options = json::object();
};

std::string absolute_string(const fs::path& p) {
  return fs::absolute(p).lexically_normal().string();
}

json config_json(const TrainConfig& cfg) {
  json j = json::object();
  const std::string text = config_to_text(cfg);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl - pos);
    const auto eq = line.find('=');
    j[line.substr(0, eq)] = line.substr(eq + 1);
    pos = nl + 1;
  }
  return j;
}

OutputFile manifest_file(const fs::path& path, const RunRecord& run,
                         const std::vector<OutputFile>& outputs, double seconds) {
  json m;
  m["tool"] = "eoren";
  m["version"] = kToolVersion;
  m["command"] = run.command;
  if (run.config) {
    m["config"] = config_json(*run.config);
    m["seed"] = run.config->seed;
  }
  m["options"] = run.options;
  json inputs = json::array();
  for (const auto& in : run.inputs) {
    inputs.push_back({{"role", in.role},
                      {"path", absolute_string(in.path)},
                      {"sha256", sha256_file(in.path)}});
  }
  m["inputs"] = std::move(inputs);
  json outs = json::array();
  for (const auto& f : outputs) outs.push_back(absolute_string(f.path));
  m["outputs"] = std::move(outs);
  m["wall_clock_seconds"] = seconds;
  return {path, text_bytes(m.dump(2) + "\n")};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Signed network output to a clamped unit-range image.
ImageBuffer to_unit_image(const Eigen::MatrixXd& values, int width, int height) {
  const Eigen::MatrixXd unit = (0.5 * (values.array() + 1.0)).cwiseMax(0.0).cwiseMin(1.0);
  return from_channel_matrix(unit, width, height, ValueRange::kUnit);
}

std::vector<double> flatten(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  std::vector<double> out(a.data(), a.data() + a.size());
  out.insert(out.end(), b.data(), b.data() + b.size());
  return out;
}

// Both histograms share the observed range so their bins line up.
std::pair<Histogram, Histogram> paired_histograms(const std::vector<double>& a,
                                                  const std::vector<double>& b) {
  std::vector<double> all = a;
  all.insert(all.end(), b.begin(), b.end());
  const auto [mn, mx] = std::minmax_element(all.begin(), all.end());
  double lo = *mn;
  double hi = *mx;
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {histogram(a, kHistogramBins, lo, hi), histogram(b, kHistogramBins, lo, hi)};
}

json history_tail(const TrainHistory& h) {
  const auto& r = h.records.back();
  return {{"step", r.step},
          {"grad_loss", r.grad_loss},
          {"pixel_loss", r.pixel_loss},
          {"psnr_db", psnr_to_json(r.psnr)}};
}

// ---------------------------------------------------------------- fit

struct FitRequest {
  TrainConfig cfg;
  std::string input;
  fs::path out;
};

int do_fit(const FitRequest& req, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  req.cfg.validate();
  if (req.cfg.mode == TrainMode::kCompose) {
    throw ConfigError("fit supports modes pixel, grad and eoren; use the compose command");
  }
  const ImageBuffer image = load_png(req.input);
  const int w = image.width();
  const int h = image.height();

  Checkpoint ckpt;
  TrainHistory history;
  JacobianBatch pred;
  const CoordinateGrid grid = make_grid(w, h);
  if (req.cfg.mode == TrainMode::kEoren) {
    EorenRun run = train_eoren(image, req.cfg);
    pred = eoren_forward_with_input_jacobian(run.model, grid.points);
    ckpt = {run.model.edge, run.model.tuner};
    history = std::move(run.history);
  } else {
    SirenRun run = req.cfg.mode == TrainMode::kPixel ? train_pixel(image, req.cfg)
                                                     : train_grad(image, req.cfg);
    pred = forward_with_input_jacobian(run.params, grid.points);
    ckpt = {run.params, std::nullopt};
    history = std::move(run.history);
  }

  const ImageBuffer recon = to_unit_image(pred.values, w, h);
  PngWriteReport png_report;
  std::vector<unsigned char> png = encode_png(recon, &png_report);

  const ImageBuffer signed_image = normalize_signed(image);
  const GradientField target = gma_sobel(signed_image);
  const auto [pix_recon, pix_target] = paired_histograms(recon.pixels(), image.pixels());
  const auto [grad_recon, grad_target] =
      paired_histograms(flatten(pred.dx, pred.dy), flatten(gx_matrix(target), gy_matrix(target)));

  MetricsReport report = evaluate(recon, image);
  report.histograms = {{"pixel_recon", pix_recon},
                       {"pixel_target", pix_target},
                       {"gradient_recon", grad_recon},
                       {"gradient_target", grad_target}};
  json metrics;
  metrics["mode"] = to_string(req.cfg.mode);
  metrics["final"] = history_tail(history);
  metrics["png_clamped_samples"] = png_report.clamped;
  metrics["report"] = report.to_json();

  std::vector<OutputFile> files = {
      {req.out / "reconstruction.png", std::move(png)},
      {req.out / "checkpoint.bin", encode_checkpoint(ckpt)},
      {req.out / "history.csv", text_bytes(history.to_csv())},
      {req.out / "metrics.json", text_bytes(metrics.dump(2) + "\n")},
      {req.out / "pixel_hist_recon.csv", text_bytes(pix_recon.to_csv())},
      {req.out / "pixel_hist_target.csv", text_bytes(pix_target.to_csv())},
      {req.out / "gradient_hist_recon.csv", text_bytes(grad_recon.to_csv())},
      {req.out / "gradient_hist_target.csv", text_bytes(grad_target.to_csv())},
      {req.out / "config.txt", text_bytes(config_to_text(req.cfg))},
  };
  RunRecord record{"fit", req.cfg, {{"input", req.input}}, json::object()};
  files.push_back(manifest_file(req.out / "manifest.json", record, files, seconds_since(t0)));
  commit(files);

  out << "mode=" << to_string(req.cfg.mode)
      << " psnr_db=" << psnr_to_json(report.psnr_db).dump()
      << " ssim=" << report.ssim << " out=" << req.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- compose

struct ComposeRequest {
  TrainConfig cfg;
  std::string a;
  std::string b;
  fs::path out;
};

int do_compose(const ComposeRequest& req, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  req.cfg.validate();
  const ImageBuffer f1 = load_png(req.a);
  const ImageBuffer f2 = load_png(req.b);
  EorenRun run = train_compose(f1, f2, req.cfg);
  const CoordinateGrid grid = make_grid(f1.width(), f1.height());
  const Eigen::MatrixXd values = eoren_forward(run.model, grid.points);
  const ImageBuffer composite = to_unit_image(values, f1.width(), f1.height());
  PngWriteReport png_report;
  std::vector<unsigned char> png = encode_png(composite, &png_report);

  json metrics;
  metrics["lambda"] = req.cfg.lambda;
  metrics["compose_loss"] = to_string(req.cfg.compose_loss);
  metrics["final"] = history_tail(run.history);
  metrics["png_clamped_samples"] = png_report.clamped;
  metrics["vs_a"] = evaluate(composite, f1).to_json();
  metrics["vs_b"] = evaluate(composite, f2).to_json();

  std::vector<OutputFile> files = {
      {req.out / "composite.png", std::move(png)},
      {req.out / "checkpoint.bin", encode_checkpoint({run.model.edge, run.model.tuner})},
      {req.out / "history.csv", text_bytes(run.history.to_csv())},
      {req.out / "metrics.json", text_bytes(metrics.dump(2) + "\n")},
      {req.out / "config.txt", text_bytes(config_to_text(req.cfg))},
  };
  RunRecord record{"compose", req.cfg, {{"a", req.a}, {"b", req.b}}, json::object()};
  files.push_back(manifest_file(req.out / "manifest.json", record, files, seconds_since(t0)));
  commit(files);

  out << "lambda=" << req.cfg.lambda << " out=" << req.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalRequest {
  std::string pred;
  std::string ref;
  std::optional<fs::path> out;
};

int do_eval(const EvalRequest& req, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const ImageBuffer pred = load_png(req.pred);
  const ImageBuffer ref = load_png(req.ref);
  MetricsReport report = evaluate(pred, ref);
  const auto [hp, hr] = paired_histograms(pred.pixels(), ref.pixels());
  report.histograms = {{"pixel_pred", hp}, {"pixel_ref", hr}};
  const std::string text = report.to_json().dump(2) + "\n";
  if (req.out) {
    std::vector<OutputFile> files = {{*req.out, text_bytes(text)}};
    RunRecord record{"eval", std::nullopt, {{"pred", req.pred}, {"ref", req.ref}},
                     json::object()};
    fs::path manifest = *req.out;
    manifest += ".manifest.json";
    files.push_back(manifest_file(manifest, record, files, seconds_since(t0)));
    commit(files);
  }
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------- grad

struct GradRequest {
  std::string input;
  fs::path out;
  bool raw_sobel = false;
};

int do_grad(const GradRequest& req, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const ImageBuffer image = normalize_signed(load_png(req.input));
  const GradientField field = req.raw_sobel ? raw_sobel(image) : gma_sobel(image);
  fs::path magnitude = req.out;
  magnitude.replace_extension(".magnitude.png");
  std::vector<OutputFile> files = {
      {req.out, encode_gradient_field(field)},
      {magnitude, encode_png(gradient_magnitude_image(field))},
  };
  RunRecord record{"grad", std::nullopt, {{"input", req.input}},
                   json{{"raw_sobel", req.raw_sobel}}};
  fs::path manifest = req.out;
  manifest += ".manifest.json";
  files.push_back(manifest_file(manifest, record, files, seconds_since(t0)));
  commit(files);
  out << "H=" << field.height << " W=" << field.width << " C=" << field.channels
      << " out=" << req.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- rerun

int do_rerun(const std::string& manifest_path, const fs::path& out_path,
             std::ostream& out) {
  const auto bytes = read_binary_file(manifest_path);
  json m;
  try {
    m = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw DecodeError("manifest " + manifest_path + ": " + e.what());
  }

  try {
    const std::string command = m.at("command").get<std::string>();
    std::vector<std::string> paths;
    for (const auto& in : m.at("inputs")) {
      const auto path = in.at("path").get<std::string>();
      const auto want = in.at("sha256").get<std::string>();
      if (sha256_file(path) != want) {
        throw IoError("input " + path + " no longer matches the manifest hash");
      }
      paths.push_back(path);
    }
    std::optional<TrainConfig> cfg;
    if (m.contains("config")) {
      cfg = TrainConfig{};
      for (const auto& [key, value] : m.at("config").items()) {
        apply_setting(*cfg, key, value.get<std::string>());
      }
    }
    const auto need = [&](std::size_t n) {
      if (paths.size() != n) throw DecodeError("manifest has the wrong number of inputs");
    };
    const auto need_config = [&] {
      if (!cfg) throw DecodeError("manifest has no config");
    };
    if (command == "fit") {
      need(1);
      need_config();
      return do_fit({*cfg, paths[0], out_path}, out);
    }
    if (command == "compose") {
      need(2);
      need_config();
      return do_compose({*cfg, paths[0], paths[1], out_path}, out);
    }
    if (command == "eval") {
      need(2);
      return do_eval({paths[0], paths[1], out_path}, out);
    }
    if (command == "grad") {
      need(1);
      return do_grad({paths[0], out_path, m.at("options").value("raw_sobel", false)}, out);
    }
    throw DecodeError("manifest names unknown command '" + command + "'");
  } catch (const json::exception& e) {
    throw DecodeError("manifest " + manifest_path + ": " + e.what());
  }
}

// ---------------------------------------------------------------- parsing

struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App* app, ConfigFlags& flags) {
  app->add_option("--config", flags.config_path, "key=value config file");
  app->add_option("--seed", flags.seed, "Overrides the config seed");
  app->add_option("--set", flags.sets, "Extra key=value override (repeatable)");
}

TrainConfig resolve_config(const ConfigFlags& flags,
                           const std::vector<std::pair<std::string, std::string>>& extra) {
  TrainConfig cfg;
  if (!flags.config_path.empty()) cfg = load_config(flags.config_path, cfg);
  for (const auto& kv : extra) apply_setting(cfg, kv.first, kv.second);
  for (const auto& s : flags.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (flags.seed) cfg.seed = *flags.seed;
  return cfg;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) != nullptr) return kExitIo;
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitUsage;
  if (dynamic_cast<const ShapeError*>(&e) != nullptr) return kExitUsage;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return kExitNumerical;
  if (dynamic_cast<const DegenerateChannel*>(&e) != nullptr) return kExitNumerical;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e) != nullptr) return kExitIo;
  return kExitNumerical;
}

}  // namespace

std::string sha256_file(const std::string& path) {
  const auto bytes = read_binary_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed for " + path);
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Edge-oriented implicit neural representation fitting", "eoren"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::function<int()> action;

  auto* fit = app.add_subcommand("fit", "Fit one image");
  ConfigFlags fit_flags;
  std::string fit_mode;
  FitRequest fit_req;
  std::string fit_out;
  fit->add_option("--mode", fit_mode, "pixel | grad | eoren")
      ->check(CLI::IsMember({"pixel", "grad", "eoren"}));
  fit->add_option("--input", fit_req.input, "Input PNG")->required();
  fit->add_option("--out", fit_out, "Output directory")->required();
  add_config_flags(fit, fit_flags);
  fit->callback([&] {
    action = [&] {
      std::vector<std::pair<std::string, std::string>> extra;
      if (!fit_mode.empty()) extra.emplace_back("mode", fit_mode);
      fit_req.cfg = resolve_config(fit_flags, extra);
      fit_req.out = fit_out;
      return do_fit(fit_req, out);
    };
  });

  auto* compose = app.add_subcommand("compose", "Gradient-domain composition of two images");
  ConfigFlags compose_flags;
  ComposeRequest compose_req;
  std::string compose_out;
  std::optional<double> lambda, gamma1, gamma2;
  std::string compose_loss;
  compose->add_option("--a", compose_req.a, "First image (weight lambda)")->required();
  compose->add_option("--b", compose_req.b, "Second image (weight 1 - lambda)")->required();
  compose->add_option("--lambda", lambda, "Blend weight in [0, 1]");
  compose->add_option("--gamma1", gamma1, "Edge module learning rate");
  compose->add_option("--gamma2", gamma2, "Tuner learning rate");
  compose->add_option("--compose-loss", compose_loss, "blended | weighted");
  compose->add_option("--out", compose_out, "Output directory")->required();
  add_config_flags(compose, compose_flags);
  compose->callback([&] {
    action = [&] {
      std::vector<std::pair<std::string, std::string>> extra = {{"mode", "compose"}};
      if (lambda) extra.emplace_back("lambda", format_real(*lambda));
      if (gamma1) extra.emplace_back("lr_edge", format_real(*gamma1));
      if (gamma2) extra.emplace_back("lr_tuner", format_real(*gamma2));
      if (!compose_loss.empty()) extra.emplace_back("compose_loss", compose_loss);
      compose_req.cfg = resolve_config(compose_flags, extra);
      compose_req.out = compose_out;
      return do_compose(compose_req, out);
    };
  });

  auto* eval = app.add_subcommand("eval", "PSNR and SSIM of a prediction against a reference");
  EvalRequest eval_req;
  std::string eval_out;
  eval->add_option("--pred", eval_req.pred, "Predicted PNG")->required();
  eval->add_option("--ref", eval_req.ref, "Reference PNG")->required();
  eval->add_option("--out", eval_out, "Write the JSON report here");
  eval->callback([&] {
    action = [&] {
      if (!eval_out.empty()) eval_req.out = eval_out;
      return do_eval(eval_req, out);
    };
  });

  auto* grad = app.add_subcommand("grad", "Write the GMA gradient field of an image");
  GradRequest grad_req;
  std::string grad_out;
  grad->add_option("--input", grad_req.input, "Input PNG")->required();
  grad->add_option("--out", grad_out, "Output field file")->required();
  grad->add_flag("--raw-sobel", grad_req.raw_sobel, "Unadjusted Sobel responses");
  grad->callback([&] {
    action = [&] {
      grad_req.out = grad_out;
      return do_grad(grad_req, out);
    };
  });

  auto* rerun = app.add_subcommand("rerun", "Repeat a run recorded in a manifest");
  std::string manifest_path, rerun_out;
  rerun->add_option("--manifest", manifest_path, "manifest.json of an earlier run")
      ->required();
  rerun->add_option("--out", rerun_out, "New output location")->required();
  rerun->callback([&] {
    action = [&] { return do_rerun(manifest_path, rerun_out, out); };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << sub->help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    return action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace eoren::cli
