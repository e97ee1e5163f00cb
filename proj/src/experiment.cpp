#include "bcpnp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "bcpnp/image_io.hpp"
#include "bcpnp/metrics.hpp"
#include "bcpnp/objective.hpp"
#include "bcpnp/random.hpp"
#include "bcpnp/theory.hpp"

namespace bcpnp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// JSON field access with path-qualified errors

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ConfigError("field '" + path + "': " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path.empty() ? "<root>" : path, "expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  check_object(j, path);
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      bad(join(path, key), "unknown key");
    }
  }
}

const json& required(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) bad(join(path, key), "missing");
  return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& path,
              std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    bad(join(path, key), "missing");
  }
  const json& v = j.at(key);
  if (!v.is_number()) bad(join(path, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(join(path, key), "must be finite");
  return d;
}

double positive(const json& j, const std::string& key, const std::string& path,
                std::optional<double> fallback = std::nullopt) {
  const double d = number(j, key, path, fallback);
  if (!(d > 0.0)) bad(join(path, key), "must be > 0");
  return d;
}

int integer(const json& j, const std::string& key, const std::string& path,
            std::optional<int> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    bad(join(path, key), "missing");
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) bad(join(path, key), "expected an integer");
  return v.get<int>();
}

std::string text(const json& j, const std::string& key, const std::string& path,
                 std::optional<std::string> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    bad(join(path, key), "missing");
  }
  const json& v = j.at(key);
  if (!v.is_string()) bad(join(path, key), "expected a string");
  return v.get<std::string>();
}

bool flag(const json& j, const std::string& key, const std::string& path, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) bad(join(path, key), "expected true or false");
  return j.at(key).get<bool>();
}

std::uint64_t seed_value(const json& j, const std::string& key, const std::string& path,
                         std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    bad(join(path, key), "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

// [h, w] pair
std::pair<int, int> shape(const json& j, const std::string& key, const std::string& path) {
  const json& v = required(j, key, path);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    bad(join(path, key), "expected [height, width]");
  }
  const int h = v[0].get<int>(), w = v[1].get<int>();
  if (h < 1 || w < 1) bad(join(path, key), "dimensions must be positive");
  return {h, w};
}

// Scalar broadcast or explicit array of length n.
Vector vector_value(const json& v, Index n, const std::string& path) {
  if (v.is_number()) return Vector::Constant(n, v.get<double>());
  if (!v.is_array()) bad(path, "expected a number or an array");
  if (static_cast<Index>(v.size()) != n) {
    bad(path, "expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
  }
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) bad(path, "expected numbers");
    out[i] = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

std::string resolve(const std::string& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base) / path).string();
}

// ---------------------------------------------------------------------------
// Synthetic ground truth

// Piecewise-constant test scene in [0, 1].
Vector phantom(int h, int w) {
  Vector img(static_cast<Index>(h) * w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double y = (r + 0.5) / h, x = (c + 0.5) / w;
      double v = 0.1;
      if (y > 0.12 && y < 0.5 && x > 0.1 && x < 0.48) v = 0.8;
      if ((y - 0.62) * (y - 0.62) + (x - 0.64) * (x - 0.64) < 0.045) v = 0.5;
      if (y > 0.68 && y < 0.88 && x > 0.14 && x < 0.36) v = 1.0;
      if (y > 0.15 && y < 0.3 && x > 0.6 && x < 0.9 && x - 0.6 > 2 * (y - 0.15)) v = 0.65;
      if (y > 0.3 && y < 0.34 && x > 0.18 && x < 0.4) v = 0.3;
      img[static_cast<Index>(r) * w + c] = v;
    }
  }
  return img;
}

Vector gaussian_kernel(int kh, int kw, double width) {
  Vector k(static_cast<Index>(kh) * kw);
  for (int a = 0; a < kh; ++a) {
    for (int b = 0; b < kw; ++b) {
      const double dy = a - kh / 2, dx = b - kw / 2;
      k[static_cast<Index>(a) * kw + b] = std::exp(-(dx * dx + dy * dy) / (2 * width * width));
    }
  }
  return k / k.sum();
}

Vector delta_kernel(int kh, int kw) {
  Vector k = Vector::Zero(static_cast<Index>(kh) * kw);
  k[static_cast<Index>(kh / 2) * kw + kw / 2] = 1.0;
  return k;
}

// Smooth coil profiles normalized so that sum_c |theta_c|^2 = 1 at every pixel.
CVector synthetic_maps(int h, int w, int coils) {
  CVector maps(static_cast<Index>(coils) * h * w);
  const double n = std::max(h, w);
  for (int c = 0; c < coils; ++c) {
    const double phi = 2 * std::numbers::pi * c / coils;
    const double cy = h / 2.0 + 0.7 * h * std::sin(phi), cx = w / 2.0 + 0.7 * w * std::cos(phi);
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < w; ++col) {
        const double d2 = (r - cy) * (r - cy) + (col - cx) * (col - cx);
        const double mag = std::exp(-d2 / (2 * (0.6 * n) * (0.6 * n)));
        const double phase = 0.6 * std::numbers::pi * (r * std::cos(phi) + col * std::sin(phi)) / n;
        maps[static_cast<Index>(c) * h * w + static_cast<Index>(r) * w + col] =
            std::polar(mag, phase);
      }
    }
  }
  const Index p = static_cast<Index>(h) * w;
  for (Index i = 0; i < p; ++i) {
    double s = 0.0;
    for (int c = 0; c < coils; ++c) s += std::norm(maps[c * p + i]);
    for (int c = 0; c < coils; ++c) maps[c * p + i] /= std::sqrt(s);
  }
  return maps;
}

// Cartesian row sampling: every `acceleration`-th phase-encode row plus
// `acs` rows around DC (DC sits at row 0 of the unshifted grid).
std::vector<bool> cartesian_mask(int h, int w, int acceleration, int acs) {
  std::vector<bool> mask(static_cast<std::size_t>(h) * w, false);
  for (int r = 0; r < h; ++r) {
    const int centred = r <= h / 2 ? r : r - h;
    const bool keep = r % acceleration == 0 || (2 * std::abs(centred) < acs) ||
                      (acs > 0 && 2 * std::abs(centred) == acs && centred < 0);
    if (!keep) continue;
    for (int c = 0; c < w; ++c) mask[static_cast<std::size_t>(r) * w + c] = true;
  }
  return mask;
}

Image load_image_source(const json& src, const std::string& path, const std::string& base) {
  const std::string kind = text(src, "source", path);
  if (kind == "synthetic") {
    check_keys(src, path, {"source", "shape"});
    const auto [h, w] = shape(src, "shape", path);
    return {h, w, phantom(h, w)};
  }
  if (kind == "pgm" || kind == "csv") {
    check_keys(src, path, {"source", "path"});
    const std::string file = resolve(base, text(src, "path", path));
    if (!fs::exists(file)) bad(join(path, "path"), "file not found: " + file);
    try {
      return kind == "pgm" ? read_pgm(file) : read_csv_matrix(file);
    } catch (const std::runtime_error& e) {
      bad(join(path, "path"), e.what());
    }
  }
  bad(join(path, "source"), "unknown image source '" + kind + "' (synthetic, pgm, csv)");
}

// Physical kernel from a kernel description.
Vector kernel_source(const json& src, const std::string& path, int kh, int kw,
                     const std::string& base, const Vector* truth, std::uint64_t seed) {
  const std::string kind = text(src, "source", path);
  if (kind == "gaussian") {
    check_keys(src, path, {"source", "width"});
    return gaussian_kernel(kh, kw, positive(src, "width", path));
  }
  if (kind == "delta") {
    check_keys(src, path, {"source"});
    return delta_kernel(kh, kw);
  }
  if (kind == "csv") {
    check_keys(src, path, {"source", "path"});
    const std::string file = resolve(base, text(src, "path", path));
    if (!fs::exists(file)) bad(join(path, "path"), "file not found: " + file);
    Image m;
    try {
      m = read_csv_matrix(file);
    } catch (const std::runtime_error& e) {
      bad(join(path, "path"), e.what());
    }
    if (m.height != kh || m.width != kw) {
      bad(join(path, "path"), "kernel file is " + std::to_string(m.height) + "x" +
                                  std::to_string(m.width) + ", expected " + std::to_string(kh) +
                                  "x" + std::to_string(kw));
    }
    return m.pixels;
  }
  if (kind == "truth" || kind == "perturb") {
    if (truth == nullptr) bad(join(path, "source"), "'" + kind + "' needs a ground-truth kernel");
    if (kind == "truth") {
      check_keys(src, path, {"source"});
      return *truth;
    }
    check_keys(src, path, {"source", "relative"});
    const double rel = positive(src, "relative", path);
    Rng rng(derive_seed(seed, 0x7e7a));
    const Vector e = random_unit_vector(truth->size(), rng);
    return *truth + rel * truth->norm() * e;
  }
  bad(join(path, "source"), "unknown kernel source '" + kind + "'");
}

int blocks_of(const json& problem) {
  const std::string kind = problem.at("kind").get<std::string>();
  if (kind == "deconvolution") return problem.value("blocks", 1);
  return 2;
}

// ---------------------------------------------------------------------------
// Config sections

void validate_problem_section(const json& p) {
  const std::string path = "problem";
  check_object(p, path);
  const std::string kind = text(p, "kind", path);
  if (kind == "blind-deconvolution") {
    check_keys(p, path, {"kind", "image", "kernel_shape", "kernel", "theta0", "kernel_scale",
                         "noise_sigma", "seed"});
    required(p, "kernel", path);
    required(p, "theta0", path);
    shape(p, "kernel_shape", path);
    if (p.contains("kernel_scale") && !p.at("kernel_scale").is_number() &&
        p.at("kernel_scale") != "auto") {
      bad("problem.kernel_scale", "expected a positive number or \"auto\"");
    }
    if (p.contains("kernel_scale") && p.at("kernel_scale").is_number()) {
      positive(p, "kernel_scale", path);
    }
  } else if (kind == "deconvolution") {
    check_keys(p, path, {"kind", "image", "kernel_shape", "kernel", "blocks", "noise_sigma",
                         "seed"});
    required(p, "kernel", path);
    shape(p, "kernel_shape", path);
    const int b = integer(p, "blocks", path, 1);
    if (b < 1) bad("problem.blocks", "must be >= 1");
  } else if (kind == "multi-coil") {
    check_keys(p, path, {"kind", "image", "coils", "acceleration", "acs_lines", "theta0",
                         "noise_sigma", "seed"});
    if (integer(p, "coils", path) < 1) bad("problem.coils", "must be >= 1");
    if (integer(p, "acceleration", path, 1) < 1) bad("problem.acceleration", "must be >= 1");
    if (integer(p, "acs_lines", path, 0) < 0) bad("problem.acs_lines", "must be >= 0");
    required(p, "theta0", path);
  } else {
    bad("problem.kind", "unknown problem kind '" + kind +
                            "' (blind-deconvolution, deconvolution, multi-coil)");
  }
  check_object(required(p, "image", path), "problem.image");
  if (number(p, "noise_sigma", path, 0.0) < 0.0) bad("problem.noise_sigma", "must be >= 0");
}

SolverConfig parse_solver(const json& s) {
  const std::string path = "solver";
  check_keys(s, path, {"step", "step_factor", "schedule", "seed", "max_iterations",
                       "stop_tolerance", "ball_radius_factor", "recertify_every",
                       "record_objective"});
  SolverConfig c;
  if (s.contains("step")) c.step = positive(s, "step", path);
  c.step_factor = positive(s, "step_factor", path, c.step_factor);
  try {
    c.schedule = parse_schedule_kind(text(s, "schedule", path, "sequential"));
  } catch (const std::invalid_argument& e) {
    bad("solver.schedule", e.what());
  }
  c.seed = seed_value(s, "seed", path, 0);
  c.max_iterations = integer(s, "max_iterations", path, c.max_iterations);
  if (c.max_iterations < 1) bad("solver.max_iterations", "must be >= 1");
  c.stop_tolerance = positive(s, "stop_tolerance", path, c.stop_tolerance);
  c.ball_radius_factor = number(s, "ball_radius_factor", path, c.ball_radius_factor);
  if (c.ball_radius_factor < 1.0) bad("solver.ball_radius_factor", "must be >= 1");
  c.recertify_every = integer(s, "recertify_every", path, 0);
  if (c.recertify_every < 0) bad("solver.recertify_every", "must be >= 0");
  c.record_objective = flag(s, "record_objective", path, true);
  return c;
}

TheoryCheckConfig parse_theory(const json& t) {
  const std::string path = "theory_checks";
  check_keys(t, path, {"enabled", "reference_factor", "ensemble_seeds", "convergence_ratio"});
  TheoryCheckConfig c;
  c.enabled = flag(t, "enabled", path, false);
  c.reference_factor = integer(t, "reference_factor", path, c.reference_factor);
  if (c.reference_factor < 1) bad("theory_checks.reference_factor", "must be >= 1");
  c.ensemble_seeds = integer(t, "ensemble_seeds", path, c.ensemble_seeds);
  if (c.ensemble_seeds < 10) bad("theory_checks.ensemble_seeds", "must be >= 10");
  c.convergence_ratio = positive(t, "convergence_ratio", path, c.convergence_ratio);
  return c;
}

void validate_denoiser_entry(const json& d, const std::string& path) {
  check_object(d, path);
  const std::string kind = text(d, "kind", path);
  if (kind == "identity") {
    check_keys(d, path, {"kind", "inexact"});
  } else if (kind == "soft-threshold") {
    check_keys(d, path, {"kind", "threshold", "inexact"});
    positive(d, "threshold", path);
  } else if (kind == "tv") {
    check_keys(d, path, {"kind", "weight", "iterations", "inexact"});
    positive(d, "weight", path);
    if (integer(d, "iterations", path, 30) < 1) bad(join(path, "iterations"), "must be >= 1");
  } else if (kind == "mmse-gaussian") {
    check_keys(d, path, {"kind", "mean", "variance", "sigma", "inexact"});
    required(d, "mean", path);
    positive(d, "variance", path);
    positive(d, "sigma", path);
  } else if (kind == "mmse-gmm") {
    check_keys(d, path, {"kind", "weights", "means", "variances", "sigma", "inexact"});
    for (const char* key : {"weights", "means", "variances"}) {
      if (!required(d, key, path).is_array() || d.at(key).empty()) {
        bad(join(path, key), "expected a non-empty array");
      }
    }
    if (d.at("weights").size() != d.at("means").size() ||
        d.at("weights").size() != d.at("variances").size()) {
      bad(join(path, "weights"), "weights, means and variances differ in length");
    }
    positive(d, "sigma", path);
  } else if (kind == "kernel-family") {
    check_keys(d, path, {"kind", "widths", "count", "variance_floor", "sigma", "inexact"});
    const json& w = required(d, "widths", path);
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number() ||
        !(w[0].get<double>() > 0.0) || !(w[1].get<double>() >= w[0].get<double>())) {
      bad(join(path, "widths"), "expected [min, max] with 0 < min <= max");
    }
    if (integer(d, "count", path, 16) < 2) bad(join(path, "count"), "must be >= 2");
    positive(d, "variance_floor", path, 1e-6);
    positive(d, "sigma", path);
  } else {
    bad(join(path, "kind"), "unknown denoiser '" + kind +
                                "' (identity, soft-threshold, tv, mmse-gaussian, mmse-gmm, "
                                "kernel-family)");
  }
  if (d.contains("inexact")) {
    const json& e = d.at("inexact");
    const std::string ep = join(path, "inexact");
    check_keys(e, ep, {"schedule", "eps0"});
    const std::string s = text(e, "schedule", ep);
    if (s != "zero" && s != "constant" && s != "square-summable") {
      bad(join(ep, "schedule"), "expected zero, constant or square-summable");
    }
    if (number(e, "eps0", ep, 0.0) < 0.0) bad(join(ep, "eps0"), "must be >= 0");
  }
}

// ---------------------------------------------------------------------------
// Output helpers

void write_text(const fs::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vector image_part(const BlockVector& x, int theta) {
  Index n = 0;
  for (int i = 1; i <= x.num_blocks(); ++i) n += i == theta ? 0 : x.layout().size(i);
  Vector out(n);
  Index at = 0;
  for (int i = 1; i <= x.num_blocks(); ++i) {
    if (i == theta) continue;
    out.segment(at, x.layout().size(i)) = x.block(i);
    at += x.layout().size(i);
  }
  return out;
}

Vector magnitude(const Vector& pairs) {
  Vector m(pairs.size() / 2);
  for (Index i = 0; i < m.size(); ++i) m[i] = std::hypot(pairs[2 * i], pairs[2 * i + 1]);
  return m;
}

struct Metrics {
  double rmse_x = kNaN;
  double ssim_x = kNaN;
  double rmse_theta = kNaN;
};

Metrics measure(const Problem& p, const BlockVector& x) {
  const int theta = p.parameter_block();
  Metrics m;
  const Vector est = image_part(x, theta), truth = image_part(p.truth, theta);
  m.rmse_x = rmse(est, truth);
  if (std::min(p.height, p.width) >= 11) {
    if (p.complex_image) {
      const Vector t = magnitude(truth);
      SsimOptions o;
      o.dynamic_range = t.maxCoeff();
      m.ssim_x = ssim(magnitude(est), t, p.height, p.width, o);
    } else {
      m.ssim_x = ssim(est, truth, p.height, p.width);
    }
  }
  if (theta != 0) m.rmse_theta = rmse(x.block(theta), p.truth.block(theta));
  return m;
}

// Final-iterate files: image (PGM + full-precision CSV) and parameters.
void write_iterate(const Problem& p, const BlockVector& x, const fs::path& dir) {
  fs::create_directories(dir);
  const int theta = p.parameter_block();
  const Vector img = image_part(x, theta);
  if (p.complex_image) {
    Vector re(img.size() / 2), im(img.size() / 2);
    for (Index i = 0; i < re.size(); ++i) {
      re[i] = img[2 * i];
      im[i] = img[2 * i + 1];
    }
    write_csv_matrix((dir / "image_re.csv").string(), {p.height, p.width, re});
    write_csv_matrix((dir / "image_im.csv").string(), {p.height, p.width, im});
    const Vector mag = magnitude(img);
    const double peak = magnitude(image_part(p.truth, theta)).maxCoeff();
    write_pgm((dir / "image.pgm").string(), {p.height, p.width, mag / peak});
  } else {
    write_csv_matrix((dir / "image.csv").string(), {p.height, p.width, img});
    write_pgm((dir / "image.pgm").string(), {p.height, p.width, img});
  }
  if (theta == 0) return;
  const Vector t = x.block(theta);
  if (p.kind == "blind-deconvolution") {
    // physical kernel s * theta
    write_csv_matrix((dir / "kernel.csv").string(),
                     {p.kernel_height, p.kernel_width, p.kernel_scale * t});
  } else {
    Vector re(t.size() / 2), im(t.size() / 2);
    for (Index i = 0; i < re.size(); ++i) {
      re[i] = t[2 * i];
      im[i] = t[2 * i + 1];
    }
    write_csv_matrix((dir / "maps_re.csv").string(), {p.coils * p.height, p.width, re});
    write_csv_matrix((dir / "maps_im.csv").string(), {p.coils * p.height, p.width, im});
  }
}

// ---------------------------------------------------------------------------
// Theory checks for one bc-pnp run

struct CheckOutcome {
  json report;
  bool holds = true;
  std::vector<std::string> failures;
};

CheckOutcome theory_checks(const ExperimentConfig& cfg, const Problem& problem,
                           const std::vector<Denoiser>& denoisers, const BlockVector& x0,
                           const SolveResult& run) {
  CheckOutcome out;
  json& rep = out.report;
  const int b = problem.fidelity->layout().num_blocks();
  const double gamma = run.step;
  const bool computable = objective_computable(denoisers);
  const double m_max = computable ? implicit_reg_lipschitz_max(denoisers, gamma) : kNaN;
  if (!computable) {
    rep["skipped"] = "objective not computable: every block needs a Gaussian MMSE denoiser";
    return out;
  }
  const TheoryConstants c =
      theory_constants(gamma, run.lipschitz.max, run.lipschitz.full, m_max, b);
  rep["constants"] = to_json(c);
  rep["interpretation"] =
      "L is the certified ball value for the bilinear fidelity; f* is the minimum of a reference "
      "run minus a 1% margin";
  if (!c.valid()) {
    out.holds = false;
    out.failures.push_back("step size violates Theorem precondition (gamma >= 1/L_max)");
    return out;
  }
  if (run.left_ball) {
    rep["left_ball_iteration"] = run.left_ball_iteration;
    out.holds = false;
    out.failures.push_back("iterates left the certification ball at k = " +
                           std::to_string(run.left_ball_iteration));
  }

  const DescentReport descent = check_descent(run.trace, c);
  rep["descent"] = to_json(descent);
  if (!descent.holds) {
    out.holds = false;
    out.failures.push_back("descent lemma violated");
  }

  if (run.termination == Termination::tolerance) {
    const bool decreased = run.trace.final_residual_norm2 < run.trace.at(1).residual_norm2;
    rep["fixed_point_residual_decreased"] = decreased;
    if (!decreased) {
      out.holds = false;
      out.failures.push_back("||G|| did not decrease although the run met the tolerance");
    }
  }

  // f* from a longer reference run
  SolverConfig ref_cfg = cfg.solver;
  ref_cfg.mode = SolverMode::bc_pnp;
  ref_cfg.max_iterations = cfg.solver.max_iterations * cfg.theory.reference_factor;
  ref_cfg.stop_tolerance = 1e-300;
  ref_cfg.step = gamma;
  const SolveResult ref = Solver(*problem.fidelity, denoisers, ref_cfg).solve(x0);
  double f_min = std::numeric_limits<double>::infinity();
  for (const auto& row : ref.trace.rows) f_min = std::min(f_min, row.f);
  const double f_star = f_star_from_reference(f_min);
  rep["f_star"] = f_star;

  if (cfg.solver.schedule == ScheduleKind::sequential) {
    const Theorem1Report t1 = check_theorem1(run.trace, c, f_star);
    rep["theorem1"] = to_json(t1);
    if (!t1.holds) {
      out.holds = false;
      out.failures.push_back("sequential-schedule bound violated");
    }
  } else if (cfg.solver.schedule == ScheduleKind::random_iid) {
    std::vector<IterateTrace> traces;
    for (int s = 0; s < cfg.theory.ensemble_seeds; ++s) {
      SolverConfig e = cfg.solver;
      e.mode = SolverMode::bc_pnp;
      e.seed = derive_seed(cfg.solver.seed, 0xe5e, static_cast<std::uint64_t>(s));
      e.step = gamma;
      e.stop_tolerance = 1e-300;
      const std::vector<Denoiser> ds = build_denoisers(cfg, problem, e.seed);
      traces.push_back(Solver(*problem.fidelity, ds, e).solve(x0).trace);
    }
    Theorem2Options opts;
    opts.convergence_ratio = cfg.theory.convergence_ratio;
    bool square_summable = false;
    for (const auto& d : cfg.denoisers) {
      if (d.contains("inexact") && d["inexact"].value("schedule", "") == "square-summable") {
        square_summable = true;
      }
    }
    opts.check_convergence = square_summable;
    const Theorem2Report t2 = check_theorem2(traces, c, f_star, opts);
    rep["theorem2"] = to_json(t2);
    if (!t2.holds) {
      out.holds = false;
      out.failures.push_back("random-schedule bound violated");
    }
  } else {
    rep["note"] = "epoch-shuffle schedule: only the descent lemma is checked";
  }
  rep["holds"] = out.holds;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const json& doc, const std::string& base_dir) {
  check_keys(doc, "", {"problem", "denoisers", "solver", "modes", "theory_checks", "output"});
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.problem = required(doc, "problem", "");
  validate_problem_section(cfg.problem);
  cfg.seed = seed_value(cfg.problem, "seed", "problem", 0);

  cfg.denoisers = required(doc, "denoisers", "");
  if (!cfg.denoisers.is_array()) bad("denoisers", "expected an array with one entry per block");
  const int b = blocks_of(cfg.problem);
  if (static_cast<int>(cfg.denoisers.size()) != b) {
    bad("denoisers", "problem has " + std::to_string(b) + " block(s) but " +
                         std::to_string(cfg.denoisers.size()) + " denoiser(s) are configured");
  }
  for (std::size_t i = 0; i < cfg.denoisers.size(); ++i) {
    validate_denoiser_entry(cfg.denoisers[i], "denoisers[" + std::to_string(i) + "]");
  }

  cfg.solver = parse_solver(doc.value("solver", json::object()));

  const json& modes = required(doc, "modes", "");
  if (!modes.is_array() || modes.empty()) bad("modes", "expected a non-empty array");
  std::set<SolverMode> seen;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const std::string path = "modes[" + std::to_string(i) + "]";
    if (!modes[i].is_string()) bad(path, "expected a mode name");
    SolverMode m;
    try {
      m = parse_solver_mode(modes[i].get<std::string>());
    } catch (const std::invalid_argument& e) {
      bad(path, e.what());
    }
    if (!seen.insert(m).second) bad(path, "duplicate mode");
    if (m != SolverMode::bc_pnp && cfg.problem.at("kind") == "deconvolution" &&
        m != SolverMode::pnp_ista) {
      bad(path, "mode needs a blind problem with a parameter block");
    }
    cfg.modes.push_back(m);
  }

  cfg.theory = parse_theory(doc.value("theory_checks", json::object()));
  cfg.output_dir = text(doc, "output", "", "out");

  // referenced input files must exist
  for (const char* key : {"image", "kernel", "theta0"}) {
    if (!cfg.problem.contains(key)) continue;
    const json& src = cfg.problem.at(key);
    check_object(src, join("problem", key));
    if (!src.contains("path")) continue;
    const std::string path = join(join("problem", key), "path");
    const std::string file = resolve(base_dir, text(src, "path", join("problem", key)));
    if (!fs::exists(file)) bad(path, "file not found: " + file);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return parse_config(doc, fs::absolute(path).parent_path().string());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Problem build_problem(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  Problem out;
  out.kind = p.at("kind").get<std::string>();
  const double noise = number(p, "noise_sigma", "problem", 0.0);
  const Image img = load_image_source(p.at("image"), "problem.image", cfg.base_dir);
  out.height = img.height;
  out.width = img.width;

  if (out.kind == "blind-deconvolution" || out.kind == "deconvolution") {
    const auto [kh, kw] = shape(p, "kernel_shape", "problem");
    out.kernel_height = kh;
    out.kernel_width = kw;
    if (kh > img.height || kw > img.width) {
      bad("problem.kernel_shape", "kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                                      " is larger than the image " + std::to_string(img.height) +
                                      "x" + std::to_string(img.width));
    }
    if (kh % 2 == 0 || kw % 2 == 0) bad("problem.kernel_shape", "kernel dimensions must be odd");
    const Vector k_true =
        kernel_source(p.at("kernel"), "problem.kernel", kh, kw, cfg.base_dir, nullptr, cfg.seed);
    const BlindConvolutionModel unit(img.height, img.width, kh, kw);
    const Vector y = synthesize(unit, k_true, img.pixels, noise, derive_seed(cfg.seed, 0x4015e));

    if (out.kind == "deconvolution") {
      const int b = integer(p, "blocks", "problem", 1);
      if (b > img.height) bad("problem.blocks", "more blocks than image rows");
      std::vector<Index> sizes;
      for (int i = 0; i < b; ++i) {
        const int rows = img.height / b + (i < img.height % b ? 1 : 0);
        sizes.push_back(static_cast<Index>(rows) * img.width);
      }
      auto op = std::make_shared<ConvolutionOperator>(unit, k_true);
      out.fidelity = std::make_unique<LinearFidelity>(op, y, BlockLayout(sizes));
      out.truth = BlockVector(out.fidelity->layout(), img.pixels);
      return out;
    }

    const Vector k0 = kernel_source(p.at("theta0"), "problem.theta0", kh, kw, cfg.base_dir,
                                    &k_true, cfg.seed);
    // balance the block constants: L_v ~ max|k0^|^2, L_theta ~ s^2 max|v0^|^2
    double s = 1.0;
    const json scale = p.value("kernel_scale", json("auto"));
    if (scale.is_number()) {
      s = scale.get<double>();
    } else {
      const Vector v0 = unit.adjoint_image(k0, y);
      const double k_peak = dft2(unit.embed_kernel(k0).cast<Complex>(), img.height, img.width)
                                .cwiseAbs()
                                .maxCoeff();
      const double v_peak =
          dft2(v0.cast<Complex>(), img.height, img.width).cwiseAbs().maxCoeff();
      if (k_peak > 0.0 && v_peak > 0.0) s = k_peak / v_peak;
    }
    out.kernel_scale = s;
    BlindConvolutionModel model(img.height, img.width, kh, kw, s);
    out.fidelity = std::make_unique<BlindConvolutionFidelity>(model, y);
    out.truth = BlockVector::from_blocks({img.pixels, k_true / s});
    out.theta0 = k0 / s;
    return out;
  }

  // multi-coil
  const int coils = integer(p, "coils", "problem");
  const int accel = integer(p, "acceleration", "problem", 1);
  const int acs = integer(p, "acs_lines", "problem", 0);
  out.coils = coils;
  out.complex_image = true;
  const CVector maps = synthetic_maps(img.height, img.width, coils);
  const CVector image = img.pixels.cast<Complex>();
  MultiCoilModel model(img.height, img.width, coils, cartesian_mask(img.height, img.width, accel, acs));
  const CVector y = synthesize(model, maps, image, noise, derive_seed(cfg.seed, 0x4015e));
  out.fidelity = std::make_unique<MultiCoilFidelity>(model, y);
  const Vector maps_pairs = to_real_pairs(maps);
  out.truth = BlockVector::from_blocks({to_real_pairs(image), maps_pairs});

  const json& t0 = p.at("theta0");
  const std::string src = text(t0, "source", "problem.theta0");
  if (src == "truth") {
    check_keys(t0, "problem.theta0", {"source"});
    out.theta0 = maps_pairs;
  } else if (src == "perturb") {
    check_keys(t0, "problem.theta0", {"source", "relative"});
    const double rel = positive(t0, "relative", "problem.theta0");
    Rng rng(derive_seed(cfg.seed, 0x7e7a));
    out.theta0 = maps_pairs + rel * maps_pairs.norm() * random_unit_vector(maps_pairs.size(), rng);
  } else if (src == "uniform") {
    check_keys(t0, "problem.theta0", {"source"});
    Vector u = Vector::Zero(maps_pairs.size());
    for (Index i = 0; i < u.size(); i += 2) u[i] = 1.0 / std::sqrt(static_cast<double>(coils));
    out.theta0 = u;
  } else {
    bad("problem.theta0.source", "unknown coil-map start '" + src + "' (truth, perturb, uniform)");
  }
  return out;
}

std::vector<Denoiser> build_denoisers(const ExperimentConfig& cfg, const Problem& problem,
                                      std::uint64_t seed) {
  std::vector<Denoiser> out;
  const BlockLayout& layout = problem.fidelity->layout();
  const int theta = problem.parameter_block();
  for (int i = 1; i <= layout.num_blocks(); ++i) {
    const json& d = cfg.denoisers[static_cast<std::size_t>(i - 1)];
    const std::string path = "denoisers[" + std::to_string(i - 1) + "]";
    const std::string kind = d.at("kind").get<std::string>();
    const Index n = layout.size(i);
    // Kernel-block priors are given in physical units; the block holds k / s.
    const double unit = (i == theta && problem.kind == "blind-deconvolution")
                            ? problem.kernel_scale
                            : 1.0;
    Denoiser den = Denoiser::identity();
    if (kind == "soft-threshold") {
      den = Denoiser::soft_threshold(d.at("threshold").get<double>() / unit);
    } else if (kind == "tv") {
      if (problem.complex_image || i == theta) {
        bad(join(path, "kind"), "the tv denoiser needs a real image block");
      }
      const int rows = static_cast<int>(n / problem.width);
      den = Denoiser::tv_prox(d.at("weight").get<double>(), rows, problem.width,
                              d.value("iterations", 30));
    } else if (kind == "mmse-gaussian") {
      GaussianPrior prior;
      prior.mean = vector_value(d.at("mean"), n, join(path, "mean")) / unit;
      prior.variance = d.at("variance").get<double>() / (unit * unit);
      den = Denoiser::mmse(prior, d.at("sigma").get<double>() / unit);
    } else if (kind == "mmse-gmm") {
      GmmPrior prior;
      prior.weights = d.at("weights").get<std::vector<double>>();
      for (std::size_t c = 0; c < prior.weights.size(); ++c) {
        prior.means.push_back(
            vector_value(d.at("means")[c], n, join(path, "means[" + std::to_string(c) + "]")) /
            unit);
        prior.variances.push_back(d.at("variances")[c].get<double>() / (unit * unit));
      }
      try {
        validate(prior);
      } catch (const std::invalid_argument& e) {
        bad(path, e.what());
      }
      den = Denoiser::mmse(prior, d.at("sigma").get<double>() / unit);
    } else if (kind == "kernel-family") {
      if (problem.kind != "blind-deconvolution" || i != theta) {
        bad(join(path, "kind"), "kernel-family applies to the kernel block of blind deconvolution");
      }
      // Gaussian prior fitted to normalized Gaussian kernels of evenly spaced widths
      const double lo = d.at("widths")[0].get<double>(), hi = d.at("widths")[1].get<double>();
      const int count = d.value("count", 16);
      std::vector<Vector> family;
      for (int j = 0; j < count; ++j) {
        const double w = lo + (hi - lo) * j / (count - 1);
        family.push_back(gaussian_kernel(problem.kernel_height, problem.kernel_width, w));
      }
      Vector mean = Vector::Zero(n);
      for (const auto& k : family) mean += k;
      mean /= count;
      double var = 0.0;
      for (const auto& k : family) var += (k - mean).squaredNorm();
      var = std::max(var / (count * static_cast<double>(n)), d.value("variance_floor", 1e-6));
      den = Denoiser::mmse(GaussianPrior{mean / unit, var / (unit * unit)},
                           d.at("sigma").get<double>() / unit);
    } else if (kind != "identity") {
      bad(join(path, "kind"), "unknown denoiser");
    }
    if (d.contains("inexact")) {
      const json& e = d.at("inexact");
      const std::string s = e.at("schedule").get<std::string>();
      const double eps0 = e.value("eps0", 0.0);
      ErrorSchedule sched = s == "constant"          ? ErrorSchedule::constant(eps0, seed)
                            : s == "square-summable" ? ErrorSchedule::square_summable(eps0, seed)
                                                     : ErrorSchedule::zero();
      den = Denoiser::inexact(den, sched);
    }
    out.push_back(std::move(den));
  }
  return out;
}

namespace {

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& options) {
  if (options.seed_override) {
    cfg.seed = *options.seed_override;
    cfg.solver.seed = *options.seed_override;
  }
  if (options.output_dir) cfg.output_dir = *options.output_dir;
  return cfg;
}

}  // namespace

std::vector<std::string> validate_experiment(const std::string& config_path,
                                             const RunOptions& options) {
  std::vector<std::string> diags;
  ExperimentConfig cfg;
  try {
    cfg = apply_overrides(load_config(config_path), options);
  } catch (const ConfigError& e) {
    diags.push_back(e.what());
    return diags;
  }
  Problem problem;
  std::vector<Denoiser> denoisers;
  try {
    problem = build_problem(cfg);
    denoisers = build_denoisers(cfg, problem, cfg.solver.seed);
  } catch (const ConfigError& e) {
    diags.push_back(e.what());
    return diags;
  } catch (const std::exception& e) {
    diags.push_back(std::string("problem setup failed: ") + e.what());
    return diags;
  }

  const int b = problem.fidelity->layout().num_blocks();
  for (std::size_t i = 0; i < denoisers.size(); ++i) {
    if (const Prior* pr = denoisers[i].prior(); pr != nullptr &&
        dimension(*pr) != problem.fidelity->layout().size(static_cast<int>(i) + 1)) {
      diags.push_back("denoisers[" + std::to_string(i) + "]: prior dimension does not match block");
    }
  }
  if (cfg.theory.enabled) {
    if (b < 2 && cfg.solver.schedule == ScheduleKind::random_iid) {
      diags.push_back("schedule random-iid with a single block is deterministic");
    }
    if (!objective_computable(denoisers)) {
      diags.push_back(
          "theory checks need Gaussian MMSE denoisers on every block (objective not computable)");
    }
    if (std::find(cfg.modes.begin(), cfg.modes.end(), SolverMode::bc_pnp) == cfg.modes.end()) {
      diags.push_back("theory checks apply to bc-pnp, which is not among the modes");
    }
  }
  try {
    const BlockVector x0 = initialize(*problem.fidelity, problem.theta0);
    const LipschitzEstimate est =
        problem.fidelity->estimate_lipschitz(x0, cfg.solver.ball_radius_factor);
    const double gamma = cfg.solver.step ? *cfg.solver.step : cfg.solver.step_factor / est.max;
    if (cfg.theory.enabled && !(gamma * est.max < 1.0)) {
      diags.push_back("step size violates Theorem precondition: gamma = " + fmt(gamma) +
                      " >= 1/L_max = " + fmt(1.0 / est.max));
    }
    if (est.warning) diags.push_back("warning: power iteration did not converge at x0");
  } catch (const std::exception& e) {
    diags.push_back(std::string("Lipschitz certification failed: ") + e.what());
  }
  return diags;
}

int run_experiment(const std::string& config_path, const RunOptions& options, std::ostream& log) {
  ExperimentConfig cfg;
  Problem problem;
  std::vector<Denoiser> denoisers;
  try {
    cfg = apply_overrides(load_config(config_path), options);
    problem = build_problem(cfg);
    denoisers = build_denoisers(cfg, problem, cfg.solver.seed);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  bool strict_failure = false;
  try {
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    const int theta = problem.parameter_block();
    const BlockVector x_init = initialize(*problem.fidelity, problem.theta0);
    write_iterate(problem, problem.truth, out_dir / "truth");
    write_iterate(problem, x_init, out_dir / "initial");

    std::ostringstream metrics;
    metrics << "mode,rmse_x,ssim_x,rmse_theta,iterations,termination\n";
    const Metrics m0 = measure(problem, x_init);
    metrics << "initial," << fmt(m0.rmse_x) << ',' << fmt(m0.ssim_x) << ',' << fmt(m0.rmse_theta)
            << ",0,none\n";

    for (SolverMode mode : cfg.modes) {
      const std::string name = to_string(mode);
      SolverConfig sc = cfg.solver;
      sc.mode = mode;
      BlockVector x0 = x_init;
      if (mode == SolverMode::pnp_oracle_theta) {
        x0 = initialize(*problem.fidelity, problem.truth.block(theta));
      }
      log << "running " << name << " ...\n";
      const SolveResult r = Solver(*problem.fidelity, denoisers, sc).solve(x0, &problem.truth);
      const Metrics m = measure(problem, r.x);
      metrics << name << ',' << fmt(m.rmse_x) << ',' << fmt(m.ssim_x) << ',' << fmt(m.rmse_theta)
              << ',' << r.trace.iterations() << ',' << to_string(r.termination) << '\n';

      const fs::path dir = out_dir / name;
      fs::create_directories(dir);
      write_trace_csv(r.trace, (dir / "trace.csv").string());
      write_iterate(problem, r.x, dir);

      json report;
      report["mode"] = name;
      report["problem"] = problem.kind;
      report["schedule"] = to_string(sc.schedule);
      report["seed"] = sc.seed;
      report["step"] = r.step;
      report["kernel_scale"] = problem.kernel_scale;
      report["iterations"] = r.trace.iterations();
      report["termination"] = to_string(r.termination);
      report["lipschitz"] = {{"blocks", r.lipschitz.block},
                             {"max", r.lipschitz.max},
                             {"full", r.lipschitz.full},
                             {"ball_radius_factor", sc.ball_radius_factor}};
      report["left_ball"] = r.left_ball;
      report["power_iteration_warning"] = r.power_iteration_warning;
      report["metrics"] = {{"rmse_x", m.rmse_x}, {"ssim_x", m.ssim_x}, {"rmse_theta", m.rmse_theta}};
      report["final_Gnorm2"] = r.trace.final_residual_norm2;

      if (cfg.theory.enabled && mode == SolverMode::bc_pnp) {
        const CheckOutcome chk = theory_checks(cfg, problem, denoisers, x0, r);
        report["theory"] = chk.report;
        for (const auto& f : chk.failures) log << "theory check failed (" << name << "): " << f << '\n';
        if (!chk.holds && options.strict_checks) strict_failure = true;
      }
      write_text(dir / "report.json", report.dump(2) + "\n");
    }
    write_text(out_dir / "metrics.csv", metrics.str());
    log << "wrote " << (out_dir / "metrics.csv").string() << '\n';
  } catch (const NonFiniteIterate& e) {
    log << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
  return strict_failure ? kExitStrict : kExitOk;
}

}  // namespace bcpnp
