#include "bcpnp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bcpnp {

bool TheoryConstants::valid() const {
  const double all[] = {gamma, l_max, alpha, lambda, a1, a2, b1, b2, c1, c2, theta, d1, d2};
  return alpha > 1.0 && std::all_of(std::begin(all), std::end(all), [](double v) {
           return std::isfinite(v) && v > 0.0;
         });
}

TheoryConstants theory_constants(double gamma, double l_max, double l_full, double m_max,
                                 int blocks) {
  if (!(gamma > 0.0) || !(l_max > 0.0) || blocks < 1) {
    throw std::invalid_argument("theory constants: need gamma > 0, L_max > 0, b >= 1");
  }
  TheoryConstants c;
  c.gamma = gamma;
  c.l_max = l_max;
  c.l_full = l_full;
  c.m_max = m_max;
  c.blocks = blocks;
  const double b = blocks;
  c.alpha = 1.0 / (gamma * l_max);
  c.lambda = c.alpha * l_max + m_max;
  c.a1 = c.alpha * l_max + b * l_full;
  c.a2 = c.a1 + l_full + m_max;
  c.b1 = 4.0 * c.a1 * c.a1 / ((c.alpha - 1.0) * l_max);
  c.b2 = 2.0 * b * c.a2 * c.a2 + c.lambda * c.a1 * c.a1;
  c.c1 = c.b1;
  c.c2 = b * c.b2;
  c.theta = (c.alpha - 1.0) / (2.0 * c.alpha * c.alpha * b * l_max);
  c.d1 = 1.0 / c.theta;
  c.d2 = c.lambda / (2.0 * c.theta);
  return c;
}

double epsilon_bar_sq(const IterateTrace& trace, std::int64_t t) {
  if (t < 1 || t > trace.iterations()) throw std::out_of_range("epsilon_bar_sq: t out of range");
  double sum = 0.0;
  for (std::int64_t k = 1; k <= t; ++k) sum += trace.at(k).epsilon * trace.at(k).epsilon;
  return sum / static_cast<double>(t);
}

double f_star_from_reference(double f_min_reference, double margin) {
  return f_min_reference - margin * std::abs(f_min_reference);
}

DescentReport check_descent(const IterateTrace& trace, const TheoryConstants& c, double slack) {
  DescentReport report;
  report.worst_lemma_margin = -std::numeric_limits<double>::infinity();
  for (std::int64_t k = 1; k <= trace.iterations(); ++k) {
    const TraceEntry& prev = trace.at(k - 1);
    const TraceEntry& cur = trace.at(k);
    if (std::isnan(cur.f) || std::isnan(prev.f)) {
      throw std::invalid_argument("descent check: objective values missing from the trace");
    }
    const double tol = slack * (1.0 + std::abs(prev.f));
    const double eps2 = cur.epsilon * cur.epsilon;
    const double rhs = prev.f - (c.alpha - 1.0) * 0.5 * c.l_max * cur.step_norm * cur.step_norm +
                       0.5 * c.lambda * eps2;
    const double margin = cur.f - rhs;
    report.worst_lemma_margin = std::max(report.worst_lemma_margin, margin);
    if (margin > tol) report.lemma_violations.push_back(k);
    if (cur.epsilon == 0.0 && cur.f > prev.f + tol) report.monotone_violations.push_back(k);
    ++report.checked;
  }
  report.holds = report.lemma_violations.empty() && report.monotone_violations.empty();
  return report;
}

Theorem1Report check_theorem1(const IterateTrace& trace, const TheoryConstants& c, double f_star) {
  if (std::isnan(f_star)) throw std::invalid_argument("theorem 1 check: missing f*");
  if (trace.rows.empty()) throw std::invalid_argument("theorem 1 check: empty trace");
  Theorem1Report report;
  const std::int64_t b = c.blocks;
  report.complete_epochs = trace.iterations() / b;
  report.f0 = trace.initial().f;
  report.f_star = f_star;
  if (trace.iterations() % b != 0) {
    report.note = "trace ends mid-epoch; the trailing " + std::to_string(trace.iterations() % b) +
                  " iteration(s) are not checked";
  }
  double sum = 0.0;
  double running_min = std::numeric_limits<double>::infinity();
  for (std::int64_t t = 1; t <= report.complete_epochs; ++t) {
    const double gf = trace.at(t * b).grad_f_norm2;
    if (std::isnan(gf)) throw std::invalid_argument("theorem 1 check: ||grad f|| not recorded");
    sum += gf;
    running_min = std::min(running_min, gf);
    BoundRow row;
    row.t = t;
    row.min_value = running_min;
    row.average = sum / static_cast<double>(t);
    row.bound = c.c1 / static_cast<double>(t) * (report.f0 - f_star) +
                c.c2 * epsilon_bar_sq(trace, t * b);
    row.holds = row.min_value <= row.average * (1.0 + 1e-12) && row.average <= row.bound;
    if (!row.holds) report.violations.push_back(t);
    report.rows.push_back(row);
  }
  report.holds = report.violations.empty();
  return report;
}

Theorem2Report check_theorem2(const std::vector<IterateTrace>& traces, const TheoryConstants& c,
                              double f_star, const Theorem2Options& options) {
  if (traces.size() < 10) {
    throw std::invalid_argument("theorem 2 check: ensemble needs at least 10 seeds, got " +
                                std::to_string(traces.size()));
  }
  if (std::isnan(f_star)) throw std::invalid_argument("theorem 2 check: missing f*");
  Theorem2Report report;
  report.seeds = traces.size();
  report.f_star = f_star;
  std::int64_t horizon = std::numeric_limits<std::int64_t>::max();
  for (const auto& tr : traces) {
    horizon = std::min(horizon, tr.iterations());
    report.f0 += tr.initial().f;
  }
  if (horizon < 1) throw std::invalid_argument("theorem 2 check: empty traces");
  const double n = static_cast<double>(traces.size());
  report.f0 /= n;
  if (horizon < traces.front().iterations() ||
      std::any_of(traces.begin(), traces.end(),
                  [&](const auto& tr) { return tr.iterations() != horizon; })) {
    report.note = "traces differ in length; checked up to the shortest (" +
                  std::to_string(horizon) + " iterations)";
  }

  std::vector<double> sums(traces.size(), 0.0), eps_sums(traces.size(), 0.0);
  for (std::int64_t t = 1; t <= horizon; ++t) {
    double avg = 0.0, eps_bar = 0.0, running_min = 0.0;
    for (std::size_t s = 0; s < traces.size(); ++s) {
      const TraceEntry& row = traces[s].at(t);
      if (std::isnan(row.residual_norm2)) {
        throw std::invalid_argument("theorem 2 check: ||G|| not recorded");
      }
      sums[s] += row.residual_norm2;
      eps_sums[s] += row.epsilon * row.epsilon;
      avg += sums[s] / static_cast<double>(t);
      eps_bar += eps_sums[s] / static_cast<double>(t);
      running_min += row.residual_norm2;
    }
    BoundRow out;
    out.t = t;
    out.average = avg / n;
    out.min_value = running_min / n;  // E||G(x^{t-1})||^2 at this t
    if (!report.rows.empty()) out.min_value = std::min(out.min_value, report.rows.back().min_value);
    out.bound = c.d1 / static_cast<double>(t) * (report.f0 - f_star) + c.d2 * eps_bar / n;
    out.holds = out.average <= out.bound;
    if (!out.holds) report.violations.push_back(t);
    report.rows.push_back(out);
  }
  report.bound_holds = report.violations.empty();

  const std::int64_t tail_start = std::max<std::int64_t>(1, horizon - horizon / 4 + 1);
  double plateau = 0.0, eps_final = 0.0;
  std::size_t converged = 0;
  for (std::size_t s = 0; s < traces.size(); ++s) {
    const auto& tr = traces[s];
    double tail = 0.0;
    for (std::int64_t k = tail_start; k <= horizon; ++k) tail += tr.at(k).residual_norm2;
    plateau += tail / static_cast<double>(horizon - tail_start + 1);
    eps_final += eps_sums[s] / static_cast<double>(horizon);
    const double g0 = tr.at(1).residual_norm2;
    const double gf = tr.final_residual_norm2;
    if (!std::isnan(gf) && gf <= options.convergence_ratio * options.convergence_ratio * g0) {
      ++converged;
    }
  }
  report.plateau = plateau / n;
  report.plateau_bound = c.d2 * eps_final / n;
  report.converged_fraction = static_cast<double>(converged) / n;
  report.convergence_checked = options.check_convergence;
  if (options.check_convergence) {
    report.convergence_holds = report.converged_fraction >= options.required_fraction;
    report.note += (report.note.empty() ? "" : "; ") +
                   std::string("almost-sure convergence tested as a fraction-of-seeds threshold");
  }
  report.holds = report.bound_holds && report.convergence_holds;
  return report;
}

double gradient_chain_residual(const Denoiser& denoiser, double gamma, const Vector& z,
                               const Vector& x_new) {
  const Prior* prior = denoiser.prior();
  if (denoiser.gaussian_prior() == nullptr) {
    throw UnsupportedPrior("gradient chain identity needs a Gaussian MMSE denoiser");
  }
  const Vector grad_h = implicit_reg_gradient(*prior, denoiser.sigma(), gamma, x_new);
  return (grad_h - (z - x_new) / gamma).norm();
}

namespace {

nlohmann::json rows_json(const std::vector<BoundRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"t", r.t}, {"min", r.min_value}, {"average", r.average},
                   {"bound", r.bound}, {"holds", r.holds}});
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const TheoryConstants& c) {
  return {{"gamma", c.gamma}, {"L_max", c.l_max}, {"L", c.l_full}, {"M_max", c.m_max},
          {"b", c.blocks},    {"alpha", c.alpha}, {"lambda", c.lambda}, {"A1", c.a1},
          {"A2", c.a2},       {"B1", c.b1},       {"B2", c.b2},         {"C1", c.c1},
          {"C2", c.c2},       {"theta", c.theta}, {"D1", c.d1},         {"D2", c.d2},
          {"valid", c.valid()}};
}

nlohmann::json to_json(const DescentReport& r) {
  return {{"holds", r.holds},
          {"checked", r.checked},
          {"monotone_violations", r.monotone_violations},
          {"lemma_violations", r.lemma_violations},
          {"worst_lemma_margin", r.worst_lemma_margin}};
}

nlohmann::json to_json(const Theorem1Report& r) {
  return {{"holds", r.holds},       {"complete_epochs", r.complete_epochs},
          {"f0", r.f0},             {"f_star", r.f_star},
          {"violations", r.violations}, {"note", r.note},
          {"rows", rows_json(r.rows)}};
}

nlohmann::json to_json(const Theorem2Report& r) {
  return {{"holds", r.holds},
          {"bound_holds", r.bound_holds},
          {"seeds", r.seeds},
          {"f0", r.f0},
          {"f_star", r.f_star},
          {"violations", r.violations},
          {"converged_fraction", r.converged_fraction},
          {"convergence_checked", r.convergence_checked},
          {"convergence_holds", r.convergence_holds},
          {"plateau", r.plateau},
          {"plateau_bound", r.plateau_bound},
          {"note", r.note},
          {"rows", rows_json(r.rows)}};
}

}  // namespace bcpnp
