#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcpnp/denoisers.hpp"
#include "bcpnp/trace.hpp"

namespace bcpnp {

/// Constants of the sequential and randomized convergence bounds, written in
/// the step parameterization gamma = 1 / (alpha L_max), alpha > 1.
struct TheoryConstants {
  double gamma = 0.0;
  double l_max = 0.0;   // largest block Lipschitz constant of grad g
  double l_full = 0.0;  // Lipschitz constant of grad g
  double m_max = 0.0;   // largest Lipschitz constant of grad h_i
  int blocks = 1;

  double alpha = 0.0;   // 1 / (gamma L_max)
  double lambda = 0.0;  // alpha L_max + M_max
  double a1 = 0.0;      // alpha L_max + b L
  double a2 = 0.0;      // A1 + L + M_max
  double b1 = 0.0;      // 4 A1^2 / ((alpha - 1) L_max)
  double b2 = 0.0;      // 2 b A2^2 + lambda A1^2
  double c1 = 0.0;      // B1
  double c2 = 0.0;      // b B2
  double theta = 0.0;   // (alpha - 1) / (2 alpha^2 b L_max)
  double d1 = 0.0;      // 1 / theta
  double d2 = 0.0;      // lambda / (2 theta)

  /// alpha > 1 and every constant positive and finite.
  bool valid() const;
};

TheoryConstants theory_constants(double gamma, double l_max, double l_full, double m_max,
                                 int blocks);

/// (1/t) sum_{k=1}^{t} eps_k^2 from the trace's eps column.
double epsilon_bar_sq(const IterateTrace& trace, std::int64_t t);

/// Conservative f* from the minimum of a long reference run: subtracts a
/// relative margin so that an inexact reference cannot overstate f*.
double f_star_from_reference(double f_min_reference, double margin = 0.01);

struct DescentReport {
  bool holds = true;
  std::int64_t checked = 0;
  std::vector<std::int64_t> monotone_violations;  // f(x^k) > f(x^{k-1}) + slack
  std::vector<std::int64_t> lemma_violations;     // sufficient-decrease inequality fails
  double worst_lemma_margin = 0.0;                // max over k of lhs - rhs (<= 0 when holding)
};

/// Per-iteration sufficient decrease
///   f(x^k) <= f(x^{k-1}) - (alpha - 1)(L_max / 2)||x^k - x^{k-1}||^2 + lambda eps_k^2 / 2
/// and, when eps_k = 0, monotonicity f(x^k) <= f(x^{k-1}). Both use a slack of
/// slack * (1 + |f(x^{k-1})|).
DescentReport check_descent(const IterateTrace& trace, const TheoryConstants& constants,
                            double slack = 1e-10);

struct BoundRow {
  std::int64_t t = 0;
  double min_value = 0.0;  // min_{i <= t} of the tracked quantity
  double average = 0.0;    // (1/t) sum_{i <= t}
  double bound = 0.0;
  bool holds = true;
};

struct Theorem1Report {
  bool holds = true;
  std::int64_t complete_epochs = 0;
  double f0 = 0.0;
  double f_star = 0.0;
  std::vector<BoundRow> rows;  // t = 1 .. complete_epochs, ||grad f(x^{tb})||^2
  std::vector<std::int64_t> violations;
  std::string note;
};

/// Sequential-schedule bound at epoch iterates x^{tb}:
///   min_i ||grad f(x^{ib})||^2 <= avg <= (C1/t)(f(x^0) - f*) + C2 epsbar_{tb}^2.
/// Needs ||grad f|| in the trace (Gaussian-prior runs); only complete epochs are used.
Theorem1Report check_theorem1(const IterateTrace& trace, const TheoryConstants& constants,
                              double f_star);

struct Theorem2Options {
  double convergence_ratio = 1e-4;  // ||G(x^final)|| <= ratio ||G(x^0)||
  double required_fraction = 0.95;
  bool check_convergence = false;   // for square-summable schedules
};

struct Theorem2Report {
  bool holds = true;
  bool bound_holds = true;
  std::size_t seeds = 0;
  double f0 = 0.0;
  double f_star = 0.0;
  std::vector<BoundRow> rows;  // ensemble averages of (1/t) sum ||G(x^{k-1})||^2
  std::vector<std::int64_t> violations;
  double converged_fraction = 0.0;
  bool convergence_checked = false;
  bool convergence_holds = true;
  double plateau = 0.0;        // ensemble mean of ||G||^2 over the last quarter
  double plateau_bound = 0.0;  // D2 * epsbar_t^2 at the final t
  std::string note;
};

/// Randomized-schedule bound on the ensemble mean over seeds. Needs at least
/// 10 traces.
Theorem2Report check_theorem2(const std::vector<IterateTrace>& traces,
                              const TheoryConstants& constants, double f_star,
                              const Theorem2Options& options = {});

/// ||grad h_i(x_new) - (z - x_new) / gamma|| for an exact Gaussian MMSE step
/// x_new = D*(z).
double gradient_chain_residual(const Denoiser& denoiser, double gamma, const Vector& z,
                               const Vector& x_new);

nlohmann::json to_json(const TheoryConstants& c);
nlohmann::json to_json(const DescentReport& r);
nlohmann::json to_json(const Theorem1Report& r);
nlohmann::json to_json(const Theorem2Report& r);

}  // namespace bcpnp
