#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace bcpnp {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One row of an iterate trace. Row 0 describes x^0; row k >= 1 describes the
/// transition x^{k-1} -> x^k.
struct TraceEntry {
  std::int64_t iteration = 0;
  int block = 0;                  // i_k; 0 when several blocks moved at once
  double f = kNaN;                // objective terms at x^k, when computable
  double g = kNaN;
  double h = kNaN;
  double residual_norm2 = kNaN;   // ||G(x^{k-1})||^2
  double grad_f_norm2 = kNaN;     // ||grad f(x^k)||^2, when computable
  double step_norm = kNaN;        // ||x^k - x^{k-1}||
  double epsilon = 0.0;           // eps_k of the deployed denoiser
  double rmse_image = kNaN;
  double rmse_parameter = kNaN;
};

struct IterateTrace {
  std::vector<TraceEntry> rows;    // rows[0] is the initial state
  double final_residual_norm2 = kNaN;  // ||G(x^K)|| ^2 at the returned iterate

  std::int64_t iterations() const { return rows.empty() ? 0 : static_cast<std::int64_t>(rows.size()) - 1; }
  const TraceEntry& initial() const { return rows.front(); }
  const TraceEntry& at(std::int64_t k) const { return rows.at(static_cast<std::size_t>(k)); }
};

/// Fixed CSV header: iter,block,f,g,h,Gnorm2,step_norm,eps,rmse_v,rmse_theta
extern const char* const kTraceCsvHeader;

void write_trace_csv(const IterateTrace& trace, std::ostream& out);
void write_trace_csv(const IterateTrace& trace, const std::string& path);
IterateTrace read_trace_csv(std::istream& in);

}  // namespace bcpnp
