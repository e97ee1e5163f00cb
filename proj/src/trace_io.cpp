#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bcpnp/trace.hpp"

namespace bcpnp {

const char* const kTraceCsvHeader = "iter,block,f,g,h,Gnorm2,step_norm,eps,rmse_v,rmse_theta";

namespace {

std::string format_double(double v) {
  if (v != v) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trace csv: bad number '" + s + "'");
  return v;
}

}  // namespace

void write_trace_csv(const IterateTrace& trace, std::ostream& out) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.rows) {
    out << r.iteration << ',' << r.block << ',' << format_double(r.f) << ','
        << format_double(r.g) << ',' << format_double(r.h) << ','
        << format_double(r.residual_norm2) << ',' << format_double(r.step_norm) << ','
        << format_double(r.epsilon) << ',' << format_double(r.rmse_image) << ','
        << format_double(r.rmse_parameter) << '\n';
  }
}

void write_trace_csv(const IterateTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace to " + path);
  write_trace_csv(trace, out);
}

IterateTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceCsvHeader) {
    throw std::invalid_argument("trace csv: unexpected header");
  }
  IterateTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 10) throw std::invalid_argument("trace csv: expected 10 fields");
    TraceEntry r;
    r.iteration = std::stoll(f[0]);
    r.block = std::stoi(f[1]);
    r.f = parse_double(f[2]);
    r.g = parse_double(f[3]);
    r.h = parse_double(f[4]);
    r.residual_norm2 = parse_double(f[5]);
    r.step_norm = parse_double(f[6]);
    r.epsilon = parse_double(f[7]);
    r.rmse_image = parse_double(f[8]);
    r.rmse_parameter = parse_double(f[9]);
    trace.rows.push_back(r);
  }
  return trace;
}

}  // namespace bcpnp
