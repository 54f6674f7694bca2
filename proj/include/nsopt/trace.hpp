#pragma once

// Iteration traces shared by both optimizers, and the delimited-text writer
// consumed by plotting scripts.  Columns: iter, time_s, h, log_h, grad_calls,
// prox_calls, grad_E_norm.  log_h is the natural log, written as "NA" when h
// is zero or non-finite; grad_E_norm is left empty on records where it was
// not sampled.  Counters snapshot the cumulative per-sample gradient and
// prox-map work committed when the record is written.  Everything except
// time_s is reproducible byte-for-byte for a fixed seed.

#include "nsopt/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace nsopt {

struct TraceRecord {
  std::int64_t iter = 0;     // 1-based; the closing record is K + 1
  double time_s = 0;         // wall clock since the run started
  double h = 0;              // f + g at the record's iterate
  double grad_e_norm = 0;    // ||grad E|| at the record's anchor; NaN = not sampled
  std::int64_t grad_calls = 0;
  std::int64_t prox_calls = 0;
};

template <typename Scalar = double>
struct RunTrace {
  std::vector<TraceRecord> records;
  DenseVector<Scalar> final_iterate;
  DenseVector<Scalar> output_iterate;
  std::int64_t grad_calls = 0;
  std::int64_t prox_calls = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t iter, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iter) + ": " + what),
        iter_(iter) {}
  std::int64_t iter() const { return iter_; }

 private:
  std::int64_t iter_;
};

namespace detail {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string format_log_h(double h) {
  if (!(h > 0) || !std::isfinite(h)) return "NA";
  return detail::format_g17(std::log(h));
}

template <typename Scalar>
void write_trace(std::ostream& out, const RunTrace<Scalar>& trace) {
  out << "iter\ttime_s\th\tlog_h\tgrad_calls\tprox_calls\tgrad_E_norm\n";
  char tbuf[40];
  for (const TraceRecord& r : trace.records) {
    std::snprintf(tbuf, sizeof(tbuf), "%.6f", r.time_s);
    out << r.iter << '\t' << tbuf << '\t' << detail::format_g17(r.h) << '\t'
        << format_log_h(r.h) << '\t' << r.grad_calls << '\t' << r.prox_calls << '\t';
    if (!std::isnan(r.grad_e_norm)) out << detail::format_g17(r.grad_e_norm);
    out << '\n';
  }
}

}  // namespace nsopt
