#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "homodescent/optimizer.hpp"

namespace homodescent {

/// Column names of the trace CSV, in order.
inline constexpr const char* kTraceHeader =
    "k,f_value,f_gap,grad_norm,delta,theta,d_norm,ls_bisections,eigen_iters,perturbed,n_g,n_H,"
    "cum_samples,cum_matvecs,wall_ns";

/// Reals are written with 17 significant digits so a round trip is exact.
void write_trace_csv(std::ostream& os, const std::vector<IterateTrace>& trace);
void write_trace_csv(const std::string& path, const std::vector<IterateTrace>& trace);

/// Parses a file written by write_trace_csv. Throws ContractViolation on a
/// header mismatch or malformed row.
std::vector<IterateTrace> read_trace_csv(std::istream& is);
std::vector<IterateTrace> read_trace_csv(const std::string& path);

/// Writes to path + ".tmp" and renames over path.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace homodescent
