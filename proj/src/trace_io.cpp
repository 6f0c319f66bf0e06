#include "homodescent/trace_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace homodescent {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_trace_csv(std::ostream& os, const std::vector<IterateTrace>& trace) {
  os << kTraceHeader << '\n';
  for (const auto& r : trace) {
    os << r.k << ',' << fmt(r.f_value) << ',' << fmt(r.f_gap) << ',' << fmt(r.grad_norm) << ','
       << fmt(r.delta) << ',' << fmt(r.theta) << ',' << fmt(r.d_norm) << ',' << r.ls_bisections
       << ',' << r.eigen_iters << ',' << (r.perturbed ? 1 : 0) << ',' << r.n_g << ',' << r.n_h
       << ',' << r.cum_samples << ',' << r.cum_matvecs << ',' << r.wall_ns << '\n';
  }
}

void write_trace_csv(const std::string& path, const std::vector<IterateTrace>& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  write_file_atomic(path, os.str());
}

std::vector<IterateTrace> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTraceHeader) {
    throw ContractViolation("read_trace_csv: unexpected header");
  }
  std::vector<IterateTrace> out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 15) {
      throw ContractViolation("read_trace_csv: row " + std::to_string(row) + " has " +
                              std::to_string(c.size()) + " columns");
    }
    try {
      IterateTrace r;
      r.k = std::stoll(c[0]);
      r.f_value = std::stod(c[1]);
      r.f_gap = std::stod(c[2]);
      r.grad_norm = std::stod(c[3]);
      r.delta = std::stod(c[4]);
      r.theta = std::stod(c[5]);
      r.d_norm = std::stod(c[6]);
      r.ls_bisections = std::stoi(c[7]);
      r.eigen_iters = std::stoi(c[8]);
      r.perturbed = c[9] == "1";
      r.n_g = std::stoull(c[10]);
      r.n_h = std::stoull(c[11]);
      r.cum_samples = std::stoull(c[12]);
      r.cum_matvecs = std::stoull(c[13]);
      r.wall_ns = std::stoll(c[14]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw ContractViolation("read_trace_csv: malformed number in row " + std::to_string(row));
    }
  }
  return out;
}

std::vector<IterateTrace> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("read_trace_csv: cannot open " + path);
  return read_trace_csv(in);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace homodescent
