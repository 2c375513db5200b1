#include "smpm/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "smpm/errors.hpp"

namespace smpm {
namespace {

void put_real(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void put_opt(std::string& out, const std::optional<double>& v) {
  if (v) put_real(out, *v);
}

std::optional<double> opt_field(const std::string& f) {
  if (f.empty()) return std::nullopt;
  return std::stod(f);
}

struct Moments {
  double sum = 0.0;
  double sq = 0.0;
  int count = 0;
  void add(double v) {
    sum += v;
    sq += v * v;
    ++count;
  }
  double mean() const { return sum / count; }
  double stderr_() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sq - count * m * m) / (count - 1));
    return std::sqrt(var / count);
  }
};

}  // namespace

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.t);
    out += ',';
    put_real(out, r.sq_dist);
    out += ',';
    put_opt(out, r.lyapunov);
    out += ',';
    put_opt(out, r.envelope);
    out += ',' + std::to_string(r.comm_parallel) + ',' + std::to_string(r.comm_total) + ',' +
           std::to_string(r.replicate) + '\n';
  }
  return out;
}

std::vector<TraceRow> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(std::getline(in, line) && line == kTraceHeader, ErrorCode::kIo, "trace CSV has an unexpected header");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    require(f.size() == 7, ErrorCode::kIo, "trace CSV row has " + std::to_string(f.size()) + " fields");
    TraceRow r;
    r.t = std::stoll(f[0]);
    r.sq_dist = std::stod(f[1]);
    r.lyapunov = opt_field(f[2]);
    r.envelope = opt_field(f[3]);
    r.comm_parallel = std::stoll(f[4]);
    r.comm_total = std::stoll(f[5]);
    r.replicate = std::stoi(f[6]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<MeanRow> aggregate_replicates(const std::vector<std::vector<TraceRow>>& reps) {
  require(!reps.empty(), ErrorCode::kConfiguration, "no replicates to aggregate");
  const std::size_t len = reps.front().size();
  for (const auto& r : reps) require(r.size() == len, ErrorCode::kConfiguration, "replicate traces differ in length");
  std::vector<MeanRow> out(len);
  for (std::size_t k = 0; k < len; ++k) {
    Moments sq, ly;
    double par = 0.0, tot = 0.0;
    const std::int64_t t = reps.front()[k].t;
    for (const auto& r : reps) {
      require(r[k].t == t, ErrorCode::kConfiguration, "replicate traces are logged at different t");
      sq.add(r[k].sq_dist);
      if (r[k].lyapunov) ly.add(*r[k].lyapunov);
      par += static_cast<double>(r[k].comm_parallel);
      tot += static_cast<double>(r[k].comm_total);
    }
    MeanRow& m = out[k];
    m.t = t;
    m.sq_dist_mean = sq.mean();
    m.sq_dist_stderr = sq.stderr_();
    if (ly.count == static_cast<int>(reps.size())) {
      m.lyapunov_mean = ly.mean();
      m.lyapunov_stderr = ly.stderr_();
    }
    m.envelope = reps.front()[k].envelope;
    m.comm_parallel_mean = par / reps.size();
    m.comm_total_mean = tot / reps.size();
  }
  return out;
}

std::string mean_csv(const std::vector<MeanRow>& rows) {
  std::string out = kMeanHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.t);
    for (double v : {r.sq_dist_mean, r.sq_dist_stderr}) {
      out += ',';
      put_real(out, v);
    }
    for (const auto& v : {r.lyapunov_mean, r.lyapunov_stderr, r.envelope}) {
      out += ',';
      put_opt(out, v);
    }
    for (double v : {r.comm_parallel_mean, r.comm_total_mean}) {
      out += ',';
      put_real(out, v);
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open for writing: " + path);
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path);
}

void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path) {
  write_text_file(trace_csv(rows), path);
}

void write_mean_csv(const std::vector<MeanRow>& rows, const std::string& path) {
  write_text_file(mean_csv(rows), path);
}

}  // namespace smpm
