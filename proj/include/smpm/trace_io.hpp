#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smpm {

struct TraceRow {
  std::int64_t t = 0;
  double sq_dist = 0.0;
  std::optional<double> lyapunov;
  std::optional<double> envelope;
  std::int64_t comm_parallel = 0;
  std::int64_t comm_total = 0;
  int replicate = 0;
};

inline constexpr const char* kTraceHeader = "t,sq_dist,lyapunov,theory_envelope,comm_parallel,comm_total,replicate";

// LF line endings, %.17g reals, empty fields for missing values.
std::string trace_csv(const std::vector<TraceRow>& rows);
void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path);
std::vector<TraceRow> parse_trace_csv(const std::string& text);

struct MeanRow {
  std::int64_t t = 0;
  double sq_dist_mean = 0.0;
  double sq_dist_stderr = 0.0;
  std::optional<double> lyapunov_mean;
  std::optional<double> lyapunov_stderr;
  std::optional<double> envelope;
  double comm_parallel_mean = 0.0;
  double comm_total_mean = 0.0;
};

inline constexpr const char* kMeanHeader =
    "t,sq_dist_mean,sq_dist_stderr,lyapunov_mean,lyapunov_stderr,theory_envelope,comm_parallel_mean,comm_total_mean";

// Rowwise mean over replicates logged at identical t; stderr is the sample
// standard deviation over sqrt(R), zero when R = 1.
std::vector<MeanRow> aggregate_replicates(const std::vector<std::vector<TraceRow>>& replicates);

std::string mean_csv(const std::vector<MeanRow>& rows);
void write_mean_csv(const std::vector<MeanRow>& rows, const std::string& path);

void write_text_file(const std::string& text, const std::string& path);

}  // namespace smpm
