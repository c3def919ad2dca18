#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "tfmm/bench.hpp"

namespace tfmm {

namespace detail {

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const char* kind) {
    file_ = std::fopen(path.c_str(), "w");
    if (!file_) throw std::runtime_error("cannot write '" + path + "'");
    std::fprintf(file_, "# tfmm-csv/1 %s\n", kind);
  }
  ~CsvWriter() {
    if (file_) std::fclose(file_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void raw(const std::string& text) { std::fputs(text.c_str(), file_); }
  void field(const std::string& text, bool last = false) {
    std::fprintf(file_, "%s%c", text.c_str(), last ? '\n' : ',');
  }
  void num(double v, bool last = false) {
    std::fprintf(file_, "%.17g%c", v, last ? '\n' : ',');
  }
  void integer(long long v, bool last = false) {
    std::fprintf(file_, "%lld%c", v, last ? '\n' : ',');
  }

 private:
  std::FILE* file_ = nullptr;
};

inline std::string sanitize_name(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return out;
}

}  // namespace detail

// Columns: k, x_1..x_nx, y_1..y_ny.
inline void write_trajectory_csv(const Trajectory<double>& traj, const std::string& path) {
  detail::CsvWriter out(path, "trajectory");
  const Index nx = traj.states.empty() ? 0 : traj.states[0].size();
  const Index ny = traj.measurements.empty() ? 0 : traj.measurements[0].size();
  out.raw("k");
  for (Index i = 0; i < nx; ++i) out.raw(",x_" + std::to_string(i + 1));
  for (Index i = 0; i < ny; ++i) out.raw(",y_" + std::to_string(i + 1));
  out.raw("\n");
  for (Index k = 0; k < traj.size(); ++k) {
    out.integer(k + 1);
    for (Index i = 0; i < nx; ++i) out.num(traj.states[k][i]);
    for (Index i = 0; i < ny; ++i) out.num(traj.measurements[k][i], i + 1 == ny);
  }
}

// Columns: k, xhat_1..xhat_nx, P_diag_1..P_diag_nx, mm_iters, F_final,
// r_1..r_ny, wall_ns, g_resid_max.
inline void write_trace_csv(const FilterTrace<double>& trace, const std::string& path) {
  detail::CsvWriter out(path, "trace");
  if (trace.steps.empty()) return;
  const Index nx = trace.steps[0].posterior.mean.size();
  const Index ny = trace.steps[0].r_diag.size();
  out.raw("k");
  for (Index i = 0; i < nx; ++i) out.raw(",xhat_" + std::to_string(i + 1));
  for (Index i = 0; i < nx; ++i) out.raw(",P_diag_" + std::to_string(i + 1));
  out.raw(",mm_iters,F_final");
  for (Index i = 0; i < ny; ++i) out.raw(",r_" + std::to_string(i + 1));
  out.raw(",wall_ns,g_resid_max\n");
  for (Index k = 0; k < trace.size(); ++k) {
    const auto& s = trace.steps[k];
    out.integer(k + 1);
    for (Index i = 0; i < nx; ++i) out.num(s.posterior.mean[i]);
    for (Index i = 0; i < nx; ++i) out.num(s.posterior.cov(i, i));
    out.integer(s.mm_iterations);
    out.num(s.objective_value);
    for (Index i = 0; i < ny; ++i) out.num(s.r_diag[i]);
    out.integer(s.wall_ns);
    out.num(s.constraint_residual, true);
  }
}

// Per-run rows double as box-plot points.
inline void write_runs_csv(const RmseReport& report, const std::string& path) {
  detail::CsvWriter out(path, "runs");
  out.raw(
      "filter,run,seed,rmse,rmse_pos,rmse_vel,seconds,max_g_residual,max_descent_gap,"
      "median_mm_iters,failed\n");
  for (const auto& fr : report.filters) {
    for (std::size_t run = 0; run < fr.runs.size(); ++run) {
      const auto& r = fr.runs[run];
      out.field(fr.filter.name);
      out.integer(static_cast<long long>(run));
      out.integer(static_cast<long long>(r.seed));
      out.num(r.rmse_full);
      out.num(r.rmse_pos);
      out.num(r.rmse_vel);
      out.num(r.seconds);
      out.num(r.max_constraint_residual);
      out.num(r.max_descent_gap);
      out.num(r.median_mm_iters);
      out.integer(r.failed ? 1 : 0, true);
    }
  }
}

inline void write_summary_csv(const RmseReport& report, const std::string& path) {
  detail::CsvWriter out(path, "summary");
  out.raw(
      "filter,runs_ok,runs_failed,rmse_mean,rmse_std,rmse_pos_mean,rmse_pos_std,"
      "rmse_vel_mean,rmse_vel_std,seconds_mean\n");
  for (const auto& fr : report.filters) {
    out.field(fr.filter.name);
    out.integer(static_cast<long long>(fr.runs.size()) - fr.failures());
    out.integer(fr.failures());
    out.num(fr.mean_rmse());
    out.num(fr.std_rmse());
    out.num(fr.mean_rmse(&RunStats::rmse_pos));
    out.num(fr.std_rmse(&RunStats::rmse_pos));
    out.num(fr.mean_rmse(&RunStats::rmse_vel));
    out.num(fr.std_rmse(&RunStats::rmse_vel));
    out.num(fr.mean_seconds(), true);
  }
}

// Long-format estimate series for trajectory and velocity-arrow plots.
inline void write_estimates_csv(const std::vector<std::string>& names,
                                const std::vector<FilterTrace<double>>& traces,
                                const std::string& path) {
  detail::CsvWriter out(path, "estimates");
  if (traces.empty() || traces[0].steps.empty()) return;
  const Index nx = traces[0].steps[0].posterior.mean.size();
  out.raw("filter,k");
  for (Index i = 0; i < nx; ++i) out.raw(",xhat_" + std::to_string(i + 1));
  out.raw("\n");
  for (std::size_t f = 0; f < traces.size(); ++f) {
    for (Index k = 0; k < traces[f].size(); ++k) {
      out.field(names[f]);
      out.integer(k + 1);
      const auto& mean = traces[f].steps[k].posterior.mean;
      for (Index i = 0; i < nx; ++i) out.num(mean[i], i + 1 == nx);
    }
  }
}

// Writes runs/summary CSVs plus plot data (truth, estimates, per-filter
// traces) for the first Monte-Carlo run, re-executed deterministically.
inline void emit_experiment_outputs(const ExperimentSpec& spec, const RmseReport& report,
                                    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_runs_csv(report, out_dir + "/runs.csv");
  write_summary_csv(report, out_dir + "/summary.csv");

  const Trajectory<double> traj = make_truth(spec, spec.base_seed);
  write_trajectory_csv(traj, out_dir + "/truth.csv");
  std::vector<std::string> names;
  std::vector<FilterTrace<double>> traces;
  for (const auto& f : spec.filters) {
    try {
      traces.push_back(run_one_filter(spec, f, traj, spec.base_seed));
      names.push_back(f.name);
      write_trace_csv(traces.back(),
                      out_dir + "/trace_" + detail::sanitize_name(f.name) + ".csv");
    } catch (const std::exception&) {
      // Failed run already reported by the experiment; skip its plot data.
    }
  }
  if (!traces.empty()) write_estimates_csv(names, traces, out_dir + "/estimates.csv");
}

}  // namespace tfmm
