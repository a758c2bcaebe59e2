#ifndef MDA_BENCH_HPP
#define MDA_BENCH_HPP

#include "mda/alignment.hpp"
#include "mda/features.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mda::bench {

enum class Method { source_1nn, srm_only, meda_ir, mda };

Method parse_method(const std::string& name);
std::string to_string(Method method);

struct TaskPair {
  std::string source;
  std::string target;

  std::string label() const { return source + "->" + target; }
  bool operator==(const TaskPair&) const = default;
};

/// Benchmark task order as published: 12 Office+Caltech-10 tasks, 6
/// Office-31 tasks, 12 Office-Home tasks.
std::vector<TaskPair> tasks_for(const std::string& dataset);
std::vector<std::string> domains_for(const std::string& dataset);

struct SuiteSpec {
  std::string dataset = "office-caltech10";
  std::vector<TaskPair> tasks = tasks_for("office-caltech10");
  std::filesystem::path feature_dir;
  std::vector<Method> methods = {Method::source_1nn, Method::srm_only, Method::meda_ir,
                                 Method::mda};
  AlignmentConfig alignment;
  /// GFK subspace dimension for meda_ir.
  int subspace_dim = 20;
  /// Applied to every domain after loading.
  NormalizeMode normalize = NormalizeMode::zscore;
  /// Worker threads for run_suite.
  int jobs = 1;

  void set_dataset(const std::string& name);
  bool operator==(const SuiteSpec&) const = default;
};

/// Reads the JSON config. Absent keys keep their defaults; unknown keys are
/// reported through `warnings`; wrong types and out-of-range values throw.
SuiteSpec config_load(const std::filesystem::path& path,
                      std::vector<std::string>* warnings = nullptr);
SuiteSpec config_parse(const std::string& json_text, std::vector<std::string>* warnings = nullptr);
std::string config_dump(const SuiteSpec& spec);
void config_save(const SuiteSpec& spec, const std::filesystem::path& path);

/// "<dir>/<dataset>/<code>.mdaf", falling back to "<dir>/<code>.mdaf".
std::filesystem::path feature_path(const SuiteSpec& spec, const std::string& domain);

struct TaskResult {
  double accuracy = 0.0;  // fraction in [0, 1]
  Eigen::MatrixXi confusion;
  Labels predictions;
  std::vector<IterationDiagnostics> diagnostics;
};

/// Runs one method on an assembled task; the target must be labeled.
TaskResult run_method(const DaTask& task, Method method, const SuiteSpec& spec);

/// Loads and normalizes both domains, then runs one method.
TaskResult run_task(const SuiteSpec& spec, const std::string& source, const std::string& target,
                    Method method);

struct ResultTable {
  std::string dataset;
  std::vector<std::string> tasks;
  std::vector<Method> methods;
  /// accuracy_percent[m][t], unrounded.
  std::vector<std::vector<double>> accuracy_percent;

  double average(std::size_t method) const;
  std::string to_csv() const;
  std::string to_text() const;
};

ResultTable run_suite(const SuiteSpec& spec);

}  // namespace mda::bench

#endif  // MDA_BENCH_HPP
