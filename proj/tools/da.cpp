// da: command-line front end for the distribution-alignment toolkit.
//
//   da run   --dataset <name> --source <code> --target <code> --features <dir> --method <m> [--config <json>]
//   da suite --dataset <name> --features <dir> [--config <json>] [--out table.csv]
//   da demo  --kind sphere|shape --steps N --out path.csv
//   da convert --in features.csv --out features.mdaf [--classes C]

#include "mda/bench.hpp"
#include "mda/manifold.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

mda::bench::SuiteSpec load_spec(const std::string& config_path) {
  if (config_path.empty()) return {};
  std::vector<std::string> warnings;
  auto spec = mda::bench::config_load(config_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return spec;
}

void print_confusion(const Eigen::MatrixXi& confusion) {
  std::cout << "confusion (rows = true class, columns = predicted):\n";
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    for (Eigen::Index j = 0; j < confusion.cols(); ++j) {
      std::cout << (j ? " " : "  ") << confusion(i, j);
    }
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution alignment for domain adaptation over deep features"};
  app.require_subcommand(1);

  std::string dataset, source, target, features, method = "mda", config_path, out_path;
  std::string kind;
  std::string methods_csv;
  std::string csv_in;
  int steps = 20;
  int jobs = 0;
  int classes = 0;

  auto* run = app.add_subcommand("run", "Run one method on one source->target task");
  run->add_option("--dataset", dataset, "office-caltech10 | office31 | office-home")->required();
  run->add_option("--source", source, "Source domain code")->required();
  run->add_option("--target", target, "Target domain code")->required();
  run->add_option("--features", features, "Feature directory")->required();
  run->add_option("--method", method, "source_1nn | srm_only | meda_ir | mda");
  run->add_option("--config", config_path, "JSON config");

  auto* suite = app.add_subcommand("suite", "Run every task of a benchmark");
  suite->add_option("--dataset", dataset, "office-caltech10 | office31 | office-home")->required();
  suite->add_option("--features", features, "Feature directory")->required();
  suite->add_option("--config", config_path, "JSON config");
  suite->add_option("--out", out_path, "Write the table as CSV");
  suite->add_option("--methods", methods_csv, "Comma-separated method list");
  suite->add_option("--jobs", jobs, "Worker threads");

  auto* demo = app.add_subcommand("demo", "Sample geodesic demo paths to CSV");
  demo->add_option("--kind", kind, "sphere | shape")->required();
  demo->add_option("--steps", steps, "Samples per curve (>= 2)");
  demo->add_option("--out", out_path, "Output CSV")->required();

  auto* convert = app.add_subcommand("convert", "Convert a feature CSV to MDAF");
  convert->add_option("--in", csv_in, "Input CSV (label,f1,...,fd)")->required();
  convert->add_option("--out", out_path, "Output .mdaf")->required();
  convert->add_option("--classes", classes, "Class count (default: largest label)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto spec = load_spec(config_path);
      spec.set_dataset(dataset);
      spec.feature_dir = features;
      const auto m = mda::bench::parse_method(method);
      const auto result = mda::bench::run_task(spec, source, target, m);
      std::printf("%s %s->%s accuracy %.1f%%\n", method.c_str(), source.c_str(), target.c_str(),
                  100.0 * result.accuracy);
      for (std::size_t i = 0; i < result.diagnostics.size(); ++i) {
        const auto& d = result.diagnostics[i];
        std::printf("  iter %zu  mu %.4f  churn %ld", i + 1, d.mu, static_cast<long>(d.churn));
        if (d.target_accuracy) std::printf("  acc %.1f%%", 100.0 * *d.target_accuracy);
        std::printf("\n");
      }
      print_confusion(result.confusion);
    } else if (*suite) {
      auto spec = load_spec(config_path);
      spec.set_dataset(dataset);
      spec.feature_dir = features;
      if (jobs > 0) spec.jobs = jobs;
      if (!methods_csv.empty()) {
        spec.methods.clear();
        std::stringstream ss(methods_csv);
        std::string name;
        while (std::getline(ss, name, ',')) spec.methods.push_back(mda::bench::parse_method(name));
      }
      const auto table = mda::bench::run_suite(spec);
      std::cout << table.to_text();
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << table.to_csv();
      }
    } else if (*demo) {
      mda::demo_emit(mda::parse_demo_kind(kind), steps, out_path);
    } else if (*convert) {
      const auto ds = mda::load_csv(csv_in, classes > 0 ? std::optional<int>(classes) : std::nullopt);
      mda::save_binary(ds, out_path);
      std::printf("wrote %s: n=%ld d=%ld C=%d\n", out_path.c_str(), static_cast<long>(ds.size()),
                  static_cast<long>(ds.dim()), ds.class_count);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
