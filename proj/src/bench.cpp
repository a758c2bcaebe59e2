#include "mda/bench.hpp"

#include "mda/manifold.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace mda::bench {

using nlohmann::json;

Method parse_method(const std::string& name) {
  if (name == "source_1nn") return Method::source_1nn;
  if (name == "srm_only") return Method::srm_only;
  if (name == "meda_ir") return Method::meda_ir;
  if (name == "mda") return Method::mda;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::source_1nn: return "source_1nn";
    case Method::srm_only: return "srm_only";
    case Method::meda_ir: return "meda_ir";
    case Method::mda: return "mda";
  }
  return "mda";
}

std::vector<TaskPair> tasks_for(const std::string& dataset) {
  if (dataset == "office-caltech10") {
    return {{"C", "A"}, {"C", "W"}, {"C", "D"}, {"A", "C"}, {"A", "W"}, {"A", "D"},
            {"W", "C"}, {"W", "A"}, {"W", "D"}, {"D", "C"}, {"D", "A"}, {"D", "W"}};
  }
  if (dataset == "office31") {
    return {{"A", "W"}, {"A", "D"}, {"W", "A"}, {"W", "D"}, {"D", "A"}, {"D", "W"}};
  }
  if (dataset == "office-home") {
    return {{"A", "C"}, {"A", "P"}, {"A", "R"}, {"C", "A"}, {"C", "P"}, {"C", "R"},
            {"P", "A"}, {"P", "C"}, {"P", "R"}, {"R", "A"}, {"R", "C"}, {"R", "P"}};
  }
  throw std::invalid_argument("unknown dataset '" + dataset +
                              "' (expected office-caltech10, office31 or office-home)");
}

std::vector<std::string> domains_for(const std::string& dataset) {
  std::vector<std::string> out;
  for (const auto& t : tasks_for(dataset)) {
    for (const auto& d : {t.source, t.target}) {
      if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
    }
  }
  return out;
}

void SuiteSpec::set_dataset(const std::string& name) {
  tasks = tasks_for(name);
  dataset = name;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

double get_number(const json& j, const char* key) {
  if (!j.is_number()) throw std::invalid_argument(std::string("config: '") + key + "' must be a number");
  return j.get<double>();
}

int get_int(const json& j, const char* key) {
  if (!j.is_number_integer()) {
    throw std::invalid_argument(std::string("config: '") + key + "' must be an integer");
  }
  return j.get<int>();
}

std::string get_string(const json& j, const char* key) {
  if (!j.is_string()) throw std::invalid_argument(std::string("config: '") + key + "' must be a string");
  return j.get<std::string>();
}

void warn(std::vector<std::string>* warnings, const std::string& message) {
  if (warnings) warnings->push_back(message);
}

}  // namespace

SuiteSpec config_parse(const std::string& json_text, std::vector<std::string>* warnings) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");

  SuiteSpec spec;
  AlignmentConfig& a = spec.alignment;
  for (const auto& [key, value] : root.items()) {
    if (key == "lambda") {
      a.lambda = get_number(value, "lambda");
    } else if (key == "rho") {
      a.rho = get_number(value, "rho");
    } else if (key == "eta") {
      a.eta = get_number(value, "eta");
    } else if (key == "p") {
      a.p = get_int(value, "p");
    } else if (key == "iterations") {
      a.iterations = get_int(value, "iterations");
    } else if (key == "normalize_mmd") {
      if (!value.is_boolean()) throw std::invalid_argument("config: 'normalize_mmd' must be a boolean");
      a.normalize_mmd = value.get<bool>();
    } else if (key == "subspace_dim") {
      spec.subspace_dim = get_int(value, "subspace_dim");
      if (spec.subspace_dim < 1) throw std::invalid_argument("config: subspace_dim >= 1 violated");
    } else if (key == "kernel") {
      if (!value.is_object()) throw std::invalid_argument("config: 'kernel' must be an object");
      for (const auto& [k, v] : value.items()) {
        if (k == "kind") {
          a.kernel.kind = parse_kernel_kind(get_string(v, "kernel.kind"));
        } else if (k == "gamma") {
          if (v.is_string()) {
            if (v.get<std::string>() != "median") {
              throw std::invalid_argument("config: kernel.gamma must be a number or \"median\"");
            }
            a.kernel.gamma.reset();
          } else {
            a.kernel.gamma = get_number(v, "kernel.gamma");
          }
        } else {
          warn(warnings, "unknown config key 'kernel." + k + "'");
        }
      }
      if (a.kernel.kind == KernelKind::linear) a.kernel.gamma.reset();
    } else if (key == "mu") {
      if (!value.is_object()) throw std::invalid_argument("config: 'mu' must be an object");
      for (const auto& [k, v] : value.items()) {
        if (k == "mode") {
          const std::string mode = get_string(v, "mu.mode");
          if (mode == "adaptive") {
            a.mu.adaptive = true;
          } else if (mode == "fixed") {
            a.mu.adaptive = false;
          } else {
            throw std::invalid_argument("config: mu.mode must be adaptive or fixed");
          }
        } else if (k == "value") {
          a.mu.value = get_number(v, "mu.value");
        } else {
          warn(warnings, "unknown config key 'mu." + k + "'");
        }
      }
    } else if (key == "normalize") {
      spec.normalize = parse_normalize_mode(get_string(value, "normalize"));
    } else if (key == "methods") {
      if (!value.is_array()) throw std::invalid_argument("config: 'methods' must be an array");
      spec.methods.clear();
      for (const auto& m : value) spec.methods.push_back(parse_method(get_string(m, "methods[]")));
    } else if (key == "dataset") {
      spec.set_dataset(get_string(value, "dataset"));
    } else if (key == "features") {
      spec.feature_dir = get_string(value, "features");
    } else if (key == "jobs") {
      spec.jobs = get_int(value, "jobs");
      if (spec.jobs < 1) throw std::invalid_argument("config: jobs >= 1 violated");
    } else {
      warn(warnings, "unknown config key '" + key + "'");
    }
  }
  a.validate();
  return spec;
}

SuiteSpec config_load(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_parse(buffer.str(), warnings);
}

std::string config_dump(const SuiteSpec& spec) {
  const AlignmentConfig& a = spec.alignment;
  json root;
  root["dataset"] = spec.dataset;
  root["features"] = spec.feature_dir.string();
  root["lambda"] = a.lambda;
  root["rho"] = a.rho;
  root["eta"] = a.eta;
  root["p"] = a.p;
  root["iterations"] = a.iterations;
  root["normalize_mmd"] = a.normalize_mmd;
  root["kernel"]["kind"] = mda::to_string(a.kernel.kind);
  if (a.kernel.kind == KernelKind::rbf) {
    root["kernel"]["gamma"] = a.kernel.gamma ? json(*a.kernel.gamma) : json("median");
  }
  root["mu"]["mode"] = a.mu.adaptive ? "adaptive" : "fixed";
  root["mu"]["value"] = a.mu.value;
  root["subspace_dim"] = spec.subspace_dim;
  root["normalize"] = mda::to_string(spec.normalize);
  root["methods"] = json::array();
  for (Method m : spec.methods) root["methods"].push_back(to_string(m));
  root["jobs"] = spec.jobs;
  return root.dump(2) + "\n";
}

void config_save(const SuiteSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << config_dump(spec);
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

std::filesystem::path feature_path(const SuiteSpec& spec, const std::string& domain) {
  const auto nested = spec.feature_dir / spec.dataset / (domain + ".mdaf");
  if (std::filesystem::exists(nested)) return nested;
  const auto flat = spec.feature_dir / (domain + ".mdaf");
  if (std::filesystem::exists(flat)) return flat;
  return nested;
}

namespace {

TaskResult from_labels(const Labels& predicted, const FeatureDataset& target) {
  const Evaluation ev = evaluate_labels(predicted, *target.labels, target.class_count);
  TaskResult out;
  out.accuracy = ev.accuracy;
  out.confusion = ev.confusion;
  out.predictions = predicted;
  return out;
}

TaskResult run_aligner(const DaTask& task, const AlignmentConfig& config) {
  const TrainedAligner aligner = fit(task, config);
  TaskResult out = from_labels(aligner.target_pseudo_labels, task.target);
  out.diagnostics = aligner.diagnostics;
  return out;
}

FeatureDataset load_domain(const SuiteSpec& spec, const std::string& domain) {
  FeatureDataset ds = load_binary(feature_path(spec, domain));
  ds.domain_name = domain;
  return normalize(ds, spec.normalize);
}

}  // namespace

TaskResult run_method(const DaTask& task, Method method, const SuiteSpec& spec) {
  if (!task.target.labeled()) throw std::invalid_argument("run_method: target labels required");
  switch (method) {
    case Method::source_1nn:
      return from_labels(nearest_neighbor_labels(task.source.X, *task.source.labels, task.target.X),
                         task.target);
    case Method::srm_only: {
      AlignmentConfig config = spec.alignment;
      config.lambda = 0.0;
      config.rho = 0.0;
      return run_aligner(task, config);
    }
    case Method::meda_ir: {
      const Eigen::Index k =
          std::min<Eigen::Index>({spec.subspace_dim, task.source.dim() / 2, task.source.size(),
                                  task.target.size()});
      if (k < 1) throw std::invalid_argument("meda_ir: feature dimension too small for GFK");
      const auto Ps = pca_subspace(task.source.X, k);
      const auto Pt = pca_subspace(task.target.X, k);
      const Matrix root = psd_sqrt(gfk_kernel(Ps, Pt));
      DaTask mapped = task;
      mapped.source.X = task.source.X * root;
      mapped.target.X = task.target.X * root;
      return run_aligner(mapped, spec.alignment);
    }
    case Method::mda:
      return run_aligner(task, spec.alignment);
  }
  throw std::invalid_argument("run_method: unknown method");
}

TaskResult run_task(const SuiteSpec& spec, const std::string& source, const std::string& target,
                    Method method) {
  for (const auto& domain : {source, target}) {
    const auto path = feature_path(spec, domain);
    if (!std::filesystem::exists(path)) throw std::runtime_error("missing feature file " + path.string());
  }
  return run_method(make_task(load_domain(spec, source), load_domain(spec, target)), method, spec);
}

double ResultTable::average(std::size_t method) const {
  const auto& row = accuracy_percent.at(method);
  if (row.empty()) return 0.0;
  double sum = 0.0;
  for (double v : row) sum += v;
  return sum / static_cast<double>(row.size());
}

namespace {

std::string one_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

// Average of the printed cells, so the printed average never drifts from
// the row it summarizes by more than its own rounding.
double displayed_average(const std::vector<double>& row) {
  if (row.empty()) return 0.0;
  double sum = 0.0;
  for (double v : row) sum += std::stod(one_decimal(v));
  return sum / static_cast<double>(row.size());
}

}  // namespace

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  out << "method";
  for (const auto& t : tasks) out << ',' << t;
  out << ",Average\n";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    out << to_string(methods[m]);
    for (double v : accuracy_percent[m]) out << ',' << one_decimal(v);
    out << ',' << one_decimal(displayed_average(accuracy_percent[m])) << '\n';
  }
  return out.str();
}

std::string ResultTable::to_text() const {
  std::size_t name_width = 6;
  for (Method m : methods) name_width = std::max(name_width, to_string(m).size());
  std::vector<std::size_t> widths;
  for (const auto& t : tasks) widths.push_back(std::max<std::size_t>(t.size(), 5));
  widths.push_back(7);

  std::ostringstream out;
  const auto pad = [&](const std::string& s, std::size_t w) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };
  out << "Accuracy (%) on " << dataset << '\n';
  out << std::string(name_width, ' ');
  for (std::size_t i = 0; i < tasks.size(); ++i) out << "  " << pad(tasks[i], widths[i]);
  out << "  " << pad("Average", widths.back()) << '\n';
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const std::string name = to_string(methods[m]);
    out << name << std::string(name_width - name.size(), ' ');
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      out << "  " << pad(one_decimal(accuracy_percent[m][i]), widths[i]);
    }
    out << "  " << pad(one_decimal(displayed_average(accuracy_percent[m])), widths.back()) << '\n';
  }
  return out.str();
}

ResultTable run_suite(const SuiteSpec& spec) {
  std::vector<std::string> missing;
  std::vector<std::string> domains;
  for (const auto& t : spec.tasks) {
    for (const auto& d : {t.source, t.target}) {
      if (std::find(domains.begin(), domains.end(), d) != domains.end()) continue;
      domains.push_back(d);
      const auto path = feature_path(spec, d);
      if (!std::filesystem::exists(path)) missing.push_back(path.string());
    }
  }
  if (!missing.empty()) {
    std::string message = "missing feature files:";
    for (const auto& m : missing) message += "\n  " + m;
    throw std::runtime_error(message);
  }

  std::map<std::string, FeatureDataset> loaded;
  for (const auto& d : domains) loaded.emplace(d, load_domain(spec, d));

  ResultTable table;
  table.dataset = spec.dataset;
  table.methods = spec.methods;
  for (const auto& t : spec.tasks) table.tasks.push_back(t.label());
  table.accuracy_percent.assign(spec.methods.size(), std::vector<double>(spec.tasks.size(), 0.0));

  // Cells are independent; each worker writes only its own slot.
  const std::size_t cells = spec.tasks.size() * spec.methods.size();
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(cells);
  const auto worker = [&] {
    for (std::size_t cell = next++; cell < cells; cell = next++) {
      const std::size_t t = cell / spec.methods.size();
      const std::size_t m = cell % spec.methods.size();
      try {
        const DaTask task =
            make_task(loaded.at(spec.tasks[t].source), loaded.at(spec.tasks[t].target));
        table.accuracy_percent[m][t] = 100.0 * run_method(task, spec.methods[m], spec).accuracy;
      } catch (const std::exception& e) {
        errors[cell] = spec.tasks[t].label() + " " + to_string(spec.methods[m]) + ": " + e.what();
      }
    }
  };
  const int jobs = std::max(1, spec.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  return table;
}

}  // namespace mda::bench
