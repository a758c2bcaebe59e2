#include "mda/features.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mda {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'D', 'A', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kHeaderBytes = 20;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& cell, std::size_t line) {
  const std::string t = trim(cell);
  if (t.empty()) {
    throw std::runtime_error("line " + std::to_string(line) + ": empty cell");
  }
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) {
    throw std::runtime_error("line " + std::to_string(line) +
                             ": non-numeric cell '" + t + "'");
  }
  return v;
}

int parse_label(const std::string& cell, std::size_t line) {
  const double v = parse_double(cell, line);
  if (v != std::floor(v) || v < 0 || v > std::numeric_limits<int>::max()) {
    throw std::runtime_error("line " + std::to_string(line) +
                             ": label must be a non-negative integer");
  }
  return static_cast<int>(v);
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(bits & 0xff),
      static_cast<unsigned char>((bits >> 8) & 0xff),
      static_cast<unsigned char>((bits >> 16) & 0xff),
      static_cast<unsigned char>((bits >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

template <typename T>
T get_le(const unsigned char* p) {
  static_assert(sizeof(T) == 4);
  const std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                             (std::uint32_t(p[2]) << 16) |
                             (std::uint32_t(p[3]) << 24);
  T value;
  std::memcpy(&value, &bits, 4);
  return value;
}

// Labels of 0 in a file mean unlabeled; all-or-nothing.
std::optional<Labels> labels_from_file(const Labels& raw) {
  const bool any_zero = std::any_of(raw.begin(), raw.end(), [](int l) { return l == 0; });
  const bool all_zero = std::all_of(raw.begin(), raw.end(), [](int l) { return l == 0; });
  if (all_zero) return std::nullopt;
  if (any_zero) {
    throw std::runtime_error("mixed labeled and unlabeled rows");
  }
  return raw;
}

}  // namespace

void FeatureDataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) {
    throw std::invalid_argument("dataset must have at least one sample and one feature");
  }
  if (class_count < 1) {
    throw std::invalid_argument("class count must be positive");
  }
  if (!X.allFinite()) {
    throw std::invalid_argument("dataset contains non-finite features");
  }
  if (labels) {
    if (static_cast<Eigen::Index>(labels->size()) != X.rows()) {
      throw std::invalid_argument("label count does not match sample count");
    }
    for (int l : *labels) {
      if (l < 1 || l > class_count) {
        throw std::invalid_argument("label " + std::to_string(l) + " outside 1.." +
                                    std::to_string(class_count));
      }
    }
  }
}

bool FeatureDataset::operator==(const FeatureDataset& other) const {
  return X.rows() == other.X.rows() && X.cols() == other.X.cols() && X == other.X &&
         labels == other.labels && class_count == other.class_count &&
         domain_name == other.domain_name;
}

NormalizeMode parse_normalize_mode(const std::string& name) {
  if (name == "none") return NormalizeMode::none;
  if (name == "zscore") return NormalizeMode::zscore;
  if (name == "unit_length") return NormalizeMode::unit_length;
  throw std::invalid_argument("unknown normalization mode '" + name + "'");
}

std::string to_string(NormalizeMode mode) {
  switch (mode) {
    case NormalizeMode::none: return "none";
    case NormalizeMode::zscore: return "zscore";
    case NormalizeMode::unit_length: return "unit_length";
  }
  return "none";
}

FeatureDataset load_csv(const std::filesystem::path& path, std::optional<int> class_count) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  Labels raw_labels;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() < 2) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": need a label and at least one feature");
    }
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw std::runtime_error("ragged rows: line " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " columns, expected " +
                               std::to_string(width));
    }
    raw_labels.push_back(parse_label(cells[0], line_no));
    std::vector<double> values(width - 1);
    for (std::size_t j = 1; j < width; ++j) values[j - 1] = parse_double(cells[j], line_no);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": no samples");

  FeatureDataset ds;
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) {
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  ds.labels = labels_from_file(raw_labels);
  const int max_label =
      ds.labels ? *std::max_element(ds.labels->begin(), ds.labels->end()) : 1;
  ds.class_count = class_count.value_or(max_label);
  ds.domain_name = path.stem().string();
  ds.validate();
  return ds;
}

void save_csv(const FeatureDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[64];
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    out << (ds.labels ? (*ds.labels)[static_cast<std::size_t>(i)] : 0);
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.X(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

FeatureDataset load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                                      [](char a, unsigned char b) { return a == char(b); })) {
    throw std::runtime_error(path.string() + ": bad magic");
  }
  if (bytes.size() < kHeaderBytes) throw std::runtime_error(path.string() + ": truncated header");
  const auto version = get_le<std::uint32_t>(&bytes[4]);
  if (version != kVersion) {
    throw std::runtime_error(path.string() + ": unsupported version " + std::to_string(version));
  }
  const std::uint64_t n = get_le<std::uint32_t>(&bytes[8]);
  const std::uint64_t d = get_le<std::uint32_t>(&bytes[12]);
  const std::uint32_t c = get_le<std::uint32_t>(&bytes[16]);
  if (n == 0 || d == 0 || c == 0) throw std::runtime_error(path.string() + ": empty dimensions");
  // n, d < 2^32 so n*d < 2^64; the payload must still fit in memory.
  const std::uint64_t cells = n * d;
  if (cells > std::numeric_limits<std::uint64_t>::max() / 4 - n ||
      cells > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max())) {
    throw std::runtime_error(path.string() + ": declared size overflows");
  }
  const std::uint64_t expected = kHeaderBytes + 4 * n + 4 * cells;
  if (bytes.size() < expected) throw std::runtime_error(path.string() + ": truncated payload");
  if (bytes.size() > expected) throw std::runtime_error(path.string() + ": trailing bytes");

  Labels raw(n);
  const unsigned char* p = &bytes[kHeaderBytes];
  for (std::uint64_t i = 0; i < n; ++i, p += 4) raw[i] = get_le<std::int32_t>(p);

  FeatureDataset ds;
  ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < d; ++j, p += 4) {
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = get_le<float>(p);
    }
  }
  for (int l : raw) {
    if (l < 0) throw std::runtime_error(path.string() + ": negative label");
  }
  ds.labels = labels_from_file(raw);
  ds.class_count = static_cast<int>(c);
  ds.domain_name = path.stem().string();
  ds.validate();
  return ds;
}

void save_binary(const FeatureDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  if (ds.X.rows() > std::numeric_limits<std::uint32_t>::max() ||
      ds.X.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("dataset too large for MDAF");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic.data(), 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.X.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.X.cols()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.class_count));
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    put_le<std::int32_t>(out, ds.labels ? (*ds.labels)[static_cast<std::size_t>(i)] : 0);
  }
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
      put_le<float>(out, static_cast<float>(ds.X(i, j)));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

FeatureDataset normalize(const FeatureDataset& ds, NormalizeMode mode) {
  FeatureDataset out = ds;
  switch (mode) {
    case NormalizeMode::none:
      break;
    case NormalizeMode::zscore: {
      const auto n = static_cast<double>(ds.X.rows());
      for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
        const double mean = ds.X.col(j).mean();
        const double var = (ds.X.col(j).array() - mean).square().sum() / n;
        if (var <= 0.0) continue;
        out.X.col(j) = (ds.X.col(j).array() - mean) / std::sqrt(var);
      }
      break;
    }
    case NormalizeMode::unit_length:
      for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
        const double norm = ds.X.row(i).norm();
        if (norm > 0.0) out.X.row(i) /= norm;
      }
      break;
  }
  return out;
}

DaTask make_task(FeatureDataset source, FeatureDataset target) {
  source.validate();
  target.validate();
  if (!source.labeled()) throw std::invalid_argument("source labels required");
  if (source.dim() != target.dim()) {
    throw std::invalid_argument("dimension mismatch: source d=" + std::to_string(source.dim()) +
                                ", target d=" + std::to_string(target.dim()));
  }
  if (source.class_count != target.class_count) {
    throw std::invalid_argument("class-count mismatch");
  }
  return DaTask{std::move(source), std::move(target)};
}

}  // namespace mda
