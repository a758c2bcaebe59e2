#ifndef MDA_FEATURES_HPP
#define MDA_FEATURES_HPP

#include "mda/types.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace mda {

/// One domain's feature matrix. Rows are samples; labels, when present, are
/// class ids in 1..class_count.
struct FeatureDataset {
  Matrix X;
  std::optional<Labels> labels;
  std::string domain_name;
  int class_count = 1;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
  bool labeled() const { return labels.has_value(); }

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;

  bool operator==(const FeatureDataset& other) const;
};

struct DaTask {
  FeatureDataset source;
  FeatureDataset target;
};

enum class NormalizeMode { none, zscore, unit_length };

NormalizeMode parse_normalize_mode(const std::string& name);
std::string to_string(NormalizeMode mode);

/// Reads "label,f1,...,fd" rows. Label 0 marks an unlabeled sample; a file is
/// either entirely labeled or entirely unlabeled. When class_count is not
/// given it is taken as the largest label seen (1 for unlabeled files).
FeatureDataset load_csv(const std::filesystem::path& path,
                        std::optional<int> class_count = std::nullopt);
void save_csv(const FeatureDataset& ds, const std::filesystem::path& path);

/// MDAF: "MDAF", u32 version (1), u32 n, u32 d, u32 C, n x i32 labels,
/// n*d x f32 row-major features. Little-endian throughout. Features are
/// stored in single precision.
FeatureDataset load_binary(const std::filesystem::path& path);
void save_binary(const FeatureDataset& ds, const std::filesystem::path& path);

FeatureDataset normalize(const FeatureDataset& ds, NormalizeMode mode);

DaTask make_task(FeatureDataset source, FeatureDataset target);

}  // namespace mda

#endif  // MDA_FEATURES_HPP
