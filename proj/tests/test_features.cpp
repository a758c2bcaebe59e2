#include "mda/features.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace mda {
namespace {

namespace fs = std::filesystem;

class FeaturesTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mda_features_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream(path, std::ios::binary) << content;
    return path;
  }

  fs::path dir_;
};

FeatureDataset float_dataset(testing::Rng& rng, Eigen::Index n, Eigen::Index d, int C) {
  FeatureDataset ds;
  ds.X = rng.normal_matrix(n, d).cast<float>().cast<double>();
  ds.labels = Labels{};
  for (Eigen::Index i = 0; i < n; ++i) ds.labels->push_back(rng.integer(1, C));
  ds.class_count = C;
  ds.domain_name = "synthetic";
  return ds;
}

TEST_F(FeaturesTest, CsvParsesLabelsAndFeatures) {
  const auto ds = load_csv(write("a.csv", "1,0.5,0.5\n2,1.0,0.0\n1,0.0,1.0\n"));
  EXPECT_EQ(ds.size(), 3);
  EXPECT_EQ(ds.dim(), 2);
  ASSERT_TRUE(ds.labeled());
  EXPECT_EQ(*ds.labels, (Labels{1, 2, 1}));
  EXPECT_EQ(ds.class_count, 2);
  EXPECT_DOUBLE_EQ(ds.X(1, 0), 1.0);
  EXPECT_EQ(ds.domain_name, "a");
}

TEST_F(FeaturesTest, CsvAllZeroLabelsMeansUnlabeled) {
  const auto ds = load_csv(write("u.csv", "0,1,2\n0,3,4\n"), 5);
  EXPECT_FALSE(ds.labeled());
  EXPECT_EQ(ds.class_count, 5);
}

TEST_F(FeaturesTest, CsvRejectsMalformedInput) {
  EXPECT_THROW(load_csv(write("r.csv", "1,2,3\n1,2,3,4\n")), std::runtime_error);
  EXPECT_THROW(load_csv(write("n.csv", "1,2,abc\n")), std::runtime_error);
  EXPECT_THROW(load_csv(write("m.csv", "1,2,3\n0,2,3\n")), std::runtime_error);
  EXPECT_THROW(load_csv(write("e.csv", "")), std::runtime_error);
  EXPECT_THROW(load_csv(write("l.csv", "1.5,2,3\n")), std::runtime_error);
  EXPECT_THROW(load_csv(dir_ / "missing.csv"), std::runtime_error);
}

TEST_F(FeaturesTest, CsvRoundTripIsLossless) {
  testing::Rng rng(11);
  FeatureDataset ds;
  ds.X = rng.normal_matrix(7, 5) * 1e3;
  ds.X(0, 0) = 1.0 / 3.0;
  ds.labels = Labels{1, 2, 3, 1, 2, 3, 3};
  ds.class_count = 3;
  ds.domain_name = "rt";
  const auto path = dir_ / "rt.csv";
  save_csv(ds, path);
  const auto back = load_csv(path, 3);
  EXPECT_EQ(back, ds);
}

TEST_F(FeaturesTest, BinaryRoundTripPreservesEverything) {
  testing::Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    FeatureDataset ds = float_dataset(rng, rng.integer(1, 40), rng.integer(1, 30), rng.integer(1, 10));
    ds.domain_name = "dom";
    const auto path = dir_ / "dom.mdaf";
    save_binary(ds, path);
    EXPECT_EQ(load_binary(path), ds);
  }
}

TEST_F(FeaturesTest, BinaryUnlabeledRoundTrip) {
  testing::Rng rng(6);
  FeatureDataset ds = float_dataset(rng, 4, 3, 7);
  ds.labels.reset();
  ds.domain_name = "u";
  save_binary(ds, dir_ / "u.mdaf");
  const auto back = load_binary(dir_ / "u.mdaf");
  EXPECT_FALSE(back.labeled());
  EXPECT_EQ(back, ds);
}

TEST_F(FeaturesTest, BinaryLayoutIsLittleEndianMdaf) {
  FeatureDataset ds;
  ds.X.resize(1, 2);
  ds.X << 1.0, -2.5;
  ds.labels = Labels{3};
  ds.class_count = 4;
  save_binary(ds, dir_ / "x.mdaf");
  std::ifstream in(dir_ / "x.mdaf", std::ios::binary);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  const std::vector<unsigned char> expected = {
      'M', 'D', 'A', 'F', 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 4, 0, 0, 0,  // header
      3, 0, 0, 0,                                                           // label
      0x00, 0x00, 0x80, 0x3f,                                               // 1.0f
      0x00, 0x00, 0x20, 0xc0};                                              // -2.5f
  EXPECT_EQ(bytes, expected);
}

TEST_F(FeaturesTest, BinaryRejectsCorruptFiles) {
  EXPECT_THROW(load_binary(write("bad.mdaf", "XXXX0000000000000000")), std::runtime_error);

  testing::Rng rng(7);
  FeatureDataset ds = float_dataset(rng, 3, 4, 2);
  save_binary(ds, dir_ / "ok.mdaf");
  std::ifstream in(dir_ / "ok.mdaf", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  EXPECT_THROW(load_binary(write("trunc.mdaf", bytes.substr(0, bytes.size() - 1))), std::runtime_error);
  EXPECT_THROW(load_binary(write("hdr.mdaf", bytes.substr(0, 10))), std::runtime_error);

  // n = d = 0xffffffff: payload far larger than the file.
  std::string huge = bytes.substr(0, 20);
  for (int i = 8; i < 16; ++i) huge[static_cast<std::size_t>(i)] = '\xff';
  EXPECT_THROW(load_binary(write("huge.mdaf", huge)), std::runtime_error);

  std::string label_out_of_range = bytes;
  label_out_of_range[20] = 9;  // C = 2
  EXPECT_THROW(load_binary(write("lab.mdaf", label_out_of_range)), std::invalid_argument);
}

TEST(Normalize, NoneIsIdentity) {
  testing::Rng rng(1);
  FeatureDataset ds;
  ds.X = rng.normal_matrix(5, 3);
  EXPECT_EQ(normalize(ds, NormalizeMode::none), ds);
}

TEST(Normalize, UnitLengthKeepsZeroRows) {
  FeatureDataset ds;
  ds.X.resize(2, 2);
  ds.X << 3, 4, 0, 0;
  const auto out = normalize(ds, NormalizeMode::unit_length);
  EXPECT_DOUBLE_EQ(out.X(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(out.X(0, 1), 0.8);
  EXPECT_EQ(out.X(1, 0), 0.0);
  EXPECT_EQ(out.X(1, 1), 0.0);
}

TEST(Normalize, ZscoreAnalyticAndConstantColumns) {
  FeatureDataset ds;
  ds.X.resize(2, 2);
  ds.X << 0, 7, 2, 7;
  const auto out = normalize(ds, NormalizeMode::zscore);
  EXPECT_DOUBLE_EQ(out.X(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(out.X(1, 0), 1.0);
  EXPECT_EQ(out.X(0, 1), 7.0);  // zero variance passes through
}

TEST(Normalize, IdempotentOnRandomData) {
  testing::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureDataset ds;
    ds.X = rng.normal_matrix(rng.integer(2, 30), rng.integer(1, 8)) * rng.uniform(0.1, 50.0);
    for (auto mode : {NormalizeMode::zscore, NormalizeMode::unit_length}) {
      const auto once = normalize(ds, mode);
      const auto twice = normalize(once, mode);
      EXPECT_LE((once.X - twice.X).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(MakeTask, ChecksCompatibility) {
  testing::Rng rng(2);
  FeatureDataset src = float_dataset(rng, 10, 1000, 10);
  FeatureDataset tgt = float_dataset(rng, 8, 1000, 10);
  EXPECT_NO_THROW(make_task(src, tgt));

  FeatureDataset wide = float_dataset(rng, 8, 1536, 10);
  EXPECT_THROW(make_task(src, wide), std::invalid_argument);

  FeatureDataset unlabeled = src;
  unlabeled.labels.reset();
  EXPECT_THROW(make_task(unlabeled, tgt), std::invalid_argument);

  FeatureDataset other_classes = tgt;
  other_classes.class_count = 11;
  EXPECT_THROW(make_task(src, other_classes), std::invalid_argument);
}

TEST(FeatureDataset, ValidateRejectsNonFinite) {
  FeatureDataset ds;
  ds.X = Matrix::Zero(2, 2);
  ds.X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ds.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace mda
