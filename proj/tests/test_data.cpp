// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "zkd/data.hpp"
#include "zkd/io.hpp"

namespace zkd {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zkd_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DataSpec blobs(std::size_t K, std::size_t D, std::size_t N, double noise) {
  return {Generator::GaussianBlobs, K, D, N, 3.0, noise, 5};
}

TEST(DataSpec, Validation) {
  EXPECT_NO_THROW(DataSpec{}.validate());
  EXPECT_THROW(blobs(1, 3, 10, 1.0).validate(), InvalidParameter);
  EXPECT_THROW(blobs(5, 3, 4, 1.0).validate(), InvalidParameter);
  EXPECT_THROW(blobs(3, 3, 30, -1.0).validate(), InvalidParameter);
  DataSpec s{Generator::Spirals, 3, 3, 300, 1.0, 0.1, 0};
  EXPECT_THROW(generate(s), InvalidParameter);
  EXPECT_THROW(generate(blobs(4, 3, 16, 1.0)), InvalidParameter);
  EXPECT_EQ(generator_from_string("spirals"), Generator::Spirals);
  EXPECT_THROW(generator_from_string("moons"), InvalidParameter);
}

TEST(Dataset, Invariants) {
  EXPECT_THROW(Dataset(2, 1, {1.0}, {2}), InvalidParameter);
  EXPECT_THROW(Dataset(2, 1, {NAN}, {0}), InvalidParameter);
  EXPECT_THROW(Dataset(2, 2, {1.0}, {0}), ShapeError);
  EXPECT_THROW(Dataset(2, 1, {}, {}), InvalidParameter);
}

TEST(Generate, Deterministic) {
  for (const DataSpec& s : {blobs(4, 6, 200, 1.0), DataSpec{Generator::Spirals, 3, 2, 150, 1.0, 0.1, 9}}) {
    const Split a = generate(s);
    const Split b = generate(s);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
  }
  DataSpec other = blobs(4, 6, 200, 1.0);
  other.seed = 6;
  EXPECT_NE(generate(other).train, generate(blobs(4, 6, 200, 1.0)).train);
}

TEST(Generate, StratifiedEightyTwenty) {
  const Split s = generate(blobs(7, 3, 1003, 1.0));
  EXPECT_EQ(s.train.size() + s.test.size(), 1003u);
  const auto tr = s.train.class_counts();
  const auto te = s.test.class_counts();
  for (std::size_t k = 0; k < 7; ++k) {
    const double total = static_cast<double>(tr[k] + te[k]);
    EXPECT_LE(std::abs(static_cast<double>(te[k]) - 0.2 * total), 1.0);
    EXPECT_LE(std::abs(static_cast<double>(tr[k]) - 0.8 * total), 1.0);
  }
}

TEST(Generate, NoiseFreeBlobsSitOnTheirMeans) {
  for (std::size_t D : {1u, 3u, 8u}) {
    const DataSpec spec = blobs(5, D, 100, 0.0);
    const Split s = generate(spec);
    const auto means = blob_means(spec);
    std::size_t correct = 0;
    for (std::size_t n = 0; n < s.test.size(); ++n) {
      const auto x = s.test.row(n);
      for (std::size_t d = 0; d < D; ++d) {
        EXPECT_EQ(x[d], means[s.test.label(n) * D + d]);
      }
      std::size_t best = 0;
      double best_dist = INFINITY;
      for (std::size_t k = 0; k < 5; ++k) {
        double dist = 0.0;
        for (std::size_t d = 0; d < D; ++d) dist += std::pow(x[d] - means[k * D + d], 2);
        if (dist < best_dist) {
          best_dist = dist;
          best = k;
        }
      }
      correct += best == s.test.label(n);
    }
    EXPECT_EQ(correct, s.test.size()) << "D = " << D;
  }
}

TEST(Generate, MeansAreSeparated) {
  for (std::size_t D : {1u, 2u, 4u, 10u}) {
    const DataSpec spec = blobs(4, D, 100, 1.0);
    const auto m = blob_means(spec);
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = a + 1; b < 4; ++b) {
        double dist = 0.0;
        for (std::size_t d = 0; d < D; ++d) dist += std::pow(m[a * D + d] - m[b * D + d], 2);
        EXPECT_GE(std::sqrt(dist), 3.0 - 1e-12) << "D = " << D;
      }
    }
  }
}

TEST(Csv, SmallFileWithHeader) {
  const Dataset d = parse_csv("x,y,label\n1.5,2,0\n-3,4e-1,2\n0,0,1\n");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.num_classes(), 3u);
  EXPECT_EQ(d.row(1)[1], 0.4);
  EXPECT_EQ(d.label(1), 2u);
}

TEST(Csv, NoHeaderAndCrlf) {
  const Dataset d = parse_csv("1,2,0\r\n3,4,1\r\n");
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.row(1)[0], 3.0);
}

TEST(Csv, ErrorsNameTheRow) {
  try {
    parse_csv("a,b,label\n1,2,0\n3,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  try {
    parse_csv("1,2,0\n1,x,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
  EXPECT_THROW(parse_csv("1,2,-1\n"), ParseError);
  EXPECT_THROW(parse_csv("1,2,0.5\n"), ParseError);
  EXPECT_THROW(parse_csv("f1,label\n"), ParseError);
  EXPECT_THROW(load_csv(temp_dir("missing") / "none.csv"), IoError);
}

TEST(Csv, ExportRoundTrips) {
  const fs::path dir = temp_dir("roundtrip");
  const Split s = generate(blobs(4, 5, 200, 1.3));
  save_csv(s.train, dir / "train.csv");
  const Dataset back = load_csv(dir / "train.csv");
  ASSERT_EQ(back.size(), s.train.size());
  ASSERT_EQ(back.dim(), s.train.dim());
  for (std::size_t i = 0; i < back.features().size(); ++i) {
    EXPECT_NEAR(back.features()[i], s.train.features()[i], 1e-15);
  }
  EXPECT_EQ(back.labels(), s.train.labels());
}

}  // namespace
}  // namespace zkd
