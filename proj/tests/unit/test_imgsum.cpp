#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "robsub/errors.hpp"
#include "robsub/imgsum.hpp"
#include "robsub/random.hpp"

using namespace robsub;
using namespace robsub::imgsum;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("robsub_" + name)).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("load_embeddings") {
  const auto path = temp_path("ones.csv");
  write_text(path, "1,1,1\n1,1,1\n");
  const auto e = load_embeddings(path);
  CHECK(e.rows() == 2);
  CHECK(e.dim() == 3);
  for (double v : e.data()) CHECK(v == 1.0);

  write_text(path, "1,2\n3,x\n");
  try {
    load_embeddings(path);
    FAIL("expected FormatError");
  } catch (const FormatError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
  write_text(path, "1,2\n3\n");
  CHECK_THROWS_AS(load_embeddings(path), FormatError);
  write_text(path, "1,2\n0,0\n");
  CHECK_THROWS_AS(load_embeddings(path), FormatError);
  CHECK_THROWS_AS(load_embeddings(temp_path("missing.csv")), std::exception);
  std::remove(path.c_str());
}

TEST_CASE("synthetic embeddings round-trip exactly") {
  const auto e = synthetic_embeddings(819, 64, 1);
  for (std::size_t i = 0; i < e.rows(); ++i) {
    double n = 0.0;
    for (std::size_t j = 0; j < e.dim(); ++j) n += e.at(i, j) * e.at(i, j);
    CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-12);
  }
  CHECK(synthetic_embeddings(819, 64, 1).data() == e.data());
  CHECK(synthetic_embeddings(819, 64, 2).data() != e.data());
  const auto path = temp_path("emb.csv");
  save_embeddings(e, path);
  CHECK(load_embeddings(path).data() == e.data());
  std::remove(path.c_str());
}

TEST_CASE("distance matrix") {
  const auto e = synthetic_embeddings(10, 4, 9);
  const auto d = distance_matrix(e);
  // Naive double loop.
  std::vector<double> s(100);
  double smax = -2.0, smin = 2.0;
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        dot += e.at(i, k) * e.at(j, k);
        ni += e.at(i, k) * e.at(i, k);
        nj += e.at(j, k) * e.at(j, k);
      }
      s[i * 10 + j] = dot / std::sqrt(ni * nj);
      if (i != j) {
        smax = std::max(smax, s[i * 10 + j]);
        smin = std::min(smin, s[i * 10 + j]);
      }
    }
  }
  bool hit_one = false;
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(d(i, i) == 0.0);
    for (std::size_t j = 0; j < 10; ++j) {
      CHECK(d(i, j) == d(j, i));
      CHECK(d(i, j) >= 0.0);
      CHECK(d(i, j) <= 1.0);
      if (i != j) {
        CHECK(std::abs(d(i, j) - (smax - s[i * 10 + j]) / (smax - smin)) <= 1e-12);
        hit_one = hit_one || d(i, j) == 1.0;
      }
    }
  }
  CHECK(hit_one);

  // Duplicate rows attain the maximal similarity.
  std::vector<double> data = {1, 0, 1, 0, 0, 1, 1, 1};
  const auto dup = distance_matrix(EmbeddingMatrix(4, 2, data));
  CHECK(dup(0, 1) == 0.0);
  CHECK(dup(2, 3) >= 0.0);
  CHECK_THROWS_AS(distance_matrix(EmbeddingMatrix(1, 2, {1, 0})), DomainError);
}

TEST_CASE("facility tasks") {
  const auto e = synthetic_embeddings(8, 3, 5);
  auto d = std::make_shared<const DistanceMatrix>(distance_matrix(e));
  const auto family = image_task_family(d);
  CHECK(family->size() == 8);
  const Subset s = Subset::of(8, {2, 6});
  const auto v = family->values(s);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(v[i] == 1.0 - std::min((*d)(i, 2), (*d)(i, 6)));
    CHECK(family->values(Subset(8))[i] == 0.0);
  }
  CHECK(v[2] == 1.0);
  CHECK(v[6] == 1.0);

  // Exhaustive submodularity and monotonicity for every task.
  for (std::size_t i = 0; i < 8; ++i) {
    const auto& f = family->task(i);
    std::vector<double> table(256);
    for (unsigned m = 0; m < 256; ++m) table[m] = f.evaluate(Subset::from_mask(8, m));
    for (unsigned t = 0; t < 256; ++t) {
      for (unsigned x = 0; x < 8; ++x) {
        if (t >> x & 1U) continue;
        CHECK(table[t | (1U << x)] >= table[t]);
        for (unsigned sm = t;; sm = (sm - 1) & t) {
          CHECK(table[sm | (1U << x)] - table[sm] >= table[t | (1U << x)] - table[t] - 1e-12);
          if (sm == 0) break;
        }
      }
    }
  }
}
