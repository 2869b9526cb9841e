#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "robsub/objective.hpp"
#include "robsub/parallel.hpp"

namespace robsub::imgsum {

// Row-major |N| x d matrix of image embeddings.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  const double* row(std::size_t i) const { return data_.data() + i * dim_; }
  double at(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<double> data_;
};

// Headerless CSV, one embedding per row. Throws FormatError naming row/column.
EmbeddingMatrix load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingMatrix& e, const std::string& path);

// Seeded Gaussian rows scaled to unit norm.
EmbeddingMatrix synthetic_embeddings(std::size_t count, std::size_t dim, std::uint64_t seed);

// Symmetric |N| x |N| dissimilarities in [0, 1], zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix(std::size_t n, std::vector<double> data) : n_(n), data_(std::move(data)) {}
  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  const double* row(std::size_t i) const { return data_.data() + i * n_; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

// d(i,e) = (s_max - s(i,e)) / (s_max - s_min) over cosine similarities s, with
// the extremes taken off the diagonal and d(i,i) = 0.
DistanceMatrix distance_matrix(const EmbeddingMatrix& e, Execution exec = Execution::kParallel);
void save_distance_matrix(const DistanceMatrix& d, const std::string& path);

// f_i(S) = 1 - min_{e in S} d(i, e); f_i(empty) = 0.
class FacilityTask : public SetFunction {
 public:
  FacilityTask(std::shared_ptr<const DistanceMatrix> d, std::size_t image) : d_(std::move(d)), image_(image) {}
  std::size_t ground_size() const override { return d_->size(); }
  double evaluate(const Subset& s) const override;
  std::unique_ptr<GainCursor> cursor() const override;
  double distance_to(Element e) const { return (*d_)(image_, e); }

 private:
  std::shared_ptr<const DistanceMatrix> d_;
  std::size_t image_;
};

std::shared_ptr<const TaskFamily> image_task_family(std::shared_ptr<const DistanceMatrix> d);

}  // namespace robsub::imgsum
