#include "robsub/imgsum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "robsub/errors.hpp"
#include "robsub/random.hpp"

namespace robsub::imgsum {

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (rows_ == 0 || dim_ == 0) throw FormatError("embeddings: empty matrix");
  if (data_.size() != rows_ * dim_) throw FormatError("embeddings: data size mismatch");
  for (std::size_t i = 0; i < rows_; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) sq += at(i, j) * at(i, j);
    if (!(sq > 0.0)) throw FormatError("embeddings: zero-norm row " + std::to_string(i + 1));
  }
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("embeddings: cannot open '" + path + "'");
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++rows;
    std::size_t cols = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      ++cols;
      const char* begin = cell.c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      while (end && (*end == ' ' || *end == '\t')) ++end;
      if (end == begin || (end && *end != '\0') || !std::isfinite(v)) {
        throw FormatError("embeddings: non-numeric token '" + cell + "' at row " + std::to_string(rows) +
                          ", column " + std::to_string(cols));
      }
      data.push_back(v);
    }
    if (rows == 1) {
      dim = cols;
    } else if (cols != dim) {
      throw FormatError("embeddings: row " + std::to_string(rows) + " has " + std::to_string(cols) +
                        " columns, expected " + std::to_string(dim));
    }
  }
  return EmbeddingMatrix(rows, dim, std::move(data));
}

void save_embeddings(const EmbeddingMatrix& e, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("embeddings: cannot write '" + path + "'");
  char buf[40];
  for (std::size_t i = 0; i < e.rows(); ++i) {
    for (std::size_t j = 0; j < e.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.at(i, j));
      if (j > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("embeddings: write failed for '" + path + "'");
}

EmbeddingMatrix synthetic_embeddings(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (count == 0 || dim == 0) throw DomainError("synthetic_embeddings: count and dim must be positive");
  Rng rng(seed);
  std::vector<double> data(count * dim);
  for (std::size_t i = 0; i < count; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = standard_normal(rng);
      data[i * dim + j] = v;
      sq += v * v;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < dim; ++j) data[i * dim + j] *= inv;
  }
  return EmbeddingMatrix(count, dim, std::move(data));
}

namespace {

void similarity_row(const EmbeddingMatrix& e, const std::vector<double>& norms, std::size_t i,
                    double* out) {
  const std::size_t n = e.rows();
  const std::size_t d = e.dim();
  const double* a = e.row(i);
  for (std::size_t j = 0; j < n; ++j) {
    const double* b = e.row(j);
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) dot += a[k] * b[k];
    out[j] = dot / (norms[i] * norms[j]);
  }
}

}  // namespace

DistanceMatrix distance_matrix(const EmbeddingMatrix& e, Execution exec) {
  const std::size_t n = e.rows();
  if (n < 2) throw DomainError("distance_matrix: needs at least two rows");
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < e.dim(); ++k) sq += e.at(i, k) * e.at(i, k);
    norms[i] = std::sqrt(sq);
  }
  std::vector<double> sim(n * n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      similarity_row(e, norms, static_cast<std::size_t>(i), sim.data() + static_cast<std::size_t>(i) * n);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      similarity_row(e, norms, static_cast<std::size_t>(i), sim.data() + static_cast<std::size_t>(i) * n);
    }
  }
  // The dot product is not bitwise symmetric in general; mirror the upper triangle.
  double s_max = -std::numeric_limits<double>::infinity();
  double s_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sim[j * n + i] = sim[i * n + j];
      s_max = std::max(s_max, sim[i * n + j]);
      s_min = std::min(s_min, sim[i * n + j]);
    }
  }
  const double span = s_max - s_min;
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      // All off-diagonal similarities equal: every pair is maximally similar.
      const double v = span > 0.0 ? (s_max - sim[i * n + j]) / span : 0.0;
      dist[i * n + j] = std::clamp(v, 0.0, 1.0);
    }
  }
  return DistanceMatrix(n, std::move(dist));
}

void save_distance_matrix(const DistanceMatrix& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("distance matrix: cannot write '" + path + "'");
  char buf[40];
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", d(i, j));
      if (j > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("distance matrix: write failed for '" + path + "'");
}

namespace {

class FacilityCursor final : public GainCursor {
 public:
  explicit FacilityCursor(const FacilityTask& task) : GainCursor(task.ground_size()), task_(task) {}
  // Empty-set convention: the nearest distance is 1.
  double value() const override { return 1.0 - nearest_; }
  double gain(Element e) const override { return std::max(0.0, nearest_ - task_.distance_to(e)); }

 protected:
  void on_add(Element e) override { nearest_ = std::min(nearest_, task_.distance_to(e)); }

 private:
  const FacilityTask& task_;
  double nearest_ = 1.0;
};

}  // namespace

double FacilityTask::evaluate(const Subset& s) const {
  double nearest = 1.0;
  s.for_each([&](Element e) { nearest = std::min(nearest, (*d_)(image_, e)); });
  return 1.0 - nearest;
}

std::unique_ptr<GainCursor> FacilityTask::cursor() const { return std::make_unique<FacilityCursor>(*this); }

std::shared_ptr<const TaskFamily> image_task_family(std::shared_ptr<const DistanceMatrix> d) {
  std::vector<SetFunctionPtr> tasks;
  tasks.reserve(d->size());
  for (std::size_t i = 0; i < d->size(); ++i) tasks.push_back(std::make_shared<FacilityTask>(d, i));
  return std::make_shared<const TaskFamily>(std::move(tasks));
}

}  // namespace robsub::imgsum
