#pragma once

#include <variant>

#include "idcrn/types.hpp"

namespace idcrn {

// Non-owning reference to an N x N propagation matrix held either densely
// (diffusion) or sparsely (KNN graph, normalized adjacency).
class PropagationRef {
 public:
  PropagationRef(const Matrix& dense) : m_(&dense) {}         // NOLINT(google-explicit-constructor)
  PropagationRef(const SparseMatrix& sparse) : m_(&sparse) {}  // NOLINT(google-explicit-constructor)

  Index size() const {
    return std::visit([](const auto* m) { return m->rows(); }, m_);
  }
  Matrix apply(const Matrix& x) const {
    return std::visit([&](const auto* m) -> Matrix { return (*m) * x; }, m_);
  }
  Matrix apply_transpose(const Matrix& x) const {
    return std::visit([&](const auto* m) -> Matrix { return m->transpose() * x; }, m_);
  }
  Matrix dense_rows(Index start, Index count) const {
    return std::visit([&](const auto* m) -> Matrix { return Matrix(m->middleRows(start, count)); }, m_);
  }
  Matrix dense() const {
    return std::visit([](const auto* m) -> Matrix { return Matrix(*m); }, m_);
  }

 private:
  std::variant<const Matrix*, const SparseMatrix*> m_;
};

}  // namespace idcrn
