#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sortform {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A bijection on {0, ..., K-1}. Applied to a matrix, row i of the result
// is row mapping[i] of the input, i.e. Y_pi = [y_pi(0), ..., y_pi(K-1)].
class Permutation {
 public:
  Permutation() = default;

  // Throws ValidationError unless `mapping` is a bijection.
  explicit Permutation(std::vector<int> mapping);

  static Permutation identity(std::size_t size);

  std::size_t size() const noexcept { return mapping_.size(); }
  int operator[](std::size_t i) const { return mapping_[i]; }
  const std::vector<int> &mapping() const noexcept { return mapping_; }

  bool is_identity() const noexcept;
  Permutation inverse() const;

  // (this o other)[i] = this[other[i]]
  Permutation compose(const Permutation &other) const;

  Matrix apply_rows(const Matrix &m) const;
  Matrix apply_cols(const Matrix &m) const;

  std::string to_string() const;

  friend bool operator==(const Permutation &, const Permutation &) = default;

 private:
  std::vector<int> mapping_;
};

bool is_bijection(std::span<const int> mapping);

}  // namespace sortform
