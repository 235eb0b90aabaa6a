#include "sortform/permutation.hpp"

#include <numeric>
#include <sstream>

#include "sortform/errors.hpp"

namespace sortform {

bool is_bijection(std::span<const int> mapping) {
  std::vector<bool> seen(mapping.size(), false);
  for (int v : mapping) {
    if (v < 0 || static_cast<std::size_t>(v) >= mapping.size() || seen[v]) {
      return false;
    }
    seen[v] = true;
  }
  return true;
}

Permutation::Permutation(std::vector<int> mapping) : mapping_(std::move(mapping)) {
  if (!is_bijection(mapping_)) {
    throw ValidationError("permutation is not a bijection: " + to_string());
  }
}

Permutation Permutation::identity(std::size_t size) {
  std::vector<int> m(size);
  std::iota(m.begin(), m.end(), 0);
  return Permutation(std::move(m));
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t i = 0; i < mapping_.size(); ++i) {
    if (mapping_[i] != static_cast<int>(i)) return false;
  }
  return true;
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(mapping_.size());
  for (std::size_t i = 0; i < mapping_.size(); ++i) {
    inv[mapping_[i]] = static_cast<int>(i);
  }
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation &other) const {
  if (other.size() != size()) {
    throw ValidationError("cannot compose permutations of different sizes");
  }
  std::vector<int> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = mapping_[other[i]];
  return Permutation(std::move(out));
}

Matrix Permutation::apply_rows(const Matrix &m) const {
  if (static_cast<std::size_t>(m.rows()) != size()) {
    throw ValidationError("permutation size " + std::to_string(size()) +
                          " does not match row count " +
                          std::to_string(m.rows()));
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < size(); ++i) out.row(i) = m.row(mapping_[i]);
  return out;
}

Matrix Permutation::apply_cols(const Matrix &m) const {
  if (static_cast<std::size_t>(m.cols()) != size()) {
    throw ValidationError("permutation size " + std::to_string(size()) +
                          " does not match column count " +
                          std::to_string(m.cols()));
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < size(); ++i) out.col(i) = m.col(mapping_[i]);
  return out;
}

std::string Permutation::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < mapping_.size(); ++i) {
    if (i) os << ',';
    os << mapping_[i];
  }
  os << ']';
  return os.str();
}

}  // namespace sortform
