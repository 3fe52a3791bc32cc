#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsfm {

using Index = std::int64_t;
using Shape = std::vector<Index>;

inline Index shape_numel(const Shape& s) {
  Index n = 1;
  for (Index d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

/// Dense contiguous N-d array, row-major (last dimension fastest).
/// All heavy math goes through Eigen maps onto the flat storage.
template <typename Scalar>
class Tensor {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixCM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_)) {
    data_.setZero();
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, Scalar v) {
    Tensor t(std::move(shape));
    t.data_.setConstant(v);
    return t;
  }

  static Tensor from_values(Shape shape, std::initializer_list<Scalar> vals) {
    Tensor t(std::move(shape));
    if (static_cast<Index>(vals.size()) != t.size())
      throw std::invalid_argument("from_values: size mismatch");
    std::copy(vals.begin(), vals.end(), t.data());
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_[i]; }
  const Scalar& operator[](Index i) const { return data_[i]; }

  /// Flat view as an Eigen array expression.
  Eigen::Map<Storage> flat() { return Eigen::Map<Storage>(data_.data(), data_.size()); }
  Eigen::Map<const Storage> flat() const {
    return Eigen::Map<const Storage>(data_.data(), data_.size());
  }

  /// 2-d row-major view; rows*cols must equal size().
  Eigen::Map<MatrixRM> matrix(Index rows, Index cols) {
    check_view(rows * cols);
    return Eigen::Map<MatrixRM>(data_.data(), rows, cols);
  }
  Eigen::Map<const MatrixRM> matrix(Index rows, Index cols) const {
    check_view(rows * cols);
    return Eigen::Map<const MatrixRM>(data_.data(), rows, cols);
  }

  void set_zero() { data_.setZero(); }
  void fill(Scalar v) { data_.setConstant(v); }

  /// Reinterpret the flat buffer under a new shape of equal element count.
  void reshape(Shape shape) {
    if (shape_numel(shape) != data_.size())
      throw std::invalid_argument("reshape: numel mismatch " + shape_str(shape));
    shape_ = std::move(shape);
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out(shape_);
    for (Index i = 0; i < size(); ++i) out[i] = static_cast<T>(data_[i]);
    return out;
  }

 private:
  void check_view(Index n) const {
    if (n != data_.size()) throw std::invalid_argument("tensor view: numel mismatch");
  }

  Shape shape_;
  Storage data_;
};

}  // namespace tsfm
