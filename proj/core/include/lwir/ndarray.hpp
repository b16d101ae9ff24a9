#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lwir/error.hpp"

namespace lwir {

// Row-major M x N plane.
template <typename T>
class Map2 {
 public:
  Map2() = default;
  Map2(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(const Map2& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Map2&, const Map2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

// Row-major M x N x D stack, D contiguous per pixel ([i][j][k]).
template <typename T>
class Cube3 {
 public:
  Cube3() = default;
  Cube3(std::size_t rows, std::size_t cols, std::size_t depth, T fill = T{})
      : rows_(rows), cols_(cols), depth_(depth), data_(rows * cols * depth, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t pixels() const noexcept { return rows_ * cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * cols_ + j) * depth_ + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * cols_ + j) * depth_ + k];
  }

  std::span<T> pixel(std::size_t i, std::size_t j) {
    return {data_.data() + (i * cols_ + j) * depth_, depth_};
  }
  std::span<const T> pixel(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * cols_ + j) * depth_, depth_};
  }
  std::span<T> pixel(std::size_t flat) {
    return {data_.data() + flat * depth_, depth_};
  }
  std::span<const T> pixel(std::size_t flat) const {
    return {data_.data() + flat * depth_, depth_};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  friend bool operator==(const Cube3&, const Cube3&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t depth_ = 0;
  std::vector<T> data_;
};

}  // namespace lwir
