#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace aligncr {

// Dense row-major double array of rank 0 (scalar), 1 (vector) or 2 (matrix).
struct Array {
  std::vector<int> shape;
  std::vector<double> v;

  Array() = default;

  static Array scalar(double x) {
    Array a;
    a.v.assign(1, x);
    return a;
  }

  static Array zeros(std::vector<int> shape) {
    Array a;
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    a.shape = std::move(shape);
    a.v.assign(n, 0.0);
    return a;
  }

  static Array full(std::vector<int> shape, double x) {
    Array a = zeros(std::move(shape));
    for (double& e : a.v) e = x;
    return a;
  }

  static Array matrix(int rows, int cols, std::vector<double> data) {
    if (static_cast<std::size_t>(rows) * cols != data.size())
      throw std::invalid_argument("matrix: data size does not match shape");
    Array a;
    a.shape = {rows, cols};
    a.v = std::move(data);
    return a;
  }

  int rank() const { return static_cast<int>(shape.size()); }
  std::size_t size() const { return v.size(); }
  bool is_scalar() const { return shape.empty() && v.size() == 1; }

  int rows() const {
    if (rank() != 2) throw std::invalid_argument("rows: not a matrix");
    return shape[0];
  }
  int cols() const {
    if (rank() != 2) throw std::invalid_argument("cols: not a matrix");
    return shape[1];
  }

  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * shape[1] + j]; }

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  bool same_shape(const Array& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }
};

}  // namespace aligncr
