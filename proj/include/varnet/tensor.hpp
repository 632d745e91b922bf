#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <vector>

#include "varnet/errors.hpp"

namespace varnet {

/// Minimal dense row-major tensor. Shapes are small (rank <= 6 in practice),
/// so indices are plain ints.
template <class T>
class NdArray {
  public:
    NdArray() = default;

    explicit NdArray(std::vector<int> shape, const T& fill = T{}) : shape_(std::move(shape)) {
        std::int64_t n = 1;
        for (int d : shape_) {
            if (d < 0) throw ShapeMismatch("negative tensor dimension");
            n *= d;
        }
        data_.assign(static_cast<std::size_t>(n), fill);
    }

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    int dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    std::span<T> flat() { return data_; }
    std::span<const T> flat() const { return data_; }

    T& at_flat(std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& at_flat(std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    std::int64_t offset(std::span<const int> idx) const {
        std::int64_t off = 0;
        for (std::size_t a = 0; a < shape_.size(); ++a) {
            off = off * shape_[a] + idx[a];
        }
        return off;
    }

    template <class... Is>
    T& operator()(Is... is) {
        const int idx[] = {static_cast<int>(is)...};
        return data_[static_cast<std::size_t>(offset(std::span<const int>(idx, sizeof...(Is))))];
    }
    template <class... Is>
    const T& operator()(Is... is) const {
        const int idx[] = {static_cast<int>(is)...};
        return data_[static_cast<std::size_t>(offset(std::span<const int>(idx, sizeof...(Is))))];
    }

    T& at(std::span<const int> idx) { return data_[static_cast<std::size_t>(offset(idx))]; }
    const T& at(std::span<const int> idx) const {
        return data_[static_cast<std::size_t>(offset(idx))];
    }

    /// Contiguous row `(i, *)` for rank-2 tensors.
    std::span<const T> row(int i) const {
        const int cols = shape_.back();
        return std::span<const T>(data_.data() + static_cast<std::size_t>(i) * cols,
                                  static_cast<std::size_t>(cols));
    }

  private:
    std::vector<int> shape_;
    std::vector<T> data_;
};

}  // namespace varnet
