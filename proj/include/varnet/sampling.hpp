#pragma once

#include <span>
#include <vector>

#include "varnet/tensor.hpp"

namespace varnet {

/// Equally spaced closed grid over a product of intervals. Endpoints are
/// included exactly; points are the Cartesian product in row-major axis order
/// (last axis fastest).
class Box {
  public:
    struct Axis {
        double lo, hi;
        int count;
    };

    Box() = default;

    const std::vector<Axis>& axes() const { return axes_; }
    int input_dim() const { return static_cast<int>(axes_.size()); }
    int num_points() const { return points_.dim(0); }
    const NdArray<double>& points() const { return points_; }
    std::span<const double> point(int t) const { return points_.row(t); }
    double spacing(int axis) const {
        const Axis& a = axes_[static_cast<std::size_t>(axis)];
        return (a.hi - a.lo) / (a.count - 1);
    }

    friend Box box(std::span<const Box::Axis> axes);

  private:
    std::vector<Axis> axes_;
    NdArray<double> points_;
};

Box box(std::span<const Box::Axis> axes);
Box box(std::initializer_list<Box::Axis> axes);

/// 1-d convenience: box({lo, hi, count}).
inline Box box(double lo, double hi, int count) { return box({Box::Axis{lo, hi, count}}); }

/// Index of the grid point nearest to x (Euclidean), ties broken toward the
/// lower index. Diagnostics only: boundary conditions are evaluated at exact
/// coordinates, never snapped to the grid.
int nearest_index(const Box& b, std::span<const double> x);

}  // namespace varnet
