#include "varnet/sampling.hpp"

#include <cmath>

#include "varnet/errors.hpp"

namespace varnet {

Box box(std::span<const Box::Axis> axes) {
    if (axes.empty()) throw InvalidDims("box needs at least one axis");
    Box b;
    std::int64_t total = 1;
    for (const auto& a : axes) {
        if (!(a.lo < a.hi)) throw InvalidRange("box axis needs lo < hi");
        if (a.count < 2) throw InvalidCount("box axis needs count >= 2");
        b.axes_.push_back(a);
        total *= a.count;
    }
    const int n = static_cast<int>(axes.size());
    b.points_ = NdArray<double>({static_cast<int>(total), n});
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (std::int64_t t = 0; t < total; ++t) {
        for (int a = 0; a < n; ++a) {
            const Box::Axis& ax = b.axes_[static_cast<std::size_t>(a)];
            const int i = idx[static_cast<std::size_t>(a)];
            // keep lo and hi exact
            const double v = i == 0            ? ax.lo
                             : i == ax.count - 1 ? ax.hi
                                                 : ax.lo + i * (ax.hi - ax.lo) / (ax.count - 1);
            b.points_(static_cast<int>(t), a) = v;
        }
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < b.axes_[static_cast<std::size_t>(a)].count) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return b;
}

Box box(std::initializer_list<Box::Axis> axes) {
    return box(std::span<const Box::Axis>(axes.begin(), axes.size()));
}

int nearest_index(const Box& b, std::span<const double> x) {
    if (static_cast<int>(x.size()) != b.input_dim()) {
        throw DimensionMismatch("point dimension does not match box");
    }
    // The Euclidean argmin over a product grid decomposes per axis; ties go to
    // the lower index (round half down).
    std::int64_t flat = 0;
    for (int a = 0; a < b.input_dim(); ++a) {
        const Box::Axis& ax = b.axes()[static_cast<std::size_t>(a)];
        const double v = x[static_cast<std::size_t>(a)];
        if (v < ax.lo || v > ax.hi) throw OutOfBounds("point outside box bounds");
        const double step = b.spacing(a);
        const double u = (v - ax.lo) / step;
        int i = static_cast<int>(std::ceil(u - 0.5));
        if (i < 0) i = 0;
        if (i > ax.count - 1) i = ax.count - 1;
        flat = flat * ax.count + i;
    }
    return static_cast<int>(flat);
}

}  // namespace varnet
