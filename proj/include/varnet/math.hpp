#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "varnet/autodiff.hpp"
#include "varnet/errors.hpp"
#include "varnet/network.hpp"
#include "varnet/sampling.hpp"
#include "varnet/tensor.hpp"

namespace varnet::math {

enum class IntMethod { left_riemann, right_riemann, trapezoid, simpson, boole, romberg };

IntMethod method_from_string(const std::string& s);
std::string to_string(IntMethod m);

struct IntegralOptions {
    IntMethod method = IntMethod::trapezoid;
    /// When a method's point-count requirement is violated, the default is to
    /// integrate the trailing remainder intervals with the trapezoid rule and
    /// record a warning; strict mode raises PointCountIncompatible instead.
    bool strict = false;
};

/// Warnings recorded by quadrature remainder handling (thread-local, capped).
std::vector<std::string> take_warnings();

namespace detail {

void record_warning(const std::string& msg);

template <class T>
T trapezoid_range(std::span<const T> v, double h, std::size_t first, std::size_t last) {
    T acc = (v[first] + v[last]) * 0.5;
    for (std::size_t i = first + 1; i < last; ++i) acc = acc + v[i];
    return acc * h;
}

template <class T>
T integrate_uniform(std::span<const T> v, double h, const IntegralOptions& opt) {
    const std::size_t n = v.size();
    if (n < 2) throw InvalidCount("integration needs at least 2 samples");
    const std::size_t intervals = n - 1;
    switch (opt.method) {
        case IntMethod::left_riemann: {
            T acc = v[0];
            for (std::size_t i = 1; i < intervals; ++i) acc = acc + v[i];
            return acc * h;
        }
        case IntMethod::right_riemann: {
            T acc = v[1];
            for (std::size_t i = 2; i <= intervals; ++i) acc = acc + v[i];
            return acc * h;
        }
        case IntMethod::trapezoid:
            return trapezoid_range(v, h, 0, n - 1);
        case IntMethod::simpson: {
            const std::size_t blocks = intervals / 2;
            if (blocks == 0 || intervals % 2 != 0) {
                if (opt.strict) {
                    throw PointCountIncompatible("simpson needs an even interval count");
                }
                if (blocks == 0) {
                    record_warning("simpson: fewer than 3 samples, used trapezoid");
                    return trapezoid_range(v, h, 0, n - 1);
                }
            }
            T acc = v[0] + v[2 * blocks];
            for (std::size_t b = 0; b < blocks; ++b) {
                acc = acc + v[2 * b + 1] * 4.0;
                if (b + 1 < blocks) acc = acc + v[2 * b + 2] * 2.0;
            }
            T result = acc * (h / 3.0);
            if (intervals % 2 != 0) {
                record_warning("simpson: odd interval count, trailing interval used trapezoid");
                result = result + trapezoid_range(v, h, 2 * blocks, n - 1);
            }
            return result;
        }
        case IntMethod::boole: {
            const std::size_t blocks = intervals / 4;
            const std::size_t rem = intervals % 4;
            if (rem != 0 || blocks == 0) {
                if (opt.strict) {
                    throw PointCountIncompatible("boole needs a multiple of 4 intervals");
                }
                if (blocks == 0) {
                    record_warning("boole: fewer than 5 samples, used trapezoid");
                    return trapezoid_range(v, h, 0, n - 1);
                }
            }
            T acc = (v[0] + v[4 * blocks]) * 7.0;
            for (std::size_t b = 0; b < blocks; ++b) {
                const std::size_t i = 4 * b;
                acc = acc + v[i + 1] * 32.0 + v[i + 2] * 12.0 + v[i + 3] * 32.0;
                if (b + 1 < blocks) acc = acc + v[i + 4] * 14.0;  // 7 from each side
            }
            T result = acc * (2.0 * h / 45.0);
            if (rem != 0) {
                record_warning("boole: trailing intervals used trapezoid");
                result = result + trapezoid_range(v, h, 4 * blocks, n - 1);
            }
            return result;
        }
        case IntMethod::romberg: {
            std::size_t levels = 0;
            while ((std::size_t(1) << (levels + 1)) <= intervals) ++levels;
            const std::size_t prefix = std::size_t(1) << levels;  // intervals used
            if (prefix != intervals) {
                if (opt.strict) {
                    throw PointCountIncompatible("romberg needs 2^k+1 samples");
                }
                record_warning("romberg: sample count is not 2^k+1, tail used trapezoid");
            }
            // Richardson tableau over nested trapezoid sums on the prefix.
            std::vector<T> prev, cur;
            const double H = h * static_cast<double>(prefix);
            prev.push_back((v[0] + v[prefix]) * (H * 0.5));
            for (std::size_t j = 1; j <= levels; ++j) {
                const std::size_t stride = prefix >> j;
                T odd = v[stride];
                for (std::size_t i = 3 * stride; i < prefix; i += 2 * stride) {
                    odd = odd + v[i];
                }
                cur.clear();
                cur.push_back(prev[0] * 0.5 + odd * (h * static_cast<double>(stride)));
                double pow4 = 1.0;
                for (std::size_t i = 1; i <= j; ++i) {
                    pow4 *= 4.0;
                    cur.push_back(cur[i - 1] + (cur[i - 1] - prev[i - 1]) * (1.0 / (pow4 - 1.0)));
                }
                prev = cur;
            }
            T result = prev.back();
            if (prefix != intervals) {
                result = result + trapezoid_range(v, h, prefix, n - 1);
            }
            return result;
        }
    }
    throw Error("unreachable integration method");
}

}  // namespace detail

/// Composite quadrature of equally spaced samples over a 1-d box.
template <class T>
T integral(std::span<const T> values, const Box& domain, const IntegralOptions& opt = {}) {
    if (domain.input_dim() != 1) {
        throw DimensionMismatch("integral supports 1-d domains only");
    }
    if (static_cast<int>(values.size()) != domain.num_points()) {
        throw ShapeMismatch("sample count does not match domain");
    }
    return detail::integrate_uniform(values, domain.spacing(0), opt);
}

template <class T>
T integral(const std::vector<T>& values, const Box& domain, const IntegralOptions& opt = {}) {
    return integral(std::span<const T>(values), domain, opt);
}

/// Quadrature over raw abscissae; the grid must be uniform.
template <class T>
T integral(std::span<const T> values, std::span<const double> x, const IntegralOptions& opt = {}) {
    if (values.size() != x.size()) throw ShapeMismatch("sample/abscissa count mismatch");
    if (x.size() < 2) throw InvalidCount("integration needs at least 2 samples");
    const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    const double tol = 1e-9 * std::max(1.0, std::abs(x.back() - x.front()));
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (std::abs(x[i + 1] - x[i] - h) > tol) throw NonUniformGrid();
    }
    return detail::integrate_uniform(values, h, opt);
}

/// Batched integral of a (N, m) tensor: one value per output column.
template <class T>
std::vector<T> integral_columns(const NdArray<T>& values, const Box& domain,
                                const IntegralOptions& opt = {}) {
    if (values.rank() != 2) throw ShapeMismatch("expected a (N, m) tensor");
    const int n = values.dim(0), m = values.dim(1);
    std::vector<T> column(static_cast<std::size_t>(n));
    std::vector<T> out;
    for (int j = 0; j < m; ++j) {
        for (int t = 0; t < n; ++t) column[static_cast<std::size_t>(t)] = values(t, j);
        out.push_back(integral(std::span<const T>(column), domain, opt));
    }
    return out;
}

/// Derivative tensor of a model over a box: shape (N, n, ..., n, m) with
/// `order` repetitions of n, computed by one jet pass per point with the
/// parameters held as constants.
NdArray<double> derivative(const Model& model, const Box& domain, int order);

/// Constant metric for the Laplace-Beltrami contraction. Signed metrics are
/// diagonal with +-1 entries; mostlyminus is (+,-,-,...) with + on the time
/// axis, mostlyplus the negation.
class Metric {
  public:
    enum class Kind { euclidean, mostlyminus, mostlyplus, matrix };

    static Metric euclidean() { return Metric(Kind::euclidean, 0); }
    static Metric mostly_minus(int time_axis = 0) { return Metric(Kind::mostlyminus, time_axis); }
    static Metric mostly_plus(int time_axis = 0) { return Metric(Kind::mostlyplus, time_axis); }
    static Metric from_matrix(NdArray<double> g);

    Kind kind() const { return kind_; }
    int time_axis() const { return time_axis_; }

    /// g_ij for an n-dimensional domain.
    double coeff(int i, int j, int n) const;

  private:
    Metric(Kind k, int time_axis) : kind_(k), time_axis_(time_axis) {}
    Kind kind_;
    int time_axis_;
    NdArray<double> g_;
};

/// Sum_i d_i y_i from a (N, n, m) first-derivative tensor with n == m.
template <class T>
NdArray<T> divergence(const NdArray<T>& d1) {
    if (d1.rank() != 3 || d1.dim(1) != d1.dim(2)) {
        throw DimensionMismatch("divergence needs a (N, n, n) first derivative");
    }
    const int N = d1.dim(0), n = d1.dim(1);
    NdArray<T> out({N});
    for (int t = 0; t < N; ++t) {
        T acc{};
        for (int i = 0; i < n; ++i) acc = acc + d1(t, i, i);
        out(t) = acc;
    }
    return out;
}

/// Curl of a three-dimensional field from its (N, 3, 3) first derivative
/// (axis order: d1(t, i, j) = d_i y_j).
template <class T>
NdArray<T> curl(const NdArray<T>& d1) {
    if (d1.rank() != 3 || d1.dim(1) != 3 || d1.dim(2) != 3) {
        throw DimensionMismatch("curl needs a (N, 3, 3) first derivative");
    }
    const int N = d1.dim(0);
    NdArray<T> out({N, 3});
    for (int t = 0; t < N; ++t) {
        out(t, 0) = d1(t, 1, 2) - d1(t, 2, 1);
        out(t, 1) = d1(t, 2, 0) - d1(t, 0, 2);
        out(t, 2) = d1(t, 0, 1) - d1(t, 1, 0);
    }
    return out;
}

/// Sum_ij g_ij d_i d_j f_k from a (N, n, n, m) second derivative.
template <class T>
NdArray<T> laplace_beltrami(const NdArray<T>& d2, const Metric& g) {
    if (d2.rank() != 4 || d2.dim(1) != d2.dim(2)) {
        throw DimensionMismatch("laplace_beltrami needs a (N, n, n, m) second derivative");
    }
    const int N = d2.dim(0), n = d2.dim(1), m = d2.dim(3);
    NdArray<T> out({N, m});
    for (int t = 0; t < N; ++t) {
        for (int k = 0; k < m; ++k) {
            T acc{};
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double c = g.coeff(i, j, n);
                    if (c == 0.0) continue;
                    if (c == 1.0) {
                        acc = acc + d2(t, i, j, k);
                    } else {
                        acc = acc + d2(t, i, j, k) * c;
                    }
                }
            }
            out(t, k) = acc;
        }
    }
    return out;
}

/// Plain Laplacian: the diagonal second-derivative sum.
template <class T>
NdArray<T> laplacian(const NdArray<T>& d2) {
    if (d2.rank() != 4 || d2.dim(1) != d2.dim(2)) {
        throw DimensionMismatch("laplacian needs a (N, n, n, m) second derivative");
    }
    const int N = d2.dim(0), n = d2.dim(1), m = d2.dim(3);
    NdArray<T> out({N, m});
    for (int t = 0; t < N; ++t) {
        for (int k = 0; k < m; ++k) {
            T acc{};
            for (int i = 0; i < n; ++i) acc = acc + d2(t, i, i, k);
            out(t, k) = acc;
        }
    }
    return out;
}

/// (1/c^2) d_t^2 f - sum of spatial second derivatives; annihilates plane
/// waves f = sin(kx - wt) with w = c k.
template <class T>
NdArray<T> dalembertian(const NdArray<T>& d2, int time_axis, double c = 1.0) {
    if (d2.rank() != 4 || d2.dim(1) != d2.dim(2)) {
        throw DimensionMismatch("dalembertian needs a (N, n, n, m) second derivative");
    }
    const int N = d2.dim(0), n = d2.dim(1), m = d2.dim(3);
    if (time_axis < 0 || time_axis >= n) throw AxisOutOfRange(time_axis, n);
    const double inv_c2 = 1.0 / (c * c);
    NdArray<T> out({N, m});
    for (int t = 0; t < N; ++t) {
        for (int k = 0; k < m; ++k) {
            T acc = d2(t, time_axis, time_axis, k) * inv_c2;
            for (int i = 0; i < n; ++i) {
                if (i == time_axis) continue;
                acc = acc - d2(t, i, i, k);
            }
            out(t, k) = acc;
        }
    }
    return out;
}

/// Diagonal slices of an order-K entry (N, n, ..., n, m): one (N, m) tensor
/// per axis, taking all K derivative indices equal. For K == 1 this returns
/// the Jacobian rows d_i y_(all j).
template <class T>
std::vector<NdArray<T>> diagonals_list(const NdArray<T>& entry) {
    const int rank = entry.rank();
    if (rank < 3) throw DimensionMismatch("diagonals needs a derivative entry of order >= 1");
    const int N = entry.dim(0), n = entry.dim(1), m = entry.dim(rank - 1);
    const int order = rank - 2;
    std::vector<NdArray<T>> out;
    std::vector<int> idx(static_cast<std::size_t>(rank));
    for (int i = 0; i < n; ++i) {
        NdArray<T> diag({N, m});
        for (int t = 0; t < N; ++t) {
            idx[0] = t;
            for (int k = 0; k < order; ++k) idx[static_cast<std::size_t>(k) + 1] = i;
            for (int j = 0; j < m; ++j) {
                idx[static_cast<std::size_t>(rank) - 1] = j;
                diag(t, j) = entry.at(idx);
            }
        }
        out.push_back(std::move(diag));
    }
    return out;
}

/// Trace over the diagonal slices. For order >= 2 this is the (N, m) sum of
/// diagonals_list (the Laplacian when order == 2). For order == 1 it is the
/// Jacobian trace sum_i d_i y_i, which needs n == m, returned as (N,).
template <class T>
NdArray<T> diagonals_trace(const NdArray<T>& entry) {
    const int rank = entry.rank();
    if (rank < 3) throw DimensionMismatch("diagonals needs a derivative entry of order >= 1");
    const int N = entry.dim(0), n = entry.dim(1), m = entry.dim(rank - 1);
    if (rank == 3) {
        if (n != m) throw DimensionMismatch("order-1 trace needs matching domain/output dims");
        NdArray<T> out({N});
        for (int t = 0; t < N; ++t) {
            T acc{};
            for (int i = 0; i < n; ++i) acc = acc + entry(t, i, i);
            out(t) = acc;
        }
        return out;
    }
    auto list = diagonals_list(entry);
    NdArray<T> out({N, m});
    for (int t = 0; t < N; ++t) {
        for (int j = 0; j < m; ++j) {
            T acc{};
            for (const auto& d : list) acc = acc + d(t, j);
            out(t, j) = acc;
        }
    }
    return out;
}

/// Splits a (N, d) tensor into d column tensors of shape (N, 1).
template <class T>
std::vector<NdArray<T>> unstack(const NdArray<T>& t) {
    if (t.rank() != 2) throw ShapeMismatch("unstack needs a (N, d) tensor");
    const int N = t.dim(0), d = t.dim(1);
    std::vector<NdArray<T>> out;
    for (int j = 0; j < d; ++j) {
        NdArray<T> col({N, 1});
        for (int i = 0; i < N; ++i) col(i, 0) = t(i, j);
        out.push_back(std::move(col));
    }
    return out;
}

}  // namespace varnet::math
