#include "varnet/math.hpp"

#include "varnet/stack.hpp"

namespace varnet::math {

IntMethod method_from_string(const std::string& s) {
    if (s == "left_riemann" || s == "left-riemann") return IntMethod::left_riemann;
    if (s == "right_riemann" || s == "right-riemann") return IntMethod::right_riemann;
    if (s == "trapezoid") return IntMethod::trapezoid;
    if (s == "simpson") return IntMethod::simpson;
    if (s == "boole") return IntMethod::boole;
    if (s == "romberg") return IntMethod::romberg;
    throw ParseError("unknown integration method '" + s + "'");
}

std::string to_string(IntMethod m) {
    switch (m) {
        case IntMethod::left_riemann: return "left_riemann";
        case IntMethod::right_riemann: return "right_riemann";
        case IntMethod::trapezoid: return "trapezoid";
        case IntMethod::simpson: return "simpson";
        case IntMethod::boole: return "boole";
        case IntMethod::romberg: return "romberg";
    }
    return "?";
}

namespace {
constexpr std::size_t kMaxWarnings = 100;
thread_local std::vector<std::string> t_warnings;
}  // namespace

std::vector<std::string> take_warnings() {
    std::vector<std::string> out;
    out.swap(t_warnings);
    return out;
}

namespace detail {

void record_warning(const std::string& msg) {
    if (t_warnings.size() < kMaxWarnings) t_warnings.push_back(msg);
}

}  // namespace detail

Metric Metric::from_matrix(NdArray<double> g) {
    if (g.rank() != 2 || g.dim(0) != g.dim(1)) {
        throw DimensionMismatch("metric matrix must be square");
    }
    for (int i = 0; i < g.dim(0); ++i) {
        for (int j = 0; j < i; ++j) {
            if (g(i, j) != g(j, i)) throw DimensionMismatch("metric matrix must be symmetric");
        }
    }
    Metric m(Kind::matrix, 0);
    m.g_ = std::move(g);
    return m;
}

double Metric::coeff(int i, int j, int n) const {
    switch (kind_) {
        case Kind::euclidean:
            return i == j ? 1.0 : 0.0;
        case Kind::mostlyminus:
            if (time_axis_ < 0 || time_axis_ >= n) throw AxisOutOfRange(time_axis_, n);
            if (i != j) return 0.0;
            return i == time_axis_ ? 1.0 : -1.0;
        case Kind::mostlyplus:
            if (time_axis_ < 0 || time_axis_ >= n) throw AxisOutOfRange(time_axis_, n);
            if (i != j) return 0.0;
            return i == time_axis_ ? -1.0 : 1.0;
        case Kind::matrix:
            if (g_.dim(0) != n) throw DimensionMismatch("metric size does not match domain");
            return g_(i, j);
    }
    return 0.0;
}

NdArray<double> derivative(const Model& model, const Box& domain, int order) {
    Tape scratch;  // parameters enter as literals; nothing is recorded
    DerivativeStack stack(Ansatz::values_of(model), domain.points(), order, scratch);
    NdArray<Var> vars = stack.entry(order);
    NdArray<double> out(vars.shape());
    for (std::int64_t i = 0; i < vars.size(); ++i) out.at_flat(i) = vars.at_flat(i).value;
    return out;
}

}  // namespace varnet::math
