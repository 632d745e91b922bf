#include "varnet/jet.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace varnet {

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

/// All non-decreasing tuples of length k over {0..n-1}, lexicographic.
std::vector<std::vector<int>> multisets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(k));
    std::function<void(int, int)> rec = [&](int pos, int start) {
        if (pos == k) {
            out.push_back(cur);
            return;
        }
        for (int a = start; a < n; ++a) {
            cur[static_cast<std::size_t>(pos)] = a;
            rec(pos + 1, a);
        }
    };
    if (k == 0) {
        out.push_back({});
    } else {
        rec(0, 0);
    }
    return out;
}

/// Set partitions of {0..k-1} as restricted growth strings; each partition is
/// returned as a list of blocks, each block a list of slot positions.
std::vector<std::vector<std::vector<int>>> set_partitions(int k) {
    std::vector<std::vector<std::vector<int>>> out;
    std::vector<int> rgs(static_cast<std::size_t>(k), 0);
    std::function<void(int, int)> rec = [&](int pos, int max_label) {
        if (pos == k) {
            const int nblocks = max_label + 1;
            std::vector<std::vector<int>> blocks(static_cast<std::size_t>(nblocks));
            for (int i = 0; i < k; ++i) {
                blocks[static_cast<std::size_t>(rgs[static_cast<std::size_t>(i)])].push_back(i);
            }
            out.push_back(std::move(blocks));
            return;
        }
        for (int label = 0; label <= max_label + 1; ++label) {
            rgs[static_cast<std::size_t>(pos)] = label;
            rec(pos + 1, std::max(max_label, label));
        }
    };
    rec(0, -1);
    return out;
}

}  // namespace

JetSpace::JetSpace(Tape& tape, int input_dim, int max_order)
    : tape_(&tape), input_dim_(input_dim), max_order_(max_order) {
    if (input_dim < 1) throw InvalidDims("jet input dimension must be >= 1");
    if (max_order < 0 || max_order > kMaxOrder) throw OrderUnsupported(max_order, kMaxOrder);

    std::vector<std::vector<int>> comps;
    for (int k = 0; k <= max_order_; ++k) {
        for (auto& m : multisets(input_dim_, k)) comps.push_back(std::move(m));
    }

    std::map<std::vector<int>, int> id_of;
    axes_offset_.push_back(0);
    for (std::size_t id = 0; id < comps.size(); ++id) {
        id_of[comps[id]] = static_cast<int>(id);
        order_of_.push_back(static_cast<std::int8_t>(comps[id].size()));
        for (int a : comps[id]) axes_.push_back(static_cast<std::int8_t>(a));
        axes_offset_.push_back(static_cast<std::int32_t>(axes_.size()));
    }

    // Leibniz expansion of each component of a product: split the multi-index
    // into complementary sub-multisets, with multinomial multiplicity.
    mul_offset_.push_back(0);
    for (const auto& S : comps) {
        std::vector<int> axes_present;
        std::vector<int> mult;
        for (int a : S) {
            if (!axes_present.empty() && axes_present.back() == a) {
                ++mult.back();
            } else {
                axes_present.push_back(a);
                mult.push_back(1);
            }
        }
        const std::size_t na = axes_present.size();
        std::vector<int> take(na, 0);
        for (;;) {
            double coeff = 1.0;
            std::vector<int> sub, rest;
            for (std::size_t i = 0; i < na; ++i) {
                coeff *= binomial(mult[i], take[i]);
                for (int c = 0; c < take[i]; ++c) sub.push_back(axes_present[i]);
                for (int c = take[i]; c < mult[i]; ++c) rest.push_back(axes_present[i]);
            }
            mul_terms_.push_back(MulTerm{static_cast<std::int32_t>(id_of.at(sub)),
                                         static_cast<std::int32_t>(id_of.at(rest)), coeff});
            // odometer over sub-multiplicities
            std::size_t i = 0;
            while (i < na && take[i] == mult[i]) take[i++] = 0;
            if (i == na) break;
            ++take[i];
        }
        mul_offset_.push_back(static_cast<std::int32_t>(mul_terms_.size()));
    }

    // Faa di Bruno expansion of each component of a composition phi(f): sum
    // over set partitions of the derivative slots; each block contributes the
    // matching partial of f, the block count selects the derivative of phi.
    chain_offset_.push_back(0);
    for (const auto& S : comps) {
        const int k = static_cast<int>(S.size());
        if (k == 0) {
            chain_offset_.push_back(static_cast<std::int32_t>(chain_terms_.size()));
            continue;
        }
        std::map<std::pair<int, std::vector<int>>, double> merged;
        for (const auto& partition : set_partitions(k)) {
            std::vector<int> block_ids;
            for (const auto& block : partition) {
                std::vector<int> axes;
                for (int slot : block) axes.push_back(S[static_cast<std::size_t>(slot)]);
                std::sort(axes.begin(), axes.end());
                block_ids.push_back(id_of.at(axes));
            }
            std::sort(block_ids.begin(), block_ids.end());
            merged[{static_cast<int>(partition.size()), block_ids}] += 1.0;
        }
        for (const auto& [key, coeff] : merged) {
            ChainTerm t{};
            t.deriv_order = static_cast<std::int8_t>(key.first);
            t.num_blocks = static_cast<std::int8_t>(key.second.size());
            for (std::size_t b = 0; b < key.second.size(); ++b) {
                t.block[b] = key.second[b];
            }
            t.coeff = coeff;
            chain_terms_.push_back(t);
        }
        chain_offset_.push_back(static_cast<std::int32_t>(chain_terms_.size()));
    }
}

int JetSpace::index_of(std::span<const int> axes) const {
    const int k = static_cast<int>(axes.size());
    if (k > max_order_) throw OrderUnsupported(k, max_order_);
    std::array<std::int8_t, kMaxOrder> sorted{};
    for (int i = 0; i < k; ++i) {
        if (axes[static_cast<std::size_t>(i)] < 0 ||
            axes[static_cast<std::size_t>(i)] >= input_dim_) {
            throw AxisOutOfRange(axes[static_cast<std::size_t>(i)], input_dim_);
        }
        sorted[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(axes[static_cast<std::size_t>(i)]);
    }
    std::sort(sorted.begin(), sorted.begin() + k);
    const int C = components();
    for (int id = 0; id < C; ++id) {
        if (order_of_[static_cast<std::size_t>(id)] != k) continue;
        const auto a = component_axes(id);
        if (std::equal(a.begin(), a.end(), sorted.begin(), sorted.begin() + k)) return id;
    }
    throw Error("multi-index not found");  // unreachable for valid inputs
}

Jet JetSpace::input(double value, int axis) const {
    if (axis < 0 || axis >= input_dim_) throw AxisOutOfRange(axis, input_dim_);
    Jet r(*this);
    r.comp[0] = literal(value);
    if (max_order_ >= 1) {
        const int a[] = {axis};
        r.comp[index_of(a)] = literal(1.0);
    }
    return r;
}

Jet JetSpace::constant(double value) const {
    Jet r(*this);
    r.comp[0] = literal(value);
    return r;
}

Jet JetSpace::lift(const Var& v) const {
    Jet r(*this);
    r.comp[0] = v;
    return r;
}

namespace detail {

Jet apply_chain(const Jet& f, const OuterDerivs& outer) {
    const JetSpace& S = *f.space;
    Jet r(S);
    r.comp[0] = outer.d[0];
    const int C = S.components();
    for (int id = 1; id < C; ++id) {
        Var acc = literal(0.0);
        for (const auto& t : S.chain_terms(id)) {
            Var p = outer.d[t.deriv_order];
            for (int b = 0; b < t.num_blocks; ++b) p = p * f.comp[t.block[b]];
            if (t.coeff != 1.0) p = affine(p, t.coeff, 0.0);
            acc = acc + p;
        }
        r.comp[id] = acc;
    }
    return r;
}

}  // namespace detail

Jet operator+(const Jet& f, const Jet& g) {
    const JetSpace& S = detail::require_same_space(f, g);
    Jet r(S);
    const int C = S.components();
    for (int id = 0; id < C; ++id) r.comp[id] = f.comp[id] + g.comp[id];
    return r;
}

Jet operator-(const Jet& f, const Jet& g) {
    const JetSpace& S = detail::require_same_space(f, g);
    Jet r(S);
    const int C = S.components();
    for (int id = 0; id < C; ++id) r.comp[id] = f.comp[id] - g.comp[id];
    return r;
}

Jet operator-(const Jet& f) {
    Jet r(*f.space);
    const int C = f.space->components();
    for (int id = 0; id < C; ++id) r.comp[id] = -f.comp[id];
    return r;
}

Jet operator*(const Jet& f, const Jet& g) {
    const JetSpace& S = detail::require_same_space(f, g);
    Jet r(S);
    const int C = S.components();
    for (int id = 0; id < C; ++id) {
        Var acc = literal(0.0);
        for (const auto& t : S.mul_terms(id)) {
            Var p = f.comp[t.a] * g.comp[t.b];
            if (t.coeff != 1.0) p = affine(p, t.coeff, 0.0);
            acc = acc + p;
        }
        r.comp[id] = acc;
    }
    return r;
}

namespace {

/// 1/g via the chain rule: d^k (u^-1) = (-1)^k k! u^-(k+1).
Jet reciprocal(const Jet& g) {
    const JetSpace& S = *g.space;
    const Var g0 = g.comp[0];
    if (g0.value == 0.0) throw DivisionByZero();
    detail::OuterDerivs D;
    D.d[0] = literal(1.0) / g0;
    for (int k = 1; k <= S.max_order(); ++k) {
        D.d[k] = D.d[k - 1] * static_cast<double>(-k) / g0;
    }
    return detail::apply_chain(g, D);
}

}  // namespace

Jet operator/(const Jet& f, const Jet& g) {
    detail::require_same_space(f, g);
    return f * reciprocal(g);
}

Jet operator+(const Jet& f, const Var& c) {
    Jet r = f;
    r.comp[0] = f.comp[0] + c;
    return r;
}
Jet operator+(const Var& c, const Jet& f) { return f + c; }

Jet operator-(const Jet& f, const Var& c) {
    Jet r = f;
    r.comp[0] = f.comp[0] - c;
    return r;
}

Jet operator-(const Var& c, const Jet& f) {
    Jet r = -f;
    r.comp[0] = c - f.comp[0];
    return r;
}

Jet operator*(const Jet& f, const Var& c) {
    Jet r(*f.space);
    const int C = f.space->components();
    for (int id = 0; id < C; ++id) r.comp[id] = f.comp[id] * c;
    return r;
}
Jet operator*(const Var& c, const Jet& f) { return f * c; }

Jet operator/(const Jet& f, const Var& c) {
    if (c.value == 0.0) throw DivisionByZero();
    if (c.is_literal()) return f * literal(1.0 / c.value);
    return f * (literal(1.0) / c);
}

Jet operator/(const Var& c, const Jet& f) { return reciprocal(f) * c; }

Jet exp(const Jet& f) {
    detail::OuterDerivs D;
    const Var e = exp(f.comp[0]);
    for (int k = 0; k <= f.space->max_order(); ++k) D.d[k] = e;
    return detail::apply_chain(f, D);
}

Jet log(const Jet& f) {
    const JetSpace& S = *f.space;
    detail::OuterDerivs D;
    D.d[0] = log(f.comp[0]);
    if (S.max_order() >= 1) {
        if (f.comp[0].value == 0.0) throw DivisionByZero();
        D.d[1] = literal(1.0) / f.comp[0];
        for (int k = 2; k <= S.max_order(); ++k) {
            D.d[k] = D.d[k - 1] * static_cast<double>(-(k - 1)) / f.comp[0];
        }
    }
    return detail::apply_chain(f, D);
}

Jet sin(const Jet& f) {
    const JetSpace& S = *f.space;
    detail::OuterDerivs D;
    const Var s = sin(f.comp[0]);
    D.d[0] = s;
    if (S.max_order() >= 1) {
        const Var c = cos(f.comp[0]);
        const Var ns = S.max_order() >= 2 ? -s : Var{};
        const Var nc = S.max_order() >= 3 ? -c : Var{};
        const Var cycle[4] = {c, ns, nc, s};
        for (int k = 1; k <= S.max_order(); ++k) D.d[k] = cycle[(k - 1) % 4];
    }
    return detail::apply_chain(f, D);
}

Jet cos(const Jet& f) {
    const JetSpace& S = *f.space;
    detail::OuterDerivs D;
    const Var c = cos(f.comp[0]);
    D.d[0] = c;
    if (S.max_order() >= 1) {
        const Var s = sin(f.comp[0]);
        const Var ns = -s;
        const Var nc = S.max_order() >= 2 ? -c : Var{};
        const Var cycle[4] = {ns, nc, s, c};
        for (int k = 1; k <= S.max_order(); ++k) D.d[k] = cycle[(k - 1) % 4];
    }
    return detail::apply_chain(f, D);
}

Jet tanh(const Jet& f) {
    const JetSpace& S = *f.space;
    detail::OuterDerivs D;
    const Var t = tanh(f.comp[0]);
    D.d[0] = t;
    if (S.max_order() >= 1) {
        const Var sq = t * t;
        const Var u = affine(sq, -1.0, 1.0);  // 1 - t^2
        D.d[1] = u;
        if (S.max_order() >= 2) D.d[2] = affine(t, -2.0, 0.0) * u;
        if (S.max_order() >= 3) D.d[3] = affine(sq, 6.0, -2.0) * u;
        if (S.max_order() >= 4) D.d[4] = affine(sq, -24.0, 16.0) * t * u;
    }
    return detail::apply_chain(f, D);
}

Jet sigmoid(const Jet& f) {
    const JetSpace& S = *f.space;
    detail::OuterDerivs D;
    const Var s = sigmoid(f.comp[0]);
    D.d[0] = s;
    if (S.max_order() >= 1) {
        const Var d1 = s * affine(s, -1.0, 1.0);  // s(1-s)
        D.d[1] = d1;
        if (S.max_order() >= 2) D.d[2] = affine(s, -2.0, 1.0) * d1;
        if (S.max_order() >= 3) {
            const Var sq = s * s;
            D.d[3] = (affine(s, -6.0, 1.0) + affine(sq, 6.0, 0.0)) * d1;
            if (S.max_order() >= 4) {
                const Var cu = sq * s;
                D.d[4] =
                    (affine(s, -14.0, 1.0) + affine(sq, 36.0, 0.0) + affine(cu, -24.0, 0.0)) * d1;
            }
        }
    }
    return detail::apply_chain(f, D);
}

Jet sqrt(const Jet& f) {
    const JetSpace& S = *f.space;
    detail::OuterDerivs D;
    const Var r = sqrt(f.comp[0]);
    D.d[0] = r;
    if (S.max_order() >= 1) {
        if (f.comp[0].value == 0.0) throw DivisionByZero();
        D.d[1] = literal(0.5) / r;
        for (int k = 2; k <= S.max_order(); ++k) {
            D.d[k] = D.d[k - 1] * (0.5 - (k - 1)) / f.comp[0];
        }
    }
    return detail::apply_chain(f, D);
}

Jet abs(const Jet& f) {
    const JetSpace& S = *f.space;
    detail::OuterDerivs D;
    D.d[0] = abs(f.comp[0]);
    if (S.max_order() >= 1) {
        const double v = f.comp[0].value;
        D.d[1] = literal(v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
        for (int k = 2; k <= S.max_order(); ++k) D.d[k] = literal(0.0);
    }
    return detail::apply_chain(f, D);
}

Jet relu(const Jet& f) {
    const JetSpace& S = *f.space;
    detail::OuterDerivs D;
    D.d[0] = relu(f.comp[0]);
    if (S.max_order() >= 1) {
        D.d[1] = literal(f.comp[0].value > 0.0 ? 1.0 : 0.0);
        for (int k = 2; k <= S.max_order(); ++k) D.d[k] = literal(0.0);
    }
    return detail::apply_chain(f, D);
}

Jet pow(const Jet& f, double p) {
    const JetSpace& S = *f.space;
    detail::OuterDerivs D;
    const Var f0 = f.comp[0];
    D.d[0] = pow(f0, p);
    if (S.max_order() >= 1) {
        if (f0.value != 0.0) {
            D.d[1] = D.d[0] * p / f0;
            for (int k = 2; k <= S.max_order(); ++k) {
                D.d[k] = D.d[k - 1] * (p - (k - 1)) / f0;
            }
        } else {
            double coeff = 1.0;
            for (int k = 1; k <= S.max_order(); ++k) {
                coeff *= p - (k - 1);
                D.d[k] = pow(f0, p - k) * coeff;
            }
        }
    }
    return detail::apply_chain(f, D);
}

}  // namespace varnet
