#include "varnet/network.hpp"

#include <cmath>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "varnet/errors.hpp"
#include "varnet/util.hpp"

namespace varnet {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
        case Activation::sin: return "sin";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    if (s == "identity" || s == "linear") return Activation::identity;
    if (s == "sin") return Activation::sin;
    throw ParseError("unknown activation '" + s + "'");
}

namespace {

double activate_value(double z, Activation a) {
    switch (a) {
        case Activation::sigmoid: return detail::sigmoid_value(z);
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::identity: return z;
        case Activation::sin: return std::sin(z);
    }
    return z;
}

Jet activate_jet(const Jet& z, Activation a) {
    switch (a) {
        case Activation::sigmoid: return sigmoid(z);
        case Activation::tanh: return tanh(z);
        case Activation::relu: return relu(z);
        case Activation::identity: return z;
        case Activation::sin: return sin(z);
    }
    return z;
}

}  // namespace

Model Model::build(std::span<const int> dims, Activation hidden, Activation final_act,
                   std::uint64_t seed) {
    if (dims.size() < 2) throw InvalidDims("a model needs at least input and output dims");
    for (int d : dims) {
        if (d < 1) throw InvalidDims("layer sizes must be >= 1");
    }
    Model m;
    m.dims_.assign(dims.begin(), dims.end());
    const int L = m.num_layers();
    for (int l = 0; l < L; ++l) {
        m.acts_.push_back(l + 1 == L ? final_act : hidden);
    }
    Rng rng(seed);
    for (int l = 0; l < L; ++l) {
        const int fan_in = m.dims_[static_cast<std::size_t>(l)];
        const int fan_out = m.dims_[static_cast<std::size_t>(l) + 1];
        m.layer_offset_.push_back(static_cast<int>(m.params_.size()));
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (int i = 0; i < fan_out * fan_in; ++i) m.params_.push_back(rng.uniform(-bound, bound));
        for (int i = 0; i < fan_out; ++i) m.params_.push_back(0.0);
    }
    return m;
}

template <class T>
std::vector<T> Model::forward_impl(std::span<const double> x, std::span<const Var> staged,
                                   const JetSpace* space) const {
    if (static_cast<int>(x.size()) != input_dim()) {
        throw ShapeMismatch("input size does not match model input_dim");
    }
    std::vector<T> cur;
    cur.reserve(x.size());
    if constexpr (std::is_same_v<T, double>) {
        cur.assign(x.begin(), x.end());
    } else {
        for (std::size_t i = 0; i < x.size(); ++i) {
            cur.push_back(space->input(x[i], static_cast<int>(i)));
        }
    }
    std::vector<T> next;
    for (int l = 0; l < num_layers(); ++l) {
        const int in = dims_[static_cast<std::size_t>(l)];
        const int out = dims_[static_cast<std::size_t>(l) + 1];
        const int off = layer_offset_[static_cast<std::size_t>(l)];
        const Activation act = acts_[static_cast<std::size_t>(l)];
        next.clear();
        next.reserve(static_cast<std::size_t>(out));
        for (int i = 0; i < out; ++i) {
            const int bias_idx = off + out * in + i;
            if constexpr (std::is_same_v<T, double>) {
                double acc = params_[static_cast<std::size_t>(bias_idx)];
                for (int j = 0; j < in; ++j) {
                    acc += params_[static_cast<std::size_t>(off + i * in + j)] *
                           cur[static_cast<std::size_t>(j)];
                }
                next.push_back(activate_value(acc, act));
            } else {
                Jet acc = space->lift(staged[static_cast<std::size_t>(bias_idx)]);
                for (int j = 0; j < in; ++j) {
                    acc = acc +
                          cur[static_cast<std::size_t>(j)] * staged[static_cast<std::size_t>(off + i * in + j)];
                }
                next.push_back(activate_jet(acc, act));
            }
        }
        cur.swap(next);
    }
    return cur;
}

std::vector<double> Model::values(std::span<const double> x) const {
    return forward_impl<double>(x, {}, nullptr);
}

std::vector<Var> Model::stage(Tape& tape) const {
    std::vector<Var> staged;
    staged.reserve(params_.size());
    for (double p : params_) staged.push_back(tape.var(p));
    return staged;
}

std::vector<Jet> Model::forward_jets(const JetSpace& space, std::span<const double> x,
                                     std::span<const Var> staged) const {
    if (space.input_dim() != input_dim()) {
        throw ShapeMismatch("jet space input_dim does not match model");
    }
    if (staged.size() != params_.size()) {
        throw ShapeMismatch("staged parameter count does not match model");
    }
    return forward_impl<Jet>(x, staged, &space);
}

std::string Model::to_json() const {
    std::ostringstream out;
    out << "{\"format\":\"varnet-model-v1\",\"dims\":[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (i) out << ',';
        out << dims_[i];
    }
    out << "],\"activations\":[";
    for (std::size_t l = 0; l < acts_.size(); ++l) {
        if (l) out << ',';
        out << '"' << to_string(acts_[l]) << '"';
    }
    out << "],\"layers\":[";
    for (int l = 0; l < num_layers(); ++l) {
        const int in = dims_[static_cast<std::size_t>(l)];
        const int out_n = dims_[static_cast<std::size_t>(l) + 1];
        const int off = layer_offset_[static_cast<std::size_t>(l)];
        if (l) out << ',';
        out << "{\"weights\":[";
        for (int i = 0; i < out_n; ++i) {
            if (i) out << ',';
            out << '[';
            for (int j = 0; j < in; ++j) {
                if (j) out << ',';
                out << format_full(params_[static_cast<std::size_t>(off + i * in + j)]);
            }
            out << ']';
        }
        out << "],\"biases\":[";
        for (int i = 0; i < out_n; ++i) {
            if (i) out << ',';
            out << format_full(params_[static_cast<std::size_t>(off + out_n * in + i)]);
        }
        out << "]}";
    }
    out << "]}";
    return out.str();
}

Model Model::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "varnet-model-v1") {
            throw ParseError("unsupported model format");
        }
        const auto dims = doc.at("dims").get<std::vector<int>>();
        if (dims.size() < 2) throw ParseError("model needs at least two dims");
        Model m;
        m.dims_ = dims;
        for (const auto& a : doc.at("activations")) {
            m.acts_.push_back(activation_from_string(a.get<std::string>()));
        }
        if (m.acts_.size() != dims.size() - 1) {
            throw ParseError("activations count does not match layer count");
        }
        const auto& layers = doc.at("layers");
        if (layers.size() != dims.size() - 1) {
            throw ParseError("layer count does not match dims");
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const int in = dims[l];
            const int out = dims[l + 1];
            m.layer_offset_.push_back(static_cast<int>(m.params_.size()));
            const auto& weights = layers[l].at("weights");
            if (static_cast<int>(weights.size()) != out) throw ParseError("weight row count mismatch");
            for (const auto& row : weights) {
                if (static_cast<int>(row.size()) != in) throw ParseError("weight column count mismatch");
                for (const auto& w : row) {
                    const double v = w.get<double>();
                    if (!std::isfinite(v)) throw ParseError("non-finite weight");
                    m.params_.push_back(v);
                }
            }
            const auto& biases = layers[l].at("biases");
            if (static_cast<int>(biases.size()) != out) throw ParseError("bias count mismatch");
            for (const auto& b : biases) {
                const double v = b.get<double>();
                if (!std::isfinite(v)) throw ParseError("non-finite bias");
                m.params_.push_back(v);
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model document: ") + e.what());
    }
}

void Model::save(const std::string& path) const { atomic_write_file(path, to_json() + "\n"); }

Model Model::load(const std::string& path) { return from_json(read_file(path)); }

}  // namespace varnet
