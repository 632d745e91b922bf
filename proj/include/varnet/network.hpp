#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "varnet/autodiff.hpp"
#include "varnet/jet.hpp"

namespace varnet {

enum class Activation { sigmoid, tanh, relu, identity, sin };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Dense feed-forward network. Parameters live in one flat vector, ordered
/// layer-major: each layer's weights row-major (units_out x units_in), then
/// its biases. The same ordering is used by parameters(), stage() and the
/// serialized form.
class Model {
  public:
    Model() = default;

    /// Hidden layers use `hidden`, the last layer `final_act`. Weights are
    /// Glorot-uniform (bound sqrt(6/(fan_in+fan_out))), biases zero,
    /// deterministic for a fixed seed.
    static Model build(std::span<const int> dims, Activation hidden, Activation final_act,
                       std::uint64_t seed);

    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
    const std::vector<int>& dims() const { return dims_; }
    Activation activation(int layer) const { return acts_[static_cast<std::size_t>(layer)]; }

    int parameter_count() const { return static_cast<int>(params_.size()); }
    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    /// Plain forward pass on doubles (no tape).
    std::vector<double> values(std::span<const double> x) const;

    /// Records one leaf per parameter on the tape, in parameter order.
    std::vector<Var> stage(Tape& tape) const;

    /// Forward pass through jets; `staged` must come from stage() (or be
    /// literals for a value-only pass). The primal of each output jet is
    /// bit-identical to values().
    std::vector<Jet> forward_jets(const JetSpace& space, std::span<const double> x,
                                  std::span<const Var> staged) const;

    /// Serialized varnet-model-v1 JSON with floats at 17 significant digits.
    std::string to_json() const;
    static Model from_json(const std::string& text);

    void save(const std::string& path) const;  // atomic write
    static Model load(const std::string& path);

  private:
    std::vector<int> dims_;
    std::vector<Activation> acts_;  // one per layer
    std::vector<double> params_;
    std::vector<int> layer_offset_;  // start of each layer's block in params_

    template <class T>
    std::vector<T> forward_impl(std::span<const double> x, std::span<const Var> staged,
                                const JetSpace* space) const;
};

}  // namespace varnet
