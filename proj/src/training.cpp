#include "varnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "varnet/errors.hpp"
#include "varnet/util.hpp"

namespace varnet {

Adam::Adam(int n, AdamConfig cfg)
    : cfg_(cfg), m_(static_cast<std::size_t>(n), 0.0), v_(static_cast<std::size_t>(n), 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ShapeMismatch("adam state does not match parameter count");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

int TrainProblem::stack_order() const {
    int order = 0;
    for (const Equation& e : equations) order = std::max(order, e.order());
    for (const BoundaryCondition& b : bcs) order = std::max(order, b.residual.order());
    if (functional) order = std::max(order, functional->order);
    for (const Constraint& c : constraints) order = std::max(order, c.order);
    return order;
}

ExponentialLRDecay::ExponentialLRDecay(double rate, int decay_steps)
    : rate_(rate), steps_(decay_steps) {
    if (rate <= 0.0 || decay_steps < 1) throw Error("exponential decay needs rate > 0, N >= 1");
}
double ExponentialLRDecay::eta(double lr0, int n) const {
    return lr0 * std::pow(rate_, static_cast<double>(n) / steps_);
}

InverseTimeDecay::InverseTimeDecay(double rate, int decay_steps)
    : rate_(rate), steps_(decay_steps) {
    if (rate <= 0.0 || decay_steps < 1) throw Error("inverse time decay needs rate > 0, N >= 1");
}
double InverseTimeDecay::eta(double lr0, int n) const {
    return lr0 / (1.0 + std::pow(rate_, static_cast<double>(n) / steps_));
}

PolynomialDecay::PolynomialDecay(double lr_min, int decay_steps, double power)
    : lr_min_(lr_min), steps_(decay_steps), power_(power) {
    if (lr_min < 0.0 || decay_steps < 1) throw Error("polynomial decay needs lr_min >= 0, N >= 1");
}
double PolynomialDecay::eta(double lr0, int n) const {
    const int clamped = std::min(n, steps_);
    return (lr0 - lr_min_) * std::pow(1.0 - static_cast<double>(clamped) / steps_, power_) +
           lr_min_;
}

ReduceLROnPlateau::ReduceLROnPlateau(int patience, double min_delta, double factor)
    : patience_(patience),
      min_delta_(min_delta),
      factor_(factor),
      best_(std::numeric_limits<double>::infinity()) {
    if (patience < 1 || factor <= 0.0) throw Error("plateau needs patience >= 1, factor > 0");
}

double ReduceLROnPlateau::update(const TrainState& s) {
    const double loss = s.loss_history.back();
    if (loss < best_ - min_delta_) {
        best_ = loss;
        wait_ = 0;
        return s.lr;
    }
    if (++wait_ >= patience_) {
        wait_ = 0;
        return s.lr * factor_;
    }
    return s.lr;
}

ControlLossSTD::ControlLossSTD(int window, double threshold, double scale)
    : window_(window), threshold_(threshold), scale_(scale) {
    if (window < 2 || threshold <= 0.0 || scale <= 0.0 || scale >= 1.0) {
        throw Error("control_loss_std needs window >= 2, threshold > 0, scale in (0,1)");
    }
}

double ControlLossSTD::update(const TrainState& s) {
    const auto& h = s.loss_history;
    if (static_cast<int>(h.size()) < window_) return s.lr;
    double mean = 0.0;
    for (int i = 0; i < window_; ++i) mean += h[h.size() - 1 - static_cast<std::size_t>(i)];
    mean /= window_;
    double var = 0.0;
    for (int i = 0; i < window_; ++i) {
        const double d = h[h.size() - 1 - static_cast<std::size_t>(i)] - mean;
        var += d * d;
    }
    var /= window_;
    if (mean == 0.0) return s.lr;
    const double rel_std = std::sqrt(var) / std::abs(mean);
    return rel_std > threshold_ ? s.lr * scale_ : s.lr;
}

std::string to_string(HaltReason h) {
    switch (h) {
        case HaltReason::completed: return "completed";
        case HaltReason::early_stopping: return "early_stopping";
        case HaltReason::target_loss: return "target_loss";
        case HaltReason::terminate_nan: return "terminate_nan";
        case HaltReason::terminate_inf: return "terminate_inf";
        case HaltReason::terminate_increasing: return "terminate_increasing";
    }
    return "?";
}

bool is_terminate(HaltReason h) {
    return h == HaltReason::terminate_nan || h == HaltReason::terminate_inf ||
           h == HaltReason::terminate_increasing;
}

SaveModel::SaveModel(std::string path, bool best_only)
    : path_(std::move(path)),
      best_only_(best_only),
      best_(std::numeric_limits<double>::infinity()) {}

std::optional<HaltReason> SaveModel::on_epoch_end(const EpochInfo& info) {
    if (!best_only_) {
        info.model.save(path_);
    } else if (info.loss < best_) {
        best_ = info.loss;
        info.model.save(path_);
    }
    return std::nullopt;
}

EarlyStopping::EarlyStopping(int patience, double min_delta, std::optional<double> target_loss)
    : patience_(patience),
      min_delta_(min_delta),
      target_(target_loss),
      best_(std::numeric_limits<double>::infinity()) {
    if (patience < 1) throw Error("early stopping needs patience >= 1");
}

std::optional<HaltReason> EarlyStopping::on_epoch_end(const EpochInfo& info) {
    if (target_ && info.loss <= *target_) return HaltReason::target_loss;
    if (info.loss < best_ - min_delta_) {
        best_ = info.loss;
        wait_ = 0;
    } else if (++wait_ >= patience_) {
        return HaltReason::early_stopping;
    }
    return std::nullopt;
}

TerminateIf::TerminateIf(bool nan, bool inf, std::optional<int> strictly_increasing_window)
    : nan_(nan), inf_(inf), window_(strictly_increasing_window) {}

std::optional<HaltReason> TerminateIf::on_epoch_end(const EpochInfo& info) {
    if (nan_ && std::isnan(info.loss)) return HaltReason::terminate_nan;
    if (inf_ && std::isinf(info.loss)) return HaltReason::terminate_inf;
    if (window_ && static_cast<int>(info.history.size()) >= *window_ + 1) {
        bool increasing = true;
        const std::size_t n = info.history.size();
        for (int i = 0; i < *window_; ++i) {
            if (info.history[n - 1 - static_cast<std::size_t>(i)] <=
                info.history[n - 2 - static_cast<std::size_t>(i)]) {
                increasing = false;
                break;
            }
        }
        if (increasing) return HaltReason::terminate_increasing;
    }
    return std::nullopt;
}

MSE::MSE(Box domain, NdArray<double> reference)
    : domain_(std::move(domain)), reference_(std::move(reference)) {
    if (reference_.dim(0) != domain_.num_points()) {
        throw ShapeMismatch("reference row count does not match domain");
    }
}

double MSE::value(const EpochInfo& info) {
    double acc = 0.0;
    const int n = domain_.num_points(), m = reference_.dim(1);
    for (int t = 0; t < n; ++t) {
        const auto y = info.model.values(domain_.point(t));
        for (int j = 0; j < m; ++j) {
            const double d = y[static_cast<std::size_t>(j)] - reference_(t, j);
            acc += d * d;
        }
    }
    return acc / (static_cast<double>(n) * m);
}

namespace {

Var assemble_loss(const TrainProblem& p, const Ansatz& f, const DerivativeStack& stack) {
    if (p.is_solver()) {
        return solver_loss(p.equations, p.bcs, f, stack, p.domain, p.combinator).loss;
    }
    return minimizer_loss(p.functional ? &*p.functional : nullptr, p.constraints, stack, p.domain)
        .loss;
}

}  // namespace

double fit_step(const TrainProblem& problem, Model& model, Adam& adam, Tape& tape) {
    tape.reset();
    double loss_value;
    std::vector<double> grads;
    std::vector<Var> staged;
    try {
        staged = model.stage(tape);
        const Ansatz f = Ansatz::of(model, staged);
        const DerivativeStack stack(f, problem.domain.points(), problem.stack_order(), tape);
        const Var loss = assemble_loss(problem, f, stack);
        loss_value = loss.value;
        if (!std::isfinite(loss_value)) return loss_value;  // leave parameters untouched
        grads = tape.grad(loss, staged);
    } catch (const DivisionByZero&) {
        return std::numeric_limits<double>::quiet_NaN();
    } catch (const DomainError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    for (double g : grads) {
        if (!std::isfinite(g)) return loss_value;  // skip the update, keep training alive
    }
    adam.step(model.parameters(), grads);
    return loss_value;
}

FitResult fit(const TrainProblem& problem, Model model, const FitOptions& opts) {
    if (opts.epochs < 0) throw Error("epochs must be >= 0");
    Adam adam(model.parameter_count(), opts.adam);
    Tape tape;
    TrainState state;
    state.total_epochs = opts.epochs;
    state.lr0 = opts.adam.lr;
    state.lr = opts.adam.lr;
    state.loss_history.reserve(static_cast<std::size_t>(opts.epochs));

    std::ostream& log = opts.log ? *opts.log : std::cout;
    const int log_every = opts.log_every > 0 ? opts.log_every : std::max(1, opts.epochs / 10);
    if (opts.verbose) {
        log << "epoch,loss,lr";
        for (const auto& m : opts.metrics) log << ',' << m->name();
        log << '\n';
    }

    FitResult result;
    result.halt = HaltReason::completed;

    Model snapshot = model;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::copy(model.parameters().begin(), model.parameters().end(),
                  snapshot.parameters().begin());
        const double loss = fit_step(problem, model, adam, tape);
        state.loss_history.push_back(loss);
        state.epoch = epoch + 1;

        const EpochInfo info{epoch, loss, state.lr, state.loss_history, snapshot};

        if (opts.verbose && (epoch % log_every == 0 || epoch + 1 == opts.epochs)) {
            log << epoch << ',' << format_full(loss) << ',' << format_full(state.lr);
            for (const auto& m : opts.metrics) log << ',' << format_full(m->value(info));
            log << '\n';
        }

        std::optional<HaltReason> halt;
        for (const auto& cb : opts.callbacks) {
            if (auto h = cb->on_epoch_end(info)) {
                halt = h;
                break;
            }
        }
        result.epochs_run = epoch + 1;
        if (halt) {
            result.halt = *halt;
            break;
        }

        for (const auto& s : opts.schedulers) {
            state.lr = s->update(state);
        }
        adam.set_lr(state.lr);
    }

    result.loss_history = std::move(state.loss_history);
    result.breakdown = evaluate_breakdown(problem, model, &result.density);
    evaluate_outputs(problem, model, &result.prediction, &result.derivatives);
    result.model = std::move(model);
    return result;
}

double evaluate_loss(const TrainProblem& problem, const Model& model) {
    Tape tape;
    const auto staged = model.stage(tape);
    const Ansatz f = Ansatz::of(model, staged);
    const DerivativeStack stack(f, problem.domain.points(), problem.stack_order(), tape);
    try {
        return assemble_loss(problem, f, stack).value;
    } catch (const DivisionByZero&) {
        return std::numeric_limits<double>::quiet_NaN();
    } catch (const DomainError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

namespace {

LossBreakdown evaluate_breakdown_impl(const TrainProblem& problem, const Ansatz& f,
                                      const DerivativeStack& stack,
                                      std::vector<double>* density_out) {
    LossBreakdown out;
    if (problem.is_solver()) {
        const SolverLoss sl =
            solver_loss(problem.equations, problem.bcs, f, stack, problem.domain,
                        problem.combinator);
        out.total = sl.loss.value;
        for (std::size_t e = 0; e < sl.equation_residuals.size(); ++e) {
            const auto& r = sl.equation_residuals[e];
            double acc = 0.0;
            for (const Var& v : r.flat()) acc += v.value * v.value;
            acc /= static_cast<double>(r.size());
            out.terms.emplace_back("equation[" + std::to_string(e) + "].mean_square", acc);
        }
        std::size_t offset = 0;
        for (std::size_t l = 0; l < problem.bcs.size(); ++l) {
            double acc = 0.0;
            for (int c = 0; c < sl.bc_component_counts[l]; ++c, ++offset) {
                const double v = sl.bc_residuals[offset].value;
                acc += v * v;
            }
            out.terms.emplace_back("bc[" + std::to_string(l) + "].square", acc);
        }
        if (density_out) *density_out = loss_density(sl, problem.bcs, problem.domain);
    } else {
        const MinimizerLoss ml = minimizer_loss(
            problem.functional ? &*problem.functional : nullptr, problem.constraints, stack,
            problem.domain);
        out.total = ml.loss.value;
        if (problem.functional) {
            out.terms.emplace_back("functional", ml.functional_value.value);
        }
        for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
            const double raw = ml.constraint_values[c].value;
            out.terms.emplace_back("constraint[" + problem.constraints[c].name + "].weighted",
                                   problem.constraints[c].weight * raw * raw);
        }
        if (density_out) density_out->clear();
    }
    return out;
}

}  // namespace

LossBreakdown evaluate_breakdown(const TrainProblem& problem, const Model& model,
                                 std::vector<double>* density_out) {
    Tape tape;
    const auto staged = model.stage(tape);
    const Ansatz f = Ansatz::of(model, staged);
    const DerivativeStack stack(f, problem.domain.points(), problem.stack_order(), tape);
    try {
        return evaluate_breakdown_impl(problem, f, stack, density_out);
    } catch (const DivisionByZero&) {
    } catch (const DomainError&) {
    }
    LossBreakdown out;
    out.total = std::numeric_limits<double>::quiet_NaN();
    if (density_out) density_out->clear();
    return out;
}

void evaluate_outputs(const TrainProblem& problem, const Model& model, NdArray<double>* prediction,
                      std::vector<NdArray<double>>* derivatives) {
    const int N = problem.domain.num_points();
    const int m = model.output_dim();
    if (prediction) {
        *prediction = NdArray<double>({N, m});
        for (int t = 0; t < N; ++t) {
            const auto y = model.values(problem.domain.point(t));
            for (int j = 0; j < m; ++j) (*prediction)(t, j) = y[static_cast<std::size_t>(j)];
        }
    }
    if (derivatives) {
        derivatives->clear();
        Tape scratch;
        const DerivativeStack stack(Ansatz::values_of(model), problem.domain.points(),
                                    problem.stack_order(), scratch);
        for (int k = 0; k <= stack.max_order(); ++k) {
            NdArray<Var> vars = stack.entry(k);
            NdArray<double> vals(vars.shape());
            for (std::int64_t i = 0; i < vars.size(); ++i) {
                vals.at_flat(i) = vars.at_flat(i).value;
            }
            derivatives->push_back(std::move(vals));
        }
    }
}

}  // namespace varnet
