#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "varnet/loss.hpp"
#include "varnet/network.hpp"
#include "varnet/sampling.hpp"

namespace varnet {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * m-hat / (sqrt(v-hat) + eps)
class Adam {
  public:
    Adam(int n, AdamConfig cfg = {});

    void step(std::span<double> params, std::span<const double> grads);

    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }
    std::int64_t steps() const { return t_; }

  private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    std::int64_t t_ = 0;
};

/// Equations+BCs (solver path) or functional+constraints (minimizer path)
/// over a boxed domain; what fit() trains against.
struct TrainProblem {
    Box domain;
    std::vector<Equation> equations;
    std::vector<BoundaryCondition> bcs;
    std::optional<Functional> functional;
    std::vector<Constraint> constraints;
    Combinator combinator = Combinator::weighted_sum;

    bool is_solver() const { return !equations.empty() || !bcs.empty(); }
    int stack_order() const;
};

struct TrainState {
    int epoch = 0;  // completed epochs
    int total_epochs = 0;
    double lr0 = 0.0;
    double lr = 0.0;
    std::vector<double> loss_history;
};

class Scheduler {
  public:
    virtual ~Scheduler() = default;
    virtual std::string name() const = 0;
    /// New learning rate after `state.epoch` completed epochs.
    virtual double update(const TrainState& state) = 0;
};

/// eta' = eta0 * R^(n/N).
class ExponentialLRDecay : public Scheduler {
  public:
    ExponentialLRDecay(double rate, int decay_steps);
    std::string name() const override { return "exponential"; }
    double update(const TrainState& s) override { return eta(s.lr0, s.epoch); }
    double eta(double lr0, int n) const;

  private:
    double rate_;
    int steps_;
};

/// eta' = eta0 / (1 + R^(n/N)).
class InverseTimeDecay : public Scheduler {
  public:
    InverseTimeDecay(double rate, int decay_steps);
    std::string name() const override { return "inverse_time"; }
    double update(const TrainState& s) override { return eta(s.lr0, s.epoch); }
    double eta(double lr0, int n) const;

  private:
    double rate_;
    int steps_;
};

/// eta' = (eta0 - eta_min) (1 - n/N)^p + eta_min, with n clamped to N.
class PolynomialDecay : public Scheduler {
  public:
    PolynomialDecay(double lr_min, int decay_steps, double power);
    std::string name() const override { return "polynomial"; }
    double update(const TrainState& s) override { return eta(s.lr0, s.epoch); }
    double eta(double lr0, int n) const;

  private:
    double lr_min_;
    int steps_;
    double power_;
};

/// Multiplies the current rate by `factor` after `patience` epochs without an
/// improvement larger than `min_delta`.
class ReduceLROnPlateau : public Scheduler {
  public:
    ReduceLROnPlateau(int patience, double min_delta, double factor);
    std::string name() const override { return "plateau"; }
    double update(const TrainState& s) override;

  private:
    int patience_;
    double min_delta_, factor_;
    double best_;
    int wait_ = 0;
};

/// Decays the rate by `scale` whenever the relative standard deviation of the
/// last `window` losses (std normalized by |mean|) exceeds `threshold`.
class ControlLossSTD : public Scheduler {
  public:
    ControlLossSTD(int window, double threshold, double scale);
    std::string name() const override { return "control_loss_std"; }
    double update(const TrainState& s) override;

  private:
    int window_;
    double threshold_, scale_;
};

enum class HaltReason {
    completed,
    early_stopping,
    target_loss,
    terminate_nan,
    terminate_inf,
    terminate_increasing,
};

std::string to_string(HaltReason h);
bool is_terminate(HaltReason h);

/// Snapshot handed to callbacks and metrics after each epoch. `model` holds
/// the parameters that produced `loss` (i.e. before this epoch's update).
struct EpochInfo {
    int epoch;
    double loss;
    double lr;
    const std::vector<double>& history;
    const Model& model;
};

class Callback {
  public:
    virtual ~Callback() = default;
    virtual std::optional<HaltReason> on_epoch_end(const EpochInfo& info) = 0;
};

/// Saves the model each epoch, or only on new best losses.
class SaveModel : public Callback {
  public:
    SaveModel(std::string path, bool best_only);
    std::optional<HaltReason> on_epoch_end(const EpochInfo& info) override;

  private:
    std::string path_;
    bool best_only_;
    double best_;
};

/// Stops when the loss reaches `target_loss` or fails to improve by more than
/// `min_delta` for `patience` epochs.
class EarlyStopping : public Callback {
  public:
    EarlyStopping(int patience, double min_delta,
                  std::optional<double> target_loss = std::nullopt);
    std::optional<HaltReason> on_epoch_end(const EpochInfo& info) override;

  private:
    int patience_;
    double min_delta_;
    std::optional<double> target_;
    double best_;
    int wait_ = 0;
};

/// Halts on NaN / infinite losses, or when the loss has been strictly
/// increasing over a trailing window.
class TerminateIf : public Callback {
  public:
    TerminateIf(bool nan, bool inf, std::optional<int> strictly_increasing_window = std::nullopt);
    std::optional<HaltReason> on_epoch_end(const EpochInfo& info) override;

  private:
    bool nan_, inf_;
    std::optional<int> window_;
};

class TrainMetric {
  public:
    virtual ~TrainMetric() = default;
    virtual std::string name() const = 0;
    virtual double value(const EpochInfo& info) = 0;
};

class WatchLR : public TrainMetric {
  public:
    std::string name() const override { return "lr"; }
    double value(const EpochInfo& info) override { return info.lr; }
};

/// Mean square error of the model against reference values at fixed points.
class MSE : public TrainMetric {
  public:
    MSE(Box domain, NdArray<double> reference);
    std::string name() const override { return "mse"; }
    double value(const EpochInfo& info) override;

  private:
    Box domain_;
    NdArray<double> reference_;
};

struct FitOptions {
    int epochs = 1000;
    AdamConfig adam;
    std::vector<std::shared_ptr<Scheduler>> schedulers;
    std::vector<std::shared_ptr<Callback>> callbacks;
    std::vector<std::shared_ptr<TrainMetric>> metrics;
    bool verbose = false;
    int log_every = 0;  // 0: epochs/10
    std::ostream* log = nullptr;  // nullptr: std::cout
};

struct LossBreakdown {
    double total = 0.0;
    std::vector<std::pair<std::string, double>> terms;
};

struct FitResult {
    Model model;
    std::vector<double> loss_history;
    HaltReason halt = HaltReason::completed;
    int epochs_run = 0;
    LossBreakdown breakdown;                   // of the final model
    std::vector<double> density;               // final per-point loss density (solver)
    NdArray<double> prediction;                // (N, m) at the training points
    std::vector<NdArray<double>> derivatives;  // dense entries, orders 0..stack_order
};

/// One full-batch optimization step: builds the derivative stack, evaluates
/// the loss and its gradients, applies the Adam update. Numeric domain errors
/// inside user residuals surface as a NaN loss (no update), to be acted on by
/// TerminateIf; structural errors throw.
double fit_step(const TrainProblem& problem, Model& model, Adam& adam, Tape& tape);

/// Epoch loop with schedulers, callbacks, metrics and verbose logging (CSV
/// lines `epoch,loss,lr[,metric...]`). epochs == 0 returns the untrained
/// model with its evaluation attached.
FitResult fit(const TrainProblem& problem, Model model, const FitOptions& opts);

/// Loss of a model under a problem, without touching the model.
double evaluate_loss(const TrainProblem& problem, const Model& model);

/// Itemized contributions: each equation's mean-square, each boundary
/// condition's square, each constraint's weight*C^2 (plus the functional).
LossBreakdown evaluate_breakdown(const TrainProblem& problem, const Model& model,
                                 std::vector<double>* density_out = nullptr);

/// Prediction and dense derivative entries of a model over the problem's
/// domain (no tape kept).
void evaluate_outputs(const TrainProblem& problem, const Model& model, NdArray<double>* prediction,
                      std::vector<NdArray<double>>* derivatives);

}  // namespace varnet
