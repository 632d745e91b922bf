#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "varnet/training.hpp"

namespace varnet::problems {

/// A registered, fully parameterized problem: what to train, how to build the
/// default model, and the analytic reference when one exists.
struct Problem {
    std::string name;
    std::string summary;
    TrainProblem train;

    std::vector<int> dims;
    Activation hidden = Activation::sigmoid;
    Activation final_act = Activation::identity;
    int default_epochs = 1000;
    double default_lr = 1e-3;
    /// Scheduler specs ("name:key=value,...") applied unless overridden.
    std::vector<std::string> default_schedulers;

    /// Analytic solution at a point (one value per model output); empty when
    /// no closed form is registered.
    std::function<std::vector<double>(std::span<const double>)> analytic;

    /// Problem-specific scalar diagnostics of a trained result (for example
    /// the catenary's chain length).
    std::function<std::vector<std::pair<std::string, double>>(const FitResult&)> diagnostics;
};

/// Builds a registered problem. `points` overrides the per-axis grid count.
Problem make(const std::string& name, std::optional<int> points = std::nullopt);

std::vector<std::string> names();

/// Quantum harmonic oscillator eigenfunction for n = 5 (hbar = m = 1,
/// omega = 1/2): the solution the qho problem is trained against.
double qho_psi5(double x);
double qho_psi5_derivative(double x);

/// Catenary y = a cosh((x - b)/a) + c through (x0, y0), (x1, y1) with fixed
/// arc length, solved by damped Newton iteration on (a, b).
struct CatenaryCurve {
    double a, b, c;
    double y(double x) const;
    double dy(double x) const;
    double arc_length(double from, double to) const;
};

CatenaryCurve solve_catenary(double x0, double y0, double x1, double y1, double length);

}  // namespace varnet::problems
