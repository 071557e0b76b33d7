#pragma once

#include "matsense/types.hpp"

#include <vector>

namespace matsense {

/// Geometric growth schedule: values[0] = K, values[j] = K·alpha²·gamma²·values[j−1].
struct Schedule {
    double K = 0.0;
    double alpha = 0.0;
    double gamma = 0.0;
    std::vector<double> values;  // f_0 … f_t
};

Schedule f_schedule(double K, double alpha, double gamma, int t);

/// Largest t ≥ 0 with f_t · k ≤ 16 n²; −1 if even f_0 overshoots.
int schedule_horizon(double K, double alpha, double gamma, Index n, Index k);

enum class BoundVariant { ConstProb, HighProb, Schatten, KyFan };

/// Round lower-bound expressions (natural logarithms):
///   ConstProb  c·log(n²/k)/loglog n
///   HighProb   c·log(n²/k)
///   Schatten   c·log(n²/k)/((1/p)·log n + loglog n)
///   KyFan      c·log(n²/k)/(log p + loglog n)
double lb_rounds(Index n, Index k, double c, BoundVariant variant, int p = 0);

struct TailEstimate {
    double probability = 0.0;  // empirical Pr[‖Q(u⊗v)‖² ≥ C·k]
    double beta = 0.0;         // −slope of log p̂ against C·k/n
    double correlation = 0.0;  // Pearson correlation of the fit points
    std::vector<double> grid_c;
    std::vector<double> grid_probability;
};

/// Fixes one k-row orthonormal Q per call (a coordinate-patterned query set,
/// whose product-shaped tail is actually measurable at desk scale), then
/// estimates the exceedance probability over (u, v) draws.  The decay rate is
/// fitted over the default grid C ∈ {4, 6, 8, 12, 16} clipped to the validity
/// window 4k ≤ Ck ≤ 16n²; zero-count grid points are excluded from the fit.
TailEstimate tail_probability_mc(Index n, Index k, double C, int trials, std::uint64_t seed);

/// Samples of ‖Q(u⊗v)‖² for one seeded rotation-style orthonormal Q.
std::vector<double> projected_mass_samples(Index n, Index k, int trials, std::uint64_t seed);

/// ½‖μ₁ − μ₂‖² (identity-covariance Gaussians).
double kl_gaussian_identity(const Vector& mu1, const Vector& mu2);

double kl_divergence(const Vector& p, const Vector& q);

struct KlConditioning {
    double lhs = 0.0;  // KL(p restricted to event ‖ q)
    double rhs = 0.0;  // (KL(p‖q) + 2) / Pr_p(event)
    bool holds = false;
};

KlConditioning kl_conditioning_check(const Vector& p, const Vector& q, const std::vector<int>& event);

/// Finite decision problem: prior over parameters, per-parameter outcome
/// distributions, binary loss per (parameter, action).
struct FanoCheck {
    Vector prior;    // m
    Matrix channels; // m × outcomes, rows sum to 1
    Matrix loss;     // m × actions, entries in {0, 1}
};

struct FanoResult {
    double bayes_risk = 0.0;
    double trivial_risk = 0.0;  // best constant action
    double mutual_information = 0.0;
    double bound = 0.0;
    bool holds = false;
};

/// Exact Bayes risk via the per-outcome optimal action; informativity uses
/// the prior mixture as reference (which attains the KL infimum).
FanoResult fano_bound(const FanoCheck& fc);

struct GrowthFit {
    double factor = 1.0;
    double residual = 0.0;
    int points_used = 0;
};

/// Least-squares slope of log(information) against round index; a trailing
/// plateau (growth below 5% per round) is excluded from the fit.
GrowthFit growth_rate(const std::vector<double>& trace);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov–Smirnov with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace matsense
