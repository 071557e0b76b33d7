#include "matsense/theory.hpp"

#include "matsense/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace matsense {

Schedule f_schedule(double K, double alpha, double gamma, int t) {
    if (!(K > 0.0) || !(alpha > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("f_schedule: parameters must be positive");
    if (t < 0) throw std::invalid_argument("f_schedule: negative length");
    Schedule s{K, alpha, gamma, {}};
    s.values.resize(t + 1);
    s.values[0] = K;
    for (int j = 1; j <= t; ++j) s.values[j] = K * alpha * alpha * gamma * gamma * s.values[j - 1];
    return s;
}

int schedule_horizon(double K, double alpha, double gamma, Index n, Index k) {
    double cap = 16.0 * double(n) * double(n);
    double f = K;
    if (f * double(k) > cap) return -1;
    int t = 0;
    while (true) {
        double next = K * alpha * alpha * gamma * gamma * f;
        if (next * double(k) > cap) return t;
        f = next;
        ++t;
    }
}

double lb_rounds(Index n, Index k, double c, BoundVariant variant, int p) {
    if (n < 3) throw std::invalid_argument("lb_rounds: n must be at least 3");
    if (k < 1) throw std::invalid_argument("lb_rounds: k must be at least 1");
    double num = c * std::log(double(n) * double(n) / double(k));
    double loglog = std::log(std::log(double(n)));
    switch (variant) {
        case BoundVariant::ConstProb:
            return num / loglog;
        case BoundVariant::HighProb:
            return num;
        case BoundVariant::Schatten:
            if (p < 2) throw std::invalid_argument("lb_rounds: Schatten requires p >= 2");
            return num / (std::log(double(n)) / double(p) + loglog);
        case BoundVariant::KyFan:
            if (p < 1 || p > n) throw std::invalid_argument("lb_rounds: KyFan requires 1 <= p <= n");
            return num / (std::log(double(p)) + loglog);
    }
    throw std::invalid_argument("lb_rounds: unknown variant");
}

namespace {

// Coordinate-patterned orthonormal query set: rows e_p ⊗ e_q over a balanced
// random index window.  ‖Q(u⊗v)‖² is then a χ²-product statistic whose tail
// is visible at realistic trial counts.
struct WindowQuery {
    std::vector<Index> row_idx, col_idx;
};

WindowQuery make_window(Index n, Index k, std::mt19937_64& rng) {
    Index a = Index(std::round(std::sqrt(double(k))));
    while (a > 1 && k % a != 0) --a;
    Index b = k / a;
    if (a > n || b > n) throw std::invalid_argument("tail_probability_mc: k too large for coordinate window");
    std::vector<Index> rows(n), cols(n);
    std::iota(rows.begin(), rows.end(), Index(0));
    std::iota(cols.begin(), cols.end(), Index(0));
    std::shuffle(rows.begin(), rows.end(), rng);
    std::shuffle(cols.begin(), cols.end(), rng);
    rows.resize(a);
    cols.resize(b);
    return WindowQuery{rows, cols};
}

std::pair<double, double> regression_fit(const std::vector<double>& x, const std::vector<double>& y) {
    double n = double(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    double corr = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    return {slope, corr};
}

}  // namespace

TailEstimate tail_probability_mc(Index n, Index k, double C, int trials, std::uint64_t seed) {
    if (k < n) throw std::invalid_argument("tail_probability_mc: requires k >= n");
    double ck = C * double(k);
    if (ck < 4.0 * double(k) || ck > 16.0 * double(n) * double(n))
        throw std::invalid_argument("tail_probability_mc: C outside the validity window");
    if (trials < 1) throw std::invalid_argument("tail_probability_mc: trials must be positive");

    std::mt19937_64 rng(mix_seed(seed, 0x7a11));
    WindowQuery w = make_window(n, k, rng);
    std::vector<double> samples(trials);
    for (int t = 0; t < trials; ++t) {
        Vector u = gaussian_vector(n, rng);
        Vector v = gaussian_vector(n, rng);
        double su = 0.0, sv = 0.0;
        for (Index i : w.row_idx) su += u(i) * u(i);
        for (Index j : w.col_idx) sv += v(j) * v(j);
        samples[t] = su * sv;  // = Σ_{(p,q)} u_p² v_q² = ‖Q(u⊗v)‖²
    }

    auto exceedance = [&](double threshold) {
        long hits = 0;
        for (double s : samples)
            if (s >= threshold) ++hits;
        return double(hits) / double(trials);
    };

    TailEstimate out;
    out.probability = exceedance(ck);

    double cmax = 16.0 * double(n) * double(n) / double(k);
    std::vector<double> grid = {4.0, 6.0, 8.0, 12.0, 16.0};
    if (std::find(grid.begin(), grid.end(), C) == grid.end()) grid.push_back(C);
    std::sort(grid.begin(), grid.end());
    std::vector<double> xs, ys;
    for (double c : grid) {
        if (c < 4.0 || c > cmax) continue;
        double p = exceedance(c * double(k));
        out.grid_c.push_back(c);
        out.grid_probability.push_back(p);
        if (p > 0.0) {
            xs.push_back(c * double(k) / double(n));
            ys.push_back(std::log(p));
        }
    }
    if (xs.size() >= 2) {
        auto [slope, corr] = regression_fit(xs, ys);
        out.beta = -slope;
        out.correlation = corr;
    }
    return out;
}

std::vector<double> projected_mass_samples(Index n, Index k, int trials, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x9a55));
    Matrix g = gaussian_matrix(n * n, k, rng);
    Matrix q = orthonormalize_columns(g).basis;  // n² × k, orthonormal columns
    std::vector<double> out(trials);
    for (int t = 0; t < trials; ++t) {
        Vector u = gaussian_vector(n, rng);
        Vector v = gaussian_vector(n, rng);
        Vector w(n * n);
        for (Index i = 0; i < n; ++i) w.segment(i * n, n) = u(i) * v;
        out[t] = (q.transpose() * w).squaredNorm();
    }
    return out;
}

double kl_gaussian_identity(const Vector& mu1, const Vector& mu2) {
    if (mu1.size() != mu2.size()) throw std::invalid_argument("kl_gaussian_identity: length mismatch");
    return 0.5 * (mu1 - mu2).squaredNorm();
}

double kl_divergence(const Vector& p, const Vector& q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: length mismatch");
    double acc = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        if (p(i) == 0.0) continue;
        if (q(i) == 0.0) throw std::invalid_argument("kl_divergence: p not absolutely continuous wrt q");
        acc += p(i) * std::log(p(i) / q(i));
    }
    return acc;
}

KlConditioning kl_conditioning_check(const Vector& p, const Vector& q, const std::vector<int>& event) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_conditioning_check: length mismatch");
    double mass = 0.0;
    for (int i : event) {
        if (i < 0 || i >= p.size()) throw std::invalid_argument("kl_conditioning_check: event index out of range");
        mass += p(i);
    }
    if (mass <= 0.0) throw std::invalid_argument("kl_conditioning_check: event has zero probability under p");
    Vector restricted = Vector::Zero(p.size());
    for (int i : event) restricted(i) = p(i) / mass;
    KlConditioning out;
    out.lhs = kl_divergence(restricted, q);
    out.rhs = (kl_divergence(p, q) + 2.0) / mass;
    out.holds = out.lhs <= out.rhs + 1e-12;
    return out;
}

FanoResult fano_bound(const FanoCheck& fc) {
    Index m = fc.prior.size();
    if (fc.channels.rows() != m || fc.loss.rows() != m)
        throw std::invalid_argument("fano_bound: shape mismatch");
    if (std::abs(fc.prior.sum() - 1.0) > 1e-12) throw std::invalid_argument("fano_bound: prior must sum to 1");
    for (Index i = 0; i < m; ++i) {
        if (std::abs(fc.channels.row(i).sum() - 1.0) > 1e-12)
            throw std::invalid_argument("fano_bound: channel rows must sum to 1");
        for (Index a = 0; a < fc.loss.cols(); ++a) {
            double l = fc.loss(i, a);
            if (l != 0.0 && l != 1.0) throw std::invalid_argument("fano_bound: loss must be binary");
        }
    }

    FanoResult out;
    // best constant action
    out.trivial_risk = (fc.prior.transpose() * fc.loss).minCoeff();
    if (out.trivial_risk >= 1.0) throw std::invalid_argument("fano_bound: trivial risk must be below 1");

    // exact Bayes risk: pick the best action per outcome
    double bayes = 0.0;
    for (Index x = 0; x < fc.channels.cols(); ++x) {
        Vector joint = fc.prior.cwiseProduct(fc.channels.col(x));  // w(θ)·P_θ(x)
        bayes += (joint.transpose() * fc.loss).minCoeff();
    }
    out.bayes_risk = bayes;

    // informativity with the prior mixture as the reference distribution
    Vector mixture = fc.channels.transpose() * fc.prior;
    double info = 0.0;
    for (Index i = 0; i < m; ++i) info += fc.prior(i) * kl_divergence(Vector(fc.channels.row(i).transpose()), mixture);
    out.mutual_information = info;

    if (out.trivial_risk == 0.0) {
        out.bound = -std::numeric_limits<double>::infinity();
    } else {
        out.bound = 1.0 + (info + std::log1p(out.trivial_risk)) / std::log(1.0 - out.trivial_risk);
    }
    out.holds = out.bayes_risk >= out.bound - 1e-10;
    return out;
}

GrowthFit growth_rate(const std::vector<double>& trace) {
    if (trace.size() < 3) throw std::invalid_argument("growth_rate: need at least 3 points");
    for (double v : trace)
        if (!(v > 0.0)) throw std::invalid_argument("growth_rate: entries must be positive");

    // last index still growing by at least 5% over its predecessor
    size_t last = 0;
    for (size_t i = 1; i < trace.size(); ++i)
        if (trace[i] >= 1.05 * trace[i - 1]) last = i;
    size_t end = (last >= 1) ? last + 1 : trace.size();  // constant traces keep all points

    std::vector<double> xs, ys;
    for (size_t i = 0; i < end; ++i) {
        xs.push_back(double(i));
        ys.push_back(std::log(trace[i]));
    }
    GrowthFit out;
    out.points_used = int(end);
    double n = double(xs.size());
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    out.factor = std::exp(slope);
    double ss = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double pred = my + slope * (xs[i] - mx);
        ss += (ys[i] - pred) * (ys[i] - pred);
    }
    out.residual = std::sqrt(ss / n);
    return out;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        double fa = double(i) / double(a.size());
        double fb = double(j) / double(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    double ne = double(a.size()) * double(b.size()) / double(a.size() + b.size());
    double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int t = 1; t <= 100; ++t) {
        double term = std::exp(-2.0 * t * t * lambda * lambda);
        p += 2.0 * sign * term;
        sign = -sign;
        if (term < 1e-12) break;
    }
    KsResult out;
    out.statistic = d;
    out.p_value = std::min(1.0, std::max(0.0, p));
    return out;
}

}  // namespace matsense
