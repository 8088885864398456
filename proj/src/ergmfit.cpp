#include "rdsma/ergmfit.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace rdsma {

namespace {

double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic(double x) {
    if (x >= 0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Change statistics for one swap lie in [-2, 2]; keep a wider window so the
// aggregation never silently drops a value.
constexpr int delta_offset = 4;
constexpr int delta_bins = 2 * delta_offset + 1;

struct DeltaCounts {
    std::array<double, delta_bins> total{};
    std::array<double, delta_bins> plus{};
    double n = 0;
};

DeltaCounts aggregate(const TetradSample& s) {
    if (s.deltas.size() != s.labels.size())
        throw std::invalid_argument("tetrad sample deltas and labels differ in length");
    if (s.deltas.empty())
        throw std::invalid_argument("empty tetrad sample");
    DeltaCounts c;
    for (std::size_t t = 0; t < s.deltas.size(); ++t) {
        const int d = s.deltas[t];
        if (d < -delta_offset || d > delta_offset)
            throw std::invalid_argument("tetrad change statistic outside [-4, 4]");
        c.total[d + delta_offset] += 1;
        c.plus[d + delta_offset] += s.labels[t];
    }
    c.n = static_cast<double>(s.deltas.size());
    return c;
}

double loglik(double eta, const DeltaCounts& c) {
    double s = 0;
    for (int b = 0; b < delta_bins; ++b) {
        const double d = b - delta_offset;
        s += eta * d * c.plus[b] - c.total[b] * softplus(eta * d);
    }
    return s / c.n;
}

double gradient(double eta, const DeltaCounts& c) {
    double s = 0;
    for (int b = 0; b < delta_bins; ++b) {
        const double d = b - delta_offset;
        s += d * (c.plus[b] - c.total[b] * logistic(eta * d));
    }
    return s / c.n;
}

double hessian(double eta, const DeltaCounts& c) {
    double s = 0;
    for (int b = 0; b < delta_bins; ++b) {
        const double d = b - delta_offset;
        const double p = logistic(eta * d);
        s -= d * d * c.total[b] * p * (1 - p);
    }
    return s / c.n;
}

} // namespace

TetradSample sample_tetrads(const Network& net, std::size_t size, Rng& rng) {
    TetradSample s;
    s.deltas.reserve(size);
    s.labels.reserve(size);
    for (std::size_t t = 0; t < size; ++t) {
        auto quad = sample_valid_tetrad(net, rng);
        if (!quad)
            break;
        s.deltas.push_back(tetrad_delta(net, *quad));
        s.labels.push_back(net.has_edge(quad->i, quad->j) ? 1 : 0);
    }
    return s;
}

TetradSample sample_tetrads_on_level(Network net, std::size_t size, int walk_steps, Rng& rng) {
    TetradSample s;
    s.deltas.reserve(size);
    s.labels.reserve(size);
    for (std::size_t t = 0; t < size; ++t) {
        for (int step = 0; step < walk_steps; ++step) {
            auto p = propose_swap(net, rng);
            if (p && p->delta_g == 0)
                apply_swap(net, *p);
        }
        auto quad = sample_valid_tetrad(net, rng);
        if (!quad)
            break;
        s.deltas.push_back(tetrad_delta(net, *quad));
        s.labels.push_back(net.has_edge(quad->i, quad->j) ? 1 : 0);
    }
    return s;
}

double tetradic_loglik(double eta, const TetradSample& sample) {
    return loglik(eta, aggregate(sample));
}

double tetradic_gradient(double eta, const TetradSample& sample) {
    return gradient(eta, aggregate(sample));
}

MtpleFit fit_mtple(const TetradSample& sample) {
    const DeltaCounts c = aggregate(sample);
    MtpleFit fit;
    // Informative tetrads agreeing with a positive / negative parameter.
    double favour_pos = 0, favour_neg = 0;
    for (int b = 0; b < delta_bins; ++b) {
        const int d = b - delta_offset;
        if (d == 0)
            continue;
        fit.n_informative += static_cast<std::size_t>(c.total[b]);
        const double plus = c.plus[b];
        const double minus = c.total[b] - plus;
        favour_pos += d > 0 ? plus : minus;
        favour_neg += d > 0 ? minus : plus;
    }
    auto finish = [&](double eta, bool converged) {
        fit.eta_hat = eta;
        fit.loglik = loglik(eta, c);
        fit.gradient_at_opt = gradient(eta, c);
        fit.converged = converged;
        return fit;
    };
    if (fit.n_informative == 0)
        return finish(0.0, false);
    if (favour_neg == 0) {
        fit.separated = true;
        return finish(eta_cap, false);
    }
    if (favour_pos == 0) {
        fit.separated = true;
        return finish(-eta_cap, false);
    }
    if (gradient(eta_cap, c) > 0)
        return finish(eta_cap, false);
    if (gradient(-eta_cap, c) < 0)
        return finish(-eta_cap, false);

    constexpr int max_newton = 50;
    constexpr double tolerance = 1e-8;
    double lo = -eta_cap, hi = eta_cap;
    double eta = 0.0;
    for (int it = 0; it < max_newton; ++it) {
        const double g = gradient(eta, c);
        if (std::abs(g) < tolerance)
            return finish(eta, true);
        if (g > 0)
            lo = eta;
        else
            hi = eta;
        const double h = hessian(eta, c);
        double next = eta - g / h;
        if (!std::isfinite(next) || next <= lo || next >= hi)
            next = 0.5 * (lo + hi);
        eta = next;
    }
    return finish(eta, std::abs(gradient(eta, c)) < tolerance);
}

void realize_sequences(const ClassTable& table, std::vector<int>& degrees, std::vector<std::uint8_t>& infection) {
    degrees.clear();
    infection.clear();
    for (const auto& [key, count] : table.entries) {
        if (count < 0 || count != std::floor(count))
            throw std::invalid_argument("class table must hold non-negative integer counts");
        if (key.infected != 0 && key.infected != 1)
            throw std::invalid_argument("class table infection must be 0 or 1");
        const auto c = static_cast<std::size_t>(count);
        degrees.insert(degrees.end(), c, key.degree);
        infection.insert(infection.end(), c, static_cast<std::uint8_t>(key.infected));
    }
}

NaturalParamFit mean_value_to_natural(const ClassTable& table, double target_g, Rng& rng,
                                      const NaturalParamOptions& options) {
    if (!(target_g >= 0.0))
        throw std::invalid_argument("target cross-tie count must be non-negative");
    std::vector<int> degrees;
    std::vector<std::uint8_t> infection;
    realize_sequences(table, degrees, infection);
    NaturalParamFit out;
    out.parity_adjusted_node = repair_degree_parity(degrees, rng);
    Network start = reed_molloy(degrees, infection, rng);
    out.reference = anneal_to_crossties(start, target_g, rng, options.anneal, &out.anneal);
    TetradSample tetrads =
        options.level_walk_steps > 0
            ? sample_tetrads_on_level(out.reference, options.tetrad_count, options.level_walk_steps, rng)
            : sample_tetrads(out.reference, options.tetrad_count, rng);
    if (tetrads.size() == 0) {
        // No degree-preserving move exists: the model is a point mass and
        // the parameter is unidentified.
        out.fit = MtpleFit{};
        out.eta_hat = 0.0;
        return out;
    }
    out.fit = fit_mtple(tetrads);
    out.eta_hat = out.fit.eta_hat;
    return out;
}

} // namespace rdsma
