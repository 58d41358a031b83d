#include "jcm/gumbel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "jcm/rng.hpp"

namespace jcm {

GumbelNoise sample_gumbel(int rows, int categories, std::uint64_t seed) {
    if (rows < 1 || categories < 1) throw std::invalid_argument("sample_gumbel: empty shape");
    GumbelNoise g;
    g.seed = seed;
    g.values = Mat(rows, categories);
    Rng rng(seed);
    for (auto& v : g.values.data) v = rng.gumbel();
    return g;
}

int gumbel_max_sample(std::span<const double> pmf_row, std::span<const double> noise_row) {
    if (pmf_row.size() != noise_row.size() || pmf_row.empty())
        throw std::invalid_argument("gumbel_max_sample: shape mismatch");
    int best = 0;
    double best_score = noise_row[0] + std::log(std::max(pmf_row[0], kProbFloor));
    for (std::size_t m = 1; m < pmf_row.size(); ++m) {
        const double score = noise_row[m] + std::log(std::max(pmf_row[m], kProbFloor));
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(m);
        }
    }
    return best;
}

std::vector<double> gumbel_softmax_relax(std::span<const double> pmf_row,
                                         std::span<const double> noise_row, double rho) {
    if (pmf_row.size() != noise_row.size() || pmf_row.empty())
        throw std::invalid_argument("gumbel_softmax_relax: shape mismatch");
    if (rho <= 0.0) throw std::invalid_argument("gumbel_softmax_relax: rho must be positive");
    std::vector<double> v(pmf_row.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < pmf_row.size(); ++m) {
        v[m] = (std::log(std::max(pmf_row[m], kProbFloor)) + noise_row[m]) / rho;
        mx = std::max(mx, v[m]);
    }
    double sum = 0.0;
    for (auto& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (auto& x : v) x /= sum;
    return v;
}

std::pair<ComplexSequence, RelaxedSymbols> st_modulate(const TransitionPMF& pmf,
                                                       const GumbelNoise& noise, double rho,
                                                       const Constellation& c) {
    const int axes = num_axes(pmf.scheme);
    const int cats = pmf.axis_categories();
    if (pmf.scheme != c.scheme) throw std::invalid_argument("st_modulate: scheme mismatch");
    if (noise.values.rows != pmf.n * axes || noise.values.cols != cats)
        throw std::invalid_argument("st_modulate: noise shape mismatch");

    const std::vector<double> amps = c.axis_amplitudes();
    RelaxedSymbols out;
    out.rho = rho;
    out.hard.resize(pmf.n);
    out.soft = Mat(pmf.n * axes, cats);
    ComplexSequence z(pmf.n);

    for (int i = 0; i < pmf.n; ++i) {
        if (pmf.scheme == Scheme::BPSK) {
            std::span<const double> q(pmf.axis_row(i, 0), static_cast<std::size_t>(cats));
            std::span<const double> tau(&noise.values(i, 0), static_cast<std::size_t>(cats));
            const int m = gumbel_max_sample(q, tau);
            const auto v = gumbel_softmax_relax(q, tau, rho);
            out.hard[i] = m;
            for (int j = 0; j < cats; ++j) out.soft(i, j) = v[j];
            z[i] = c.points[m];
        } else {
            int axis_idx[2];
            for (int a = 0; a < 2; ++a) {
                std::span<const double> q(pmf.axis_row(i, a), static_cast<std::size_t>(cats));
                std::span<const double> tau(&noise.values(i * 2 + a, 0), static_cast<std::size_t>(cats));
                axis_idx[a] = gumbel_max_sample(q, tau);
                const auto v = gumbel_softmax_relax(q, tau, rho);
                for (int j = 0; j < cats; ++j) out.soft(i * 2 + a, j) = v[j];
            }
            out.hard[i] = axis_idx[0] * cats + axis_idx[1];
            z[i] = cplx(amps[axis_idx[0]], amps[axis_idx[1]]);
        }
    }
    return {std::move(z), std::move(out)};
}

ComplexSequence relaxed_sequence(const RelaxedSymbols& relaxed, const Constellation& c) {
    const int axes = num_axes(c.scheme);
    const int n = relaxed.soft.rows / axes;
    const std::vector<double> amps = c.axis_amplitudes();
    ComplexSequence z(n);
    for (int i = 0; i < n; ++i) {
        if (c.scheme == Scheme::BPSK) {
            double re = 0.0;
            for (int j = 0; j < relaxed.soft.cols; ++j) re += relaxed.soft(i, j) * amps[j];
            z[i] = cplx(re, 0.0);
        } else {
            double comp[2] = {0.0, 0.0};
            for (int a = 0; a < 2; ++a)
                for (int j = 0; j < relaxed.soft.cols; ++j) comp[a] += relaxed.soft(i * 2 + a, j) * amps[j];
            z[i] = cplx(comp[0], comp[1]);
        }
    }
    return z;
}

}  // namespace jcm
