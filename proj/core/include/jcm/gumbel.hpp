#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "jcm/constellation.hpp"
#include "jcm/mat.hpp"
#include "jcm/transition.hpp"

namespace jcm {

// I.i.d. Gumbel(0,1) draws, one row per categorical decision.
struct GumbelNoise {
    Mat values;
    std::uint64_t seed = 0;
};

// One modulated sequence under the straight-through pairing: the hard symbol
// index per position is the forward value, the softmax-relaxed simplex rows
// are the backward surrogate. Both are produced from the same noise.
struct RelaxedSymbols {
    std::vector<int> hard;  // combined symbol index per position
    Mat soft;               // (n * num_axes) x axis categories, row-stochastic
    double rho = 1.5;
};

GumbelNoise sample_gumbel(int rows, int categories, std::uint64_t seed);

// argmax_m [tau_m + log q_m], ties to the lowest index.
int gumbel_max_sample(std::span<const double> pmf_row, std::span<const double> noise_row);

// v_m = exp((log q_m + tau_m)/rho) / sum_k exp((log q_k + tau_k)/rho).
std::vector<double> gumbel_softmax_relax(std::span<const double> pmf_row,
                                         std::span<const double> noise_row, double rho);

// Samples a constellation sequence from the transition PMF. Noise rows are
// ordered position-major with the I row before the Q row for RectQAM, i.e.
// noise.values must be (n * num_axes) x axis_categories.
std::pair<ComplexSequence, RelaxedSymbols> st_modulate(const TransitionPMF& pmf,
                                                       const GumbelNoise& noise, double rho,
                                                       const Constellation& c);

// Backward-surrogate sequence z~ with entries c^T v_i.
ComplexSequence relaxed_sequence(const RelaxedSymbols& relaxed, const Constellation& c);

}  // namespace jcm
