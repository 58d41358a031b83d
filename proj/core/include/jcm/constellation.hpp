#pragma once

#include <complex>
#include <vector>

namespace jcm {

using cplx = std::complex<double>;

// A channel-input sequence of n complex amplitudes (one per channel use).
using ComplexSequence = std::vector<cplx>;

enum class Scheme { BPSK, RectQAM };

// Independently modulated real axes per channel use: 1 for BPSK, 2 for QAM.
int num_axes(Scheme scheme);

// Symbol set of a digital modulation.
//
// RectQAM points are ordered (i,q)-lexicographic over the ascending amplitude
// levels: index m = i_idx * sqrt(M) + q_idx. BPSK keeps the sign convention
// points = [+1, -1] so that category 0 is the +1 symbol.
struct Constellation {
    Scheme scheme = Scheme::BPSK;
    int order = 2;                  // M
    std::vector<cplx> points;       // size M
    std::vector<double> iq_levels;  // sqrt(M) ascending amplitudes (RectQAM only)

    int side() const;  // sqrt(M) for RectQAM, 2 for BPSK

    // Amplitudes of one modulated axis, in category order: BPSK -> {+1, -1},
    // RectQAM -> iq_levels.
    std::vector<double> axis_amplitudes() const;
};

Constellation make_bpsk();

// Rectangular M-QAM with M = 2^{2a}; amplitudes (2r+1)/(sqrt(M)-1).
Constellation make_rect_qam(int order);

// Scales seq by a positive factor so that sum |z_i|^2 / n == power.
ComplexSequence normalize_power(const ComplexSequence& seq, double power);

// Index of the closest constellation point; ties break to the lowest index.
int nearest_symbol(cplx point, const Constellation& c);

double sequence_power(const ComplexSequence& seq);

}  // namespace jcm
