#include "jcm/constellation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace jcm {

int num_axes(Scheme scheme) { return scheme == Scheme::RectQAM ? 2 : 1; }

int Constellation::side() const {
    if (scheme == Scheme::BPSK) return 2;
    int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    return s;
}

std::vector<double> Constellation::axis_amplitudes() const {
    if (scheme == Scheme::BPSK) return {+1.0, -1.0};
    return iq_levels;
}

Constellation make_bpsk() {
    Constellation c;
    c.scheme = Scheme::BPSK;
    c.order = 2;
    c.points = {cplx(+1.0, 0.0), cplx(-1.0, 0.0)};
    return c;
}

Constellation make_rect_qam(int order) {
    if (order < 4) throw std::invalid_argument("make_rect_qam: order must be >= 4");
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    if (side * side != order || (side & (side - 1)) != 0)
        throw std::invalid_argument("make_rect_qam: order must be an even power of two");

    Constellation c;
    c.scheme = Scheme::RectQAM;
    c.order = order;
    c.iq_levels.resize(side);
    const double denom = side - 1.0;  // sqrt(M) - 1
    for (int r = 0; r < side; ++r) {
        // r runs over -sqrt(M)/2 .. sqrt(M)/2 - 1 in ascending order.
        const int rr = r - side / 2;
        c.iq_levels[r] = (2.0 * rr + 1.0) / denom;
    }
    c.points.reserve(order);
    for (int i = 0; i < side; ++i)
        for (int q = 0; q < side; ++q) c.points.emplace_back(c.iq_levels[i], c.iq_levels[q]);
    return c;
}

double sequence_power(const ComplexSequence& seq) {
    double s = 0.0;
    for (const auto& z : seq) s += std::norm(z);
    return s / static_cast<double>(seq.size());
}

ComplexSequence normalize_power(const ComplexSequence& seq, double power) {
    if (seq.empty()) throw std::invalid_argument("normalize_power: empty sequence");
    if (power <= 0.0) throw std::invalid_argument("normalize_power: power must be positive");
    double ss = 0.0;
    for (const auto& z : seq) ss += std::norm(z);
    if (ss == 0.0) throw std::invalid_argument("normalize_power: all-zero sequence");
    const double scale = std::sqrt(static_cast<double>(seq.size()) * power / ss);
    ComplexSequence out(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) out[i] = seq[i] * scale;
    return out;
}

int nearest_symbol(cplx point, const Constellation& c) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int m = 0; m < static_cast<int>(c.points.size()); ++m) {
        const double d = std::norm(point - c.points[m]);
        if (d < best_d) {
            best_d = d;
            best = m;
        }
    }
    return best;
}

}  // namespace jcm
