#include "jcm/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "jcm/rng.hpp"

namespace jcm {

MLPSpec make_mlp_spec(int input, const std::vector<int>& hidden, int output, HeadKind head) {
    MLPSpec spec;
    spec.widths.push_back(input);
    for (int h : hidden) spec.widths.push_back(h);
    spec.widths.push_back(output);
    spec.head = head;
    for (int w : spec.widths)
        if (w < 1) throw std::invalid_argument("make_mlp_spec: widths must be positive");
    return spec;
}

void init_mlp(ParamStore& store, const MLPSpec& spec, const std::string& prefix,
              std::uint64_t seed, double head_bias_scale) {
    Rng rng(seed);
    const std::size_t layers = spec.widths.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const int fan_in = spec.widths[l];
        const int fan_out = spec.widths[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        Mat w(fan_in, fan_out);
        for (auto& x : w.data) x = bound * (2.0 * rng.uniform() - 1.0);
        store.add(prefix + ".w" + std::to_string(l), std::move(w));
        Mat b = Mat::zeros(1, fan_out);
        if (l + 1 == layers && head_bias_scale != 0.0)
            for (auto& x : b.data) x = head_bias_scale * (2.0 * rng.uniform() - 1.0);
        store.add(prefix + ".b" + std::to_string(l), std::move(b));
    }
}

ad::Value mlp_apply(ad::Tape& tape, ParamStore& store, const MLPSpec& spec,
                    const std::string& prefix, ad::Value input) {
    if (tape.value(input).cols != spec.input_width())
        throw std::invalid_argument("mlp_apply: input width mismatch");
    ad::Value h = input;
    const std::size_t layers = spec.widths.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        ad::Value w = tape.param(store, prefix + ".w" + std::to_string(l));
        ad::Value b = tape.param(store, prefix + ".b" + std::to_string(l));
        h = tape.affine(h, w, b);
        if (l + 1 < layers) h = tape.relu(h);
    }
    return h;
}

Mat mlp_eval(const ParamStore& store, const MLPSpec& spec, const std::string& prefix,
             const Mat& input) {
    if (input.cols != spec.input_width())
        throw std::invalid_argument("mlp_eval: input width mismatch");
    Mat h = input;
    const std::size_t layers = spec.widths.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const Mat& w = store.value(prefix + ".w" + std::to_string(l));
        const Mat& b = store.value(prefix + ".b" + std::to_string(l));
        Mat y(h.rows, w.cols);
        for (int r = 0; r < h.rows; ++r) {
            double* yr = &y(r, 0);
            for (int c = 0; c < w.cols; ++c) yr[c] = b(0, c);
            for (int k = 0; k < h.cols; ++k) {
                const double xv = h(r, k);
                const double* wk = &w(k, 0);
                for (int c = 0; c < w.cols; ++c) yr[c] += xv * wk[c];
            }
        }
        if (l + 1 < layers)
            for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
        h = std::move(y);
    }
    return h;
}

std::vector<std::string> mlp_param_names(const MLPSpec& spec, const std::string& prefix) {
    std::vector<std::string> names;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        names.push_back(prefix + ".w" + std::to_string(l));
        names.push_back(prefix + ".b" + std::to_string(l));
    }
    return names;
}

}  // namespace jcm
