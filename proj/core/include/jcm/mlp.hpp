#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jcm/autodiff.hpp"
#include "jcm/mat.hpp"
#include "jcm/params.hpp"

namespace jcm {

enum class HeadKind { Logits, Linear };

// Fully-connected network: widths[0] inputs, ReLU between layers, raw head.
// The head tag records how downstream code interprets the output; the
// forward computation is identical for both.
struct MLPSpec {
    std::vector<int> widths;
    HeadKind head = HeadKind::Linear;

    int input_width() const { return widths.front(); }
    int output_width() const { return widths.back(); }
};

MLPSpec make_mlp_spec(int input, const std::vector<int>& hidden, int output, HeadKind head);

// Glorot-uniform weights, zero biases; entry names are e.g. "<prefix>.w0".
// head_bias_scale, when nonzero, draws the final-layer bias uniformly from
// +-head_bias_scale. Encoders feeding a power normalizer use this so that a
// fully dead ReLU row cannot produce an exactly zero output vector.
void init_mlp(ParamStore& store, const MLPSpec& spec, const std::string& prefix,
              std::uint64_t seed, double head_bias_scale = 0.0);

// Tape forward pass (records for reverse mode).
ad::Value mlp_apply(ad::Tape& tape, ParamStore& store, const MLPSpec& spec,
                    const std::string& prefix, ad::Value input);

// Plain forward pass for evaluation paths; matches mlp_apply bit for bit.
Mat mlp_eval(const ParamStore& store, const MLPSpec& spec, const std::string& prefix,
             const Mat& input);

std::vector<std::string> mlp_param_names(const MLPSpec& spec, const std::string& prefix);

}  // namespace jcm
