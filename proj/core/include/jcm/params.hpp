#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jcm/mat.hpp"

namespace jcm {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Named trainable arrays with paired gradient buffers and Adam state.
// Iteration order is the lexicographic name order, which keeps updates and
// serialization deterministic.
class ParamStore {
  public:
    struct Entry {
        Mat value;
        Mat grad;
        Mat m;
        Mat v;
    };

    void add(const std::string& name, Mat init);
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    Mat& value(const std::string& name);
    const Mat& value(const std::string& name) const;
    Mat& grad(const std::string& name);

    std::vector<std::string> names() const;
    int total_size() const;
    std::int64_t step() const { return step_; }

    void zero_grads();

    // Bias-corrected Adam on every entry; gradients are zeroed afterwards.
    // Throws on non-finite gradients. `selected`, when given, restricts the
    // update to names for which it returns true (alternating-update mode).
    void adam_step(double lr, const AdamConfig& cfg = {});
    void adam_step_filtered(double lr, const AdamConfig& cfg,
                            const std::vector<std::string>& prefixes);

    // Versioned binary checkpoint: magic "JCMP", little-endian 64-bit floats.
    void save(const std::string& path) const;
    static ParamStore load(const std::string& path);

  private:
    void adam_update_entry(Entry& e, double lr, const AdamConfig& cfg, const std::string& name);

    std::map<std::string, Entry> entries_;
    std::int64_t step_ = 0;
};

struct CosineSchedule {
    double lr_max = 5e-4;
    double lr_min = 1e-6;
    int period = 300;
};

// lr(t) = lr_min + (lr_max - lr_min) * (1 + cos(pi t / period)) / 2 with t
// clamped to [0, period]; endpoints are returned exactly.
double cosine_lr(int epoch, const CosineSchedule& schedule = {});

}  // namespace jcm
