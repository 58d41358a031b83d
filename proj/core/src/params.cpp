#include "jcm/params.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace jcm {

void ParamStore::add(const std::string& name, Mat init) {
    if (contains(name)) throw std::invalid_argument("ParamStore::add: duplicate name " + name);
    Entry e;
    e.grad = Mat::zeros(init.rows, init.cols);
    e.m = Mat::zeros(init.rows, init.cols);
    e.v = Mat::zeros(init.rows, init.cols);
    e.value = std::move(init);
    entries_.emplace(name, std::move(e));
}

Mat& ParamStore::value(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("ParamStore: unknown name " + name);
    return it->second.value;
}

const Mat& ParamStore::value(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("ParamStore: unknown name " + name);
    return it->second.value;
}

Mat& ParamStore::grad(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::invalid_argument("ParamStore: unknown name " + name);
    return it->second.grad;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

int ParamStore::total_size() const {
    int t = 0;
    for (const auto& [k, e] : entries_) t += e.value.size();
    return t;
}

void ParamStore::zero_grads() {
    for (auto& [k, e] : entries_)
        for (auto& g : e.grad.data) g = 0.0;
}

void ParamStore::adam_update_entry(Entry& e, double lr, const AdamConfig& cfg,
                                   const std::string& name) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
    for (int i = 0; i < e.value.size(); ++i) {
        const double g = e.grad.data[i];
        if (!std::isfinite(g))
            throw std::runtime_error("adam_step: non-finite gradient in " + name);
        e.m.data[i] = cfg.beta1 * e.m.data[i] + (1.0 - cfg.beta1) * g;
        e.v.data[i] = cfg.beta2 * e.v.data[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = e.m.data[i] / bc1;
        const double vhat = e.v.data[i] / bc2;
        e.value.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
        e.grad.data[i] = 0.0;
    }
}

void ParamStore::adam_step(double lr, const AdamConfig& cfg) {
    ++step_;
    for (auto& [name, e] : entries_) adam_update_entry(e, lr, cfg, name);
}

void ParamStore::adam_step_filtered(double lr, const AdamConfig& cfg,
                                    const std::vector<std::string>& prefixes) {
    ++step_;
    for (auto& [name, e] : entries_) {
        bool selected = false;
        for (const auto& p : prefixes)
            if (name.rfind(p, 0) == 0) selected = true;
        if (selected) adam_update_entry(e, lr, cfg, name);
    }
}

namespace {

constexpr char kMagic[4] = {'J', 'C', 'M', 'P'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

}  // namespace

void ParamStore::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, e] : entries_) {
        write_pod(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(os, static_cast<std::uint32_t>(e.value.rows));
        write_pod(os, static_cast<std::uint32_t>(e.value.cols));
        os.write(reinterpret_cast<const char*>(e.value.data.data()),
                 static_cast<std::streamsize>(e.value.data.size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

ParamStore ParamStore::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const auto version = read_pod<std::uint16_t>(is);
    if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    const auto count = read_pod<std::uint32_t>(is);
    ParamStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto rows = read_pod<std::uint32_t>(is);
        const auto cols = read_pod<std::uint32_t>(is);
        Mat m(static_cast<int>(rows), static_cast<int>(cols));
        is.read(reinterpret_cast<char*>(m.data.data()),
                static_cast<std::streamsize>(m.data.size() * sizeof(double)));
        if (!is) throw std::runtime_error("checkpoint: truncated file");
        store.add(name, std::move(m));
    }
    return store;
}

double cosine_lr(int epoch, const CosineSchedule& schedule) {
    int t = epoch;
    if (t < 0) t = 0;
    if (t > schedule.period) t = schedule.period;
    const double w =
        0.5 * (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(t) / schedule.period));
    return schedule.lr_min * (1.0 - w) + schedule.lr_max * w;
}

}  // namespace jcm
