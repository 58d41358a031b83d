#include "jcm/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "jcm/rng.hpp"

namespace jcm {

namespace {

// Values are rounded through 32-bit floats at generation time so that the
// on-disk format (f32) round-trips bit-exactly.
double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

double clip01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

double center_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return std::sqrt(d);
}

}  // namespace

Dataset gen_gaussian_mixture(int k, int num_classes, int samples_per_class, double sigma_c,
                             std::uint64_t seed) {
    if (k < 2 || num_classes < 2)
        throw std::invalid_argument("gen_gaussian_mixture: need k >= 2 and L >= 2");
    if (samples_per_class < 1)
        throw std::invalid_argument("gen_gaussian_mixture: samples_per_class >= 1");

    static constexpr double kLattice[] = {0.2, 0.35, 0.5, 0.65, 0.8};
    Rng rng(mix_seed({seed, 0xC3A7ULL}));

    // Class centers on the lattice, re-drawn a bounded number of times to keep
    // them mutually separated; the most-separated draw wins.
    std::vector<std::vector<double>> centers;
    for (int l = 0; l < num_classes; ++l) {
        std::vector<double> best;
        double best_min_dist = -1.0;
        for (int attempt = 0; attempt < 200; ++attempt) {
            std::vector<double> cand(k);
            for (int j = 0; j < k; ++j)
                cand[j] = kLattice[static_cast<int>(rng.uniform() * 5.0) % 5];
            double min_dist = 1e300;
            for (const auto& c : centers) min_dist = std::min(min_dist, center_distance(cand, c));
            if (min_dist > best_min_dist) {
                best_min_dist = min_dist;
                best = cand;
            }
            if (best_min_dist >= 0.3) break;
        }
        centers.push_back(best);
    }

    Dataset ds;
    ds.k = k;
    ds.num_classes = num_classes;
    ds.seed = seed;
    ds.x = Mat(num_classes * samples_per_class, k);
    ds.labels.resize(ds.x.rows);
    Rng sample_rng(mix_seed({seed, 0x5A3FULL}));
    int row = 0;
    for (int l = 0; l < num_classes; ++l)
        for (int s = 0; s < samples_per_class; ++s, ++row) {
            ds.labels[row] = l;
            for (int j = 0; j < k; ++j) {
                const double v = centers[l][j] + sigma_c * sample_rng.normal();
                ds.x(row, j) = f32(clip01(v));
            }
        }
    return ds;
}

Dataset gen_toy_images(int side, int num_classes, int samples_per_class, double noise,
                       std::uint64_t seed) {
    if (side != 8 && side != 16) throw std::invalid_argument("gen_toy_images: side must be 8 or 16");
    if (num_classes < 2 || num_classes > 4)
        throw std::invalid_argument("gen_toy_images: 2 <= L <= 4");

    const int k = side * side;
    const int b0 = side / 2 - 1, b1 = side / 2;  // two-pixel band through the middle

    // Class templates: horizontal bar, vertical bar, cross, blank.
    std::vector<std::vector<double>> templates(4, std::vector<double>(k, 0.0));
    for (int c = 0; c < side; ++c) {
        templates[0][b0 * side + c] = 1.0;
        templates[0][b1 * side + c] = 1.0;
    }
    for (int r = 0; r < side; ++r) {
        templates[1][r * side + b0] = 1.0;
        templates[1][r * side + b1] = 1.0;
    }
    for (int j = 0; j < k; ++j) templates[2][j] = std::max(templates[0][j], templates[1][j]);

    Dataset ds;
    ds.k = k;
    ds.num_classes = num_classes;
    ds.seed = seed;
    ds.x = Mat(num_classes * samples_per_class, k);
    ds.labels.resize(ds.x.rows);
    Rng rng(mix_seed({seed, 0x1347ULL}));
    int row = 0;
    for (int l = 0; l < num_classes; ++l)
        for (int s = 0; s < samples_per_class; ++s, ++row) {
            ds.labels[row] = l;
            for (int j = 0; j < k; ++j) {
                const double v = templates[l][j] + noise * (2.0 * rng.uniform() - 1.0);
                ds.x(row, j) = f32(clip01(v));
            }
        }
    return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, int train_per_class) {
    Dataset train, val;
    train.k = val.k = ds.k;
    train.num_classes = val.num_classes = ds.num_classes;
    train.seed = val.seed = ds.seed;
    train.split = "train";
    val.split = "val";

    std::vector<int> train_rows, val_rows;
    std::vector<int> seen(ds.num_classes, 0);
    for (int r = 0; r < ds.size(); ++r) {
        if (seen[ds.labels[r]]++ < train_per_class)
            train_rows.push_back(r);
        else
            val_rows.push_back(r);
    }
    const auto take = [&](Dataset& out, const std::vector<int>& rows) {
        out.x = Mat(static_cast<int>(rows.size()), ds.k);
        out.labels.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.labels[i] = ds.labels[rows[i]];
            for (int j = 0; j < ds.k; ++j) out.x(static_cast<int>(i), j) = ds.x(rows[i], j);
        }
    };
    take(train, train_rows);
    take(val, val_rows);
    return {std::move(train), std::move(val)};
}

namespace {

constexpr char kMagic[4] = {'J', 'C', 'M', 'D'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("dataset: truncated file");
    return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("dataset: cannot open " + path);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint32_t>(ds.k));
    write_pod(os, static_cast<std::uint32_t>(ds.num_classes));
    write_pod(os, static_cast<std::uint64_t>(ds.size()));
    for (int r = 0; r < ds.size(); ++r) {
        for (int j = 0; j < ds.k; ++j) {
            const float f = static_cast<float>(ds.x(r, j));
            write_pod(os, f);
        }
        write_pod(os, static_cast<std::uint16_t>(ds.labels[r]));
    }
    if (!os) throw std::runtime_error("dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("dataset: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("dataset: bad magic in " + path);
    const auto version = read_pod<std::uint16_t>(is);
    if (version != kVersion) throw std::runtime_error("dataset: unsupported version");
    Dataset ds;
    ds.k = static_cast<int>(read_pod<std::uint32_t>(is));
    ds.num_classes = static_cast<int>(read_pod<std::uint32_t>(is));
    const auto n = read_pod<std::uint64_t>(is);
    ds.split = "loaded";
    ds.x = Mat(static_cast<int>(n), ds.k);
    ds.labels.resize(n);
    for (std::uint64_t r = 0; r < n; ++r) {
        for (int j = 0; j < ds.k; ++j)
            ds.x(static_cast<int>(r), j) = static_cast<double>(read_pod<float>(is));
        ds.labels[r] = static_cast<int>(read_pod<std::uint16_t>(is));
    }
    return ds;
}

}  // namespace jcm
