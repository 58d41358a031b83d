#include "jcm/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "jcm/rng.hpp"

namespace jcm {

namespace {

double ipow_check(int base, int exp) {
    double v = 1.0;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

// Iterates all M^n symbol-index sequences in odometer order.
template <typename Fn>
void for_each_sequence(int n, int order, Fn&& fn) {
    std::vector<int> z(n, 0);
    while (true) {
        fn(const_cast<const std::vector<int>&>(z));
        int i = n - 1;
        while (i >= 0 && ++z[i] == order) z[i--] = 0;
        if (i < 0) break;
    }
}

double log_likelihood(const ComplexSequence& zhat, const ComplexSequence& z, double sigma2) {
    double ll = 0.0;
    for (std::size_t i = 0; i < zhat.size(); ++i) ll -= std::norm(zhat[i] - z[i]) / sigma2;
    return ll;  // the (pi sigma2)^-n constant cancels in every posterior
}

int sample_categorical(const double* row, int cats, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int m = 0; m < cats; ++m) {
        acc += row[m];
        if (u < acc) return m;
    }
    return cats - 1;
}

std::vector<int> sample_sequence(const TransitionPMF& pmf, Rng& rng) {
    std::vector<int> z(pmf.n);
    if (pmf.scheme == Scheme::BPSK) {
        for (int i = 0; i < pmf.n; ++i) z[i] = sample_categorical(&pmf.probs(i, 0), 2, rng);
    } else {
        const int side = pmf.probs_i.cols;
        for (int i = 0; i < pmf.n; ++i) {
            const int r = sample_categorical(&pmf.probs_i(i, 0), side, rng);
            const int s = sample_categorical(&pmf.probs_q(i, 0), side, rng);
            z[i] = r * side + s;
        }
    }
    return z;
}

MCEstimate mean_with_se(const std::vector<double>& samples) {
    MCEstimate e;
    const double n = static_cast<double>(samples.size());
    for (double v : samples) e.value += v;
    e.value /= n;
    double var = 0.0;
    for (double v : samples) var += (v - e.value) * (v - e.value);
    var /= (n - 1.0);
    e.std_error = std::sqrt(var / n);
    return e;
}

}  // namespace

void validate_toy_system(const ToySystem& sys) {
    if (sys.support.empty()) throw std::invalid_argument("ToySystem: empty support");
    if (sys.support.size() > 16) throw std::invalid_argument("ToySystem: support too large");
    if (sys.n < 1 || sys.n > 3) throw std::invalid_argument("ToySystem: n must be in [1,3]");
    if (ipow_check(sys.constellation.order, sys.n) > 4096.0)
        throw std::invalid_argument("ToySystem: M^n exceeds enumeration cap");
    if (sys.pmf_per_source.size() != sys.support.size())
        throw std::invalid_argument("ToySystem: one transition PMF per source required");
    double prior_sum = 0.0;
    for (const auto& s : sys.support) {
        prior_sum += s.prior;
        if (s.label < 0 || s.label >= sys.num_labels)
            throw std::invalid_argument("ToySystem: label out of range");
    }
    if (std::abs(prior_sum - 1.0) > 1e-9)
        throw std::invalid_argument("ToySystem: priors must sum to 1");
    for (std::size_t a = 0; a < sys.support.size(); ++a)
        for (std::size_t b = a + 1; b < sys.support.size(); ++b)
            if (sys.support[a].x == sys.support[b].x)
                throw std::invalid_argument("ToySystem: duplicate source vectors");
    for (const auto& pmf : sys.pmf_per_source)
        if (pmf.n != sys.n || pmf.scheme != sys.constellation.scheme)
            throw std::invalid_argument("ToySystem: PMF shape mismatch");
}

ComplexSequence sequence_from_indices(const std::vector<int>& symbols, const Constellation& c) {
    ComplexSequence z(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) z[i] = c.points[symbols[i]];
    return z;
}

namespace {

TransitionPMF bpsk_pmf(const std::vector<double>& q_plus) {
    Mat logits(static_cast<int>(q_plus.size()), 2);
    for (std::size_t i = 0; i < q_plus.size(); ++i) {
        logits(static_cast<int>(i), 0) = std::log(q_plus[i]);
        logits(static_cast<int>(i), 1) = std::log(1.0 - q_plus[i]);
    }
    return pmf_from_logits(logits, Scheme::BPSK);
}

TransitionPMF qam4_pmf(double qi0, double qq0) {
    Mat logits(1, 4);
    logits(0, 0) = std::log(qi0);
    logits(0, 1) = std::log(1.0 - qi0);
    logits(0, 2) = std::log(qq0);
    logits(0, 3) = std::log(1.0 - qq0);
    return pmf_from_logits(logits, Scheme::RectQAM);
}

}  // namespace

std::vector<ToySystem> reference_toy_systems() {
    std::vector<ToySystem> systems;

    {  // Antipodal BPSK, one use, strongly informative.
        ToySystem sys;
        sys.constellation = make_bpsk();
        sys.n = 1;
        sys.num_labels = 2;
        sys.sigma2 = 0.5;
        sys.support = {{{0.2}, 0, 0.5}, {{0.8}, 1, 0.5}};
        sys.pmf_per_source = {bpsk_pmf({0.95}), bpsk_pmf({0.05})};
        systems.push_back(std::move(sys));
    }
    {  // BPSK, two uses, four sources, non-uniform priors.
        ToySystem sys;
        sys.constellation = make_bpsk();
        sys.n = 2;
        sys.num_labels = 2;
        sys.sigma2 = 1.0;
        sys.support = {{{0.1, 0.1}, 0, 0.4},
                       {{0.3, 0.2}, 0, 0.1},
                       {{0.7, 0.8}, 1, 0.3},
                       {{0.9, 0.6}, 1, 0.2}};
        sys.pmf_per_source = {bpsk_pmf({0.9, 0.8}), bpsk_pmf({0.7, 0.9}), bpsk_pmf({0.2, 0.1}),
                              bpsk_pmf({0.1, 0.3})};
        systems.push_back(std::move(sys));
    }
    {  // 4QAM, one use, four sources peaked on the four corners.
        ToySystem sys;
        sys.constellation = make_rect_qam(4);
        sys.n = 1;
        sys.num_labels = 2;
        sys.sigma2 = 0.8;
        sys.support = {{{0.1, 0.9}, 0, 0.25},
                       {{0.3, 0.7}, 0, 0.25},
                       {{0.7, 0.3}, 1, 0.25},
                       {{0.9, 0.1}, 1, 0.25}};
        sys.pmf_per_source = {qam4_pmf(0.9, 0.9), qam4_pmf(0.9, 0.1), qam4_pmf(0.1, 0.9),
                              qam4_pmf(0.1, 0.1)};
        systems.push_back(std::move(sys));
    }
    for (const auto& sys : systems) validate_toy_system(sys);
    return systems;
}

PosteriorPair exact_posterior(const ToySystem& sys, const ComplexSequence& zhat) {
    const std::size_t J = sys.support.size();
    std::vector<double> logw(J, -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < J; ++j) {
        // log sum_z p_en(z|x_j) exp(loglik(zhat|z)), streamed over sequences.
        double mx = -std::numeric_limits<double>::infinity();
        std::vector<double> terms;
        terms.reserve(64);
        for_each_sequence(sys.n, sys.constellation.order, [&](const std::vector<int>& z) {
            const double pz = sequence_probability(sys.pmf_per_source[j], z);
            if (pz <= 0.0) return;
            const double t =
                std::log(pz) + log_likelihood(sequence_from_indices(z, sys.constellation), zhat,
                                              sys.sigma2);
            terms.push_back(t);
            mx = std::max(mx, t);
        });
        double sum = 0.0;
        for (double t : terms) sum += std::exp(t - mx);
        logw[j] = std::log(sys.support[j].prior) + mx + std::log(sum);
    }

    double mx = logw[0];
    for (double v : logw) mx = std::max(mx, v);
    PosteriorPair post;
    post.over_sources.resize(J);
    double norm = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        post.over_sources[j] = std::exp(logw[j] - mx);
        norm += post.over_sources[j];
    }
    for (auto& v : post.over_sources) v /= norm;
    post.over_labels.assign(sys.num_labels, 0.0);
    for (std::size_t j = 0; j < J; ++j) post.over_labels[sys.support[j].label] += post.over_sources[j];
    return post;
}

double toy_label_entropy(const ToySystem& sys) {
    std::vector<double> p(sys.num_labels, 0.0);
    for (const auto& s : sys.support) p[s.label] += s.prior;
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

double toy_source_entropy(const ToySystem& sys) {
    double h = 0.0;
    for (const auto& s : sys.support)
        if (s.prior > 0.0) h -= s.prior * std::log(s.prior);
    return h;
}

namespace {

struct JointDraw {
    int source = 0;
    ComplexSequence zhat;
};

JointDraw draw_joint(const ToySystem& sys, Rng& rng) {
    JointDraw d;
    const double u = rng.uniform();
    double acc = 0.0;
    d.source = static_cast<int>(sys.support.size()) - 1;
    for (std::size_t j = 0; j < sys.support.size(); ++j) {
        acc += sys.support[j].prior;
        if (u < acc) {
            d.source = static_cast<int>(j);
            break;
        }
    }
    const std::vector<int> z = sample_sequence(sys.pmf_per_source[d.source], rng);
    d.zhat = sequence_from_indices(z, sys.constellation);
    const double comp_std = std::sqrt(sys.sigma2 / 2.0);
    for (auto& v : d.zhat) v += cplx(comp_std * rng.normal(), comp_std * rng.normal());
    return d;
}

}  // namespace

MutualInfoEstimates mc_mutual_information(const ToySystem& sys, int num_draws,
                                          std::uint64_t seed) {
    validate_toy_system(sys);
    std::vector<double> label_prior(sys.num_labels, 0.0);
    for (const auto& s : sys.support) label_prior[s.label] += s.prior;

    Rng rng(seed);
    std::vector<double> sem(num_draws), src(num_draws);
    for (int i = 0; i < num_draws; ++i) {
        const JointDraw d = draw_joint(sys, rng);
        const PosteriorPair post = exact_posterior(sys, d.zhat);
        const int label = sys.support[d.source].label;
        sem[i] = std::log(std::max(post.over_labels[label], 1e-300)) - std::log(label_prior[label]);
        src[i] = std::log(std::max(post.over_sources[d.source], 1e-300)) -
                 std::log(sys.support[d.source].prior);
    }
    MutualInfoEstimates est;
    est.mi_semantic = mean_with_se(sem);
    est.mi_source = mean_with_se(src);
    double cov = 0.0;
    for (int i = 0; i < num_draws; ++i)
        cov += (sem[i] - est.mi_semantic.value) * (src[i] - est.mi_source.value);
    cov /= (num_draws - 1.0);
    est.cov_of_means = cov / num_draws;
    return est;
}

double MutualInfoEstimates::objective(double lambda) const {
    return mi_semantic.value + lambda * mi_source.value;
}

double MutualInfoEstimates::objective_std_error(double lambda) const {
    const double var = mi_semantic.std_error * mi_semantic.std_error +
                       lambda * lambda * mi_source.std_error * mi_source.std_error +
                       2.0 * lambda * cov_of_means;
    return std::sqrt(std::max(var, 0.0));
}

MCEstimate vilb_exact(const ToySystem& sys, const DecoderFn& decoder, double lambda,
                      int num_draws, std::uint64_t seed) {
    validate_toy_system(sys);
    Rng rng(seed);
    std::vector<double> samples(num_draws);
    for (int i = 0; i < num_draws; ++i) {
        const JointDraw d = draw_joint(sys, rng);
        const PosteriorPair truth = exact_posterior(sys, d.zhat);
        const PosteriorPair dec = decoder(d.zhat);
        double term_s = 0.0;
        for (int l = 0; l < sys.num_labels; ++l)
            term_s += truth.over_labels[l] * std::log(std::max(dec.over_labels[l], kProbFloor));
        double term_x = 0.0;
        for (std::size_t j = 0; j < sys.support.size(); ++j)
            term_x += truth.over_sources[j] * std::log(std::max(dec.over_sources[j], kProbFloor));
        samples[i] = term_s + lambda * term_x;
    }
    MCEstimate est = mean_with_se(samples);
    est.value += toy_label_entropy(sys) + lambda * toy_source_entropy(sys);
    return est;
}

namespace {

Mat softmax_rows_plain(const Mat& logits) {
    Mat q(logits.rows, logits.cols);
    for (int r = 0; r < logits.rows; ++r) {
        double mx = logits(r, 0);
        for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(r, c));
        double sum = 0.0;
        for (int c = 0; c < logits.cols; ++c) {
            q(r, c) = std::exp(logits(r, c) - mx);
            sum += q(r, c);
        }
        for (int c = 0; c < logits.cols; ++c) q(r, c) /= sum;
    }
    return q;
}

}  // namespace

Mat score_function_grad_exact(const Mat& logits, const SequenceLoss& h) {
    const Mat q = softmax_rows_plain(logits);
    Mat grad(logits.rows, logits.cols);
    for_each_sequence(logits.rows, logits.cols, [&](const std::vector<int>& z) {
        double pz = 1.0;
        for (int i = 0; i < logits.rows; ++i) pz *= q(i, z[i]);
        const double hz = h(z);
        for (int i = 0; i < logits.rows; ++i)
            for (int m = 0; m < logits.cols; ++m)
                grad(i, m) += pz * hz * ((z[i] == m ? 1.0 : 0.0) - q(i, m));
    });
    return grad;
}

Mat score_function_grad_mc(const Mat& logits, const SequenceLoss& h, int num_draws,
                           std::uint64_t seed, Mat* std_err) {
    const Mat q = softmax_rows_plain(logits);
    Mat mean(logits.rows, logits.cols);
    Mat m2(logits.rows, logits.cols);
    Rng rng(seed);
    std::vector<int> z(logits.rows);
    for (int d = 1; d <= num_draws; ++d) {
        for (int i = 0; i < logits.rows; ++i) z[i] = sample_categorical(&q(i, 0), logits.cols, rng);
        const double hz = h(z);
        for (int i = 0; i < logits.rows; ++i)
            for (int m = 0; m < logits.cols; ++m) {
                const double g = hz * ((z[i] == m ? 1.0 : 0.0) - q(i, m));
                const double delta = g - mean(i, m);
                mean(i, m) += delta / d;
                m2(i, m) += delta * (g - mean(i, m));
            }
    }
    if (std_err) {
        *std_err = Mat(logits.rows, logits.cols);
        for (int i = 0; i < m2.size(); ++i)
            std_err->data[i] = std::sqrt(m2.data[i] / (num_draws - 1.0) / num_draws);
    }
    return mean;
}

double expected_loss_enumerated(const Mat& logits, const SequenceLoss& h) {
    const Mat q = softmax_rows_plain(logits);
    double total = 0.0;
    for_each_sequence(logits.rows, logits.cols, [&](const std::vector<int>& z) {
        double pz = 1.0;
        for (int i = 0; i < logits.rows; ++i) pz *= q(i, z[i]);
        total += pz * h(z);
    });
    return total;
}

}  // namespace jcm
