#include <doctest.h>

#include <cmath>
#include <vector>

#include "jcm/autodiff.hpp"
#include "jcm/oracle.hpp"
#include "jcm/rng.hpp"

using namespace jcm;

namespace {

TransitionPMF bpsk_pmf_rows(const std::vector<double>& q_plus) {
    Mat logits(static_cast<int>(q_plus.size()), 2);
    for (std::size_t i = 0; i < q_plus.size(); ++i) {
        logits(static_cast<int>(i), 0) = std::log(q_plus[i]);
        logits(static_cast<int>(i), 1) = std::log(1.0 - q_plus[i]);
    }
    return pmf_from_logits(logits, Scheme::BPSK);
}

// Two equiprobable antipodal sources over one BPSK use.
ToySystem antipodal_system(double sigma2, double q_correct = 1.0 - 1e-9) {
    ToySystem sys;
    sys.constellation = make_bpsk();
    sys.n = 1;
    sys.num_labels = 2;
    sys.sigma2 = sigma2;
    sys.support = {{{0.0}, 0, 0.5}, {{1.0}, 1, 0.5}};
    sys.pmf_per_source = {bpsk_pmf_rows({q_correct}), bpsk_pmf_rows({1.0 - q_correct})};
    return sys;
}

// Independent 1-D quadrature for the binary-input real AWGN mutual
// information: S uniform on {+1,-1}, Y = S + N(0, v), in nats.
double biawgn_mi_quadrature(double v) {
    const double lo = -1.0 - 10.0 * std::sqrt(v);
    const double hi = 1.0 + 10.0 * std::sqrt(v);
    const int steps = 20000;  // Simpson's rule, even count
    const double h = (hi - lo) / steps;
    const auto gauss = [v](double y, double mu) {
        return std::exp(-(y - mu) * (y - mu) / (2.0 * v)) / std::sqrt(2.0 * 3.14159265358979323846 * v);
    };
    const auto integrand = [&](double y) {
        const double p = 0.5 * gauss(y, 1.0) + 0.5 * gauss(y, -1.0);
        return p > 0.0 ? -p * std::log(p) : 0.0;
    };
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < steps; ++i) acc += integrand(lo + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
    const double h_y = acc * h / 3.0;
    const double h_y_given_s = 0.5 * std::log(2.0 * 3.14159265358979323846 * 2.718281828459045 * v);
    return h_y - h_y_given_s;
}

}  // namespace

TEST_CASE("toy system validation") {
    ToySystem sys = antipodal_system(1.0);
    CHECK_NOTHROW(validate_toy_system(sys));
    sys.support[0].prior = 0.7;
    CHECK_THROWS_AS(validate_toy_system(sys), std::invalid_argument);
    sys = antipodal_system(1.0);
    sys.support[1].x = sys.support[0].x;
    CHECK_THROWS_AS(validate_toy_system(sys), std::invalid_argument);
}

TEST_CASE("posterior is one-hot in the noiseless limit") {
    const ToySystem sys = antipodal_system(1e-12);
    const PosteriorPair post = exact_posterior(sys, {cplx(1.0, 0.0)});
    CHECK(post.over_labels[0] == doctest::Approx(1.0));
    CHECK(post.over_sources[0] == doctest::Approx(1.0));
    const PosteriorPair other = exact_posterior(sys, {cplx(-1.0, 0.0)});
    CHECK(other.over_labels[1] == doctest::Approx(1.0));
}

TEST_CASE("posterior approaches the prior as noise dominates") {
    ToySystem sys = antipodal_system(1e6);
    sys.support[0].prior = 0.3;
    sys.support[1].prior = 0.7;
    const PosteriorPair post = exact_posterior(sys, {cplx(0.4, -0.2)});
    CHECK(std::abs(post.over_sources[0] - 0.3) < 1e-3);
    CHECK(std::abs(post.over_sources[1] - 0.7) < 1e-3);
}

TEST_CASE("posterior is split on the decision boundary") {
    const ToySystem sys = antipodal_system(0.7);
    const PosteriorPair post = exact_posterior(sys, {cplx(0.0, 0.3)});
    CHECK(post.over_labels[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(post.over_labels[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("posterior rows sum to one") {
    const auto systems = reference_toy_systems();
    Rng rng(5);
    for (const auto& sys : systems)
        for (int trial = 0; trial < 50; ++trial) {
            ComplexSequence zhat(sys.n);
            for (auto& v : zhat)
                v = cplx(3.0 * (2.0 * rng.uniform() - 1.0), 3.0 * (2.0 * rng.uniform() - 1.0));
            const PosteriorPair post = exact_posterior(sys, zhat);
            double ls = 0.0, ss = 0.0;
            for (double v : post.over_labels) ls += v;
            for (double v : post.over_sources) ss += v;
            CHECK(std::abs(ls - 1.0) < 1e-12);
            CHECK(std::abs(ss - 1.0) < 1e-12);
        }
}

TEST_CASE("mutual information of a clean one-bit channel is ln 2") {
    // The encoder flips with probability 1e-9, so the deterministic deficit
    // from ln 2 is of that order; the Monte Carlo spread is zero here.
    const ToySystem sys = antipodal_system(1e-6);
    const MutualInfoEstimates mi = mc_mutual_information(sys, 20000, 31);
    CHECK(std::abs(mi.mi_semantic.value - std::log(2.0)) < 3.0 * mi.mi_semantic.std_error + 1e-7);
    CHECK(std::abs(mi.mi_source.value - std::log(2.0)) < 3.0 * mi.mi_source.std_error + 1e-7);
}

TEST_CASE("constant encoder carries no information") {
    ToySystem sys = antipodal_system(0.5);
    sys.pmf_per_source = {bpsk_pmf_rows({1.0 - 1e-9}), bpsk_pmf_rows({1.0 - 1e-9})};
    const MutualInfoEstimates mi = mc_mutual_information(sys, 20000, 32);
    CHECK(std::abs(mi.mi_semantic.value) < 3.0 * mi.mi_semantic.std_error + 1e-6);
}

TEST_CASE("monte carlo mutual information matches the quadrature oracle") {
    // Complex noise sigma2 = 1 puts variance 1/2 on the informative component.
    const ToySystem sys = antipodal_system(1.0);
    const MutualInfoEstimates mi = mc_mutual_information(sys, 60000, 33);
    const double reference = biawgn_mi_quadrature(0.5);
    CHECK(reference == doctest::Approx(0.5000721).epsilon(1e-4));  // frozen oracle value
    CHECK(std::abs(mi.mi_semantic.value - reference) < 3.0 * mi.mi_semantic.std_error);
}

TEST_CASE("vilb with exact posteriors meets the mutual-information objective") {
    const auto systems = reference_toy_systems();
    const double lambda = 1.0;
    for (std::size_t i = 0; i < systems.size(); ++i) {
        const ToySystem& sys = systems[i];
        const MutualInfoEstimates mi = mc_mutual_information(sys, 20000, 100 + i);
        const DecoderFn exact = [&sys](const ComplexSequence& zhat) {
            return exact_posterior(sys, zhat);
        };
        const MCEstimate vilb = vilb_exact(sys, exact, lambda, 20000, 200 + i);
        const double se = std::hypot(vilb.std_error, mi.objective_std_error(lambda));
        CHECK(std::abs(vilb.value - mi.objective(lambda)) < 3.0 * se);
    }
}

TEST_CASE("prior decoder gives a vanishing bound") {
    const ToySystem sys = antipodal_system(0.5);
    const DecoderFn prior_dec = [&sys](const ComplexSequence&) {
        PosteriorPair p;
        p.over_labels = {0.5, 0.5};
        p.over_sources = {0.5, 0.5};
        return p;
    };
    // E[sum_l p(l|z) log 0.5] + H(S) = 0, and the same for the source term.
    const MCEstimate vilb = vilb_exact(sys, prior_dec, 1.0, 20000, 44);
    CHECK(std::abs(vilb.value) < 1e-9);
}

TEST_CASE("perturbed decoders fall strictly below the exact-posterior bound") {
    const auto systems = reference_toy_systems();
    for (std::size_t i = 0; i < systems.size(); ++i) {
        const ToySystem& sys = systems[i];
        const DecoderFn exact = [&sys](const ComplexSequence& zhat) {
            return exact_posterior(sys, zhat);
        };
        const DecoderFn mixed = [&sys](const ComplexSequence& zhat) {
            PosteriorPair p = exact_posterior(sys, zhat);
            for (auto& v : p.over_labels) v = 0.5 * v + 0.5 / sys.num_labels;
            for (auto& v : p.over_sources) v = 0.5 * v + 0.5 / sys.support.size();
            return p;
        };
        const MCEstimate a = vilb_exact(sys, exact, 1.0, 20000, 300 + i);
        const MCEstimate b = vilb_exact(sys, mixed, 1.0, 20000, 300 + i);
        const double gap_se = std::hypot(a.std_error, b.std_error);
        CHECK(a.value - b.value > 3.0 * gap_se);
    }
}

TEST_CASE("score function gradient: exact vs finite differences") {
    Rng rng(55);
    Mat logits(2, 2);
    for (auto& v : logits.data) v = 2.0 * rng.uniform() - 1.0;
    const Constellation bpsk = make_bpsk();
    const SequenceLoss h = [&bpsk](const std::vector<int>& z) {
        const double s0 = bpsk.points[z[0]].real();
        const double s1 = bpsk.points[z[1]].real();
        const double t = 0.9 * s0 + 0.2 * s1 - 0.4;
        return t * t;
    };
    const Mat exact = score_function_grad_exact(logits, h);
    const double step = 1e-5;
    for (int i = 0; i < logits.size(); ++i) {
        const double orig = logits.data[i];
        logits.data[i] = orig + step;
        const double fp = expected_loss_enumerated(logits, h);
        logits.data[i] = orig - step;
        const double fm = expected_loss_enumerated(logits, h);
        logits.data[i] = orig;
        const double fd = (fp - fm) / (2.0 * step);
        const double denom = std::max({std::abs(fd), std::abs(exact.data[i]), 1e-9});
        CHECK(std::abs(fd - exact.data[i]) / denom < 1e-6);
    }
}

TEST_CASE("score function has zero mean on constant losses") {
    Rng rng(56);
    Mat logits(3, 4);
    for (auto& v : logits.data) v = 3.0 * (2.0 * rng.uniform() - 1.0);
    const Mat grad = score_function_grad_exact(logits, [](const std::vector<int>&) { return 7.7; });
    for (double g : grad.data) CHECK(std::abs(g) < 1e-10);
}

TEST_CASE("pathwise and score-function gradients agree in sign") {
    // Consistency screen between the (biased) Gumbel-Softmax pathwise
    // estimator and the exact score-function gradient, n=2, M=2, rho = 0.5.
    const double rho = 0.5;
    const Constellation bpsk = make_bpsk();
    Mat amps(2, 1);
    amps(0, 0) = bpsk.points[0].real();
    amps(1, 0) = bpsk.points[1].real();

    Rng rng(404);
    int agreements = 0, coords = 0;
    for (int config = 0; config < 25; ++config) {
        ParamStore store;
        Mat logits(2, 2);
        for (auto& v : logits.data) v = 1.5 * (2.0 * rng.uniform() - 1.0);
        store.add("logits", logits);
        const double a0 = 1.6 * rng.uniform() - 0.8;
        const double a1 = 1.6 * rng.uniform() - 0.8;

        // Pathwise: average the relaxed gradient over fresh Gumbel draws.
        const int draws = 4000;
        store.zero_grads();
        for (int d = 0; d < draws; ++d) {
            Mat tau(2, 2);
            for (auto& t : tau.data) t = rng.gumbel();
            ad::Tape tape;
            ad::Value lg = tape.param(store, "logits");
            ad::Value q = tape.row_softmax(lg);
            ad::Value qf = tape.clamp_min(q, kProbFloor);
            ad::Value pmf = tape.div_rows(qf, tape.row_sum(qf));
            ad::Value scores = tape.scale(tape.add_const(tape.log_elem(pmf), tau), 1.0 / rho);
            ad::Value v = tape.row_softmax(scores);
            ad::Value zt = tape.matmul_const(v, amps);  // 2x1 relaxed symbols
            Mat target(2, 1);
            target(0, 0) = a0;
            target(1, 0) = a1;
            ad::Value loss = tape.sum_all(tape.square(tape.sub(zt, tape.constant(target))));
            tape.backward(tape.scale(loss, 1.0 / draws));
        }
        const Mat pathwise = store.grad("logits");

        const SequenceLoss h = [&](const std::vector<int>& z) {
            const double d0 = bpsk.points[z[0]].real() - a0;
            const double d1 = bpsk.points[z[1]].real() - a1;
            return d0 * d0 + d1 * d1;
        };
        const Mat score = score_function_grad_exact(logits, h);

        for (int i = 0; i < 4; ++i) {
            ++coords;
            if ((pathwise.data[i] > 0) == (score.data[i] > 0)) ++agreements;
        }
    }
    CHECK(coords == 100);
    CHECK(agreements >= 90);
}

TEST_CASE("monte carlo score gradient brackets the exact one") {
    Rng rng(57);
    Mat logits(2, 2);
    for (auto& v : logits.data) v = 2.0 * rng.uniform() - 1.0;
    const SequenceLoss h = [](const std::vector<int>& z) {
        return 0.3 * z[0] + 1.7 * z[1] + 0.5 * z[0] * z[1];
    };
    const Mat exact = score_function_grad_exact(logits, h);
    Mat se;
    const Mat mc = score_function_grad_mc(logits, h, 100000, 58, &se);
    for (int i = 0; i < exact.size(); ++i)
        CHECK(std::abs(mc.data[i] - exact.data[i]) < 3.0 * std::max(se.data[i], 1e-12));
}
