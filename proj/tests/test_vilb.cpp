#include <doctest.h>

#include <cmath>

#include "jcm/vilb.hpp"

using namespace jcm;

namespace {

Mat posterior_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Mat m(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int r = 0;
    for (const auto& row : rows) {
        int c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

}  // namespace

TEST_CASE("cross entropy closed forms") {
    const Mat uniform10 = Mat::full(1, 10, 0.1);
    CHECK(cross_entropy(uniform10, {3}) == doctest::Approx(std::log(10.0)));

    Mat onehot(1, 4);
    onehot(0, 2) = 1.0;
    CHECK(cross_entropy(onehot, {2}) <= 1e-11);

    // Posterior [0.9, 0.1] with the second label (index 1).
    CHECK(cross_entropy(posterior_rows({{0.9, 0.1}}), {1}) == doctest::Approx(-std::log(0.1)));

    CHECK_THROWS_AS(cross_entropy(uniform10, {10}), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(uniform10, {0, 1}), std::invalid_argument);
}

TEST_CASE("cross entropy floors vanishing posteriors") {
    CHECK(cross_entropy(posterior_rows({{1.0, 0.0}}), {1}) ==
          doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("mse closed forms") {
    CHECK(mse_batch(posterior_rows({{1.0, 0.0}}), posterior_rows({{1.0, 0.0}})) == 0.0);
    CHECK(mse_batch(posterior_rows({{1.0, 0.0}}), posterior_rows({{0.0, 0.0}})) ==
          doctest::Approx(1.0));
    const Mat x = Mat::full(1, 4, 0.5);
    const Mat xh = Mat::full(1, 4, 0.25);
    CHECK(mse_batch(x, xh) == doctest::Approx(0.25));
    CHECK_THROWS_AS(mse_batch(x, Mat::full(1, 3, 0.0)), std::invalid_argument);
}

TEST_CASE("batch loss composition") {
    const Mat post = posterior_rows({{0.8, 0.2}, {0.3, 0.7}});
    const std::vector<int> labels = {0, 1};
    const Mat x = Mat::full(2, 3, 0.5);
    Mat xh = x;
    xh(0, 0) = 0.8;

    LossConfig cfg{0.0, 2};
    CHECK(vilb_batch_loss(post, labels, x, xh, cfg) == doctest::Approx(cross_entropy(post, labels)));

    cfg.lambda = 2.5;
    CHECK(vilb_batch_loss(post, labels, x, xh, cfg) ==
          doctest::Approx(cross_entropy(post, labels) + 2.5 * mse_batch(x, xh)));

    // Perfect decoders on both heads.
    Mat perfect(2, 2);
    perfect(0, 0) = 1.0;
    perfect(1, 1) = 1.0;
    CHECK(vilb_batch_loss(perfect, labels, x, x, cfg) <= 1e-11);
}

TEST_CASE("loss is strictly increasing in lambda when mse is nonzero") {
    const Mat post = posterior_rows({{0.6, 0.4}});
    const Mat x = Mat::full(1, 2, 0.5);
    const Mat xh = Mat::full(1, 2, 0.3);
    double prev = -1.0;
    for (double lambda : {0.0, 0.5, 2.0, 30.0, 250.0}) {
        const double loss = vilb_batch_loss(post, {0}, x, xh, LossConfig{lambda, 2});
        CHECK(loss > prev);
        prev = loss;
    }
}

TEST_CASE("lambda table matches the reference settings") {
    // BPSK column.
    CHECK(table_lambda(Scheme::BPSK, 18.0) == 70.0);
    CHECK(table_lambda(Scheme::BPSK, 12.0) == 70.0);
    CHECK(table_lambda(Scheme::BPSK, 6.0) == 70.0);
    CHECK(table_lambda(Scheme::BPSK, 0.0) == 30.0);
    CHECK(table_lambda(Scheme::BPSK, -6.0) == 20.0);
    CHECK(table_lambda(Scheme::BPSK, -12.0) == 2.0);
    CHECK(table_lambda(Scheme::BPSK, -18.0) == 0.5);
    // QAM column.
    CHECK(table_lambda(Scheme::RectQAM, 18.0) == 270.0);
    CHECK(table_lambda(Scheme::RectQAM, 12.0) == 250.0);
    CHECK(table_lambda(Scheme::RectQAM, 6.0) == 250.0);
    CHECK(table_lambda(Scheme::RectQAM, 0.0) == 30.0);
    CHECK(table_lambda(Scheme::RectQAM, -6.0) == 20.0);
    CHECK(table_lambda(Scheme::RectQAM, -12.0) == 2.0);
    CHECK(table_lambda(Scheme::RectQAM, -18.0) == 0.5);
    // Unlisted SNRs resolve to nothing.
    CHECK(!table_lambda(Scheme::RectQAM, 3.0).has_value());
    CHECK(!table_lambda(Scheme::BPSK, 7.5).has_value());
}
