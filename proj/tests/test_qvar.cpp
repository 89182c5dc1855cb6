#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "spill/dgp.hpp"
#include "spill/qvar.hpp"

using namespace spill;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd white_noise(int T, int n, std::uint64_t seed) {
    DgpSpec spec;
    spec.n = n;
    spec.p = 1;
    spec.B = {MatrixXd::Zero(n, n)};
    spec.sigma = MatrixXd::Identity(n, n);
    spec.T = static_cast<std::size_t>(T);
    spec.seed = seed;
    return simulate(spec).diffs;
}

} // namespace

TEST_CASE("white-noise series yield near-zero lag coefficients") {
    const MatrixXd Y = white_noise(2000, 2, 99);
    const QvarModel model = fit_qvar(Y, {"A1", "A2"}, QvarSpec{1, QuantileLevel(0.5)});
    CHECK(model.B[0].cwiseAbs().maxCoeff() < 0.05);
    CHECK(model.all_converged);
}

TEST_CASE("known autoregressive dynamics are recovered at the median") {
    DgpSpec spec;
    spec.n = 2;
    spec.p = 1;
    spec.B = {0.5 * MatrixXd::Identity(2, 2)};
    spec.sigma = 0.01 * MatrixXd::Identity(2, 2);
    spec.T = 20000; // median-slope noise is ~1.7/sqrt(T) per entry
    spec.seed = 7;
    const DeviationPanel panel = simulate(spec);
    const QvarModel model = fit_qvar(panel, QvarSpec{1, QuantileLevel(0.5)});
    CHECK((model.B[0] - 0.5 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("insufficient observations are rejected") {
    const MatrixXd Y = MatrixXd::Random(5, 2);
    CHECK_THROWS_AS(fit_qvar(Y, {"a", "b"}, QvarSpec{2, QuantileLevel(0.5)}),
                    InsufficientDataError);
}

TEST_CASE("constant column is reported with its equation") {
    MatrixXd Y = white_noise(60, 2, 5);
    Y.col(1).setConstant(0.0);
    try {
        fit_qvar(Y, {"a", "b"}, QvarSpec{1, QuantileLevel(0.5)});
        FAIL("expected SingularDesignError");
    } catch (const SingularDesignError& e) {
        CHECK(std::string(e.what()).find("equation") != std::string::npos);
    }
}

TEST_CASE("sigma is the symmetrized sample covariance of the residuals") {
    const MatrixXd Y = white_noise(400, 3, 21);
    const QvarModel model = fit_qvar(Y, {"a", "b", "c"}, QvarSpec{1, QuantileLevel(0.25)});
    const Eigen::RowVectorXd mean = model.residuals.colwise().mean();
    const MatrixXd centered = model.residuals.rowwise() - mean;
    const MatrixXd expected =
        centered.transpose() * centered / static_cast<double>(model.residuals.rows() - 1);
    CHECK((model.sigma - (expected + expected.transpose()) / 2.0).cwiseAbs().maxCoeff() <=
          1e-14);
    CHECK((model.sigma - model.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(model.sigma);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * model.sigma.trace());
}

TEST_CASE("residual columns satisfy the quantile coverage bounds") {
    const MatrixXd Y = white_noise(500, 2, 31);
    for (double tau : {0.05, 0.5, 0.95}) {
        const QvarModel model = fit_qvar(Y, {"a", "b"}, QvarSpec{1, QuantileLevel(tau)});
        const double m = static_cast<double>(model.residuals.rows());
        const double k = 1.0 + 2.0; // intercept + n*p regressors
        for (Eigen::Index j = 0; j < 2; ++j) {
            const double tol = 1e-7 * (1.0 + Y.col(j).cwiseAbs().maxCoeff());
            int neg = 0, nonpos = 0;
            for (Eigen::Index t = 0; t < model.residuals.rows(); ++t) {
                if (model.residuals(t, j) < -tol) ++neg;
                if (model.residuals(t, j) <= tol) ++nonpos;
            }
            CHECK(neg / m <= tau + 1e-12);
            CHECK(nonpos / m >= tau - k / m - 1e-12);
        }
    }
}

TEST_CASE("permuting the asset order permutes the model") {
    const MatrixXd Y = white_noise(300, 3, 43);
    MatrixXd Yp(Y.rows(), 3);
    const int fwd[3] = {2, 0, 1}; // Yp column c holds Y column fwd[c]
    for (int c = 0; c < 3; ++c) Yp.col(c) = Y.col(fwd[c]);

    const QvarSpec spec{1, QuantileLevel(0.5)};
    const QvarModel base = fit_qvar(Y, {"a", "b", "c"}, spec);
    const QvarModel perm = fit_qvar(Yp, {"c", "a", "b"}, spec);

    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            CHECK(base.B[0](fwd[r], fwd[c]) == doctest::Approx(perm.B[0](r, c)).epsilon(1e-8));
            CHECK(base.sigma(fwd[r], fwd[c]) ==
                  doctest::Approx(perm.sigma(r, c)).epsilon(1e-8));
        }
}

TEST_CASE("stability_check computes the companion spectral radius") {
    SUBCASE("diagonal VAR(1)") {
        const QvarModel m =
            model_from_parameters({0.5 * MatrixXd::Identity(3, 3)}, MatrixXd::Identity(3, 3));
        CHECK(stability_check(m) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("zero dynamics") {
        const QvarModel m =
            model_from_parameters({MatrixXd::Zero(2, 2)}, MatrixXd::Identity(2, 2));
        CHECK(stability_check(m) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("scalar VAR(2) against the quadratic-root oracle") {
        MatrixXd B1(1, 1), B2(1, 1);
        B1 << 0.5;
        B2 << 0.3;
        const QvarModel m = model_from_parameters({B1, B2}, MatrixXd::Identity(1, 1));
        // companion eigenvalues solve x^2 - 0.5 x - 0.3 = 0
        const double root = (0.5 + std::sqrt(0.25 + 4.0 * 0.3)) / 2.0;
        CHECK(stability_check(m) == doctest::Approx(root).epsilon(1e-12));
    }
}

TEST_CASE("median QVAR tracks least squares on a Gaussian VAR") {
    DgpSpec spec;
    spec.n = 3;
    spec.p = 1;
    MatrixXd B(3, 3);
    B << 0.4, 0.1, 0.0, 0.05, 0.3, 0.1, 0.0, 0.1, 0.35;
    spec.B = {B};
    spec.sigma = MatrixXd::Identity(3, 3);
    spec.T = 3000;
    spec.seed = 77;
    const MatrixXd Y = simulate(spec).diffs;
    const QvarModel q = fit_qvar(Y, {"a", "b", "c"}, QvarSpec{1, QuantileLevel(0.5)});
    const auto ols = oracles::ols_var(Y, 1);
    CHECK((q.B[0] - ols[0]).cwiseAbs().maxCoeff() < 0.06);
}
