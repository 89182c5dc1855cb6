#include "spill/dgp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "spill/qvar.hpp"

namespace spill {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::size_t kBurnIn = 200;

// All randomness flows through raw engine words so draws are stable across
// standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { // (0,1)
        const std::uint64_t bits = eng_() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Marsaglia-Tsang; shape > 0, unit scale.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_square(double df) { return 2.0 * gamma(df / 2.0); }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

MatrixXd psd_sqrt(const MatrixXd& sigma) {
    Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    // semidefinite fallback
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

double companion_radius(const std::vector<MatrixXd>& B, Index n) {
    QvarModel m = model_from_parameters(B, MatrixXd::Identity(n, n));
    return stability_check(m);
}

void check_regime(const std::vector<MatrixXd>& B, const MatrixXd& sigma, Index n, int p,
                  const char* label) {
    if (static_cast<int>(B.size()) != p)
        throw SpecError(std::string("dgp: ") + label + " must provide p lag matrices");
    for (const auto& Bi : B)
        if (Bi.rows() != n || Bi.cols() != n)
            throw SpecError(std::string("dgp: ") + label + " lag matrix must be n x n");
    if (sigma.rows() != n || sigma.cols() != n)
        throw SpecError(std::string("dgp: ") + label + " sigma must be n x n");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, sigma.trace()))
        throw SpecError(std::string("dgp: ") + label + " sigma is not positive semidefinite");
    const double radius = companion_radius(B, n);
    if (radius >= 1.0)
        throw SpecError(std::string("dgp: ") + label + " companion spectral radius " +
                        std::to_string(radius) + " >= 1");
}

} // namespace

void validate_spec(const DgpSpec& spec) {
    if (spec.n < 1 || spec.p < 1) throw SpecError("dgp: need n >= 1 and p >= 1");
    if (spec.T < 2) throw SpecError("dgp: need T >= 2");
    check_regime(spec.B, spec.sigma, spec.n, spec.p, "base regime");
    if (spec.dist == DgpSpec::Dist::StudentT && !(spec.df > 2.0))
        throw SpecError("dgp: StudentT needs df > 2");
    if (spec.regime_switch) {
        check_regime(spec.regime_switch->B, spec.regime_switch->sigma, spec.n, spec.p,
                     "post-switch regime");
        if (spec.regime_switch->switch_time >= spec.T)
            throw SpecError("dgp: switch_time beyond sample length");
    }
}

DeviationPanel simulate(const DgpSpec& spec) {
    validate_spec(spec);
    const Index n = spec.n;
    const int p = spec.p;
    Rng rng(spec.seed);

    const MatrixXd L0 = psd_sqrt(spec.sigma);
    MatrixXd L1;
    if (spec.regime_switch) L1 = psd_sqrt(spec.regime_switch->sigma);

    // StudentT: common chi-square mixing draw per period, variance-rescaled
    // so the innovation covariance stays sigma.
    const bool student = spec.dist == DgpSpec::Dist::StudentT;
    const double t_scale = student ? std::sqrt((spec.df - 2.0) / spec.df) : 1.0;

    const std::size_t total = kBurnIn + spec.T;
    MatrixXd Y = MatrixXd::Zero(static_cast<Index>(total + static_cast<std::size_t>(p)), n);
    VectorXd g(n);
    for (std::size_t t = 0; t < total; ++t) {
        const Index row = static_cast<Index>(t) + p;
        const bool post = spec.regime_switch && t >= kBurnIn + spec.regime_switch->switch_time;
        const auto& B = post ? spec.regime_switch->B : spec.B;
        const MatrixXd& L = post ? L1 : L0;

        for (Index j = 0; j < n; ++j) g[j] = rng.normal();
        VectorXd eps = L * g;
        if (student) eps *= std::sqrt(spec.df / rng.chi_square(spec.df)) * t_scale;

        VectorXd y = eps;
        for (int i = 1; i <= p; ++i) y += B[static_cast<std::size_t>(i - 1)] * Y.row(row - i).transpose();
        Y.row(row) = y.transpose();
    }

    DeviationPanel panel;
    panel.assets.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j)
        panel.assets.push_back({"A" + std::to_string(j + 1), AssetCategory::FiatBacked});
    panel.diffs = Y.bottomRows(static_cast<Index>(spec.T));

    // Synthetic daily grid; deviations accumulate the simulated changes.
    const std::int64_t base = parse_instant("2020-01-01");
    panel.diff_timestamps.reserve(spec.T);
    panel.dev_timestamps.reserve(spec.T);
    panel.deviations.resize(static_cast<Index>(spec.T), n);
    Eigen::RowVectorXd level = Eigen::RowVectorXd::Zero(n);
    for (std::size_t t = 0; t < spec.T; ++t) {
        level += panel.diffs.row(static_cast<Index>(t));
        panel.deviations.row(static_cast<Index>(t)) = level;
        const std::int64_t ts = base + static_cast<std::int64_t>(t + 1) * 86400;
        panel.diff_timestamps.push_back(ts);
        panel.dev_timestamps.push_back(ts);
    }
    return panel;
}

FevdMatrix theoretical_fevd(const DgpSpec& spec, int horizon) {
    if (spec.regime_switch)
        throw SpecError("theoretical_fevd: defined for single-regime specs only");
    validate_spec(spec);
    if (horizon < 1) throw DomainError("theoretical_fevd: horizon must be >= 1");

    const Index n = spec.n;
    const int p = spec.p;

    // Direct evaluation on the true parameters; deliberately independent of
    // the estimation-side decomposition code.
    std::vector<MatrixXd> A;
    A.reserve(static_cast<std::size_t>(horizon));
    A.push_back(MatrixXd::Identity(n, n));
    for (int j = 1; j < horizon; ++j) {
        MatrixXd Aj = MatrixXd::Zero(n, n);
        for (int i = 1; i <= std::min(j, p); ++i)
            Aj += spec.B[static_cast<std::size_t>(i - 1)] * A[static_cast<std::size_t>(j - i)];
        A.push_back(std::move(Aj));
    }

    FevdMatrix out;
    out.tau = QuantileLevel(0.5);
    out.horizon = horizon;
    for (Index j = 0; j < n; ++j) out.asset_order.push_back("A" + std::to_string(j + 1));
    out.raw.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        double den = 0.0;
        for (int h = 0; h < horizon; ++h)
            den += (A[static_cast<std::size_t>(h)].row(j) * spec.sigma)
                       .dot(A[static_cast<std::size_t>(h)].row(j));
        for (Index k = 0; k < n; ++k) {
            if (!(spec.sigma(k, k) > 0.0))
                throw DegenerateVarianceError("theoretical_fevd: sigma has a zero diagonal");
            double num = 0.0;
            for (int h = 0; h < horizon; ++h) {
                const double impact = A[static_cast<std::size_t>(h)].row(j) * spec.sigma.col(k);
                num += impact * impact;
            }
            out.raw(j, k) = num / spec.sigma(k, k) / den;
        }
    }
    out.normalized.resize(n, n);
    for (Index j = 0; j < n; ++j) out.normalized.row(j) = out.raw.row(j) / out.raw.row(j).sum();
    return out;
}

} // namespace spill
