#pragma once

// Held-out NLL comparison on a real-valued table: a full-covariance Gaussian
// baseline against TRDE and a two-component TERM mixture, all reported in
// original units on the validation split.

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "trde/datasets.hpp"
#include "trde/mixture.hpp"
#include "trde/trainer.hpp"

namespace power {

struct Settings {
    double subsample = 0.1;
    std::uint64_t seed = 1;
    int k_basis = 64;
    int rank = 8;
    trde::TrainConfig train;
};

struct Outcome {
    std::size_t rows = 0;
    double gaussian_nll = 0.0;
    double trde_nll = 0.0;
    double term_nll = 0.0;
    trde::TrainReport trde_report;
    trde::TrainReport term_report;
};

/// Shuffles with the seed and keeps a fraction of the rows.
inline trde::SampleMatrix subsample(const trde::SampleMatrix& raw, double fraction, std::uint64_t seed) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(raw.rows()));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto keep = std::max<Eigen::Index>(1, std::llround(fraction * static_cast<double>(raw.rows())));
    trde::SampleMatrix out(keep, raw.cols());
    for (Eigen::Index i = 0; i < keep; ++i) out.row(i) = raw.row(order[static_cast<std::size_t>(i)]);
    return out;
}

/// Maximum-likelihood Gaussian fitted on the train split (unit coordinates),
/// mean validation NLL in original units.
inline double gaussian_nll(const trde::Dataset& data) {
    const trde::SampleMatrix train = data.split(trde::Split::train);
    const trde::SampleMatrix val = data.split(trde::Split::validation);
    const Eigen::RowVectorXd mean = train.colwise().mean();
    const Eigen::MatrixXd centered = train.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(train.rows());
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("gaussian baseline: covariance is not positive definite");
    }
    const Eigen::MatrixXd l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    const double dims = static_cast<double>(data.dims());
    double total = 0.0;
    for (Eigen::Index i = 0; i < val.rows(); ++i) {
        const Eigen::VectorXd r = (val.row(i) - mean).transpose();
        const double maha = llt.matrixL().solve(r).squaredNorm();
        total += 0.5 * (dims * std::log(2.0 * std::numbers::pi) + logdet + maha);
    }
    return total / static_cast<double>(val.rows()) + data.log_jacobian();
}

inline Outcome run(const trde::SampleMatrix& raw, const Settings& s) {
    using namespace trde;
    Outcome out;
    const SampleMatrix rows = subsample(raw, s.subsample, s.seed);
    out.rows = static_cast<std::size_t>(rows.rows());
    const Dataset data = standardize(rows, {}, s.seed + 1, "power");
    out.gaussian_nll = gaussian_nll(data);

    const int dims = data.dims();
    auto train = s.train;
    train.seed = s.seed + 2;
    auto single = TermModel::random(dims, s.k_basis, s.rank, enumerate_circular(dims, 1, s.seed), s.seed + 3);
    out.trde_report = fit(single, data, train);
    out.trde_nll = evaluate_nll(single, data, Split::validation, train.threads).mean;

    auto pair = TermModel::random(dims, s.k_basis, s.rank, enumerate_circular(dims, 2, s.seed), s.seed + 4);
    out.term_report = fit(pair, data, train);
    out.term_nll = evaluate_nll(pair, data, Split::validation, train.threads).mean;
    return out;
}

}  // namespace power
