#include "gmlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gmlab {

namespace {

double mean_cross_distance(const MatD& a, const MatD& b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            acc += (a.row(i) - b.row(j)).norm();
    return acc / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return xs[i] < xs[j];
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double energy_distance(const MatD& xs, const MatD& ys) {
    if (xs.rows() < 1 || ys.rows() < 1 || xs.cols() != ys.cols())
        throw std::invalid_argument("energy_distance: bad sample sets");
    return 2.0 * mean_cross_distance(xs, ys) - mean_cross_distance(xs, xs) -
           mean_cross_distance(ys, ys);
}

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman_rho: need matching series of length >= 2");
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

Moments sample_moments(const MatD& rows) {
    if (rows.rows() < 2) throw std::invalid_argument("sample_moments: need >= 2 samples");
    Moments m;
    m.mean = rows.colwise().mean().transpose();
    m.variance = VecD::Zero(rows.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const VecD dev = rows.row(i).transpose() - m.mean;
        m.variance += dev.cwiseProduct(dev);
    }
    m.variance /= static_cast<double>(rows.rows() - 1);
    return m;
}

}  // namespace gmlab
