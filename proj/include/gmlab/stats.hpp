#ifndef GMLAB_STATS_HPP
#define GMLAB_STATS_HPP

#include "gmlab/common.hpp"

#include <vector>

namespace gmlab {

// Energy distance E-statistic between two sample sets (rows = points):
// 2 E|X - Y| - E|X - X'| - E|Y - Y'|.
double energy_distance(const MatD& xs, const MatD& ys);

// Spearman rank correlation; ties get average ranks.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

struct Moments {
    VecD mean;
    VecD variance;  // per coordinate
};

Moments sample_moments(const MatD& rows);

}  // namespace gmlab

#endif
