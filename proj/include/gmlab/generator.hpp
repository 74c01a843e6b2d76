#ifndef GMLAB_GENERATOR_HPP
#define GMLAB_GENERATOR_HPP

#include "gmlab/common.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gmlab {

// Test function with analytic derivatives; the pairing <p_t, f> over a set of
// these is the observable through which distributions are compared.
struct TestFunction {
    std::string name;
    std::function<double(const VecD&)> eval;
    std::function<VecD(const VecD&)> grad;
    std::function<MatD(const VecD&)> hessian;  // dense, d <= 4
};

// Fixed battery: affine, quadratics, cos(k.x), Gaussian bump. Sufficient to
// detect moment and localized-density errors at desk scale.
std::vector<TestFunction> test_function_battery(int dim);

using VelocityFn = std::function<VecD(const VecD&, double)>;
using DiffusionCoeffFn = std::function<double(const VecD&, double)>;  // sigma_t(x) >= 0

// Markov generator on R^d as a bundle of flow and diffusion components
// (the jump component lives on finite state spaces; see discrete.hpp).
// Action on a test function:
//   L f(x) = grad f(x) . u_t(x) + 1/2 sigma_t(x)^2 * trace(hess f(x))
// with the scalar isotropic (Laplacian) reading of the diffusion term.
struct ContinuousGenerator {
    std::optional<VelocityFn> velocity;
    std::optional<DiffusionCoeffFn> diffusion_coeff;

    static ContinuousGenerator flow(VelocityFn u);
    static ContinuousGenerator diffusion(DiffusionCoeffFn sigma);
    static ContinuousGenerator flow_diffusion(VelocityFn u, DiffusionCoeffFn sigma);
};

// Convex combination of generators; weights >= 0 summing to 1.
struct SuperposedGenerator {
    std::vector<std::pair<double, ContinuousGenerator>> parts;
};

double apply_generator(const ContinuousGenerator& gen, const TestFunction& f,
                       const VecD& x, double t);
double apply_generator(const SuperposedGenerator& gen, const TestFunction& f,
                       const VecD& x, double t);

SuperposedGenerator superpose(std::vector<std::pair<double, ContinuousGenerator>> parts);

// Action-equivalent single generator: velocity sum(w u_i), squared coefficient
// sum(w sigma_i^2). Used to simulate a superposition as one process.
ContinuousGenerator flatten(const SuperposedGenerator& gen);

using ConditionalVelocityFn = std::function<VecD(const VecD&, double, int)>;
// Finite posterior over conditioning atoms: (weight, atom index) pairs.
using PosteriorFn = std::function<std::vector<std::pair<double, int>>(const VecD&, double)>;

// Marginal velocity as the posterior expectation of conditional velocities:
// sum_z w_z(x, t) u_t(x | z). Weights must sum to 1 within 1e-9.
VecD marginal_from_conditional(const ConditionalVelocityFn& cond_velocity,
                               const PosteriorFn& posterior, const VecD& x, double t);

}  // namespace gmlab

#endif
