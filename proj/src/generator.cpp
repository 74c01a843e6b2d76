#include "gmlab/generator.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace gmlab {

std::vector<TestFunction> test_function_battery(int dim) {
    if (dim < 1 || dim > 4)
        throw std::invalid_argument("test_function_battery: dim must be in [1, 4]");

    auto coeff = [dim](std::initializer_list<double> values) {
        VecD v(dim);
        int i = 0;
        for (double x : values) {
            if (i >= dim) break;
            v[i++] = x;
        }
        return v;
    };

    std::vector<TestFunction> battery;

    const VecD a = coeff({1.0, 0.5, -0.7, 0.3});
    battery.push_back({"affine",
                       [a](const VecD& x) { return a.dot(x) + 1.0; },
                       [a](const VecD&) { return a; },
                       [dim](const VecD&) { return MatD::Zero(dim, dim); }});

    battery.push_back({"quad_iso",
                       [](const VecD& x) { return x.squaredNorm(); },
                       [](const VecD& x) { return VecD(2.0 * x); },
                       [dim](const VecD&) { return MatD(2.0 * MatD::Identity(dim, dim)); }});

    const VecD q = coeff({1.0, 0.4, 1.6, 0.8});
    const VecD c = coeff({0.5, -0.25, 0.1, -0.4});
    battery.push_back({"quad_aniso",
                       [q, c](const VecD& x) { return x.dot(q.asDiagonal() * x) + c.dot(x); },
                       [q, c](const VecD& x) { return VecD(2.0 * (q.asDiagonal() * x) + c); },
                       [q](const VecD&) { return MatD(2.0 * MatD(q.asDiagonal())); }});

    for (const auto& [label, wave] :
         {std::pair<const char*, VecD>{"cos_k1", coeff({1.3, 0.7, -0.9, 0.5})},
          std::pair<const char*, VecD>{"cos_k2", coeff({2.1, -1.1, 0.6, 1.4})}}) {
        const VecD k = wave;
        battery.push_back({label,
                           [k](const VecD& x) { return std::cos(k.dot(x)); },
                           [k](const VecD& x) { return VecD(-std::sin(k.dot(x)) * k); },
                           [k](const VecD& x) {
                               return MatD(-std::cos(k.dot(x)) * (k * k.transpose()));
                           }});
    }

    const VecD center = coeff({0.8, -0.6, 0.4, 0.2});
    const double width2 = 1.0;  // bump width 1
    battery.push_back(
        {"bump",
         [center, width2](const VecD& x) {
             return std::exp(-0.5 * (x - center).squaredNorm() / width2);
         },
         [center, width2](const VecD& x) {
             const double b = std::exp(-0.5 * (x - center).squaredNorm() / width2);
             return VecD(-b / width2 * (x - center));
         },
         [center, width2, dim](const VecD& x) {
             const VecD d = x - center;
             const double b = std::exp(-0.5 * d.squaredNorm() / width2);
             return MatD(b * (d * d.transpose() / (width2 * width2) -
                              MatD::Identity(dim, dim) / width2));
         }});

    return battery;
}

ContinuousGenerator ContinuousGenerator::flow(VelocityFn u) {
    return {std::move(u), std::nullopt};
}

ContinuousGenerator ContinuousGenerator::diffusion(DiffusionCoeffFn sigma) {
    return {std::nullopt, std::move(sigma)};
}

ContinuousGenerator ContinuousGenerator::flow_diffusion(VelocityFn u, DiffusionCoeffFn sigma) {
    return {std::move(u), std::move(sigma)};
}

double apply_generator(const ContinuousGenerator& gen, const TestFunction& f,
                       const VecD& x, double t) {
    if (!gen.velocity && !gen.diffusion_coeff)
        throw std::invalid_argument("apply_generator: generator has no components");
    if (!x.allFinite()) throw NumericError("apply_generator: non-finite point");

    double out = 0.0;
    if (gen.velocity) {
        const VecD u = (*gen.velocity)(x, t);
        if (!u.allFinite()) throw NumericError("apply_generator: non-finite velocity");
        out += f.grad(x).dot(u);
    }
    if (gen.diffusion_coeff) {
        const double sigma = (*gen.diffusion_coeff)(x, t);
        if (!std::isfinite(sigma) || sigma < 0)
            throw NumericError("apply_generator: invalid diffusion coefficient");
        out += 0.5 * sigma * sigma * f.hessian(x).trace();
    }
    if (!std::isfinite(out)) throw NumericError("apply_generator: non-finite result");
    return out;
}

double apply_generator(const SuperposedGenerator& gen, const TestFunction& f,
                       const VecD& x, double t) {
    double out = 0.0;
    for (const auto& [w, part] : gen.parts) out += w * apply_generator(part, f, x, t);
    return out;
}

SuperposedGenerator superpose(std::vector<std::pair<double, ContinuousGenerator>> parts) {
    if (parts.empty()) throw std::invalid_argument("superpose: no parts");
    double sum = 0.0;
    for (const auto& [w, part] : parts) {
        if (w < 0) throw std::invalid_argument("superpose: negative weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("superpose: weights must sum to 1");
    return {std::move(parts)};
}

ContinuousGenerator flatten(const SuperposedGenerator& gen) {
    auto parts = std::make_shared<std::vector<std::pair<double, ContinuousGenerator>>>(gen.parts);
    VelocityFn u = [parts](const VecD& x, double t) {
        VecD out = VecD::Zero(x.size());
        for (const auto& [w, part] : *parts)
            if (part.velocity) out += w * (*part.velocity)(x, t);
        return out;
    };
    DiffusionCoeffFn sigma = [parts](const VecD& x, double t) {
        double var = 0.0;
        for (const auto& [w, part] : *parts)
            if (part.diffusion_coeff) {
                const double s = (*part.diffusion_coeff)(x, t);
                var += w * s * s;
            }
        return std::sqrt(var);
    };
    return ContinuousGenerator::flow_diffusion(std::move(u), std::move(sigma));
}

VecD marginal_from_conditional(const ConditionalVelocityFn& cond_velocity,
                               const PosteriorFn& posterior, const VecD& x, double t) {
    const auto atoms = posterior(x, t);
    if (atoms.empty()) throw std::invalid_argument("marginal_from_conditional: empty posterior");
    double sum = 0.0;
    for (const auto& [w, z] : atoms) sum += w;
    if (std::abs(sum - 1.0) > 1e-9)
        throw NumericError("marginal_from_conditional: posterior weights do not sum to 1");

    VecD out = VecD::Zero(x.size());
    for (const auto& [w, z] : atoms) out += w * cond_velocity(x, t, z);
    return out;
}

}  // namespace gmlab
