#ifndef GMLAB_MLP_HPP
#define GMLAB_MLP_HPP

#include "gmlab/common.hpp"
#include "gmlab/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gmlab {

// Minimal feed-forward network for field regression: input (x, t) with t
// embedded as (t, sin 2 pi t, cos 2 pi t), tanh hidden layers, linear output
// of dimension d. Carries hand-written reverse-mode parameter gradients.
class Mlp {
public:
    // sizes = [input, hidden..., output]; input must be field_dim + 3.
    static Mlp create(int field_dim, const std::vector<int>& hidden, std::uint64_t seed);

    int field_dim() const { return sizes_.back(); }
    int input_dim() const { return sizes_.front(); }
    const std::vector<int>& sizes() const { return sizes_; }

    // Raw forward pass on an already-embedded input.
    VecD forward(const VecD& input) const;

    // Field evaluation: embeds (x, t) and runs forward.
    VecD eval_field(const VecD& x, double t) const;
    static VecD embed(const VecD& x, double t);

    struct Workspace {
        std::vector<VecD> activations;  // activations[0] = input, one per layer after
    };
    VecD forward(const VecD& input, Workspace& ws) const;

    // Accumulates parameter gradients for dL/d(output) into grads (same
    // shapes as the parameters; caller zero-initializes via zero_gradients).
    struct Gradients {
        std::vector<MatD> weights;
        std::vector<VecD> biases;
    };
    Gradients zero_gradients() const;
    void backward(const Workspace& ws, const VecD& dl_dout, Gradients& grads) const;

    // Flat parameter view in layer order (W row-major, then b, per layer);
    // the checkpoint format and finite-difference checks use it.
    VecD flatten_parameters() const;
    void set_parameters(const VecD& flat);
    static VecD flatten_gradients(const Gradients& grads);
    std::size_t parameter_count() const;

    void save(const std::filesystem::path& path) const;
    static Mlp load(const std::filesystem::path& path);

    std::vector<MatD> weights;
    std::vector<VecD> biases;

private:
    std::vector<int> sizes_;
};

}  // namespace gmlab

#endif
