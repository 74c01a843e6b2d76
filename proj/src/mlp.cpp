#include "gmlab/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace gmlab {

namespace {

constexpr char kMagic[4] = {'G', 'M', 'L', 'B'};
constexpr std::uint32_t kCheckpointVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

Mlp Mlp::create(int field_dim, const std::vector<int>& hidden, std::uint64_t seed) {
    if (field_dim < 1) throw std::invalid_argument("Mlp: field_dim must be >= 1");
    for (int h : hidden)
        if (h < 1) throw std::invalid_argument("Mlp: hidden widths must be >= 1");

    Mlp net;
    net.sizes_.push_back(field_dim + 3);
    for (int h : hidden) net.sizes_.push_back(h);
    net.sizes_.push_back(field_dim);

    CounterRng rng(seed, /*stream=*/0x1);
    for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
        const int rows = net.sizes_[l + 1];
        const int cols = net.sizes_[l];
        const double bound = std::sqrt(6.0 / (rows + cols));  // Xavier uniform
        MatD w(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                w(i, j) = bound * (2.0 * rng.next_uniform() - 1.0);
        net.weights.push_back(std::move(w));
        net.biases.push_back(VecD::Zero(rows));
    }
    return net;
}

VecD Mlp::embed(const VecD& x, double t) {
    VecD input(x.size() + 3);
    input.head(x.size()) = x;
    input[x.size()] = t;
    input[x.size() + 1] = std::sin(2.0 * M_PI * t);
    input[x.size() + 2] = std::cos(2.0 * M_PI * t);
    return input;
}

VecD Mlp::forward(const VecD& input) const {
    VecD h = input;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        h = weights[l] * h + biases[l];
        if (l + 1 < weights.size()) h = h.array().tanh();
    }
    return h;
}

VecD Mlp::eval_field(const VecD& x, double t) const { return forward(embed(x, t)); }

VecD Mlp::forward(const VecD& input, Workspace& ws) const {
    ws.activations.assign(1, input);
    VecD h = input;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        h = weights[l] * h + biases[l];
        if (l + 1 < weights.size()) h = h.array().tanh();
        ws.activations.push_back(h);
    }
    return h;
}

Mlp::Gradients Mlp::zero_gradients() const {
    Gradients g;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        g.weights.push_back(MatD::Zero(weights[l].rows(), weights[l].cols()));
        g.biases.push_back(VecD::Zero(biases[l].size()));
    }
    return g;
}

void Mlp::backward(const Workspace& ws, const VecD& dl_dout, Gradients& grads) const {
    const std::size_t layers = weights.size();
    VecD delta = dl_dout;
    for (std::size_t l = layers; l-- > 0;) {
        // activations[l] feeds layer l; activations[l+1] is its output.
        if (l + 1 < layers) {
            const VecD& act = ws.activations[l + 1];  // tanh output
            delta = delta.cwiseProduct(VecD(1.0 - act.array().square()));
        }
        grads.weights[l] += delta * ws.activations[l].transpose();
        grads.biases[l] += delta;
        if (l > 0) delta = weights[l].transpose() * delta;
    }
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += static_cast<std::size_t>(weights[l].size()) + biases[l].size();
    return n;
}

VecD Mlp::flatten_parameters() const {
    VecD flat(parameter_count());
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights[l].cols(); ++j) flat[at++] = weights[l](i, j);
        for (Eigen::Index i = 0; i < biases[l].size(); ++i) flat[at++] = biases[l][i];
    }
    return flat;
}

void Mlp::set_parameters(const VecD& flat) {
    if (static_cast<std::size_t>(flat.size()) != parameter_count())
        throw std::invalid_argument("Mlp::set_parameters: size mismatch");
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights[l].cols(); ++j) weights[l](i, j) = flat[at++];
        for (Eigen::Index i = 0; i < biases[l].size(); ++i) biases[l][i] = flat[at++];
    }
}

VecD Mlp::flatten_gradients(const Gradients& grads) {
    std::size_t n = 0;
    for (std::size_t l = 0; l < grads.weights.size(); ++l)
        n += static_cast<std::size_t>(grads.weights[l].size()) + grads.biases[l].size();
    VecD flat(n);
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        for (Eigen::Index i = 0; i < grads.weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < grads.weights[l].cols(); ++j)
                flat[at++] = grads.weights[l](i, j);
        for (Eigen::Index i = 0; i < grads.biases[l].size(); ++i) flat[at++] = grads.biases[l][i];
    }
    return flat;
}

void Mlp::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("Mlp::save: cannot open " + path.string());
    os.write(kMagic, 4);
    write_u32(os, kCheckpointVersion);
    write_u32(os, static_cast<std::uint32_t>(sizes_.size()));
    for (int s : sizes_) write_u32(os, static_cast<std::uint32_t>(s));
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < weights[l].cols(); ++j) write_f64(os, weights[l](i, j));
        for (Eigen::Index i = 0; i < biases[l].size(); ++i) write_f64(os, biases[l][i]);
    }
    if (!os) throw std::runtime_error("Mlp::save: write failed for " + path.string());
}

Mlp Mlp::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("Mlp::load: cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("Mlp::load: bad magic in " + path.string());
    const std::uint32_t version = read_u32(is);
    if (version != kCheckpointVersion)
        throw std::runtime_error("Mlp::load: unsupported checkpoint version");
    const std::uint32_t n_sizes = read_u32(is);
    if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("Mlp::load: bad layer list");

    Mlp net;
    net.sizes_.resize(n_sizes);
    for (auto& s : net.sizes_) s = static_cast<int>(read_u32(is));
    if (net.sizes_.front() != net.sizes_.back() + 3)
        throw std::runtime_error("Mlp::load: input dim does not match field dim + 3");
    for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
        MatD w(net.sizes_[l + 1], net.sizes_[l]);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = read_f64(is);
        VecD b(net.sizes_[l + 1]);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = read_f64(is);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    if (!is) throw std::runtime_error("Mlp::load: truncated checkpoint");
    return net;
}

}  // namespace gmlab
