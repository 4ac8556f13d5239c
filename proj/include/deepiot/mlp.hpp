#pragma once

#include "deepiot/channel.hpp"

#include <span>
#include <string>
#include <vector>

namespace deepiot {

/// Fully connected network with rectifier hidden layers and identity output.
/// Parameters live in one flat vector (per layer: row-major weights, then
/// biases) so optimizers, checkpoints and gradient checks all share one view.
class Mlp {
public:
    explicit Mlp(std::vector<int> widths);

    /// Fan-in scaled uniform initialization, deterministic under the rng.
    static Mlp random_init(std::vector<int> widths, Rng& rng);

    int input_width() const { return widths_.front(); }
    int output_width() const { return widths_.back(); }
    const std::vector<int>& widths() const { return widths_; }

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    size_t parameter_count() const { return params_.size(); }

    /// Holds the layer inputs needed to run the backward pass.
    struct Workspace {
        std::vector<std::vector<double>> layer_in; // input to each affine layer
    };

    std::vector<double> forward(std::span<const double> x) const;
    std::vector<double> forward(std::span<const double> x, Workspace& ws) const;

    /// Rows of X are independent samples (n x input_width, row-major).
    std::vector<double> forward_batch(const std::vector<double>& X, int n) const;

    /// Accumulate dL/dparams into grad given dL/dy from one sample; grad must
    /// have parameter_count() entries. Returns dL/dx if dx is non-null.
    void backward(const Workspace& ws, std::span<const double> upstream, std::vector<double>& grad,
                  std::vector<double>* dx = nullptr) const;

    bool finite() const;

    void save(const std::string& path) const;
    static Mlp load(const std::string& path);

private:
    std::vector<int> widths_;
    std::vector<double> params_;
    std::vector<size_t> layer_offsets_; // offset of each layer's weight block

    friend struct MlpLayout;
};

/// Plain gradient descent; rejects non-finite gradients.
void sgd_step(Mlp& net, const std::vector<double>& grad, double step_size);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

void adam_step(Mlp& net, AdamState& state, const std::vector<double>& grad, double step_size);

/// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> v);

/// Softmax over the unmasked entries; masked entries get exactly zero.
/// Throws if everything is masked.
std::vector<double> masked_softmax(std::span<const double> v, std::span<const char> masked);

} // namespace deepiot
