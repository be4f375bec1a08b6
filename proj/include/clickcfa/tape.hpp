#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "clickcfa/tensor.hpp"

namespace clickcfa::nn {

// Reverse-mode autodiff over a flat tape. Values and adjoints live in arena
// buffers; nodes are appended in topological order, so backward is a single
// reverse sweep restricted to the ancestors of the requested loss node.
//
// The GRU time step is a single fused op (one node per step) with a
// hand-written backward; everything else composes from small generic ops.
// The Combine op builds a lookahead parameter w_hat = base + coef * sum_n
// s_n * G_n where the G_n are constant per-sample gradients and the s_n are
// tape scalars, which is what lets a meta loss evaluated at w_hat push exact
// gradients back into the weighting network.

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

struct GruStepVars {
    Var wz, uz, bz, wr, ur, br, wh, uh, bh;
};

class Tape {
public:
    void reset();

    Var constant(std::span<const double> v);
    Var constant1(double v);
    // copies current values; flat_offset locates the gradient slice for harvest
    Var param(std::span<const double> values, std::size_t flat_offset);

    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var sigmoid(Var a);
    Var tanh_(Var a);
    Var relu(Var a);
    Var softmax(Var a);
    // y = W x + b, W row-major (len(b) x len(x))
    Var affine(Var w, Var x, Var b);
    // standard GRU recurrence, one fused node per time step
    Var gru_step(const GruStepVars& p, std::span<const double> x, Var h_prev);
    // valid 1-D convolution over time; input (in_ch x t) row-major, zero-padded
    // on the right to at least kw columns
    Var conv1d(Var kernel, Var bias, std::span<const double> input, std::size_t in_ch,
               std::size_t t, std::size_t kw);
    Var maxpool_time(Var m, std::size_t channels, std::size_t t);
    // -(c^T log p + (1-c)^T log(1-p)) with p clamped to [1e-12, 1-1e-12]
    Var bce(Var probs, const std::array<double, 2>& onehot);
    // mean over dims of squared difference
    Var mse(Var pred, std::span<const double> target);
    Var sum(Var a);
    Var mean(std::span<const Var> scalars);
    Var combine(std::span<const double> base, double coef, std::span<const Var> scalars,
                std::vector<const double*> grads);

    void backward(Var loss);

    std::span<const double> value(Var v) const;
    double value1(Var v) const;
    std::span<const double> adjoint(Var v) const;
    // accumulates every reached Param node's adjoint into flat (by offset)
    void harvest_param_grads(std::vector<double>& flat) const;

    static constexpr double kProbClamp = 1e-12;

private:
    enum class Op : std::uint8_t {
        Const,
        Param,
        Add,
        Mul,
        Scale,
        Sigmoid,
        Tanh,
        Relu,
        Softmax,
        Affine,
        GruStep,
        Conv1d,
        MaxPoolTime,
        Bce,
        Mse,
        Sum,
        Mean,
        Combine
    };

    struct Node {
        Op op;
        int pofs = 0, pcnt = 0; // parents
        int vofs = 0, vlen = 0; // value slice
        int sofs = 0, slen = 0; // stash slice
        int payload = -1;
    };

    struct ConvPayload {
        std::size_t in_ch, t_pad, kw, out_ch, t_out;
    };
    struct CombinePayload {
        const double* base;
        double coef;
        std::vector<const double*> grads;
    };

    int push(Op op, std::span<const int> parents, std::size_t vlen, std::size_t slen = 0);
    double* val(int id) { return vals_.data() + nodes_[id].vofs; }
    const double* val(int id) const { return vals_.data() + nodes_[id].vofs; }
    double* adj(int id) { return adjs_.data() + nodes_[id].vofs; }
    const double* adj(int id) const { return adjs_.data() + nodes_[id].vofs; }
    double* stash(int id) { return stash_.data() + nodes_[id].sofs; }
    const double* stash(int id) const { return stash_.data() + nodes_[id].sofs; }
    void backward_node(int id);
    void check(bool cond, const char* what) const;

    std::vector<Node> nodes_;
    std::vector<int> parents_;
    std::vector<double> vals_, adjs_, stash_;
    std::vector<std::size_t> param_offsets_; // parallel to param_nodes_
    std::vector<int> param_nodes_;
    std::vector<ConvPayload> conv_payloads_;
    std::vector<CombinePayload> combine_payloads_;
    std::vector<std::uint8_t> needed_;
    std::vector<double> scratch_;
};

// One Var per ParamStore entry, in entry order.
struct ParamVars {
    std::vector<Var> by_entry;
};

ParamVars leaf_store(Tape& tape, const ParamStore& store);

// Lookahead parameters: for each entry, w_hat = base + coef * sum_n s_n * g_n.
ParamVars combine_store(Tape& tape, const ParamStore& base, double coef,
                        std::span<const Var> scalars,
                        const std::vector<const std::vector<double>*>& sample_grads);

GruStepVars gru_step_vars(const ParamVars& vars, const ParamStore& store,
                          const std::string& prefix);

// p <- p - lr * grad for every trainable entry. Throws Diverged on NaN.
void sgd_step_inplace(ParamStore& params, const std::vector<double>& flat_grad, double lr);

// p <- p - (lr/batch) * sum_n weights[n] * grads[n], trainable entries only.
// Plain training is this with all weights = 1.
void weighted_sgd_apply(ParamStore& params, const std::vector<std::vector<double>>& grads,
                        const std::vector<double>& weights, double lr, std::size_t batch);

// Same update into a fresh copy; the source store is never touched.
ParamStore lookahead_apply(const ParamStore& params, const std::vector<std::vector<double>>& grads,
                           const std::vector<double>& weights, double lr, std::size_t batch);

} // namespace clickcfa::nn
