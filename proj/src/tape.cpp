#include "clickcfa/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "clickcfa/errors.hpp"
#include "clickcfa/kernels.hpp"

namespace clickcfa::nn {

namespace {
inline double sigmoid1(double x) { return 1.0 / (1.0 + std::exp(-x)); }
} // namespace

void Tape::check(bool cond, const char* what) const {
    if (!cond) fail(ErrorKind::Logic, std::string("tape: ") + what);
}

void Tape::reset() {
    nodes_.clear();
    parents_.clear();
    vals_.clear();
    adjs_.clear();
    stash_.clear();
    param_offsets_.clear();
    param_nodes_.clear();
    conv_payloads_.clear();
    combine_payloads_.clear();
    needed_.clear();
}

int Tape::push(Op op, std::span<const int> parents, std::size_t vlen, std::size_t slen) {
    Node n;
    n.op = op;
    n.pofs = static_cast<int>(parents_.size());
    n.pcnt = static_cast<int>(parents.size());
    parents_.insert(parents_.end(), parents.begin(), parents.end());
    n.vofs = static_cast<int>(vals_.size());
    n.vlen = static_cast<int>(vlen);
    vals_.resize(vals_.size() + vlen, 0.0);
    adjs_.resize(vals_.size(), 0.0);
    n.sofs = static_cast<int>(stash_.size());
    n.slen = static_cast<int>(slen);
    stash_.resize(stash_.size() + slen, 0.0);
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::constant(std::span<const double> v) {
    const int id = push(Op::Const, {}, v.size());
    std::copy(v.begin(), v.end(), val(id));
    return {id};
}

Var Tape::constant1(double v) { return constant(std::span<const double>(&v, 1)); }

Var Tape::param(std::span<const double> values, std::size_t flat_offset) {
    const int id = push(Op::Param, {}, values.size());
    std::copy(values.begin(), values.end(), val(id));
    param_nodes_.push_back(id);
    param_offsets_.push_back(flat_offset);
    return {id};
}

Var Tape::add(Var a, Var b) {
    check(nodes_[a.id].vlen == nodes_[b.id].vlen, "add shape mismatch");
    const int ps[2] = {a.id, b.id};
    const int id = push(Op::Add, ps, nodes_[a.id].vlen);
    const double* pa = val(a.id);
    const double* pb = val(b.id);
    double* y = val(id);
    for (int i = 0; i < nodes_[id].vlen; ++i) y[i] = pa[i] + pb[i];
    return {id};
}

Var Tape::mul(Var a, Var b) {
    check(nodes_[a.id].vlen == nodes_[b.id].vlen, "mul shape mismatch");
    const int ps[2] = {a.id, b.id};
    const int id = push(Op::Mul, ps, nodes_[a.id].vlen);
    const double* pa = val(a.id);
    const double* pb = val(b.id);
    double* y = val(id);
    for (int i = 0; i < nodes_[id].vlen; ++i) y[i] = pa[i] * pb[i];
    return {id};
}

Var Tape::scale(Var a, double c) {
    const int ps[1] = {a.id};
    const int id = push(Op::Scale, ps, nodes_[a.id].vlen, 1);
    stash(id)[0] = c;
    const double* pa = val(a.id);
    double* y = val(id);
    for (int i = 0; i < nodes_[id].vlen; ++i) y[i] = c * pa[i];
    return {id};
}

Var Tape::sigmoid(Var a) {
    const int ps[1] = {a.id};
    const int id = push(Op::Sigmoid, ps, nodes_[a.id].vlen);
    const double* pa = val(a.id);
    double* y = val(id);
    for (int i = 0; i < nodes_[id].vlen; ++i) y[i] = sigmoid1(pa[i]);
    return {id};
}

Var Tape::tanh_(Var a) {
    const int ps[1] = {a.id};
    const int id = push(Op::Tanh, ps, nodes_[a.id].vlen);
    const double* pa = val(a.id);
    double* y = val(id);
    for (int i = 0; i < nodes_[id].vlen; ++i) y[i] = std::tanh(pa[i]);
    return {id};
}

Var Tape::relu(Var a) {
    const int ps[1] = {a.id};
    const int id = push(Op::Relu, ps, nodes_[a.id].vlen);
    const double* pa = val(a.id);
    double* y = val(id);
    for (int i = 0; i < nodes_[id].vlen; ++i) y[i] = pa[i] > 0.0 ? pa[i] : 0.0;
    return {id};
}

Var Tape::softmax(Var a) {
    const int ps[1] = {a.id};
    const int id = push(Op::Softmax, ps, nodes_[a.id].vlen);
    const double* x = val(a.id);
    double* y = val(id);
    const int n = nodes_[id].vlen;
    double m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        y[i] = std::exp(x[i] - m);
        z += y[i];
    }
    for (int i = 0; i < n; ++i) y[i] /= z;
    return {id};
}

Var Tape::affine(Var w, Var x, Var b) {
    const std::size_t rows = nodes_[b.id].vlen;
    const std::size_t cols = nodes_[x.id].vlen;
    check(static_cast<std::size_t>(nodes_[w.id].vlen) == rows * cols, "affine shape mismatch");
    const int ps[3] = {w.id, x.id, b.id};
    const int id = push(Op::Affine, ps, rows);
    std::memcpy(val(id), val(b.id), rows * sizeof(double));
    kernels::matvec_acc(val(id), val(w.id), val(x.id), rows, cols);
    return {id};
}

Var Tape::gru_step(const GruStepVars& p, std::span<const double> x, Var h_prev) {
    const std::size_t k = nodes_[h_prev.id].vlen;
    const std::size_t in = x.size();
    check(static_cast<std::size_t>(nodes_[p.wz.id].vlen) == k * in, "gru W shape");
    check(static_cast<std::size_t>(nodes_[p.uz.id].vlen) == k * k, "gru U shape");
    const int ps[10] = {p.wz.id, p.uz.id, p.bz.id, p.wr.id, p.ur.id,
                        p.br.id, p.wh.id, p.uh.id, p.bh.id, h_prev.id};
    // stash: x, z, r, hc, rh
    const int id = push(Op::GruStep, ps, k, in + 4 * k);
    double* st = stash(id);
    double* sx = st;
    double* sz = st + in;
    double* sr = sz + k;
    double* shc = sr + k;
    double* srh = shc + k;
    std::copy(x.begin(), x.end(), sx);
    const double* h = val(h_prev.id);

    scratch_.assign(k, 0.0);
    double* act = scratch_.data();

    std::memcpy(act, val(p.bz.id), k * sizeof(double));
    kernels::matvec_acc(act, val(p.wz.id), sx, k, in);
    kernels::matvec_acc(act, val(p.uz.id), h, k, k);
    for (std::size_t i = 0; i < k; ++i) sz[i] = sigmoid1(act[i]);

    std::memcpy(act, val(p.br.id), k * sizeof(double));
    kernels::matvec_acc(act, val(p.wr.id), sx, k, in);
    kernels::matvec_acc(act, val(p.ur.id), h, k, k);
    for (std::size_t i = 0; i < k; ++i) sr[i] = sigmoid1(act[i]);

    for (std::size_t i = 0; i < k; ++i) srh[i] = sr[i] * h[i];

    std::memcpy(act, val(p.bh.id), k * sizeof(double));
    kernels::matvec_acc(act, val(p.wh.id), sx, k, in);
    kernels::matvec_acc(act, val(p.uh.id), srh, k, k);
    for (std::size_t i = 0; i < k; ++i) shc[i] = std::tanh(act[i]);

    double* y = val(id);
    for (std::size_t i = 0; i < k; ++i) y[i] = (1.0 - sz[i]) * h[i] + sz[i] * shc[i];
    return {id};
}

Var Tape::conv1d(Var kernel, Var bias, std::span<const double> input, std::size_t in_ch,
                 std::size_t t, std::size_t kw) {
    check(input.size() == in_ch * t, "conv input shape");
    const std::size_t out_ch = nodes_[bias.id].vlen;
    check(static_cast<std::size_t>(nodes_[kernel.id].vlen) == out_ch * in_ch * kw,
          "conv kernel shape");
    const std::size_t t_pad = std::max(t, kw);
    const std::size_t t_out = t_pad - kw + 1;
    const int ps[2] = {kernel.id, bias.id};
    const int id = push(Op::Conv1d, ps, out_ch * t_out, in_ch * t_pad);
    conv_payloads_.push_back({in_ch, t_pad, kw, out_ch, t_out});
    nodes_[id].payload = static_cast<int>(conv_payloads_.size()) - 1;
    double* pad = stash(id);
    for (std::size_t c = 0; c < in_ch; ++c)
        std::memcpy(pad + c * t_pad, input.data() + c * t, t * sizeof(double));

    scratch_.assign(in_ch * kw, 0.0);
    double* win = scratch_.data();
    double* y = val(id);
    const double* kmat = val(kernel.id);
    const double* b = val(bias.id);
    for (std::size_t u = 0; u < t_out; ++u) {
        for (std::size_t c = 0; c < in_ch; ++c)
            for (std::size_t j = 0; j < kw; ++j) win[c * kw + j] = pad[c * t_pad + u + j];
        for (std::size_t o = 0; o < out_ch; ++o)
            y[o * t_out + u] = b[o] + kernels::dot(kmat + o * in_ch * kw, win, in_ch * kw);
    }
    return {id};
}

Var Tape::maxpool_time(Var m, std::size_t channels, std::size_t t) {
    check(static_cast<std::size_t>(nodes_[m.id].vlen) == channels * t, "maxpool shape");
    const int ps[1] = {m.id};
    const int id = push(Op::MaxPoolTime, ps, channels, channels);
    const double* x = val(m.id);
    double* y = val(id);
    double* arg = stash(id);
    for (std::size_t c = 0; c < channels; ++c) {
        std::size_t best = 0;
        for (std::size_t u = 1; u < t; ++u)
            if (x[c * t + u] > x[c * t + best]) best = u;
        y[c] = x[c * t + best];
        arg[c] = static_cast<double>(best);
    }
    return {id};
}

Var Tape::bce(Var probs, const std::array<double, 2>& onehot) {
    check(nodes_[probs.id].vlen == 2, "bce expects a probability pair");
    const int ps[1] = {probs.id};
    const int id = push(Op::Bce, ps, 1, 4); // stash: onehot, clamped probs
    double* st = stash(id);
    st[0] = onehot[0];
    st[1] = onehot[1];
    const double* p = val(probs.id);
    double loss = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double pc = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
        st[2 + i] = pc;
        loss -= st[i] * std::log(pc) + (1.0 - st[i]) * std::log(1.0 - pc);
    }
    val(id)[0] = loss;
    return {id};
}

Var Tape::mse(Var pred, std::span<const double> target) {
    const int n = nodes_[pred.id].vlen;
    check(target.size() == static_cast<std::size_t>(n), "mse shape mismatch");
    const int ps[1] = {pred.id};
    const int id = push(Op::Mse, ps, 1, target.size());
    std::copy(target.begin(), target.end(), stash(id));
    const double* p = val(pred.id);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = p[i] - target[i];
        s += d * d;
    }
    val(id)[0] = s / n;
    return {id};
}

Var Tape::sum(Var a) {
    const int ps[1] = {a.id};
    const int id = push(Op::Sum, ps, 1);
    const double* x = val(a.id);
    double s = 0.0;
    for (int i = 0; i < nodes_[a.id].vlen; ++i) s += x[i];
    val(id)[0] = s;
    return {id};
}

Var Tape::mean(std::span<const Var> scalars) {
    check(!scalars.empty(), "mean of nothing");
    std::vector<int> ps(scalars.size());
    double s = 0.0;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        check(nodes_[scalars[i].id].vlen == 1, "mean expects scalars");
        ps[i] = scalars[i].id;
        s += val(scalars[i].id)[0];
    }
    const int id = push(Op::Mean, ps, 1);
    val(id)[0] = s / static_cast<double>(scalars.size());
    return {id};
}

Var Tape::combine(std::span<const double> base, double coef, std::span<const Var> scalars,
                  std::vector<const double*> grads) {
    check(scalars.size() == grads.size(), "combine arity mismatch");
    std::vector<int> ps(scalars.size());
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        check(nodes_[scalars[i].id].vlen == 1, "combine expects scalar weights");
        ps[i] = scalars[i].id;
    }
    const int id = push(Op::Combine, ps, base.size());
    combine_payloads_.push_back({base.data(), coef, std::move(grads)});
    nodes_[id].payload = static_cast<int>(combine_payloads_.size()) - 1;
    double* y = val(id);
    const auto& pl = combine_payloads_.back();
    // accumulate then scale, the same association the committed update uses
    scratch_.assign(base.size(), 0.0);
    for (std::size_t n = 0; n < pl.grads.size(); ++n)
        kernels::axpy(scratch_.data(), val(ps[n])[0], pl.grads[n], base.size());
    for (std::size_t i = 0; i < base.size(); ++i) y[i] = base[i] + coef * scratch_[i];
    return {id};
}

std::span<const double> Tape::value(Var v) const {
    return {val(v.id), static_cast<std::size_t>(nodes_[v.id].vlen)};
}

double Tape::value1(Var v) const {
    check(nodes_[v.id].vlen == 1, "value1 on non-scalar");
    return val(v.id)[0];
}

std::span<const double> Tape::adjoint(Var v) const {
    return {adj(v.id), static_cast<std::size_t>(nodes_[v.id].vlen)};
}

void Tape::backward(Var loss) {
    check(loss.valid() && loss.id < static_cast<int>(nodes_.size()), "bad loss var");
    check(nodes_[loss.id].vlen == 1, "loss must be scalar");
    needed_.assign(nodes_.size(), 0);
    needed_[loss.id] = 1;
    for (int i = loss.id; i >= 0; --i) {
        if (!needed_[i]) continue;
        std::memset(adj(i), 0, nodes_[i].vlen * sizeof(double));
        const Node& n = nodes_[i];
        for (int p = 0; p < n.pcnt; ++p) needed_[parents_[n.pofs + p]] = 1;
    }
    adj(loss.id)[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        if (needed_[i]) backward_node(i);
    }
}

void Tape::backward_node(int id) {
    const Node& n = nodes_[id];
    const int* ps = parents_.data() + n.pofs;
    const double* g = adj(id);
    switch (n.op) {
    case Op::Const:
    case Op::Param:
        break;
    case Op::Add: {
        kernels::axpy(adj(ps[0]), 1.0, g, n.vlen);
        kernels::axpy(adj(ps[1]), 1.0, g, n.vlen);
        break;
    }
    case Op::Mul: {
        const double* a = val(ps[0]);
        const double* b = val(ps[1]);
        double* ga = adj(ps[0]);
        double* gb = adj(ps[1]);
        for (int i = 0; i < n.vlen; ++i) {
            ga[i] += g[i] * b[i];
            gb[i] += g[i] * a[i];
        }
        break;
    }
    case Op::Scale:
        kernels::axpy(adj(ps[0]), stash(id)[0], g, n.vlen);
        break;
    case Op::Sigmoid: {
        const double* y = val(id);
        double* ga = adj(ps[0]);
        for (int i = 0; i < n.vlen; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
    }
    case Op::Tanh: {
        const double* y = val(id);
        double* ga = adj(ps[0]);
        for (int i = 0; i < n.vlen; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
    }
    case Op::Relu: {
        const double* y = val(id);
        double* ga = adj(ps[0]);
        for (int i = 0; i < n.vlen; ++i)
            if (y[i] > 0.0) ga[i] += g[i];
        break;
    }
    case Op::Softmax: {
        const double* p = val(id);
        double* gx = adj(ps[0]);
        double dotgp = 0.0;
        for (int i = 0; i < n.vlen; ++i) dotgp += g[i] * p[i];
        for (int i = 0; i < n.vlen; ++i) gx[i] += p[i] * (g[i] - dotgp);
        break;
    }
    case Op::Affine: {
        const std::size_t rows = n.vlen;
        const std::size_t cols = nodes_[ps[1]].vlen;
        kernels::ger_acc(adj(ps[0]), g, val(ps[1]), rows, cols);
        kernels::matvec_t_acc(adj(ps[1]), val(ps[0]), g, rows, cols);
        kernels::axpy(adj(ps[2]), 1.0, g, rows);
        break;
    }
    case Op::GruStep: {
        const std::size_t k = n.vlen;
        const std::size_t in = n.slen - 4 * k;
        const double* st = stash(id);
        const double* sx = st;
        const double* sz = st + in;
        const double* sr = sz + k;
        const double* shc = sr + k;
        const double* srh = shc + k;
        const int h_id = ps[9];
        const double* h = val(h_id);

        scratch_.assign(4 * k, 0.0);
        double* dh = scratch_.data();
        double* da = dh + k;  // reused: dah, then dar, then daz
        double* drh = da + k; // reused: drh, then dr
        double* tmp = drh + k;

        // h' = (1-z) h + z hc
        for (std::size_t i = 0; i < k; ++i) dh[i] = g[i] * (1.0 - sz[i]);
        // candidate branch
        for (std::size_t i = 0; i < k; ++i)
            da[i] = g[i] * sz[i] * (1.0 - shc[i] * shc[i]); // dah
        kernels::ger_acc(adj(ps[6]), da, sx, k, in);        // Wh
        kernels::ger_acc(adj(ps[7]), da, srh, k, k);        // Uh
        kernels::axpy(adj(ps[8]), 1.0, da, k);              // bh
        kernels::matvec_t_acc(drh, val(ps[7]), da, k, k);
        for (std::size_t i = 0; i < k; ++i) {
            dh[i] += drh[i] * sr[i];
            tmp[i] = drh[i] * h[i]; // dr
        }
        // reset gate
        for (std::size_t i = 0; i < k; ++i) da[i] = tmp[i] * sr[i] * (1.0 - sr[i]); // dar
        kernels::ger_acc(adj(ps[3]), da, sx, k, in);                               // Wr
        kernels::ger_acc(adj(ps[4]), da, h, k, k);                                 // Ur
        kernels::axpy(adj(ps[5]), 1.0, da, k);                                     // br
        kernels::matvec_t_acc(dh, val(ps[4]), da, k, k);
        // update gate
        for (std::size_t i = 0; i < k; ++i)
            da[i] = g[i] * (shc[i] - h[i]) * sz[i] * (1.0 - sz[i]); // daz
        kernels::ger_acc(adj(ps[0]), da, sx, k, in);                // Wz
        kernels::ger_acc(adj(ps[1]), da, h, k, k);                  // Uz
        kernels::axpy(adj(ps[2]), 1.0, da, k);                      // bz
        kernels::matvec_t_acc(dh, val(ps[1]), da, k, k);

        kernels::axpy(adj(h_id), 1.0, dh, k);
        break;
    }
    case Op::Conv1d: {
        const ConvPayload& pl = conv_payloads_[n.payload];
        const double* pad = stash(id);
        scratch_.assign(pl.in_ch * pl.kw, 0.0);
        double* win = scratch_.data();
        double* gk = adj(ps[0]);
        double* gb = adj(ps[1]);
        for (std::size_t u = 0; u < pl.t_out; ++u) {
            for (std::size_t c = 0; c < pl.in_ch; ++c)
                for (std::size_t j = 0; j < pl.kw; ++j)
                    win[c * pl.kw + j] = pad[c * pl.t_pad + u + j];
            for (std::size_t o = 0; o < pl.out_ch; ++o) {
                const double go = g[o * pl.t_out + u];
                if (go != 0.0) {
                    kernels::axpy(gk + o * pl.in_ch * pl.kw, go, win, pl.in_ch * pl.kw);
                    gb[o] += go;
                }
            }
        }
        break;
    }
    case Op::MaxPoolTime: {
        const std::size_t t = nodes_[ps[0]].vlen / n.vlen;
        const double* arg = stash(id);
        double* gx = adj(ps[0]);
        for (int c = 0; c < n.vlen; ++c)
            gx[c * t + static_cast<std::size_t>(arg[c])] += g[c];
        break;
    }
    case Op::Bce: {
        const double* st = stash(id);
        const double* p = val(ps[0]);
        double* gp = adj(ps[0]);
        for (int i = 0; i < 2; ++i) {
            if (p[i] <= kProbClamp || p[i] >= 1.0 - kProbClamp) continue; // clamped flat
            gp[i] += g[0] * (-st[i] / st[2 + i] + (1.0 - st[i]) / (1.0 - st[2 + i]));
        }
        break;
    }
    case Op::Mse: {
        const double* t = stash(id);
        const double* p = val(ps[0]);
        double* gp = adj(ps[0]);
        const int m = nodes_[ps[0]].vlen;
        const double c = 2.0 * g[0] / m;
        for (int i = 0; i < m; ++i) gp[i] += c * (p[i] - t[i]);
        break;
    }
    case Op::Sum: {
        double* ga = adj(ps[0]);
        for (int i = 0; i < nodes_[ps[0]].vlen; ++i) ga[i] += g[0];
        break;
    }
    case Op::Mean: {
        const double c = g[0] / n.pcnt;
        for (int p = 0; p < n.pcnt; ++p) adj(ps[p])[0] += c;
        break;
    }
    case Op::Combine: {
        const CombinePayload& pl = combine_payloads_[n.payload];
        for (std::size_t s = 0; s < pl.grads.size(); ++s)
            adj(ps[s])[0] += pl.coef * kernels::dot(g, pl.grads[s], n.vlen);
        break;
    }
    }
}

void Tape::harvest_param_grads(std::vector<double>& flat) const {
    for (std::size_t i = 0; i < param_nodes_.size(); ++i) {
        const int id = param_nodes_[i];
        if (needed_.empty() || !needed_[id]) continue; // unreachable => zero grad
        const Node& n = nodes_[id];
        check(param_offsets_[i] + n.vlen <= flat.size(), "grad buffer too small");
        kernels::axpy(flat.data() + param_offsets_[i], 1.0, adj(id), n.vlen);
    }
}

ParamVars leaf_store(Tape& tape, const ParamStore& store) {
    ParamVars out;
    out.by_entry.reserve(store.entry_count());
    for (std::size_t i = 0; i < store.entry_count(); ++i)
        out.by_entry.push_back(tape.param(store.values(i), store.entry(i).offset));
    return out;
}

ParamVars combine_store(Tape& tape, const ParamStore& base, double coef,
                        std::span<const Var> scalars,
                        const std::vector<const std::vector<double>*>& sample_grads) {
    ParamVars out;
    out.by_entry.reserve(base.entry_count());
    for (std::size_t i = 0; i < base.entry_count(); ++i) {
        const auto& e = base.entry(i);
        std::vector<const double*> grads;
        grads.reserve(sample_grads.size());
        for (const auto* sg : sample_grads) grads.push_back(sg->data() + e.offset);
        out.by_entry.push_back(tape.combine(base.values(i), coef, scalars, std::move(grads)));
    }
    return out;
}

GruStepVars gru_step_vars(const ParamVars& vars, const ParamStore& store,
                          const std::string& prefix) {
    auto v = [&](const char* name) { return vars.by_entry[store.entry_index(prefix + name)]; };
    return {v("Wz"), v("Uz"), v("bz"), v("Wr"), v("Ur"), v("br"), v("Wh"), v("Uh"), v("bh")};
}

void sgd_step_inplace(ParamStore& params, const std::vector<double>& flat_grad, double lr) {
    if (flat_grad.size() != params.flat_size())
        fail(ErrorKind::Logic, "gradient size mismatch in sgd step");
    for (double v : flat_grad)
        if (!std::isfinite(v)) fail(ErrorKind::Diverged, "NaN gradient in sgd step");
    for (std::size_t i = 0; i < params.entry_count(); ++i) {
        const auto& e = params.entry(i);
        if (!e.trainable) continue;
        auto vals = params.values(i);
        for (std::size_t j = 0; j < e.len; ++j) vals[j] -= lr * flat_grad[e.offset + j];
    }
}

void weighted_sgd_apply(ParamStore& params, const std::vector<std::vector<double>>& grads,
                        const std::vector<double>& weights, double lr, std::size_t batch) {
    if (grads.size() != weights.size() || batch == 0)
        fail(ErrorKind::Logic, "weighted sgd arity mismatch");
    std::vector<double> acc(params.flat_size(), 0.0);
    for (std::size_t n = 0; n < grads.size(); ++n) {
        if (!std::isfinite(weights[n])) fail(ErrorKind::Diverged, "NaN sample weight");
        kernels::axpy(acc.data(), weights[n], grads[n].data(), acc.size());
    }
    for (double v : acc)
        if (!std::isfinite(v)) fail(ErrorKind::Diverged, "NaN gradient in weighted sgd");
    const double scale = lr / static_cast<double>(batch);
    for (std::size_t i = 0; i < params.entry_count(); ++i) {
        const auto& e = params.entry(i);
        if (!e.trainable) continue;
        auto vals = params.values(i);
        for (std::size_t j = 0; j < e.len; ++j) vals[j] -= scale * acc[e.offset + j];
    }
}

ParamStore lookahead_apply(const ParamStore& params, const std::vector<std::vector<double>>& grads,
                           const std::vector<double>& weights, double lr, std::size_t batch) {
    ParamStore out = params;
    weighted_sgd_apply(out, grads, weights, lr, batch);
    return out;
}

} // namespace clickcfa::nn
