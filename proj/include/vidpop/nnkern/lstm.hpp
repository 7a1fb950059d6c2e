#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vidpop/nnkern/activations.hpp"
#include "vidpop/nnkern/param.hpp"

namespace vidpop::nn {

/// Gate order used throughout: input, forget, output, candidate.
enum Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3 };

/// Single-direction LSTM cell with separate input (W), recurrent (U) and bias
/// parameters per gate.
struct LstmCell {
  LayerKind kind = LayerKind::lstm;
  std::array<Param, 4> w;  // hidden x input
  std::array<Param, 4> u;  // hidden x hidden
  std::array<Param, 4> b;  // hidden

  LstmCell() = default;
  LstmCell(std::size_t input_dim, std::size_t hidden_dim, const std::string& name) {
    static constexpr const char* kGateNames[4] = {"i", "f", "o", "g"};
    for (std::size_t g = 0; g < 4; ++g) {
      w[g] = Param(name + ".w_" + kGateNames[g], {hidden_dim, input_dim});
      u[g] = Param(name + ".u_" + kGateNames[g], {hidden_dim, hidden_dim});
      b[g] = Param(name + ".b_" + kGateNames[g], {hidden_dim});
    }
  }

  std::size_t input_dim() const { return w[0].value.extent(1); }
  std::size_t hidden_dim() const { return w[0].value.extent(0); }

  void init(Rng& rng) {
    for (std::size_t g = 0; g < 4; ++g) {
      init_glorot(w[g], input_dim(), hidden_dim(), rng);
      init_glorot(u[g], hidden_dim(), hidden_dim(), rng);
      init_constant(b[g], g == kForget ? 1.0 : 0.0);
    }
  }

  ParamRefs params() {
    ParamRefs out;
    for (std::size_t g = 0; g < 4; ++g) out.push_back(&w[g]);
    for (std::size_t g = 0; g < 4; ++g) out.push_back(&u[g]);
    for (std::size_t g = 0; g < 4; ++g) out.push_back(&b[g]);
    return out;
  }
};

struct LstmState {
  Vec h;
  Vec c;
};

/// Everything the backward pass of one step needs.
struct LstmStepCache {
  Vec x, h_prev, c_prev;
  std::array<Vec, 4> gate;  // post-activation i, f, o, g
  Vec tanh_c;
};

inline LstmState lstm_step(std::span<const double> x, std::span<const double> h_prev,
                           std::span<const double> c_prev, const LstmCell& p,
                           LstmStepCache* cache = nullptr) {
  const std::size_t hd = p.hidden_dim();
  require_dim(x.size(), p.input_dim(), "lstm input");
  require_dim(h_prev.size(), hd, "lstm hidden state");
  require_dim(c_prev.size(), hd, "lstm cell state");

  std::array<Vec, 4> gate;
  for (std::size_t g = 0; g < 4; ++g) {
    Vec z = matvec(p.w[g].value, x);
    const Vec r = matvec(p.u[g].value, h_prev);
    for (std::size_t j = 0; j < hd; ++j) {
      z[j] += r[j] + p.b[g].value[j];
      z[j] = (g == kCandidate) ? std::tanh(z[j]) : sigmoid(z[j]);
    }
    gate[g] = std::move(z);
  }
  LstmState out{Vec(hd), Vec(hd)};
  Vec tanh_c(hd);
  for (std::size_t j = 0; j < hd; ++j) {
    out.c[j] = gate[kForget][j] * c_prev[j] + gate[kInput][j] * gate[kCandidate][j];
    tanh_c[j] = std::tanh(out.c[j]);
    out.h[j] = gate[kOutput][j] * tanh_c[j];
  }
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev.assign(h_prev.begin(), h_prev.end());
    cache->c_prev.assign(c_prev.begin(), c_prev.end());
    cache->gate = std::move(gate);
    cache->tanh_c = std::move(tanh_c);
  }
  return out;
}

struct LstmStepGrad {
  Vec dx, dh_prev, dc_prev;
};

/// Backward through one step given dL/dh and dL/dc flowing into it.
/// Accumulates parameter gradients into `p`.
inline LstmStepGrad lstm_step_backward(const LstmStepCache& s, std::span<const double> dh,
                                       std::span<const double> dc_in, LstmCell& p) {
  const std::size_t hd = p.hidden_dim();
  const auto& [gi, gf, go, gg] = s.gate;
  std::array<Vec, 4> dz;
  for (auto& v : dz) v.assign(hd, 0.0);
  LstmStepGrad out{Vec(p.input_dim(), 0.0), Vec(hd, 0.0), Vec(hd, 0.0)};
  for (std::size_t j = 0; j < hd; ++j) {
    const double dc = dc_in[j] + dh[j] * go[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
    dz[kOutput][j] = dh[j] * s.tanh_c[j] * go[j] * (1.0 - go[j]);
    dz[kInput][j] = dc * gg[j] * gi[j] * (1.0 - gi[j]);
    dz[kForget][j] = dc * s.c_prev[j] * gf[j] * (1.0 - gf[j]);
    dz[kCandidate][j] = dc * gi[j] * (1.0 - gg[j] * gg[j]);
    out.dc_prev[j] = dc * gf[j];
  }
  for (std::size_t g = 0; g < 4; ++g) {
    outer_add(p.w[g].grad, dz[g], s.x);
    outer_add(p.u[g].grad, dz[g], s.h_prev);
    for (std::size_t j = 0; j < hd; ++j) p.b[g].grad[j] += dz[g][j];
    matvec_transpose_add(p.w[g].value, dz[g], out.dx);
    matvec_transpose_add(p.u[g].value, dz[g], out.dh_prev);
  }
  return out;
}

/// Unrolled run of one direction. `reverse` walks the sequence from the end;
/// hidden[t] is always aligned with input position t.
struct LstmTrace {
  bool reverse = false;
  std::vector<LstmStepCache> steps;  // indexed by input position
  std::vector<Vec> hidden;
};

inline LstmTrace lstm_run(const std::vector<Vec>& seq, const LstmCell& p, bool reverse) {
  const std::size_t n = seq.size();
  const std::size_t hd = p.hidden_dim();
  LstmTrace trace;
  trace.reverse = reverse;
  trace.steps.resize(n);
  trace.hidden.resize(n);
  Vec h(hd, 0.0), c(hd, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = reverse ? n - 1 - k : k;
    LstmState st = lstm_step(seq[t], h, c, p, &trace.steps[t]);
    h = std::move(st.h);
    c = std::move(st.c);
    trace.hidden[t] = h;
  }
  return trace;
}

/// Backpropagation through time. `dhidden[t]` is dL/dh_t from the layer above.
/// Returns dL/dx_t for every position.
inline std::vector<Vec> lstm_run_backward(const LstmTrace& trace, const std::vector<Vec>& dhidden,
                                          LstmCell& p) {
  const std::size_t n = trace.steps.size();
  const std::size_t hd = p.hidden_dim();
  std::vector<Vec> dx(n);
  Vec dh_next(hd, 0.0), dc_next(hd, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    // Reverse of the forward visiting order.
    const std::size_t t = trace.reverse ? k : n - 1 - k;
    Vec dh = dhidden[t];
    for (std::size_t j = 0; j < hd; ++j) dh[j] += dh_next[j];
    LstmStepGrad g = lstm_step_backward(trace.steps[t], dh, dc_next, p);
    dx[t] = std::move(g.dx);
    dh_next = std::move(g.dh_prev);
    dc_next = std::move(g.dc_prev);
  }
  return dx;
}

/// Bi-directional LSTM: output t = concat(forward h_t, backward h_t).
struct BiLstm {
  LstmCell forward;
  LstmCell backward;

  BiLstm() = default;
  BiLstm(std::size_t input_dim, std::size_t hidden_dim, const std::string& name)
      : forward(input_dim, hidden_dim, name + ".fwd"), backward(input_dim, hidden_dim, name + ".bwd") {}

  std::size_t input_dim() const { return forward.input_dim(); }
  std::size_t hidden_dim() const { return forward.hidden_dim(); }
  std::size_t output_dim() const { return 2 * forward.hidden_dim(); }

  void init(Rng& rng) {
    forward.init(rng);
    backward.init(rng);
  }

  ParamRefs params() {
    ParamRefs out = forward.params();
    append(out, backward.params());
    return out;
  }
};

struct BiLstmTrace {
  LstmTrace fwd, bwd;
  std::vector<Vec> outputs;
};

inline BiLstmTrace bilstm_trace(const std::vector<Vec>& seq, const BiLstm& p) {
  if (seq.empty()) fail(ErrorCode::EmptyInput, "bi-LSTM over an empty sequence");
  BiLstmTrace tr{lstm_run(seq, p.forward, false), lstm_run(seq, p.backward, true), {}};
  const std::size_t hd = p.hidden_dim();
  tr.outputs.resize(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    Vec o(2 * hd);
    std::copy(tr.fwd.hidden[t].begin(), tr.fwd.hidden[t].end(), o.begin());
    std::copy(tr.bwd.hidden[t].begin(), tr.bwd.hidden[t].end(), o.begin() + hd);
    tr.outputs[t] = std::move(o);
  }
  return tr;
}

inline std::vector<Vec> bilstm_encode(const std::vector<Vec>& seq, const BiLstm& p) {
  return bilstm_trace(seq, p).outputs;
}

/// Splits each 2H output gradient back into its directions and runs BPTT on both.
inline std::vector<Vec> bilstm_backward(const BiLstmTrace& tr, const std::vector<Vec>& doutputs,
                                        BiLstm& p) {
  const std::size_t n = doutputs.size();
  const std::size_t hd = p.hidden_dim();
  std::vector<Vec> dfwd(n), dbwd(n);
  for (std::size_t t = 0; t < n; ++t) {
    dfwd[t].assign(doutputs[t].begin(), doutputs[t].begin() + static_cast<std::ptrdiff_t>(hd));
    dbwd[t].assign(doutputs[t].begin() + static_cast<std::ptrdiff_t>(hd), doutputs[t].end());
  }
  std::vector<Vec> dx = lstm_run_backward(tr.fwd, dfwd, p.forward);
  const std::vector<Vec> dx2 = lstm_run_backward(tr.bwd, dbwd, p.backward);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < dx[t].size(); ++j) dx[t][j] += dx2[t][j];
  }
  return dx;
}

}  // namespace vidpop::nn
