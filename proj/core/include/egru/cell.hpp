// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// The event-based GRU cell. A unit communicates only when its state crosses
// its threshold; the communicated amount is subtracted from the state. One
// step runs, in order:
//
//   1) input projections             wx_g = W_g_x * x (+ bias for u, r)
//   2) gates                         u, r = sigmoid(wx + W_g_y^T-events)
//   3) candidate                     z = tanh(wx_z + W_z_y^T-(r .* y) + b_z)
//   4) state update                  c_pre = u.*z + (1-u).*c_prev
//   5) emission + subtractive reset  y_i = c_pre_i if c_pre_i >= theta_i,
//                                    c_post_i = c_pre_i - theta_i * fired_i
//
// The fixed composition order is part of the bit-exactness contract shared
// with the many-core simulator and the dense reference used in tests.

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "egru/sparse.hpp"
#include "egru/types.hpp"

namespace egru {

/// Per-layer parameters. Recurrent matrices are stored transposed (row s =
/// outgoing weights of presynaptic unit s) so an event selects one
/// contiguous CSR row.
struct EgruLayerParams {
    std::uint32_t n_in = 0;
    std::uint32_t n_units = 0;
    CsrMatrix w_u_x, w_r_x, w_z_x; // n_units x n_in
    CsrMatrix w_u_y, w_r_y, w_z_y; // transposed: n_units x n_units
    DenseVector b_u, b_r, b_z;     // n_units
    DenseVector theta;             // per-unit threshold
    float lambda_sg = 1.0f;        // surrogate scale
    float epsilon_sg = 1.0f;       // surrogate support half-width

    void check_invariants() const;
};

/// Carried state: cell values after reset subtraction plus the last output.
struct EgruState {
    DenseVector c;
    EventVector y;

    static EgruState fresh(std::uint32_t n_units);
};

/// Intermediate values of one step, kept for inspection and the one-step
/// backward pass.
struct StepTrace {
    DenseVector u, r, z;
    DenseVector c_pre;             // state before reset subtraction
    std::vector<std::uint8_t> fired; // heaviside(c_pre - theta)
};

struct StepResult {
    EgruState state;
    StepTrace trace;
};

/// Step function H(x): 1 for x >= 0, else 0.
inline float heaviside(float x) { return x >= 0.0f ? 1.0f : 0.0f; }

float sigmoid(float x);

/// u = sigmoid(wx_u + W_u_y-events), r likewise. wx_u/wx_r are the input
/// projections with bias already added.
std::pair<DenseVector, DenseVector> compute_gates(const EgruLayerParams& p,
                                                  const DenseVector& wx_u,
                                                  const DenseVector& wx_r,
                                                  const EventVector& y_prev,
                                                  std::uint64_t* macs = nullptr);

/// Gate events at the source: (s, r[s] * v) for every event (s, v).
/// Products that round to zero are dropped, preserving sparsity.
EventVector gate_events(const DenseVector& r, const EventVector& y);

/// z = tanh((wx_z + W_z_y-(r .* y_prev)) + b_z). wx_z excludes the bias.
DenseVector compute_candidate(const EgruLayerParams& p, const DenseVector& wx_z,
                              const DenseVector& r, const EventVector& y_prev,
                              std::uint64_t* macs = nullptr);

/// c_pre[i] = u[i]*z[i] + (1 - u[i])*c_prev[i]. Reset is applied later, in
/// emit_events.
DenseVector state_update(const DenseVector& u, const DenseVector& z,
                         const DenseVector& c_prev);

struct EmitResult {
    EventVector y;
    DenseVector c_post;
    std::vector<std::uint8_t> fired;
};

/// Threshold crossing and subtractive reset. A unit at or above threshold
/// emits its pre-reset state and keeps c_pre - theta.
EmitResult emit_events(const DenseVector& c_pre, const DenseVector& theta);

/// Full cell step.
StepResult egru_step(const EgruLayerParams& p, const DenseVector& x, const EgruState& s);

/// Triangular surrogate: lambda * max(0, 1 - |v|/epsilon), evaluated at
/// v = c_pre - theta.
float surrogate_deriv(float v, float lambda_sg, float epsilon_sg);

/// Fraction of units that emitted nothing.
double activity_sparsity(const EventVector& y);

/// Loss gradient flowing into one step from downstream.
struct OutputGrad {
    DenseVector y; // dL/dy
    DenseVector c; // dL/dc_post (may be empty for zero)
};

/// One-step reverse-mode gradients. Weight gradients are aligned with the
/// corresponding CsrMatrix values array.
struct StepGradients {
    std::vector<float> w_u_x, w_r_x, w_z_x;
    std::vector<float> w_u_y, w_r_y, w_z_y;
    DenseVector b_u, b_r, b_z;
    DenseVector x;
    DenseVector c_prev;
    DenseVector y_prev;
};

/// Backward through one forward step, using the surrogate in place of
/// dH/dc. Verification only; there is no training loop here.
StepGradients step_backward(const EgruLayerParams& p, const DenseVector& x,
                            const EgruState& s_prev, const StepTrace& trace,
                            const OutputGrad& out_grad);

/// Fresh per-layer states for a stack.
std::vector<EgruState> fresh_states(const std::vector<EgruLayerParams>& layers);

/// Step a whole layer stack: layer l > 0 consumes the densified output of
/// layer l-1 from the same timestep. Returns the final layer's events.
EventVector step_stack(const std::vector<EgruLayerParams>& layers,
                       std::vector<EgruState>& states, const DenseVector& x);

} // namespace egru
