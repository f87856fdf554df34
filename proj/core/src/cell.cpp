// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#include "egru/cell.hpp"

#include <cmath>

namespace egru {

namespace {

void check_matrix_dims(const CsrMatrix& m, std::uint32_t rows, std::uint32_t cols,
                       const char* name) {
    if (m.n_rows != rows || m.n_cols != cols) {
        throw DimensionError(std::string(name) + ": " + std::to_string(m.n_rows) + "x" +
                             std::to_string(m.n_cols) + ", expected " + std::to_string(rows) +
                             "x" + std::to_string(cols));
    }
}

} // namespace

void EgruLayerParams::check_invariants() const {
    check_matrix_dims(w_u_x, n_units, n_in, "w_u_x");
    check_matrix_dims(w_r_x, n_units, n_in, "w_r_x");
    check_matrix_dims(w_z_x, n_units, n_in, "w_z_x");
    check_matrix_dims(w_u_y, n_units, n_units, "w_u_y");
    check_matrix_dims(w_r_y, n_units, n_units, "w_r_y");
    check_matrix_dims(w_z_y, n_units, n_units, "w_z_y");
    require_dim(b_u.size(), n_units, "b_u");
    require_dim(b_r.size(), n_units, "b_r");
    require_dim(b_z.size(), n_units, "b_z");
    require_dim(theta.size(), n_units, "theta");
    if (epsilon_sg <= 0.0f) {
        throw DimensionError("epsilon_sg must be positive");
    }
    if (lambda_sg < 0.0f) {
        throw DimensionError("lambda_sg must be non-negative");
    }
}

EgruState EgruState::fresh(std::uint32_t n_units) {
    EgruState s;
    s.c.assign(n_units, 0.0f);
    s.y.dim = n_units;
    return s;
}

float sigmoid(float x) {
    return 1.0f / (1.0f + std::exp(-x));
}

std::pair<DenseVector, DenseVector> compute_gates(const EgruLayerParams& p,
                                                  const DenseVector& wx_u,
                                                  const DenseVector& wx_r,
                                                  const EventVector& y_prev,
                                                  std::uint64_t* macs) {
    require_dim(wx_u.size(), p.n_units, "wx_u");
    require_dim(wx_r.size(), p.n_units, "wx_r");
    DenseVector u = event_matvec(p.w_u_y, y_prev, macs);
    DenseVector r = event_matvec(p.w_r_y, y_prev, macs);
    for (std::uint32_t i = 0; i < p.n_units; ++i) {
        u[i] = sigmoid(wx_u[i] + u[i]);
        r[i] = sigmoid(wx_r[i] + r[i]);
    }
    return {std::move(u), std::move(r)};
}

EventVector gate_events(const DenseVector& r, const EventVector& y) {
    require_dim(r.size(), y.dim, "gate_events");
    EventVector out;
    out.dim = y.dim;
    out.events.reserve(y.events.size());
    for (const Event& e : y.events) {
        const float v = r[e.index] * e.value;
        if (v != 0.0f) {
            out.events.push_back({e.index, v});
        }
    }
    return out;
}

DenseVector compute_candidate(const EgruLayerParams& p, const DenseVector& wx_z,
                              const DenseVector& r, const EventVector& y_prev,
                              std::uint64_t* macs) {
    require_dim(wx_z.size(), p.n_units, "wx_z");
    const EventVector gated = gate_events(r, y_prev);
    DenseVector z = event_matvec(p.w_z_y, gated, macs);
    for (std::uint32_t i = 0; i < p.n_units; ++i) {
        z[i] = std::tanh((wx_z[i] + z[i]) + p.b_z[i]);
    }
    return z;
}

DenseVector state_update(const DenseVector& u, const DenseVector& z,
                         const DenseVector& c_prev) {
    require_dim(z.size(), u.size(), "state_update z");
    require_dim(c_prev.size(), u.size(), "state_update c_prev");
    DenseVector c_pre(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        c_pre[i] = u[i] * z[i] + (1.0f - u[i]) * c_prev[i];
    }
    return c_pre;
}

EmitResult emit_events(const DenseVector& c_pre, const DenseVector& theta) {
    require_dim(theta.size(), c_pre.size(), "emit_events theta");
    EmitResult out;
    out.y.dim = static_cast<std::uint32_t>(c_pre.size());
    out.c_post.resize(c_pre.size());
    out.fired.resize(c_pre.size());
    for (std::uint32_t i = 0; i < c_pre.size(); ++i) {
        const bool fired = c_pre[i] - theta[i] >= 0.0f;
        out.fired[i] = fired ? 1 : 0;
        if (fired) {
            // Eq. y_i = c_i * H(...): a unit whose state is exactly zero
            // fires nothing representable, so no event is stored.
            if (c_pre[i] != 0.0f) {
                out.y.events.push_back({i, c_pre[i]});
            }
            out.c_post[i] = c_pre[i] - theta[i];
        } else {
            out.c_post[i] = c_pre[i];
        }
    }
    return out;
}

StepResult egru_step(const EgruLayerParams& p, const DenseVector& x, const EgruState& s) {
    require_dim(x.size(), p.n_in, "egru_step input");
    require_dim(s.c.size(), p.n_units, "egru_step state");

    DenseVector wx_u = dense_matvec(p.w_u_x, x);
    DenseVector wx_r = dense_matvec(p.w_r_x, x);
    DenseVector wx_z = dense_matvec(p.w_z_x, x);
    for (std::uint32_t i = 0; i < p.n_units; ++i) {
        wx_u[i] += p.b_u[i];
        wx_r[i] += p.b_r[i];
    }

    auto [u, r] = compute_gates(p, wx_u, wx_r, s.y);
    DenseVector z = compute_candidate(p, wx_z, r, s.y);
    DenseVector c_pre = state_update(u, z, s.c);
    EmitResult emitted = emit_events(c_pre, p.theta);

    StepResult out;
    out.state.c = std::move(emitted.c_post);
    out.state.y = std::move(emitted.y);
    out.trace.u = std::move(u);
    out.trace.r = std::move(r);
    out.trace.z = std::move(z);
    out.trace.c_pre = std::move(c_pre);
    out.trace.fired = std::move(emitted.fired);
    return out;
}

float surrogate_deriv(float v, float lambda_sg, float epsilon_sg) {
    const float ramp = 1.0f - std::fabs(v) / epsilon_sg;
    return lambda_sg * (ramp > 0.0f ? ramp : 0.0f);
}

double activity_sparsity(const EventVector& y) {
    if (y.dim == 0) {
        return 1.0;
    }
    return 1.0 - static_cast<double>(y.events.size()) / static_cast<double>(y.dim);
}

namespace {

// gx[col] += sum over rows of m: values * grad_row (CSR transpose-matvec).
void accumulate_input_grad(const CsrMatrix& m, const DenseVector& grad_rows,
                           DenseVector& gx) {
    for (std::uint32_t r = 0; r < m.n_rows; ++r) {
        const float g = grad_rows[r];
        for (std::uint32_t k = m.row_extents[r]; k < m.row_extents[r + 1]; ++k) {
            gx[m.col_indices[k]] += m.values[k] * g;
        }
    }
}

// Gradients w.r.t. stored values of an input matrix: gW[k] = ga[row] * x[col].
std::vector<float> input_weight_grad(const CsrMatrix& m, const DenseVector& ga,
                                     const DenseVector& x) {
    std::vector<float> gw(m.nnz(), 0.0f);
    for (std::uint32_t r = 0; r < m.n_rows; ++r) {
        for (std::uint32_t k = m.row_extents[r]; k < m.row_extents[r + 1]; ++k) {
            gw[k] = ga[r] * x[m.col_indices[k]];
        }
    }
    return gw;
}

// For transposed recurrent storage (row s = source): gW[k] = ga[dest] * src[s].
std::vector<float> recurrent_weight_grad(const CsrMatrix& m_t, const DenseVector& ga,
                                         const DenseVector& src) {
    std::vector<float> gw(m_t.nnz(), 0.0f);
    for (std::uint32_t s = 0; s < m_t.n_rows; ++s) {
        for (std::uint32_t k = m_t.row_extents[s]; k < m_t.row_extents[s + 1]; ++k) {
            gw[k] = ga[m_t.col_indices[k]] * src[s];
        }
    }
    return gw;
}

} // namespace

StepGradients step_backward(const EgruLayerParams& p, const DenseVector& x,
                            const EgruState& s_prev, const StepTrace& trace,
                            const OutputGrad& out_grad) {
    require_dim(x.size(), p.n_in, "step_backward input");
    require_dim(trace.c_pre.size(), p.n_units, "step_backward trace");
    require_dim(out_grad.y.size(), p.n_units, "step_backward dL/dy");
    if (!out_grad.c.empty()) {
        require_dim(out_grad.c.size(), p.n_units, "step_backward dL/dc");
    }

    const std::uint32_t n = p.n_units;
    const DenseVector y_prev_dense = densify(s_prev.y);

    // Through emission: dy/dc_pre = H + c_pre * sg, dc_post/dc_pre = 1 - theta * sg.
    DenseVector g_c_pre(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const float sg = surrogate_deriv(trace.c_pre[i] - p.theta[i], p.lambda_sg, p.epsilon_sg);
        const float h = trace.fired[i] != 0 ? 1.0f : 0.0f;
        const float gy = out_grad.y[i] * (h + trace.c_pre[i] * sg);
        const float gc = out_grad.c.empty() ? 0.0f : out_grad.c[i] * (1.0f - p.theta[i] * sg);
        g_c_pre[i] = gy + gc;
    }

    // Through the state update.
    StepGradients g;
    g.c_prev.resize(n);
    DenseVector ga_u(n), ga_r(n), ga_z(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const float gu = g_c_pre[i] * (trace.z[i] - s_prev.c[i]);
        const float gz = g_c_pre[i] * trace.u[i];
        g.c_prev[i] = g_c_pre[i] * (1.0f - trace.u[i]);
        ga_u[i] = gu * trace.u[i] * (1.0f - trace.u[i]);
        ga_z[i] = gz * (1.0f - trace.z[i] * trace.z[i]);
    }

    // Through the candidate's gated recurrence: g_gated = W_z_y * ga_z.
    DenseVector g_gated = dense_matvec(p.w_z_y, ga_z);
    DenseVector g_y_prev(n, 0.0f);
    DenseVector gr(n);
    for (std::uint32_t s = 0; s < n; ++s) {
        gr[s] = g_gated[s] * y_prev_dense[s];
        g_y_prev[s] += g_gated[s] * trace.r[s];
        ga_r[s] = gr[s] * trace.r[s] * (1.0f - trace.r[s]);
    }

    // Through the u/r recurrences.
    const DenseVector g_y_u = dense_matvec(p.w_u_y, ga_u);
    const DenseVector g_y_r = dense_matvec(p.w_r_y, ga_r);
    for (std::uint32_t s = 0; s < n; ++s) {
        g_y_prev[s] += g_y_u[s] + g_y_r[s];
    }
    g.y_prev = std::move(g_y_prev);

    g.b_u = ga_u;
    g.b_r = ga_r;
    g.b_z = ga_z;

    g.x.assign(p.n_in, 0.0f);
    accumulate_input_grad(p.w_u_x, ga_u, g.x);
    accumulate_input_grad(p.w_r_x, ga_r, g.x);
    accumulate_input_grad(p.w_z_x, ga_z, g.x);

    g.w_u_x = input_weight_grad(p.w_u_x, ga_u, x);
    g.w_r_x = input_weight_grad(p.w_r_x, ga_r, x);
    g.w_z_x = input_weight_grad(p.w_z_x, ga_z, x);

    DenseVector gated(n);
    for (std::uint32_t s = 0; s < n; ++s) {
        gated[s] = trace.r[s] * y_prev_dense[s];
    }
    g.w_u_y = recurrent_weight_grad(p.w_u_y, ga_u, y_prev_dense);
    g.w_r_y = recurrent_weight_grad(p.w_r_y, ga_r, y_prev_dense);
    g.w_z_y = recurrent_weight_grad(p.w_z_y, ga_z, gated);
    return g;
}

std::vector<EgruState> fresh_states(const std::vector<EgruLayerParams>& layers) {
    std::vector<EgruState> states;
    states.reserve(layers.size());
    for (const EgruLayerParams& l : layers) {
        states.push_back(EgruState::fresh(l.n_units));
    }
    return states;
}

EventVector step_stack(const std::vector<EgruLayerParams>& layers,
                       std::vector<EgruState>& states, const DenseVector& x) {
    require_dim(states.size(), layers.size(), "step_stack states");
    DenseVector input = x;
    EventVector out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        StepResult r = egru_step(layers[l], input, states[l]);
        states[l] = std::move(r.state);
        out = states[l].y;
        if (l + 1 < layers.size()) {
            input = densify(states[l].y);
        }
    }
    return out;
}

} // namespace egru
