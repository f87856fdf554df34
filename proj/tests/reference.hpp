// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Literal dense reference of the cell dynamics, independent of the CSR and
// simulator code paths. Templated on the scalar: float instantiations must
// match the engine bit for bit (the accumulation order mirrors the engine's
// canonical order: input projection in ascending column order, then bias,
// then recurrent contributions in ascending source order), and double
// instantiations back the finite-difference gradient oracle.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "egru/cell.hpp"
#include "egru/sparse.hpp"

namespace ref {

template <typename T>
struct Layer {
    std::uint32_t n_in = 0;
    std::uint32_t n_units = 0;
    // Row-major dense. Recurrent matrices are in natural orientation:
    // w*y[dest][src].
    std::vector<T> wux, wrx, wzx;
    std::vector<T> wuy, wry, wzy;
    std::vector<T> b_u, b_r, b_z, theta;
    T lambda{1};
    T epsilon{1};
};

template <typename T>
std::vector<T> widen(const std::vector<float>& v) {
    return std::vector<T>(v.begin(), v.end());
}

template <typename T>
Layer<T> layer_from_params(const egru::EgruLayerParams& p) {
    Layer<T> l;
    l.n_in = p.n_in;
    l.n_units = p.n_units;
    l.wux = widen<T>(egru::csr_to_dense(p.w_u_x).values);
    l.wrx = widen<T>(egru::csr_to_dense(p.w_r_x).values);
    l.wzx = widen<T>(egru::csr_to_dense(p.w_z_x).values);
    // Transpose the stored recurrent matrices back to [dest][src].
    const auto untranspose = [&](const egru::CsrMatrix& m_t) {
        const egru::DenseMatrix d = egru::csr_to_dense(m_t);
        std::vector<T> out(static_cast<std::size_t>(p.n_units) * p.n_units);
        for (std::uint32_t s = 0; s < p.n_units; ++s) {
            for (std::uint32_t dst = 0; dst < p.n_units; ++dst) {
                out[static_cast<std::size_t>(dst) * p.n_units + s] =
                    static_cast<T>(d.at(s, dst));
            }
        }
        return out;
    };
    l.wuy = untranspose(p.w_u_y);
    l.wry = untranspose(p.w_r_y);
    l.wzy = untranspose(p.w_z_y);
    l.b_u = widen<T>(p.b_u);
    l.b_r = widen<T>(p.b_r);
    l.b_z = widen<T>(p.b_z);
    l.theta = widen<T>(p.theta);
    l.lambda = static_cast<T>(p.lambda_sg);
    l.epsilon = static_cast<T>(p.epsilon_sg);
    return l;
}

template <typename T>
struct State {
    std::vector<T> c;
    std::vector<T> y;
};

template <typename T>
State<T> fresh_state(std::uint32_t n_units) {
    return {std::vector<T>(n_units, T{0}), std::vector<T>(n_units, T{0})};
}

template <typename T>
struct Step {
    State<T> next;
    std::vector<T> u, r, z, c_pre;
    std::vector<std::uint8_t> fired;
};

template <typename T>
T sigmoid(T x) {
    return T{1} / (T{1} + std::exp(-x));
}

// One step of Eqs. (1)-(5): gates from [x; y], candidate from [x; r.*y],
// convex state update, threshold emission with subtractive reset.
template <typename T>
Step<T> step(const Layer<T>& l, const std::vector<T>& x, const State<T>& s) {
    const std::uint32_t n = l.n_units;
    Step<T> out;
    out.u.resize(n);
    out.r.resize(n);
    out.z.resize(n);
    out.c_pre.resize(n);
    out.fired.resize(n);
    out.next.c.resize(n);
    out.next.y.resize(n);

    std::vector<T> wx_u(n), wx_r(n), wx_z(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        T au{0}, ar{0}, az{0};
        for (std::uint32_t j = 0; j < l.n_in; ++j) {
            au += l.wux[static_cast<std::size_t>(i) * l.n_in + j] * x[j];
            ar += l.wrx[static_cast<std::size_t>(i) * l.n_in + j] * x[j];
            az += l.wzx[static_cast<std::size_t>(i) * l.n_in + j] * x[j];
        }
        wx_u[i] = au + l.b_u[i];
        wx_r[i] = ar + l.b_r[i];
        wx_z[i] = az;
    }

    for (std::uint32_t i = 0; i < n; ++i) {
        T ru{0}, rr{0};
        for (std::uint32_t src = 0; src < n; ++src) {
            ru += s.y[src] * l.wuy[static_cast<std::size_t>(i) * n + src];
            rr += s.y[src] * l.wry[static_cast<std::size_t>(i) * n + src];
        }
        out.u[i] = sigmoid(wx_u[i] + ru);
        out.r[i] = sigmoid(wx_r[i] + rr);
    }

    for (std::uint32_t i = 0; i < n; ++i) {
        T rz{0};
        for (std::uint32_t src = 0; src < n; ++src) {
            const T gated = out.r[src] * s.y[src];
            rz += gated * l.wzy[static_cast<std::size_t>(i) * n + src];
        }
        out.z[i] = std::tanh((wx_z[i] + rz) + l.b_z[i]);
    }

    for (std::uint32_t i = 0; i < n; ++i) {
        const T c_pre = out.u[i] * out.z[i] + (T{1} - out.u[i]) * s.c[i];
        out.c_pre[i] = c_pre;
        const bool fired = c_pre - l.theta[i] >= T{0};
        out.fired[i] = fired ? 1 : 0;
        if (fired) {
            out.next.y[i] = c_pre;
            out.next.c[i] = c_pre - l.theta[i];
        } else {
            out.next.y[i] = T{0};
            out.next.c[i] = c_pre;
        }
    }
    return out;
}

/// Stack step: layer k > 0 consumes layer k-1's dense output of the same
/// timestep. Returns the last layer's dense output.
template <typename T>
std::vector<T> step_stack(const std::vector<Layer<T>>& layers, std::vector<State<T>>& states,
                          const std::vector<T>& x) {
    std::vector<T> input = x;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        Step<T> s = step(layers[k], input, states[k]);
        states[k] = s.next;
        input = states[k].y;
    }
    return input;
}

/// Scalar loss used by the finite-difference oracle:
/// sum_i gy[i]*y[i] + gc[i]*c_post[i] after one step.
template <typename T>
T step_loss(const Layer<T>& l, const std::vector<T>& x, const State<T>& s,
            const std::vector<T>& gy, const std::vector<T>& gc) {
    const Step<T> out = step(l, x, s);
    T loss{0};
    for (std::uint32_t i = 0; i < l.n_units; ++i) {
        loss += gy[i] * out.next.y[i] + gc[i] * out.next.c[i];
    }
    return loss;
}

} // namespace ref
