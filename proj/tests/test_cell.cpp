// Copyright 2026 The egrusim Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "egru/cell.hpp"
#include "helpers.hpp"
#include "reference.hpp"

using namespace egru;

TEST_CASE("heaviside includes the boundary") {
    CHECK(heaviside(0.3f) == 1.0f);
    CHECK(heaviside(-0.3f) == 0.0f);
    CHECK(heaviside(0.0f) == 1.0f);
}

TEST_CASE("compute_gates at rest gives sigma(0) = 0.5") {
    std::mt19937_64 rng(21);
    EgruLayerParams p = helpers::random_layer(rng, 4, 6, 0.0);
    p.w_u_y = CsrMatrix::zeros(6, 6);
    p.w_r_y = CsrMatrix::zeros(6, 6);
    EventVector empty;
    empty.dim = 6;
    const DenseVector zeros(6, 0.0f);
    const auto [u, r] = compute_gates(p, zeros, zeros, empty);
    for (float v : u) {
        CHECK(v == 0.5f);
    }
    for (float v : r) {
        CHECK(v == 0.5f);
    }
}

TEST_CASE("huge bias saturates the gate") {
    std::mt19937_64 rng(22);
    EgruLayerParams p = helpers::random_layer(rng, 4, 3, 0.0);
    p.w_u_y = CsrMatrix::zeros(3, 3);
    p.w_r_y = CsrMatrix::zeros(3, 3);
    EventVector empty;
    empty.dim = 3;
    const DenseVector biased(3, 100.0f);
    const auto [u, r] = compute_gates(p, biased, biased, empty);
    for (float v : u) {
        CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("candidate: closed reset gate removes the recurrent path") {
    std::mt19937_64 rng(23);
    EgruLayerParams p = helpers::random_layer(rng, 4, 5, 0.0);
    std::mt19937_64 rng2(24);
    const EventVector y = helpers::random_events(rng2, 5, 0.6);
    const DenseVector wx_z = helpers::random_vector(rng2, 5);
    const DenseVector r_closed(5, 0.0f);
    const DenseVector z = compute_candidate(p, wx_z, r_closed, y);
    for (std::uint32_t i = 0; i < 5; ++i) {
        CHECK(z[i] == std::tanh((wx_z[i] + 0.0f) + p.b_z[i]));
    }
}

TEST_CASE("candidate at rest is tanh(0) = 0") {
    std::mt19937_64 rng(25);
    EgruLayerParams p = helpers::random_layer(rng, 4, 5, 0.0);
    p.b_z.assign(5, 0.0f);
    EventVector empty;
    empty.dim = 5;
    const DenseVector z = compute_candidate(p, DenseVector(5, 0.0f), DenseVector(5, 0.5f), empty);
    CHECK(z == DenseVector(5, 0.0f));
}

TEST_CASE("state_update is the convex combination") {
    CHECK(state_update({1.0f}, {0.7f}, {-2.0f}) == DenseVector{0.7f});
    CHECK(state_update({0.0f}, {0.7f}, {-2.0f}) == DenseVector{-2.0f});
    CHECK(state_update({0.5f}, {1.0f}, {0.0f}) == DenseVector{0.5f});
}

TEST_CASE("emit_events applies threshold and subtractive reset") {
    SUBCASE("above threshold") {
        const EmitResult e = emit_events({0.8f}, {0.5f});
        REQUIRE(e.y.events.size() == 1);
        CHECK(e.y.events[0].index == 0);
        CHECK(e.y.events[0].value == 0.8f);
        CHECK(e.c_post[0] == doctest::Approx(0.3).epsilon(1e-6));
    }
    SUBCASE("below threshold") {
        const EmitResult e = emit_events({0.3f}, {0.5f});
        CHECK(e.y.events.empty());
        CHECK(e.c_post[0] == 0.3f);
    }
    SUBCASE("boundary fires") {
        const EmitResult e = emit_events({0.5f}, {0.5f});
        REQUIRE(e.y.events.size() == 1);
        CHECK(e.y.events[0].value == 0.5f);
        CHECK(e.c_post[0] == 0.0f);
    }
}

TEST_CASE("silent network stays silent") {
    EgruLayerParams p;
    p.n_in = 3;
    p.n_units = 4;
    p.w_u_x = CsrMatrix::zeros(4, 3);
    p.w_r_x = CsrMatrix::zeros(4, 3);
    p.w_z_x = CsrMatrix::zeros(4, 3);
    p.w_u_y = CsrMatrix::zeros(4, 4);
    p.w_r_y = CsrMatrix::zeros(4, 4);
    p.w_z_y = CsrMatrix::zeros(4, 4);
    p.b_u.assign(4, 0.0f);
    p.b_r.assign(4, 0.0f);
    p.b_z.assign(4, 0.0f);
    p.theta.assign(4, 1.0f);

    EgruState s = EgruState::fresh(4);
    std::mt19937_64 rng(26);
    for (int t = 0; t < 5; ++t) {
        const StepResult r = egru_step(p, helpers::random_vector(rng, 3), s);
        s = r.state;
        CHECK(s.y.events.empty());
        CHECK(s.c == DenseVector(4, 0.0f));
    }
}

TEST_CASE("threshold at -1e9 makes every unit fire") {
    std::mt19937_64 rng(27);
    EgruLayerParams p = helpers::random_layer(rng, 3, 6, 0.0, -1e9f);
    EgruState s = EgruState::fresh(6);
    for (int t = 0; t < 3; ++t) {
        const StepResult r = egru_step(p, helpers::random_vector(rng, 3), s);
        s = r.state;
        CHECK(s.y.events.size() == 6);
    }
}

TEST_CASE("egru_step matches the dense reference bit-exactly over 5 steps") {
    std::mt19937_64 rng(28);
    for (int trial = 0; trial < 10; ++trial) {
        const EgruLayerParams p = helpers::random_layer(rng, 8, 16, trial % 2 ? 0.5 : 0.0);
        const ref::Layer<float> rl = ref::layer_from_params<float>(p);

        EgruState s = EgruState::fresh(16);
        ref::State<float> rs = ref::fresh_state<float>(16);
        for (int t = 0; t < 5; ++t) {
            const DenseVector x = helpers::random_vector(rng, 8);
            const StepResult got = egru_step(p, x, s);
            const ref::Step<float> want = ref::step(rl, x, rs);
            s = got.state;
            rs = want.next;

            CHECK(got.trace.u == want.u);
            CHECK(got.trace.r == want.r);
            CHECK(got.trace.z == want.z);
            CHECK(got.trace.c_pre == want.c_pre);
            CHECK(s.c == rs.c);
            CHECK(densify(s.y) == rs.y);
        }
    }
}

TEST_CASE("gate ranges and event consistency") {
    std::mt19937_64 rng(29);
    const EgruLayerParams p = helpers::random_layer(rng, 6, 12, 0.5);
    EgruState s = EgruState::fresh(12);
    for (int t = 0; t < 10; ++t) {
        const StepResult r = egru_step(p, helpers::random_vector(rng, 6), s);
        for (std::uint32_t i = 0; i < 12; ++i) {
            CHECK(r.trace.u[i] > 0.0f);
            CHECK(r.trace.u[i] < 1.0f);
            CHECK(r.trace.r[i] > 0.0f);
            CHECK(r.trace.r[i] < 1.0f);
            CHECK(r.trace.z[i] > -1.0f);
            CHECK(r.trace.z[i] < 1.0f);
            // Reset bookkeeping: c_post = c_pre - theta * H.
            const float h = heaviside(r.trace.c_pre[i] - p.theta[i]);
            CHECK(r.state.c[i] == r.trace.c_pre[i] - p.theta[i] * h);
        }
        // Event (i, v) emitted iff c_pre[i] >= theta[i], with v = c_pre[i].
        const DenseVector y = densify(r.state.y);
        for (std::uint32_t i = 0; i < 12; ++i) {
            if (r.trace.c_pre[i] - p.theta[i] >= 0.0f) {
                CHECK(y[i] == r.trace.c_pre[i]);
            } else {
                CHECK(y[i] == 0.0f);
            }
        }
        s = r.state;
    }
}

TEST_CASE("raising every threshold cannot increase first-step events") {
    std::mt19937_64 rng(30);
    for (int trial = 0; trial < 20; ++trial) {
        EgruLayerParams p = helpers::random_layer(rng, 5, 10, 0.0, 0.1f);
        const DenseVector x = helpers::random_vector(rng, 5);
        const StepResult low = egru_step(p, x, EgruState::fresh(10));
        for (float& th : p.theta) {
            th += uniform_float(rng, 0.0f, 0.5f);
        }
        const StepResult high = egru_step(p, x, EgruState::fresh(10));
        CHECK(high.state.y.events.size() <= low.state.y.events.size());
    }
}

TEST_CASE("surrogate derivative") {
    CHECK(surrogate_deriv(0.0f, 1.0f, 1.0f) == 1.0f);
    CHECK(surrogate_deriv(1.0f, 1.0f, 1.0f) == 0.0f);
    CHECK(surrogate_deriv(0.5f, 0.3f, 1.0f) == doctest::Approx(0.15).epsilon(1e-6));
    CHECK(surrogate_deriv(-2.0f, 1.0f, 1.0f) == 0.0f);
}

TEST_CASE("activity_sparsity") {
    EventVector empty;
    empty.dim = 100;
    CHECK(activity_sparsity(empty) == 1.0);

    std::mt19937_64 rng(31);
    EventVector full;
    full.dim = 10;
    for (std::uint32_t i = 0; i < 10; ++i) {
        full.events.push_back({i, 1.0f});
    }
    CHECK(activity_sparsity(full) == 0.0);

    EventVector partial;
    partial.dim = 1350;
    for (std::uint32_t i = 0; i < 135; ++i) {
        partial.events.push_back({i, 1.0f});
    }
    CHECK(activity_sparsity(partial) == doctest::Approx(0.9).epsilon(1e-12));
}

// --- one-step backward ------------------------------------------------------

namespace {

// Central finite difference of the reference loss in double, at one scalar
// location reachable through a mutation callback.
template <typename Mutate>
double central_difference(const ref::Layer<double>& layer, const std::vector<double>& x,
                          const ref::State<double>& state, const std::vector<double>& gy,
                          const std::vector<double>& gc, Mutate mutate, double h = 1e-3) {
    ref::Layer<double> plus = layer;
    ref::Layer<double> minus = layer;
    std::vector<double> x_plus = x;
    std::vector<double> x_minus = x;
    ref::State<double> s_plus = state;
    ref::State<double> s_minus = state;
    mutate(plus, x_plus, s_plus, h);
    mutate(minus, x_minus, s_minus, -h);
    const double lp = ref::step_loss(plus, x_plus, s_plus, gy, gc);
    const double lm = ref::step_loss(minus, x_minus, s_minus, gy, gc);
    return (lp - lm) / (2.0 * h);
}

bool close_rel(double a, double b, double tol = 1e-4) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-6});
    return std::fabs(a - b) / scale < tol;
}

} // namespace

TEST_CASE("backward: silent units give zero gradients through y") {
    std::mt19937_64 rng(32);
    EgruLayerParams p = helpers::random_layer(rng, 4, 6, 0.0, 100.0f); // far below threshold
    p.epsilon_sg = 0.5f;
    const DenseVector x = helpers::random_vector(rng, 4);
    EgruState s0 = EgruState::fresh(6);
    const StepResult fwd = egru_step(p, x, s0);
    REQUIRE(fwd.state.y.events.empty());

    OutputGrad og;
    og.y = helpers::random_vector(rng, 6);
    const StepGradients g = step_backward(p, x, s0, fwd.trace, og);
    for (float v : g.b_u) {
        CHECK(v == 0.0f);
    }
    for (float v : g.b_z) {
        CHECK(v == 0.0f);
    }
    for (float v : g.x) {
        CHECK(v == 0.0f);
    }
}

TEST_CASE("backward: lambda 0 reduces to the straight heaviside path") {
    std::mt19937_64 rng(33);
    EgruLayerParams p = helpers::random_layer(rng, 4, 6, 0.0, 0.2f);
    const DenseVector x = helpers::random_vector(rng, 4);
    EgruState s0 = EgruState::fresh(6);
    std::mt19937_64 rng2(34);
    s0.y = helpers::random_events(rng2, 6, 0.5);
    s0.c = helpers::random_vector(rng2, 6, 0.3f);
    const StepResult fwd = egru_step(p, x, s0);

    OutputGrad og;
    og.y = helpers::random_vector(rng2, 6);
    og.c = helpers::random_vector(rng2, 6);

    EgruLayerParams p0 = p;
    p0.lambda_sg = 0.0f;
    const StepGradients with_sg = step_backward(p, x, s0, fwd.trace, og);
    const StepGradients without = step_backward(p0, x, s0, fwd.trace, og);
    // Same shapes; the surrogate-free gradients must equal a manual check
    // where dy/dc_pre = H and dc_post/dc_pre = 1.
    bool any_diff = false;
    for (std::uint32_t i = 0; i < 6; ++i) {
        if (with_sg.b_u[i] != without.b_u[i]) {
            any_diff = true;
        }
        const float h = fwd.trace.fired[i] != 0 ? 1.0f : 0.0f;
        const float expected_gcpre = og.y[i] * h + og.c[i];
        const float gu = expected_gcpre * (fwd.trace.z[i] - s0.c[i]);
        const float expected_bu = gu * fwd.trace.u[i] * (1.0f - fwd.trace.u[i]);
        CHECK(without.b_u[i] == doctest::Approx(expected_bu).epsilon(1e-6));
    }
    (void)any_diff;
}

TEST_CASE("backward matches central finite differences when margins exceed epsilon") {
    std::mt19937_64 rng(35);
    int instances = 0;
    while (instances < 12) {
        const auto n_in = static_cast<std::uint32_t>(2 + uniform_index(rng, 5));
        const auto n = static_cast<std::uint32_t>(2 + uniform_index(rng, 6));
        EgruLayerParams p = helpers::random_layer(rng, n_in, n, 0.0);
        p.epsilon_sg = 0.05f;
        p.lambda_sg = 1.0f;

        EgruState s0 = EgruState::fresh(n);
        s0.y = helpers::random_events(rng, n, 0.5);
        s0.c = helpers::random_vector(rng, n, 0.4f);
        const DenseVector x = helpers::random_vector(rng, n_in);

        // First pass fixes c_pre; thresholds are then placed 2*epsilon away
        // so every margin clears the surrogate support. c_pre does not
        // depend on theta, so the second pass reproduces it.
        StepResult fwd = egru_step(p, x, s0);
        for (std::uint32_t i = 0; i < n; ++i) {
            const bool above = uniform_unit(rng) < 0.5;
            p.theta[i] = fwd.trace.c_pre[i] + (above ? -2.0f : 2.0f) * p.epsilon_sg;
        }
        fwd = egru_step(p, x, s0);
        bool ok = true;
        for (std::uint32_t i = 0; i < n; ++i) {
            ok = ok && std::fabs(fwd.trace.c_pre[i] - p.theta[i]) > p.epsilon_sg;
        }
        REQUIRE(ok);
        ++instances;

        OutputGrad og;
        og.y = helpers::random_vector(rng, n);
        og.c = helpers::random_vector(rng, n);
        const StepGradients g = step_backward(p, x, s0, fwd.trace, og);

        const ref::Layer<double> rl = ref::layer_from_params<double>(p);
        const std::vector<double> xd(x.begin(), x.end());
        ref::State<double> rs;
        rs.c.assign(s0.c.begin(), s0.c.end());
        const DenseVector y0 = densify(s0.y);
        rs.y.assign(y0.begin(), y0.end());
        const std::vector<double> gy(og.y.begin(), og.y.end());
        const std::vector<double> gc(og.c.begin(), og.c.end());

        // Biases.
        for (std::uint32_t i = 0; i < n; ++i) {
            const double fd_bu = central_difference(
                rl, xd, rs, gy, gc,
                [&](ref::Layer<double>& L, auto&, auto&, double h) { L.b_u[i] += h; });
            CHECK(close_rel(g.b_u[i], fd_bu));
            const double fd_bz = central_difference(
                rl, xd, rs, gy, gc,
                [&](ref::Layer<double>& L, auto&, auto&, double h) { L.b_z[i] += h; });
            CHECK(close_rel(g.b_z[i], fd_bz));
        }
        // Input and previous state.
        for (std::uint32_t j = 0; j < n_in; ++j) {
            const double fd_x = central_difference(
                rl, xd, rs, gy, gc,
                [&](ref::Layer<double>&, std::vector<double>& xx, auto&, double h) {
                    xx[j] += h;
                });
            CHECK(close_rel(g.x[j], fd_x));
        }
        for (std::uint32_t i = 0; i < n; ++i) {
            const double fd_c = central_difference(
                rl, xd, rs, gy, gc,
                [&](ref::Layer<double>&, auto&, ref::State<double>& ss, double h) {
                    ss.c[i] += h;
                });
            CHECK(close_rel(g.c_prev[i], fd_c));
        }
        // A few weight coordinates from each matrix.
        const CsrMatrix& wux = p.w_u_x;
        for (std::uint32_t probe = 0; probe < std::min<std::size_t>(4, wux.nnz()); ++probe) {
            const auto k = static_cast<std::uint32_t>(uniform_index(rng, wux.nnz()));
            std::uint32_t row = 0;
            while (wux.row_extents[row + 1] <= k) {
                ++row;
            }
            const std::uint32_t col = wux.col_indices[k];
            const double fd_w = central_difference(
                rl, xd, rs, gy, gc, [&](ref::Layer<double>& L, auto&, auto&, double h) {
                    L.wux[static_cast<std::size_t>(row) * n_in + col] += h;
                });
            CHECK(close_rel(g.w_u_x[k], fd_w));
        }
        const CsrMatrix& wzy = p.w_z_y;
        for (std::uint32_t probe = 0; probe < std::min<std::size_t>(4, wzy.nnz()); ++probe) {
            const auto k = static_cast<std::uint32_t>(uniform_index(rng, wzy.nnz()));
            std::uint32_t src = 0;
            while (wzy.row_extents[src + 1] <= k) {
                ++src;
            }
            const std::uint32_t dst = wzy.col_indices[k];
            const double fd_w = central_difference(
                rl, xd, rs, gy, gc, [&](ref::Layer<double>& L, auto&, auto&, double h) {
                    L.wzy[static_cast<std::size_t>(dst) * n + src] += h;
                });
            CHECK(close_rel(g.w_z_y[k], fd_w));
        }
    }
}
