#include <cmath>

#include <gtest/gtest.h>

#include "bpscope/ansatz.hpp"
#include "bpscope/bounds.hpp"
#include "bpscope/twirl.hpp"
#include "support.hpp"

using namespace bpscope;

namespace {

Circuit ladder(int n) {
    AnsatzSpec s;
    s.family = Family::ladder;
    s.n = n;
    return build(s).circuit;
}

Hamiltonian z_on(int n, int q, double c = 1.0) {
    Hamiltonian h(n);
    h.add(c, PauliString::single(n, q, Letter::Z));
    return h;
}

}  // namespace

TEST(Bounds, Theorem1Examples) {
    Circuit one = ladder(2);
    EXPECT_NEAR(theorem1_bound(one, z_on(2, 0), 3).total, 0.4, 1e-15);
    Circuit l = ladder(4);
    EXPECT_NEAR(theorem1_bound(l, z_on(4, 3), cartan_param(1, CartanGate::R_yy)).total, 2.0 / 75.0, 1e-15);
    Circuit apart(4);
    add_cartan_block(apart, 0, 1);
    add_cartan_block(apart, 2, 3);
    auto r = theorem1_bound(apart, z_on(4, 3), 0);
    EXPECT_EQ(r.total, 0.0);
    EXPECT_FALSE(r.per_term[0].path_set);
}

TEST(Bounds, Theorem2Examples) {
    Circuit one = ladder(2);
    EXPECT_NEAR(theorem2_bound(one, z_on(2, 0), 3).total, 0.125, 1e-15);
    Circuit l = ladder(5);
    EXPECT_EQ(theorem2_bound(l, z_on(5, 4), 0).total, 0.0);
    EXPECT_NEAR(theorem2_bound(l, z_on(5, 2), cartan_param(1, CartanGate::R_y1)).total, 2.0 / 256.0, 1e-15);
}

TEST(Bounds, LadderExamples) {
    Circuit l = ladder(5);
    EXPECT_NEAR(ladder_bound(l, z_on(5, 4), cartan_param(3, CartanGate::R_yy)).total, 0.125, 1e-15);
    EXPECT_NEAR(ladder_bound(l, z_on(5, 4), cartan_param(2, CartanGate::R_yy)).total, 1.0 / 128.0, 1e-15);
    EXPECT_EQ(ladder_bound(l, z_on(5, 1), cartan_param(3, CartanGate::R_yy)).total, 0.0);
    AnsatzSpec b;
    b.family = Family::brickwall;
    b.n = 4;
    b.repetitions = 3;
    Circuit bw = build(b).circuit;
    EXPECT_FALSE(is_ladder_layout(bw));
    EXPECT_THROW(ladder_bound(bw, z_on(4, 3), 0), Error);
}

TEST(Bounds, RejectsStructuredBlocksAndUncoveredTerms) {
    Circuit c(2);
    c.add_block(BlockKind::structured, {{PauliString::parse("ZZ"), 0, std::nullopt}});
    EXPECT_THROW(theorem1_bound(c, z_on(2, 0), 0), AssumptionViolation);
    Circuit l = ladder(3);
    Hamiltonian wide = z_on(3, 0);
    EXPECT_THROW(theorem1_bound(l, z_on(4, 3), 0), DimensionError);
    EXPECT_THROW(theorem2_bound(l, wide, 99), IndexError);
}

TEST(BoundsProperty, ValidityDominanceAndScaling) {
    Rng rng(41);
    for (int t = 0; t < 60; ++t) {
        int n = 2 + t % 5;
        Circuit c = testing_support::random_circuit(n, 1 + t % 5, rng);
        Hamiltonian H = testing_support::random_hamiltonian(c, 1 + t % 3, 2, rng);
        std::uniform_int_distribution<int> pick(0, c.param_count() - 1);
        int mu = pick(rng);
        double exact = exact_variance(c, H, mu).variance;
        auto t1 = theorem1_bound(c, H, mu), t2 = theorem2_bound(c, H, mu);
        EXPECT_GE(exact, t1.total * (1 - 1e-12));
        EXPECT_GE(t1.total, t2.total * (1 - 1e-12));
        EXPECT_GE(t2.total, 0.0);
        double sum = 0.0;
        for (const auto& pt : t1.per_term) {
            EXPECT_GE(pt.contribution, 0.0);
            sum += pt.contribution;
        }
        EXPECT_NEAR(sum, t1.total, 1e-15);
        Hamiltonian H3 = H.scaled(3.0);
        EXPECT_NEAR(theorem1_bound(c, H3, mu).total, 9.0 * t1.total, 1e-12 * (1 + t1.total));
        EXPECT_NEAR(theorem2_bound(c, H3, mu).total, 9.0 * t2.total, 1e-12 * (1 + t2.total));
    }
}
