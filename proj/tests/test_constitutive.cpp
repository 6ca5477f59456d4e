#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "porelab/constitutive.hpp"

using namespace porelab;

TEST_CASE("carreau-yasuda closed form", "[constitutive]") {
    // eta0=2, eta_inf=1, kappa0=1, r=1.5, a=2 at s=1: 1 + 2^{-1/4}
    CarreauYasuda cy{2.0, 1.0, 1.0, 1.5, 2.0};
    auto law = ViscosityLaw::carreau_yasuda(cy);
    REQUIRE(law.eta(1.0) == Catch::Approx(1.0 + std::pow(2.0, -0.25)).epsilon(1e-14));
    REQUIRE(law.eta(1.0) == Catch::Approx(1.8408964152537145).epsilon(1e-12));

    // s=0 gives eta0 for any law
    REQUIRE(law.eta(0.0) == Catch::Approx(2.0).margin(1e-15));

    // r=2 collapses to the Newtonian coefficient eta0 for all s
    CarreauYasuda cy2{2.0, 1.0, 1.0, 2.0, 2.0};
    auto law2 = ViscosityLaw::carreau_yasuda(cy2);
    for (double s : {0.0, 0.3, 1.0, 17.0, 1e5}) REQUIRE(law2.eta(s) == 2.0);
    REQUIRE(law2.newtonian_part_only());
}

TEST_CASE("eta rejects negative shear", "[constitutive]") {
    auto law = ViscosityLaw::newtonian(1.0);
    REQUIRE_THROWS_AS(law.eta(-0.1), ValidationError);
}

TEST_CASE("parameter validation", "[constitutive]") {
    REQUIRE_THROWS_AS(ViscosityLaw::carreau_yasuda({1.0, 2.0, 1.0, 1.5, 2.0}), ValidationError);
    REQUIRE_THROWS_AS(ViscosityLaw::carreau_yasuda({2.0, 1.0, -1.0, 1.5, 2.0}), ValidationError);
    REQUIRE_THROWS_AS(ViscosityLaw::carreau_yasuda({2.0, 1.0, 1.0, 1.0, 2.0}), ValidationError);
    REQUIRE_THROWS_AS(ViscosityLaw::carreau_yasuda({2.0, 1.0, 1.0, 1.5, 0.5}), ValidationError);
}

TEST_CASE("stress basics", "[constitutive]") {
    CarreauYasuda cy{2.0, 1.0, 1.0, 1.5, 2.0};
    auto law = ViscosityLaw::carreau_yasuda(cy);

    Mat3 zero;
    REQUIRE(stress(law, zero, 1.0).frobenius() == 0.0);

    // Newtonian: exactly eta0 * D
    auto newt = ViscosityLaw::newtonian(3.0);
    Mat3 D;
    D(0, 0) = 1.0;
    D(1, 1) = -1.0;
    Mat3 s = stress(newt, D, 7.3);
    REQUIRE((s - D * 3.0).frobenius() == 0.0);

    // |D| = 1 instance scales by eta(1)
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Mat3 Dn = Mat3::diag(inv_sqrt2, -inv_sqrt2, 0.0);
    REQUIRE(Dn.frobenius() == Catch::Approx(1.0).epsilon(1e-14));
    Mat3 s2 = stress(law, Dn, 1.0);
    REQUIRE((s2 - Dn * 1.8408964152537145).frobenius() < 1e-12);

    Mat3 asym;
    asym(0, 1) = 1.0;
    REQUIRE_THROWS_AS(stress(law, asym, 1.0), ValidationError);
}

TEST_CASE("stress isotropy under rotations", "[constitutive]") {
    CarreauYasuda cy{2.0, 1.0, 1.0, 2.7, 1.3};
    auto law = ViscosityLaw::carreau_yasuda(cy);
    Rng rng(1234);
    for (int trial = 0; trial < 50; ++trial) {
        Mat3 D;
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                const double v = rng.normal();
                D(i, j) = v;
                D(j, i) = v;
            }
        // Rodrigues rotation about a random axis
        Vec3 ax{rng.normal(), rng.normal(), rng.normal()};
        const double nn = ax.norm();
        ax = ax * (1.0 / nn);
        const double th = rng.uniform(0.0, 2.0 * M_PI);
        const double c = std::cos(th), s = std::sin(th);
        Mat3 R;
        R(0, 0) = c + ax.x * ax.x * (1 - c);
        R(0, 1) = ax.x * ax.y * (1 - c) - ax.z * s;
        R(0, 2) = ax.x * ax.z * (1 - c) + ax.y * s;
        R(1, 0) = ax.y * ax.x * (1 - c) + ax.z * s;
        R(1, 1) = c + ax.y * ax.y * (1 - c);
        R(1, 2) = ax.y * ax.z * (1 - c) - ax.x * s;
        R(2, 0) = ax.z * ax.x * (1 - c) - ax.y * s;
        R(2, 1) = ax.z * ax.y * (1 - c) + ax.x * s;
        R(2, 2) = c + ax.z * ax.z * (1 - c);

        Mat3 lhs = R * stress(law, D, 0.8) * R.transpose();
        Mat3 rotD = R * D * R.transpose();
        // re-symmetrize away rotation roundoff before the contract check
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j) {
                const double v = 0.5 * (rotD(i, j) + rotD(j, i));
                rotD(i, j) = v;
                rotD(j, i) = v;
            }
        Mat3 rhs = stress(law, rotD, 0.8);
        REQUIRE((lhs - rhs).frobenius() <= 1e-12 * std::max(1.0, rhs.frobenius()));
    }
}

TEST_CASE("monotonicity sampling", "[constitutive]") {
    // Newtonian identity: ratio equals eta0 on every sample
    auto newt = ViscosityLaw::newtonian(1.0);
    auto rep = check_monotonicity(newt, 1.0, 500, 7);
    REQUIRE(rep.samples == 500);
    REQUIRE(rep.min_ratio == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(rep.max_ratio == Catch::Approx(1.0).epsilon(1e-12));

    // Carreau-Yasuda r in {1.3, 2.7}, beta in {1, 1e-2}: strictly positive
    // sampled coercivity. Frozen lower bounds recorded from seed 42.
    for (double r : {1.3, 2.7}) {
        CarreauYasuda cy{2.0, 1.0, 1.0, r, 2.0};
        auto law = ViscosityLaw::carreau_yasuda(cy);
        for (double beta : {1.0, 1e-2}) {
            auto rr = check_monotonicity(law, beta, 10000, 42);
            INFO("r=" << r << " beta=" << beta << " min=" << rr.min_ratio);
            REQUIRE(rr.positive());
            REQUIRE(rr.min_ratio > 0.5);  // both laws keep eta >= 1 here
        }
    }
}

TEST_CASE("growth envelope", "[constitutive]") {
    auto newt = ViscosityLaw::newtonian(2.0);
    REQUIRE(check_growth(newt, 1000).C == 0.0);

    CarreauYasuda r2{2.0, 1.0, 1.0, 2.0, 2.0};
    REQUIRE(check_growth(ViscosityLaw::carreau_yasuda(r2), 1000).C == 0.0);

    // r=1.5, a=1: g(s) = (1+s)^{-1/2} - 1, |g| <= min(s/2, 1)
    CarreauYasuda cy{2.0, 1.0, 1.0, 1.5, 1.0};
    auto rep = check_growth(ViscosityLaw::carreau_yasuda(cy), 4000);
    REQUIRE(rep.C <= 1.0);
    REQUIRE(rep.C >= 0.5);
}
