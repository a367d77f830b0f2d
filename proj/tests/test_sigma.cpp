#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "she/sigma.hpp"

using namespace she;

TEST_CASE("linear nonlinearity") {
    SigmaSpec s = SigmaSpec::linear(2.0);
    CHECK(s.eval(0.0) == 0.0);
    CHECK(s.eval(3.0) == 6.0);
    CHECK(s.eval(-1.5) == -3.0);
    CHECK(s.L_sigma == 2.0);
    CHECK(s.Lip_sigma == 2.0);
    CHECK_THROWS_AS(SigmaSpec::linear(0.0), std::invalid_argument);
}

TEST_CASE("shifted sine stays inside its cone") {
    SigmaSpec s = SigmaSpec::shifted_sine(0.5);
    CHECK(s.eval(0.0) == 0.0);
    CHECK(s.eval(1.0) == doctest::Approx(1.0 + 0.5 * std::sin(1.0)));
    CHECK(s.L_sigma > 0.0);
    CHECK(s.L_sigma <= 1.0);
    CHECK(s.Lip_sigma >= 1.5);  // the ratio tends to 1 + c as a -> 0
    CHECK_THROWS_AS(SigmaSpec::shifted_sine(1.0), std::invalid_argument);
    CHECK_THROWS_AS(SigmaSpec::shifted_sine(-0.1), std::invalid_argument);
}

TEST_CASE("cone validation accepts factory specs") {
    for (auto s : {SigmaSpec::linear(1.0), SigmaSpec::linear(-3.0), SigmaSpec::shifted_sine(0.0),
                   SigmaSpec::shifted_sine(0.9)}) {
        ConeReport rep = validate_cone(s);
        INFO(s.name(), ": ", rep.message);
        CHECK(rep.ok);
        CHECK(rep.worst_lower >= s.L_sigma * (1.0 - 1e-12));
        CHECK(rep.worst_upper <= s.Lip_sigma * (1.0 + 1e-12));
    }
}

TEST_CASE("cone validation flags inflated constants") {
    SigmaSpec s = SigmaSpec::shifted_sine(0.5);
    s.L_sigma = 0.99;  // the true lower ratio dips well below this
    ConeReport rep = validate_cone(s);
    CHECK_FALSE(rep.ok);
    CHECK(rep.offending_a != 0.0);
}
