#include "msboot/normal.hpp"

#include "msboot/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace msboot;

TEST_SUITE("normal") {

TEST_CASE("upper tail against the quadrature oracle") {
    // spot values across the supported range
    for (const double x : {-8.0, -3.5, -1.71, -0.68, -0.14, 0.0, 0.45, 1.0,
                           1.3, 1.71, 2.21, 3.0, 5.5, 7.99}) {
        const double expected = oracle::normal_upper_tail(x);
        CHECK(upper_tail(x) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("published table values") {
    CHECK(upper_tail(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(upper_tail(1.71) == doctest::Approx(0.0436329365240319).epsilon(1e-12));
    CHECK(upper_tail(-0.68) == doctest::Approx(0.7517477695464295).epsilon(1e-12));
    CHECK(upper_tail(1.6449) == doctest::Approx(0.0499952174683463).epsilon(1e-12));
}

TEST_CASE("symmetry") {
    for (const double x : {0.1, 0.9, 2.3, 5.0, 7.5}) {
        CHECK(upper_tail(-x) == doctest::Approx(1.0 - upper_tail(x)).epsilon(1e-14));
    }
}

TEST_CASE("tail expansion joins the erfc branch smoothly") {
    // both branches are valid in [8, 26]; they must agree in relative terms
    for (double x = 8.0; x <= 26.0; x += 0.73) {
        const double cf = std::exp(log_upper_tail(x));
        const double via_erfc = 0.5 * std::erfc(x * 0.7071067811865476);
        CHECK(cf == doctest::Approx(via_erfc).epsilon(1e-12));
    }
}

TEST_CASE("log tail stays finite far past underflow") {
    const double lt = log_upper_tail(50.0);
    CHECK(std::isfinite(lt));
    // leading order -x^2/2 - log(x sqrt(2 pi))
    CHECK(lt == doctest::Approx(-0.5 * 2500.0 - std::log(50.0 * std::sqrt(2.0 * M_PI)))
                    .epsilon(1e-3));
    CHECK(std::isfinite(log_upper_tail(1000.0)));
    CHECK(log_upper_tail(-50.0) == doctest::Approx(0.0).epsilon(1e-300));
}

TEST_CASE("inverse round trip to 1e-12 relative") {
    // log-spaced p down to the deep tail plus the reflected range
    for (double p = 0.5; p > 1e-300; p *= 0.37) {
        const double z = upper_tail_inverse(p);
        const double back = std::exp(log_upper_tail(z));
        CHECK(back == doctest::Approx(p).epsilon(1e-12));
    }
    for (const double p : {0.6, 0.75, 0.9, 0.975, 0.999, 0.9999999}) {
        const double z = upper_tail_inverse(p);
        CHECK(upper_tail(z) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("inverse reference points") {
    CHECK(upper_tail_inverse(0.5) == 0.0);
    CHECK(upper_tail_inverse(0.0436) == doctest::Approx(1.7103563364616559).epsilon(1e-10));
    CHECK(upper_tail_inverse(0.975) == doctest::Approx(-1.959963984540054).epsilon(1e-10));
    CHECK(upper_tail_inverse(0.05) == doctest::Approx(1.6448536269514727).epsilon(1e-10));
    // against the oracle's bisected inverse
    for (const double p : {0.3, 0.12, 0.011, 0.0004}) {
        CHECK(upper_tail_inverse(p) ==
              doctest::Approx(oracle::normal_upper_tail_inverse(p)).epsilon(1e-9));
    }
}

TEST_CASE("inverse rejects out-of-domain probabilities") {
    CHECK_THROWS_AS(upper_tail_inverse(0.0), numeric_error);
    CHECK_THROWS_AS(upper_tail_inverse(1.0), numeric_error);
    CHECK_THROWS_AS(upper_tail_inverse(-0.2), numeric_error);
    CHECK_THROWS_AS(upper_tail_inverse(1.7), numeric_error);
}

TEST_CASE("tail ratio in log space survives deep tails") {
    CHECK(tail_ratio(2.0, 1.0) == doctest::Approx(0.1433934986988065).epsilon(1e-12));
    // both tails underflow as doubles, the ratio must not
    const double r = tail_ratio(40.0, 39.0);
    CHECK(std::isfinite(r));
    CHECK(r > 0.0);
    CHECK(r < 1.0);
    const double expected = std::exp(log_upper_tail(40.0) - log_upper_tail(39.0));
    CHECK(r == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("probability clamp keeps the open interval") {
    CHECK(clamp_probability(0.0) > 0.0);
    CHECK(clamp_probability(1.0) < 1.0);
    CHECK(clamp_probability(-3.0) > 0.0);
    CHECK(clamp_probability(0.5) == 0.5);
}

TEST_CASE("oracle self-checks against frozen external values") {
    // scipy.special.gammainc
    CHECK(oracle::gamma_p(2.5, 3.0) == doctest::Approx(0.6937810815867212).epsilon(1e-11));
    CHECK(oracle::gamma_p(0.5, 0.25) == doctest::Approx(0.5204998778130466).epsilon(1e-11));
    CHECK(oracle::gamma_p(10.0, 3.0) == doctest::Approx(0.0011024881301154815).epsilon(1e-11));
    // scipy.stats.ncx2.cdf
    CHECK(oracle::noncentral_chisq_cdf(100.0, 4.0, 121.0) ==
          doctest::Approx(0.12647992415677964).epsilon(1e-10));
    CHECK(oracle::noncentral_chisq_cdf(25.0, 4.0, 30.25) ==
          doctest::Approx(0.21542798491894882).epsilon(1e-10));
    CHECK(oracle::noncentral_chisq_cdf(100.0, 4.0, 81.0) ==
          doctest::Approx(0.8000159512616623).epsilon(1e-10));
    CHECK(oracle::noncentral_chisq_cdf(9.0, 2.0, 1.0) ==
          doctest::Approx(0.9562840284213643).epsilon(1e-10));
}

} // TEST_SUITE
