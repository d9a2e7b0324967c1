#pragma once

#include <optional>

namespace msboot {

enum class TestMode { inside, outside };

// Signed distance and mean curvature of a region boundary, in standard
// deviation units. beta0 > 0 means the observation lies outside the region;
// the complement region has geometry (-beta0, -beta1). Standard errors and
// the covariance are carried along when an estimate produced them.
struct Geometry {
    double beta0 = 0.0;
    double beta1 = 0.0;
    std::optional<double> se_beta0;
    std::optional<double> se_beta1;
    std::optional<double> cov01;

    Geometry complement() const {
        Geometry g = *this;
        g.beta0 = -beta0;
        g.beta1 = -beta1;
        return g;
    }

    TestMode mode() const { return beta0 > 0.0 ? TestMode::outside : TestMode::inside; }
};

struct PValueTriple {
    double bp = 0.0;
    double au = 0.0;
    double si_prime = 0.0;
    std::optional<double> se_bp;
    std::optional<double> se_au;
    std::optional<double> se_si;
    TestMode mode = TestMode::inside;
};

} // namespace msboot
