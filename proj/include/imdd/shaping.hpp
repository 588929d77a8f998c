#pragma once

#include <cstddef>
#include <vector>

namespace imdd::shaping {

// Ordered, uniformly spaced set of nominal PAM intensity levels.
// Levels are kept unit-free (0..M-1 by default); any physical scaling
// is an affine map applied by the transmitter DSP.
struct LevelAlphabet {
    std::vector<double> levels;

    std::size_t size() const { return levels.size(); }
    double center() const { return 0.5 * (levels.front() + levels.back()); }
    double spacing() const { return levels[1] - levels[0]; }

    // Throws std::invalid_argument unless strictly increasing,
    // uniformly spaced and M >= 2.
    void validate() const;
};

LevelAlphabet make_pam_alphabet(std::size_t m_levels);

// Super-Gaussian Maxwell-Boltzmann family on a PAM alphabet:
// p_i proportional to exp(-nu * |x_i - center|^alpha). nu = 0 is the
// uniform distribution; alpha = 2 is the classic MB case. Probabilities
// peak at mid-intensity ("cap" orientation).
struct ShapedDistribution {
    LevelAlphabet alphabet;
    std::vector<double> probs;
    double nu = 0.0;
    double alpha = 2.0;

    // Checks normalization (1e-12), symmetry about the alphabet center
    // (1e-12) and the cap ordering (non-increasing away from center,
    // strictly decreasing for nu > 0). Throws std::logic_error.
    void validate() const;
};

ShapedDistribution mb_distribution(const LevelAlphabet& alphabet, double nu,
                                   double alpha);

// Shannon entropy in bit/symbol, with 0*log(0) = 0.
double entropy(const ShapedDistribution& dist);
double entropy_of_probs(const std::vector<double>& probs);

// Solves entropy(mb_distribution(alphabet, v, alpha)) == target_h by
// bisection over v (entropy is strictly decreasing in v). The bracket
// is grown geometrically until it straddles the target.
// Throws std::domain_error for targets outside (1, log2 M].
double solve_v_for_entropy(const LevelAlphabet& alphabet, double alpha,
                           double target_h, double tol = 1e-9,
                           int max_iterations = 200);

// Net rate, symbol rate, FEC rate and entropy tied together by
// SE = H - m(1 - r_fec), net = baud * SE.
struct RatePlan {
    double net_rate = 0.0;  // bit/s
    double baud = 0.0;      // symbol/s
    int m = 3;              // bit-levels per symbol
    double r_fec = 1.0;     // FEC code rate in (0, 1]
    double entropy = 0.0;   // bit/symbol

    // Throws std::logic_error when the rate equation closes worse than
    // 0.5% relative or the entropy leaves (1, m].
    void validate() const;
};

// Entropy needed to hit net_rate at the given baud and FEC rate:
// H = net_rate/baud + m(1 - r_fec).
// Throws std::domain_error when H > m (infeasible) or H <= 0.
double required_entropy(double net_rate, double baud, int m, double r_fec);

// SE = H - m(1 - r_fec), in bit/symbol.
double spectral_efficiency(const RatePlan& plan);

// Convenience: builds a validated plan with entropy from required_entropy.
RatePlan make_rate_plan(double net_rate, double baud, int m, double r_fec);

}  // namespace imdd::shaping
