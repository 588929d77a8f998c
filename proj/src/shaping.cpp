#include "imdd/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace imdd::shaping {

namespace {

constexpr double kNormTol = 1e-12;
constexpr double kSymTol = 1e-12;

}  // namespace

void LevelAlphabet::validate() const {
    if (levels.size() < 2) {
        throw std::invalid_argument("alphabet needs at least 2 levels");
    }
    const double d = levels[1] - levels[0];
    if (!(d > 0.0)) {
        throw std::invalid_argument("alphabet levels must be strictly increasing");
    }
    for (std::size_t i = 1; i < levels.size(); ++i) {
        const double di = levels[i] - levels[i - 1];
        if (!(di > 0.0) || std::abs(di - d) > 1e-9 * std::abs(d)) {
            throw std::invalid_argument("alphabet levels must be uniformly spaced");
        }
    }
}

LevelAlphabet make_pam_alphabet(std::size_t m_levels) {
    LevelAlphabet a;
    a.levels.resize(m_levels);
    for (std::size_t i = 0; i < m_levels; ++i) {
        a.levels[i] = static_cast<double>(i);
    }
    a.validate();
    return a;
}

void ShapedDistribution::validate() const {
    alphabet.validate();
    const std::size_t m = alphabet.size();
    if (probs.size() != m) {
        throw std::logic_error("probability vector size mismatch");
    }
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::logic_error("negative or non-finite probability");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kNormTol) {
        throw std::logic_error("probabilities do not sum to 1");
    }
    for (std::size_t i = 0; i < m / 2; ++i) {
        if (std::abs(probs[i] - probs[m - 1 - i]) > kSymTol) {
            throw std::logic_error("distribution not symmetric about center");
        }
    }
    // Cap ordering: moving outward from the center never increases
    // probability, and strictly decreases it when nu > 0.
    const double c = alphabet.center();
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double da = std::abs(alphabet.levels[i] - c);
        const double db = std::abs(alphabet.levels[i + 1] - c);
        if (db > da && probs[i + 1] > probs[i] + kSymTol) {
            throw std::logic_error("probabilities increase away from center");
        }
        if (da > db && probs[i] > probs[i + 1] + kSymTol) {
            throw std::logic_error("probabilities increase away from center");
        }
    }
    if (nu > 0.0) {
        // Strict decrease over distinct distances on the upper half,
        // unless both sides have already underflowed to zero.
        const std::size_t half = m / 2;
        for (std::size_t i = half; i + 1 < m; ++i) {
            if (probs[i + 1] >= probs[i] && probs[i] > 0.0) {
                throw std::logic_error("cap shape not strictly decreasing for nu > 0");
            }
        }
    }
}

ShapedDistribution mb_distribution(const LevelAlphabet& alphabet, double nu,
                                   double alpha) {
    alphabet.validate();
    if (!std::isfinite(nu) || nu < 0.0) {
        throw std::invalid_argument("shaping parameter nu must be finite and >= 0");
    }
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw std::invalid_argument("gaussian order alpha must be finite and > 0");
    }

    const std::size_t m = alphabet.size();
    const double c = alphabet.center();

    // Work with shifted exponents so huge nu values underflow cleanly
    // instead of producing 0/0.
    std::vector<double> expo(m);
    double emax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        expo[i] = -nu * std::pow(std::abs(alphabet.levels[i] - c), alpha);
        emax = std::max(emax, expo[i]);
    }
    ShapedDistribution dist;
    dist.alphabet = alphabet;
    dist.nu = nu;
    dist.alpha = alpha;
    dist.probs.resize(m);
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        dist.probs[i] = std::exp(expo[i] - emax);
        sum += dist.probs[i];
    }
    for (double& p : dist.probs) {
        p /= sum;
    }
    // Symmetrize exactly: equal distances share one weight.
    for (std::size_t i = 0; i < m / 2; ++i) {
        const double p = 0.5 * (dist.probs[i] + dist.probs[m - 1 - i]);
        dist.probs[i] = p;
        dist.probs[m - 1 - i] = p;
    }
    return dist;
}

double entropy_of_probs(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) {
            h -= p * std::log2(p);
        }
    }
    return h;
}

double entropy(const ShapedDistribution& dist) {
    return entropy_of_probs(dist.probs);
}

double solve_v_for_entropy(const LevelAlphabet& alphabet, double alpha,
                           double target_h, double tol, int max_iterations) {
    alphabet.validate();
    if (!(tol > 0.0)) {
        throw std::invalid_argument("tolerance must be positive");
    }
    const double h_max = std::log2(static_cast<double>(alphabet.size()));
    // The cap family on an even alphabet approaches 1 bit as v grows
    // (two levels equidistant from the center survive).
    if (!(target_h > 1.0) || target_h > h_max + 1e-12) {
        throw std::domain_error("target entropy outside achievable range (1, log2 M]");
    }
    if (target_h >= h_max) {
        return 0.0;
    }

    auto h_of = [&](double v) {
        return entropy(mb_distribution(alphabet, v, alpha));
    };

    double lo = 0.0;             // H(lo) >= target
    double hi = 1.0;
    int grow = 0;
    while (h_of(hi) > target_h) {
        hi *= 2.0;
        if (++grow > 200) {
            throw std::domain_error("failed to bracket target entropy");
        }
    }
    double v = hi;
    for (int it = 0; it < max_iterations; ++it) {
        v = 0.5 * (lo + hi);
        const double h = h_of(v);
        if (std::abs(h - target_h) <= tol) {
            return v;
        }
        if (h > target_h) {
            lo = v;
        } else {
            hi = v;
        }
    }
    return v;
}

void RatePlan::validate() const {
    if (!(net_rate > 0.0) || !(baud > 0.0) || m <= 0 || !(r_fec > 0.0) ||
        r_fec > 1.0) {
        throw std::logic_error("rate plan fields out of range");
    }
    if (!(entropy > 1.0) || entropy > static_cast<double>(m) + 1e-12) {
        throw std::logic_error("rate plan entropy outside (1, m]");
    }
    const double achieved = baud * (entropy - m * (1.0 - r_fec));
    if (std::abs(achieved - net_rate) > 0.005 * net_rate) {
        throw std::logic_error("rate plan violates SE equation by more than 0.5%");
    }
}

double required_entropy(double net_rate, double baud, int m, double r_fec) {
    if (!(net_rate > 0.0) || !(baud > 0.0) || m <= 0) {
        throw std::invalid_argument("rates and bit-levels must be positive");
    }
    if (!(r_fec > 0.0) || r_fec > 1.0) {
        throw std::invalid_argument("r_fec must be in (0, 1]");
    }
    const double h = net_rate / baud + m * (1.0 - r_fec);
    if (h > static_cast<double>(m)) {
        throw std::domain_error(
            "infeasible plan: required entropy " + std::to_string(h) +
            " exceeds " + std::to_string(m) + " bit/symbol");
    }
    if (!(h > 0.0)) {
        throw std::invalid_argument("required entropy must be positive");
    }
    return h;
}

double spectral_efficiency(const RatePlan& plan) {
    return plan.entropy - plan.m * (1.0 - plan.r_fec);
}

RatePlan make_rate_plan(double net_rate, double baud, int m, double r_fec) {
    RatePlan plan;
    plan.net_rate = net_rate;
    plan.baud = baud;
    plan.m = m;
    plan.r_fec = r_fec;
    plan.entropy = required_entropy(net_rate, baud, m, r_fec);
    plan.validate();
    return plan;
}

}  // namespace imdd::shaping
