#include "imdd/rxdsp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include "imdd/diag.hpp"
#include "imdd/fft.hpp"

namespace imdd::rxdsp {

namespace {

// 4-point (cubic Lagrange) interpolation at fractional position tau;
// requires floor(tau) in [1, n-3].
inline double cubic_interp(const std::vector<double>& x, double tau) {
    const auto i = static_cast<std::size_t>(tau);
    const double mu = tau - static_cast<double>(i);
    const double xm1 = x[i - 1], x0 = x[i], x1 = x[i + 1], x2 = x[i + 2];
    const double c_m1 = -mu * (mu - 1.0) * (mu - 2.0) / 6.0;
    const double c_0 = (mu + 1.0) * (mu - 1.0) * (mu - 2.0) / 2.0;
    const double c_1 = -(mu + 1.0) * mu * (mu - 2.0) / 2.0;
    const double c_2 = (mu + 1.0) * mu * (mu - 1.0) / 6.0;
    return c_m1 * xm1 + c_0 * x0 + c_1 * x1 + c_2 * x2;
}

double variance(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace

TimingResult timing_recover(const Waveform& wf, double baud,
                            const TimingOptions& opts) {
    wf.validate();
    if (!(baud > 0.0)) {
        throw std::invalid_argument("baud must be positive");
    }
    if (wf.sample_rate < 2.0 * baud * (1.0 - 1e-9)) {
        throw std::invalid_argument("timing recovery needs >= 2 samples/symbol");
    }
    const std::size_t n_in = wf.samples.size();
    if (n_in < 64) {
        throw std::invalid_argument("input too short for timing recovery");
    }

    // Mean removal and unit-power normalization stabilize the detector
    // gain across drive levels.
    std::vector<double> x(wf.samples);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n_in);
    double pwr = 0.0;
    for (double& v : x) {
        v -= mean;
        pwr += v * v;
    }
    pwr /= static_cast<double>(n_in);
    const double inv_rms = pwr > 0.0 ? 1.0 / std::sqrt(pwr) : 1.0;
    for (double& v : x) v *= inv_rms;

    const double base_step = wf.sample_rate / (2.0 * baud);

    // 2nd-order PI loop constants from (bandwidth, damping, detector gain).
    const double bn = opts.loop_bandwidth;
    const double zeta = opts.damping;
    const double theta = bn / (zeta + 0.25 / zeta);
    const double denom = 1.0 + 2.0 * zeta * theta + theta * theta;
    const double kp = 4.0 * zeta * theta / (denom * opts.detector_gain);
    const double ki = 4.0 * theta * theta / (denom * opts.detector_gain);

    TimingResult res;
    res.two_sps.sample_rate = 2.0 * baud;
    res.two_sps.samples.reserve(static_cast<std::size_t>(n_in / base_step) + 2);

    double tau = 2.0;
    double nu = 0.0;   // integral branch (rate correction)
    double ctl = 0.0;  // total control, applied per output sample

    while (tau >= 1.0 && static_cast<std::size_t>(tau) + 2 < n_in) {
        const double y = cubic_interp(x, tau);
        const std::size_t n = res.two_sps.samples.size();
        res.two_sps.samples.push_back(y);
        if (n % 2 == 0) {
            res.strobe_positions.push_back(tau);
            if (n >= 2) {
                const auto& o = res.two_sps.samples;
                const double e = o[n - 1] * (o[n] - o[n - 2]);
                res.error_history.push_back(e);
                nu += ki * e;
                ctl = kp * e + nu;
            }
        }
        // Positive error means the strobe is early: slow down the NCO.
        tau += base_step * (1.0 + ctl);
    }

    res.frequency_offset = nu;
    const std::size_t n_sym = res.two_sps.samples.size() / 2;
    res.settle_symbols =
        std::min(n_sym / 4, static_cast<std::size_t>(std::ceil(5.0 / bn)));

    // Convergence diagnostic: the TED error variance must not grow.
    const std::size_t ne = res.error_history.size();
    if (ne >= 64) {
        const std::span<const double> hist(res.error_history);
        const double var_early = variance(hist.subspan(ne / 4, ne / 4));
        const double var_late = variance(hist.subspan(ne - ne / 4, ne / 4));
        if (var_late > 2.0 * var_early + 1e-12) {
            std::ostringstream msg;
            msg << "timing loop not converging: late error variance " << var_late
                << " vs early " << var_early;
            throw TimingError(msg.str());
        }
    }
    return res;
}

std::vector<double> downsample_to_1sps(const Waveform& two_sps,
                                       std::size_t probe_offset_symbols,
                                       std::size_t probe_symbols) {
    const std::size_t n = two_sps.samples.size();
    const std::size_t n_sym = n / 2;
    if (n_sym == 0) return {};

    const std::size_t start = std::min(probe_offset_symbols, n_sym > 1 ? n_sym - 1 : 0);
    const std::size_t count = std::min(probe_symbols, n_sym - start);
    double e0 = 0.0, e1 = 0.0;
    for (std::size_t k = start; k < start + count; ++k) {
        e0 += two_sps.samples[2 * k] * two_sps.samples[2 * k];
        if (2 * k + 1 < n) e1 += two_sps.samples[2 * k + 1] * two_sps.samples[2 * k + 1];
    }
    const std::size_t phase = e1 > e0 ? 1 : 0;  // tie -> phase 0

    std::vector<double> out;
    out.reserve(n_sym);
    for (std::size_t k = phase; k < n; k += 2) {
        out.push_back(two_sps.samples[k]);
    }
    return out;
}

std::int64_t align_lag(const std::vector<double>& obs,
                       const std::vector<double>& ref) {
    if (obs.empty() || ref.empty()) {
        throw std::invalid_argument("align_lag: empty input");
    }
    const std::size_t need = obs.size() + ref.size();
    std::size_t len = 1;
    while (len < need) len <<= 1;

    auto centered = [](const std::vector<double>& v) {
        double m = std::accumulate(v.begin(), v.end(), 0.0) /
                   static_cast<double>(v.size());
        std::vector<std::complex<double>> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - m;
        return out;
    };

    auto a = centered(obs);
    auto b = centered(ref);
    a.resize(len);
    b.resize(len);
    const auto fa = fft::forward(a);
    const auto fb = fft::forward(b);
    std::vector<std::complex<double>> prod(len);
    for (std::size_t i = 0; i < len; ++i) {
        prod[i] = fb[i] * std::conj(fa[i]);
    }
    const auto corr = fft::inverse(prod);

    // corr[tau] = sum_i obs[i] * ref[i + tau], tau wrapped mod len.
    std::int64_t best_lag = 0;
    double best = -1.0;
    const auto n_obs = static_cast<std::int64_t>(obs.size());
    const auto n_ref = static_cast<std::int64_t>(ref.size());
    for (std::int64_t lag = -(n_obs - 1); lag < n_ref; ++lag) {
        const std::size_t idx =
            lag >= 0 ? static_cast<std::size_t>(lag)
                     : len - static_cast<std::size_t>(-lag);
        const double mag = std::abs(corr[idx]);
        if (mag > best) {
            best = mag;
            best_lag = lag;
        }
    }
    return best_lag;
}

std::size_t VolterraModel::feature_count(int l1, int l2, int l3) {
    if (l1 < 0 || l2 < 0 || l3 < 0 || l2 > l1 || l3 > l1) {
        throw std::invalid_argument("volterra memories need 0 <= l2,l3 <= l1");
    }
    const std::size_t n2 = static_cast<std::size_t>(l2) * (l2 + 1) / 2;
    const std::size_t n3 =
        static_cast<std::size_t>(l3) * (l3 + 1) * (l3 + 2) / 6;
    return 1 + static_cast<std::size_t>(l1) + n2 + n3;
}

void volterra_features(std::span<const double> window, int l2, int l3,
                       std::span<double> out) {
    const int l1 = static_cast<int>(window.size());
    std::size_t idx = 0;
    out[idx++] = 1.0;
    for (int i = 0; i < l1; ++i) {
        out[idx++] = window[i];
    }
    const int o2 = (l1 - l2) / 2;
    for (int i = 0; i < l2; ++i) {
        const double xi = window[o2 + i];
        for (int j = i; j < l2; ++j) {
            out[idx++] = xi * window[o2 + j];
        }
    }
    const int o3 = (l1 - l3) / 2;
    for (int i = 0; i < l3; ++i) {
        const double xi = window[o3 + i];
        for (int j = i; j < l3; ++j) {
            const double xij = xi * window[o3 + j];
            for (int k = j; k < l3; ++k) {
                out[idx++] = xij * window[o3 + k];
            }
        }
    }
}

VolterraModel train_volterra(const std::vector<double>& obs,
                             const std::vector<double>& reference,
                             std::size_t first, std::size_t last,
                             int l1, int l2, int l3, TrainMethod method) {
    if (l1 < 1) {
        throw std::invalid_argument("linear memory l1 must be >= 1");
    }
    const std::size_t n = std::min(obs.size(), reference.size());
    const std::size_t f_count = VolterraModel::feature_count(l1, l2, l3);
    const std::size_t half = static_cast<std::size_t>(l1) / 2;
    const std::size_t lo = std::max(first, half);
    const std::size_t hi_bound = n >= static_cast<std::size_t>(l1) - half
                                     ? n - (static_cast<std::size_t>(l1) - half)
                                     : 0;
    const std::size_t hi = std::min(last, hi_bound);
    if (hi <= lo) {
        throw std::invalid_argument("empty training range");
    }
    const std::size_t n_train = hi - lo;

    VolterraModel model;
    model.l1 = l1;
    model.l2 = l2;
    model.l3 = l3;
    model.w.assign(f_count, 0.0);

    if (method == TrainMethod::LeastSquares) {
        if (n_train < 10 * f_count) {
            throw std::invalid_argument(
                "least-squares training needs >= 10x coefficient count");
        }
        const auto f = static_cast<Eigen::Index>(f_count);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(f, f);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(f);

        using RowMajor =
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        constexpr std::size_t kBlock = 1024;
        RowMajor block(kBlock, f);
        Eigen::VectorXd target(kBlock);
        std::size_t row = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            volterra_features({obs.data() + (k - half), static_cast<std::size_t>(l1)},
                              l2, l3,
                              {block.row(static_cast<Eigen::Index>(row)).data(), f_count});
            target(static_cast<Eigen::Index>(row)) = reference[k];
            ++row;
            if (row == kBlock || k + 1 == hi) {
                const auto r = static_cast<Eigen::Index>(row);
                gram.selfadjointView<Eigen::Lower>().rankUpdate(
                    block.topRows(r).transpose());
                rhs.noalias() += block.topRows(r).transpose() * target.head(r);
                row = 0;
            }
        }
        Eigen::MatrixXd gram_full = gram.selfadjointView<Eigen::Lower>();

        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram_full);
        const auto& d = ldlt.vectorD();
        const double dmax = d.maxCoeff();
        bool healthy = ldlt.info() == Eigen::Success && d.minCoeff() > dmax * 1e-13;
        if (!healthy) {
            const double lambda = 1e-4 * gram_full.trace() / static_cast<double>(f);
            model.ridge_lambda = lambda;
            std::ostringstream msg;
            msg << "train_volterra: ill-conditioned normal equations, ridge lambda="
                << lambda;
            diag::warn(msg.str());
            gram_full.diagonal().array() += lambda;
            ldlt.compute(gram_full);
        }
        Eigen::VectorXd w = ldlt.solve(rhs);
        for (std::size_t i = 0; i < f_count; ++i) {
            model.w[i] = w(static_cast<Eigen::Index>(i));
        }
    } else {
        // Normalized LMS, a few passes over the training range.
        std::vector<double> phi(f_count);
        const double mu = 0.5;
        for (int pass = 0; pass < 4; ++pass) {
            for (std::size_t k = lo; k < hi; ++k) {
                volterra_features(
                    {obs.data() + (k - half), static_cast<std::size_t>(l1)}, l2,
                    l3, phi);
                double yhat = 0.0, norm = 1e-9;
                for (std::size_t i = 0; i < f_count; ++i) {
                    yhat += model.w[i] * phi[i];
                    norm += phi[i] * phi[i];
                }
                const double err = reference[k] - yhat;
                const double g = mu * err / norm;
                for (std::size_t i = 0; i < f_count; ++i) {
                    model.w[i] += g * phi[i];
                }
            }
        }
    }

    // Training MSE, streamed over the same range.
    std::vector<double> phi(f_count);
    double sq = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
        volterra_features({obs.data() + (k - half), static_cast<std::size_t>(l1)},
                          l2, l3, phi);
        double yhat = 0.0;
        for (std::size_t i = 0; i < f_count; ++i) yhat += model.w[i] * phi[i];
        const double err = reference[k] - yhat;
        sq += err * err;
    }
    model.training_mse = sq / static_cast<double>(n_train);
    return model;
}

EqualizedSignal equalize(const std::vector<double>& obs,
                         const VolterraModel& model) {
    const std::size_t n = obs.size();
    const std::size_t f_count =
        VolterraModel::feature_count(model.l1, model.l2, model.l3);
    if (model.w.size() != f_count) {
        throw std::invalid_argument("model coefficient count mismatch");
    }
    EqualizedSignal out;
    out.edge = (static_cast<std::size_t>(model.l1) + 1) / 2;
    out.values.assign(n, 0.0);
    if (n < static_cast<std::size_t>(model.l1)) {
        return out;
    }
    const std::size_t half = static_cast<std::size_t>(model.l1) / 2;
    const std::size_t lo = out.edge;
    const std::size_t hi = n - out.edge;
    std::vector<double> phi(f_count);
    for (std::size_t k = lo; k < hi; ++k) {
        volterra_features({obs.data() + (k - half), static_cast<std::size_t>(model.l1)},
                          model.l2, model.l3, phi);
        double acc = 0.0;
        for (std::size_t i = 0; i < f_count; ++i) acc += model.w[i] * phi[i];
        out.values[k] = acc;
    }
    return out;
}

DecisionRule map_thresholds(const std::vector<double>& level_means,
                            const std::vector<double>& sigma,
                            const std::vector<double>& priors) {
    const std::size_t m = level_means.size();
    if (m < 2) {
        throw std::invalid_argument("need at least two levels");
    }
    if (priors.size() != m) {
        throw std::invalid_argument("priors size mismatch");
    }
    if (sigma.size() != 1 && sigma.size() != m) {
        throw std::invalid_argument("sigma must be pooled (1) or per-level (M)");
    }
    for (std::size_t i = 1; i < m; ++i) {
        if (!(level_means[i] > level_means[i - 1])) {
            throw std::invalid_argument("level means must be strictly increasing");
        }
    }
    for (double s : sigma) {
        if (!(s > 0.0)) {
            throw std::invalid_argument("sigma must be positive");
        }
    }

    DecisionRule rule;
    rule.level_means = level_means;
    rule.sigma = sigma;
    rule.priors = priors;
    rule.thresholds.resize(m - 1);

    const double span = level_means.back() - level_means.front();
    const double eps = 1e-9 * span;
    int clamped = 0;

    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double mu_a = level_means[i], mu_b = level_means[i + 1];
        const double pa = priors[i], pb = priors[i + 1];
        const double sa = sigma.size() == 1 ? sigma[0] : sigma[i];
        const double sb = sigma.size() == 1 ? sigma[0] : sigma[i + 1];
        const double mid = 0.5 * (mu_a + mu_b);
        double t;
        if (pa <= 0.0 && pb <= 0.0) {
            t = mid;
        } else if (pa <= 0.0) {
            t = mu_a + eps;  // level a never sent: shrink its region
        } else if (pb <= 0.0) {
            t = mu_b - eps;
        } else if (sigma.size() == 1 || sa == sb) {
            t = mid + sa * sa * std::log(pa / pb) / (mu_b - mu_a);
        } else {
            // Unequal variances: likelihood crossing inside (mu_a, mu_b).
            const double qa = 1.0 / (2.0 * sa * sa), qb = 1.0 / (2.0 * sb * sb);
            const double a2 = qb - qa;
            const double a1 = 2.0 * (qa * mu_a - qb * mu_b);
            const double a0 = qb * mu_b * mu_b - qa * mu_a * mu_a -
                              std::log((pb * sa) / (pa * sb));
            const double disc = a1 * a1 - 4.0 * a2 * a0;
            t = mid;
            bool found = false;
            if (std::abs(a2) < 1e-30) {
                if (std::abs(a1) > 0.0) {
                    t = -a0 / a1;
                    found = t > mu_a && t < mu_b;
                }
            } else if (disc >= 0.0) {
                const double root = std::sqrt(disc);
                for (double cand : {(-a1 + root) / (2.0 * a2),
                                    (-a1 - root) / (2.0 * a2)}) {
                    if (cand > mu_a && cand < mu_b) {
                        t = cand;
                        found = true;
                        break;
                    }
                }
            }
            if (!found) {
                const double s2 = sa * sb;
                t = mid + s2 * std::log(pa / pb) / (mu_b - mu_a);
            }
        }
        if (t <= mu_a + eps || t >= mu_b - eps) {
            t = std::clamp(t, mu_a + eps, mu_b - eps);
            ++clamped;
        }
        rule.thresholds[i] = t;
    }
    for (std::size_t i = 1; i < rule.thresholds.size(); ++i) {
        if (rule.thresholds[i] <= rule.thresholds[i - 1]) {
            rule.thresholds[i] = rule.thresholds[i - 1] + eps;
            ++clamped;
        }
    }
    if (clamped > 0) {
        std::ostringstream msg;
        msg << "map_thresholds: " << clamped
            << " boundaries clamped to preserve ordering (extreme priors)";
        diag::warn(msg.str());
    }
    return rule;
}

Decisions decide_and_demap(std::span<const double> estimates,
                           const DecisionRule& rule, int m_bits,
                           txdsp::Labeling lab) {
    Decisions out;
    out.levels.resize(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        // A value equal to a boundary belongs to the lower level.
        const auto it = std::lower_bound(rule.thresholds.begin(),
                                         rule.thresholds.end(), estimates[i]);
        out.levels[i] = static_cast<std::uint8_t>(it - rule.thresholds.begin());
    }
    out.bits = txdsp::demap_bits(out.levels, m_bits, lab);
    return out;
}

BerCount count_ber(const txdsp::BitVector& tx_bits,
                   const txdsp::BitVector& rx_bits) {
    if (tx_bits.size() != rx_bits.size()) {
        throw std::invalid_argument("count_ber: length mismatch");
    }
    BerCount c;
    c.n_bits = tx_bits.size();
    for (std::size_t i = 0; i < tx_bits.size(); ++i) {
        c.n_errors += tx_bits[i] != rx_bits[i];
    }
    c.ber = c.n_bits ? static_cast<double>(c.n_errors) / c.n_bits : 0.0;
    return c;
}

}  // namespace imdd::rxdsp
