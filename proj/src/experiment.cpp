#include "imdd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <thread>

#include "imdd/diag.hpp"
#include "imdd/rng.hpp"

namespace imdd::experiment {

namespace {

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

// Midpoint thresholds are the equal-prior MAP rule.
std::vector<double> equal_priors(std::size_t m) {
    return std::vector<double>(m, 1.0 / static_cast<double>(m));
}

}  // namespace

TxArtifacts build_tx(const ScenarioSpec& scenario, std::size_t n_symbols,
                     std::uint64_t seed) {
    TxArtifacts tx;
    if (scenario.uniform) {
        const int m = scenario.plan.m;
        // PRBS-23 source; any bits of the register seed work, bar zero.
        const std::uint64_t prbs_seed = (seed % ((1ull << 23) - 1)) + 1;
        const auto bits =
            txdsp::prbs(23, prbs_seed, n_symbols * static_cast<std::size_t>(m));
        tx.symbols = txdsp::map_uniform_pam8(bits, scenario.alphabet,
                                             scenario.labeling);
        tx.symbols.seed = seed;
    } else {
        tx.symbols = txdsp::sample_shaped_symbols(scenario.dist, n_symbols, seed);
    }

    const double center = scenario.alphabet.center();
    const double half_span = scenario.alphabet.levels.back() - center;
    const AffineMap to_drive{1.0 / half_span, -center / half_span};

    const auto taps =
        txdsp::rrc_taps(scenario.rolloff, scenario.rrc_span, scenario.sps);
    Waveform shaped = txdsp::pulse_shape(tx.symbols, taps, scenario.sps,
                                         to_drive, scenario.plan.baud);
    if (scenario.awg_rate_hz > 0.0 &&
        scenario.awg_rate_hz != shaped.sample_rate) {
        shaped = txdsp::resample(shaped, scenario.awg_rate_hz);
    }
    // AWG drives its full output swing.
    shaped = normalize_full_scale(shaped);
    tx.drive = txdsp::dac_quantize(shaped, scenario.dac_bits);
    return tx;
}

BerPoint run_single_point(const ScenarioSpec& scenario,
                          const channel::LinkConfig& link, double rop_dbm,
                          std::size_t n_symbols, std::uint64_t point_seed) {
    const TxArtifacts tx = build_tx(scenario, n_symbols, sub_seed(point_seed, 1));

    channel::LinkConfig cfg = link;
    cfg.seed = sub_seed(point_seed, 2);
    const Waveform captured = channel::run_link(tx.drive, cfg, rop_dbm);

    const auto timing =
        rxdsp::timing_recover(captured, scenario.plan.baud, scenario.timing);
    auto obs = rxdsp::downsample_to_1sps(timing.two_sps, timing.settle_symbols);
    if (obs.size() <= timing.settle_symbols) {
        throw std::runtime_error("capture too short after timing recovery");
    }
    obs.erase(obs.begin(),
              obs.begin() + static_cast<std::ptrdiff_t>(timing.settle_symbols));

    // Reference amplitudes, symmetric about zero.
    const double center = scenario.alphabet.center();
    std::vector<double> ref(n_symbols);
    for (std::size_t k = 0; k < n_symbols; ++k) {
        ref[k] = scenario.alphabet.levels[tx.symbols.indices[k]] - center;
    }

    const std::int64_t lag = rxdsp::align_lag(obs, ref);
    const std::int64_t i_lo = std::max<std::int64_t>(0, -lag);
    const std::int64_t i_hi =
        std::min<std::int64_t>(static_cast<std::int64_t>(obs.size()),
                               static_cast<std::int64_t>(ref.size()) - lag);
    if (i_hi - i_lo < static_cast<std::int64_t>(scenario.l1) * 12) {
        throw std::runtime_error("alignment overlap too short");
    }
    std::vector<double> obs_a(obs.begin() + i_lo, obs.begin() + i_hi);
    const std::size_t sym0 =
        static_cast<std::size_t>(i_lo + lag);  // symbol index of obs_a[0]
    const std::size_t n_al = obs_a.size();
    std::vector<double> ref_a(n_al);
    std::vector<std::uint8_t> lvl_a(n_al);
    for (std::size_t k = 0; k < n_al; ++k) {
        ref_a[k] = ref[sym0 + k];
        lvl_a[k] = tx.symbols.indices[sym0 + k];
    }

    const auto n_train =
        static_cast<std::size_t>(scenario.train_fraction * n_al);
    const auto model = rxdsp::train_volterra(obs_a, ref_a, 0, n_train,
                                             scenario.l1, scenario.l2,
                                             scenario.l3);
    const auto eq = rxdsp::equalize(obs_a, model);

    // Level statistics from the training region.
    const std::size_t m_levels = scenario.alphabet.size();
    std::vector<double> sums(m_levels, 0.0);
    std::vector<std::size_t> counts(m_levels, 0);
    const std::size_t stat_lo = std::max(eq.first_valid(), std::size_t{0});
    const std::size_t stat_hi = std::min(n_train, eq.last_valid(n_al));
    for (std::size_t k = stat_lo; k < stat_hi; ++k) {
        sums[lvl_a[k]] += eq.values[k];
        ++counts[lvl_a[k]];
    }
    // Affine fallback for sparsely populated levels: the equalizer is
    // trained onto the reference scale, so means default to the levels.
    std::vector<double> means(m_levels);
    for (std::size_t i = 0; i < m_levels; ++i) {
        means[i] = counts[i] >= 30 ? sums[i] / static_cast<double>(counts[i])
                                   : scenario.alphabet.levels[i] - center;
    }
    for (std::size_t i = 1; i < m_levels; ++i) {
        if (means[i] <= means[i - 1]) {
            // Degenerate statistics; fall back to the nominal grid.
            for (std::size_t j = 0; j < m_levels; ++j) {
                means[j] = scenario.alphabet.levels[j] - center;
            }
            break;
        }
    }
    std::vector<double> var_sum(m_levels, 0.0);
    double pooled_sq = 0.0;
    std::size_t pooled_n = 0;
    for (std::size_t k = stat_lo; k < stat_hi; ++k) {
        const double d = eq.values[k] - means[lvl_a[k]];
        var_sum[lvl_a[k]] += d * d;
        pooled_sq += d * d;
        ++pooled_n;
    }
    const double pooled_sigma =
        pooled_n > 0 ? std::sqrt(pooled_sq / static_cast<double>(pooled_n))
                     : 1e-3;

    std::vector<double> priors =
        scenario.uniform ? equal_priors(m_levels) : scenario.dist.probs;
    std::vector<double> sigma;
    switch (scenario.threshold_mode) {
        case ThresholdMode::Midpoint:
            priors = equal_priors(m_levels);
            sigma = {std::max(pooled_sigma, 1e-12)};
            break;
        case ThresholdMode::MapPooled:
            sigma = {std::max(pooled_sigma, 1e-12)};
            break;
        case ThresholdMode::MapPerLevel:
            sigma.resize(m_levels);
            for (std::size_t i = 0; i < m_levels; ++i) {
                sigma[i] = counts[i] >= 30
                               ? std::max(std::sqrt(var_sum[i] /
                                                    static_cast<double>(counts[i])),
                                          1e-12)
                               : std::max(pooled_sigma, 1e-12);
            }
            break;
    }
    const auto rule = rxdsp::map_thresholds(means, sigma, priors);

    // Evaluate on the disjoint remainder, away from equalizer edges.
    const std::size_t eval_lo = std::max(n_train, eq.first_valid());
    const std::size_t eval_hi = eq.last_valid(n_al);
    if (eval_hi <= eval_lo) {
        throw std::runtime_error("empty evaluation region");
    }
    const std::span<const double> est(eq.values.data() + eval_lo,
                                      eval_hi - eval_lo);
    const auto decided = rxdsp::decide_and_demap(est, rule, scenario.plan.m,
                                                 scenario.labeling);
    const std::vector<std::uint8_t> tx_lvls(lvl_a.begin() + eval_lo,
                                            lvl_a.begin() + eval_hi);
    const auto tx_bits =
        txdsp::demap_bits(tx_lvls, scenario.plan.m, scenario.labeling);
    const auto ber = rxdsp::count_ber(tx_bits, decided.bits);

    BerPoint point;
    point.rop_dbm = rop_dbm;
    point.ber = ber.ber;
    point.n_bits = ber.n_bits;
    point.n_errors = ber.n_errors;
    point.unreliable = ber.n_errors < 10;
    return point;
}

BerCurve run_sweep(const ScenarioSpec& scenario,
                   const channel::LinkConfig& link, const SweepSpec& spec) {
    if (spec.rops_dbm.empty()) {
        throw std::invalid_argument("sweep needs at least one ROP point");
    }
    for (std::size_t i = 1; i < spec.rops_dbm.size(); ++i) {
        if (!(spec.rops_dbm[i] > spec.rops_dbm[i - 1])) {
            throw std::invalid_argument("ROP points must be strictly increasing");
        }
    }
    if (spec.n_symbols < 10000) {
        throw std::invalid_argument("sweep needs at least 1e4 symbols per point");
    }
    if (spec.n_symbols < 100000) {
        diag::warn("sweep: fewer than 1e5 symbols per point, BER floor is high");
    }

    const std::size_t n_points = spec.rops_dbm.size();
    std::vector<BerPoint> points(n_points);
    std::vector<std::string> errors(n_points);

    unsigned jobs = spec.jobs > 0 ? static_cast<unsigned>(spec.jobs)
                                  : std::thread::hardware_concurrency();
    jobs = std::max(1u, std::min<unsigned>(jobs, n_points));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_points) break;
            try {
                points[i] = run_single_point(scenario, link, spec.rops_dbm[i],
                                             spec.n_symbols,
                                             sub_seed(spec.seed, i));
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg << "rop=" << spec.rops_dbm[i] << " dBm: " << e.what();
                errors[i] = msg.str();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const auto& err : errors) {
        if (!err.empty()) {
            throw std::runtime_error("sweep point failed: " + err);
        }
    }

    BerCurve curve;
    curve.label = scenario.label;
    curve.points = std::move(points);
    return curve;
}

double sensitivity(const BerCurve& curve, double threshold_ber) {
    if (!(threshold_ber > 0.0)) {
        throw std::invalid_argument("threshold must be positive");
    }
    const auto& pts = curve.points;
    if (pts.size() < 1) {
        throw NoCrossingError("curve '" + curve.label + "' is empty");
    }
    // Counting floor used in place of log10(0) for interpolation.
    auto log_ber = [&](const BerPoint& p) {
        const double floor_ber = 0.5 / std::max<std::size_t>(p.n_bits, 1);
        return std::log10(std::max(p.ber, floor_ber));
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].ber == threshold_ber) {
            return pts[i].rop_dbm;
        }
        if (i + 1 < pts.size() && pts[i].ber > threshold_ber &&
            pts[i + 1].ber < threshold_ber) {
            const double la = log_ber(pts[i]);
            const double lb = log_ber(pts[i + 1]);
            const double lt = std::log10(threshold_ber);
            const double f = (lt - la) / (lb - la);
            return pts[i].rop_dbm + f * (pts[i + 1].rop_dbm - pts[i].rop_dbm);
        }
    }
    throw NoCrossingError("curve '" + curve.label +
                          "' never crosses the BER threshold " +
                          format_double("%.3e", threshold_ber));
}

double compare(double sensitivity_a_dbm, double sensitivity_b_dbm) {
    return sensitivity_a_dbm - sensitivity_b_dbm;
}

std::string curve_filename(const std::string& label) {
    std::string name = "curve-";
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            name += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!name.empty() && name.back() != '-') {
            name += '-';
        }
    }
    while (!name.empty() && name.back() == '-') name.pop_back();
    return name + ".csv";
}

namespace {

void write_curve_csv(const BerCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "rop_dbm,ber,n_bits,n_errors,unreliable\n";
    for (const auto& p : curve.points) {
        out << format_double("%.4f", p.rop_dbm) << ','
            << format_double("%.10e", p.ber) << ',' << p.n_bits << ','
            << p.n_errors << ',' << (p.unreliable ? 1 : 0) << '\n';
    }
}

struct PlotGeometry {
    double x0 = 70, x1 = 640, y0 = 30, y1 = 500;  // plot box in px
    double rop_min = 0, rop_max = 1, log_min = -8, log_max = 0;

    double px(double rop) const {
        return x0 + (rop - rop_min) / (rop_max - rop_min) * (x1 - x0);
    }
    double py(double logber) const {
        return y0 + (log_max - logber) / (log_max - log_min) * (y1 - y0);
    }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf", "#393b79", "#637939"};

void write_plot_svg(const std::vector<BerCurve>& curves, double threshold_ber,
                    const std::filesystem::path& path) {
    PlotGeometry g;
    bool any = false;
    double lmin = 0.0;
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            if (!any) {
                g.rop_min = g.rop_max = p.rop_dbm;
                any = true;
            }
            g.rop_min = std::min(g.rop_min, p.rop_dbm);
            g.rop_max = std::max(g.rop_max, p.rop_dbm);
            if (p.ber > 0.0) lmin = std::min(lmin, std::log10(p.ber));
        }
    }
    if (!any) {
        g.rop_min = -10;
        g.rop_max = 0;
    }
    if (g.rop_max == g.rop_min) g.rop_max = g.rop_min + 1.0;
    g.log_min = std::floor(std::min(lmin, std::log10(threshold_ber)) - 0.5);
    g.log_max = 0.0;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"880\" "
           "height=\"560\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect x=\"" << g.x0 << "\" y=\"" << g.y0 << "\" width=\""
        << g.x1 - g.x0 << "\" height=\"" << g.y1 - g.y0
        << "\" fill=\"white\" stroke=\"black\"/>\n";

    // Decade gridlines and y labels.
    for (int d = static_cast<int>(g.log_min); d <= 0; ++d) {
        const double y = g.py(d);
        svg << "<line x1=\"" << g.x0 << "\" y1=\"" << format_double("%.1f", y)
            << "\" x2=\"" << g.x1 << "\" y2=\"" << format_double("%.1f", y)
            << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << g.x0 - 8 << "\" y=\""
            << format_double("%.1f", y + 4)
            << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    // x ticks every 1 dB (or 2 dB when dense).
    const double dbstep = (g.rop_max - g.rop_min) > 12 ? 2.0 : 1.0;
    for (double r = std::ceil(g.rop_min); r <= g.rop_max + 1e-9; r += dbstep) {
        const double x = g.px(r);
        svg << "<line x1=\"" << format_double("%.1f", x) << "\" y1=\"" << g.y1
            << "\" x2=\"" << format_double("%.1f", x) << "\" y2=\"" << g.y1 + 5
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << format_double("%.1f", x) << "\" y=\""
            << g.y1 + 18 << "\" text-anchor=\"middle\">"
            << format_double("%.0f", r) << "</text>\n";
    }
    svg << "<text x=\"" << 0.5 * (g.x0 + g.x1) << "\" y=\"" << g.y1 + 38
        << "\" text-anchor=\"middle\">ROP (dBm)</text>\n";
    svg << "<text x=\"18\" y=\"" << 0.5 * (g.y0 + g.y1)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << 0.5 * (g.y0 + g.y1) << ")\">pre-FEC BER</text>\n";

    // FEC threshold line.
    const double ty = g.py(std::log10(threshold_ber));
    svg << "<line x1=\"" << g.x0 << "\" y1=\"" << format_double("%.1f", ty)
        << "\" x2=\"" << g.x1 << "\" y2=\"" << format_double("%.1f", ty)
        << "\" stroke=\"black\" stroke-dasharray=\"6 3\"/>\n";
    svg << "<text x=\"" << g.x0 + 6 << "\" y=\""
        << format_double("%.1f", ty - 5) << "\">HD-FEC "
        << format_double("%.1e", threshold_ber) << "</text>\n";

    for (std::size_t c = 0; c < curves.size(); ++c) {
        const char* color = kPalette[c % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::ostringstream pointsattr;
        bool open = false;
        std::ostringstream segments;
        for (const auto& p : curves[c].points) {
            if (p.ber <= 0.0) {
                // break the polyline at counting-floor zeros
                if (open) {
                    segments << "<polyline fill=\"none\" stroke=\"" << color
                             << "\" stroke-width=\"1.5\" points=\""
                             << pointsattr.str() << "\"/>\n";
                    pointsattr.str("");
                    open = false;
                }
                continue;
            }
            pointsattr << format_double("%.2f", g.px(p.rop_dbm)) << ','
                       << format_double("%.2f", g.py(std::log10(p.ber))) << ' ';
            open = true;
        }
        if (open) {
            segments << "<polyline fill=\"none\" stroke=\"" << color
                     << "\" stroke-width=\"1.5\" points=\"" << pointsattr.str()
                     << "\"/>\n";
        }
        svg << segments.str();
        // Markers.
        for (const auto& p : curves[c].points) {
            if (p.ber <= 0.0) continue;
            svg << "<circle cx=\"" << format_double("%.2f", g.px(p.rop_dbm))
                << "\" cy=\""
                << format_double("%.2f", g.py(std::log10(p.ber)))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        // Legend entry.
        const double ly = g.y0 + 14 + 18.0 * static_cast<double>(c);
        svg << "<line x1=\"" << g.x1 + 12 << "\" y1=\"" << ly << "\" x2=\""
            << g.x1 + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << g.x1 + 42 << "\" y=\"" << ly + 4 << "\">"
            << curves[c].label << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << svg.str();
}

}  // namespace

void emit_results(const std::vector<BerCurve>& curves,
                  const SensitivityReport& report, const std::string& out_dir) {
    std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + out_dir +
                                 ": " + ec.message());
    }

    for (const auto& curve : curves) {
        write_curve_csv(curve, dir / curve_filename(curve.label));
    }

    std::ofstream summary(dir / "summary.csv");
    if (!summary) {
        throw std::runtime_error("cannot write summary.csv in " + out_dir);
    }
    summary << "label,sensitivity_dbm\n";
    for (const auto& e : report.entries) {
        summary << e.label << ',';
        if (e.sensitivity_dbm.has_value()) {
            summary << format_double("%.4f", *e.sensitivity_dbm);
        }
        summary << '\n';
    }

    write_plot_svg(curves, report.threshold_ber, dir / "ber_curves.svg");
}

}  // namespace imdd::experiment
