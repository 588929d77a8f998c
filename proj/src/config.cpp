#include "imdd/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

namespace imdd::cfg {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& section,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
        throw ConfigError("section '" + section + "' must be an object");
    }
    for (const auto& kv : obj.items()) {
        if (!allowed.count(kv.key())) {
            throw ConfigError("unknown key '" + section +
                              (section.empty() ? "" : ".") + kv.key() + "'");
        }
    }
}

double get_num(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) {
        throw ConfigError(std::string("key '") + key + "' must be a number");
    }
    return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) {
        throw ConfigError(std::string("key '") + key + "' must be an integer");
    }
    return obj[key].get<int>();
}

bool get_bool(const json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) {
        throw ConfigError(std::string("key '") + key + "' must be a boolean");
    }
    return obj[key].get<bool>();
}

std::string get_str(const json& obj, const char* key,
                    const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) {
        throw ConfigError(std::string("key '") + key + "' must be a string");
    }
    return obj[key].get<std::string>();
}

std::vector<double> parse_rop_field(const json& v) {
    std::vector<double> rops;
    if (v.is_array()) {
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError("sweep.rop entries must be numbers");
            rops.push_back(x.get<double>());
        }
    } else if (v.is_string()) {
        // "start:step:stop"
        const std::string s = v.get<std::string>();
        double start = 0, step = 0, stop = 0;
        if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &start, &step, &stop) != 3 ||
            !(step > 0.0)) {
            throw ConfigError("sweep.rop string must be start:step:stop with step > 0");
        }
        for (double r = start; r <= stop + 1e-9; r += step) rops.push_back(r);
    } else {
        throw ConfigError("sweep.rop must be an array or start:step:stop string");
    }
    if (rops.empty()) throw ConfigError("sweep.rop is empty");
    std::sort(rops.begin(), rops.end());
    rops.erase(std::unique(rops.begin(), rops.end()), rops.end());
    return rops;
}

channel::LinkConfig parse_link(const json& j) {
    channel::LinkConfig link;
    require_keys(j, "link",
                 {"awg_bw_ghz", "tosa_bw_ghz", "eml", "tx_power_dbm", "fiber",
                  "soa", "optical_filter_nm", "pd", "ea", "dso"});
    link.awg_bw_ghz = get_num(j, "awg_bw_ghz", link.awg_bw_ghz);
    link.tosa_bw_ghz = get_num(j, "tosa_bw_ghz", link.tosa_bw_ghz);
    link.tx_power_dbm = get_num(j, "tx_power_dbm", link.tx_power_dbm);
    link.optical_filter_nm = get_num(j, "optical_filter_nm", link.optical_filter_nm);
    if (j.contains("eml")) {
        const auto& e = j["eml"];
        require_keys(e, "link.eml",
                     {"bias", "extinction_db", "clip_lo", "clip_hi", "polynomial"});
        link.eml.bias = get_num(e, "bias", link.eml.bias);
        link.eml.extinction_db = get_num(e, "extinction_db", link.eml.extinction_db);
        link.eml.clip_lo = get_num(e, "clip_lo", link.eml.clip_lo);
        link.eml.clip_hi = get_num(e, "clip_hi", link.eml.clip_hi);
        if (e.contains("polynomial")) {
            if (!e["polynomial"].is_array()) {
                throw ConfigError("link.eml.polynomial must be an array");
            }
            link.eml.polynomial.clear();
            for (const auto& c : e["polynomial"]) {
                link.eml.polynomial.push_back(c.get<double>());
            }
        }
    }
    if (j.contains("fiber")) {
        const auto& f = j["fiber"];
        require_keys(f, "link.fiber",
                     {"length_km", "dispersion_ps_nm_km", "wavelength_nm"});
        link.fiber.length_km = get_num(f, "length_km", link.fiber.length_km);
        link.fiber.dispersion_ps_nm_km =
            get_num(f, "dispersion_ps_nm_km", link.fiber.dispersion_ps_nm_km);
        link.fiber.wavelength_nm = get_num(f, "wavelength_nm", link.fiber.wavelength_nm);
    }
    if (j.contains("soa")) {
        const auto& s = j["soa"];
        require_keys(s, "link.soa", {"gain_db", "nf_db", "ase"});
        link.soa.gain_db = get_num(s, "gain_db", link.soa.gain_db);
        link.soa.nf_db = get_num(s, "nf_db", link.soa.nf_db);
        link.soa.ase = get_bool(s, "ase", link.soa.ase);
    }
    if (j.contains("pd")) {
        const auto& p = j["pd"];
        require_keys(p, "link.pd",
                     {"responsivity_a_w", "thermal_noise_pa_hz", "bw_ghz"});
        link.pd.responsivity_a_w =
            get_num(p, "responsivity_a_w", link.pd.responsivity_a_w);
        link.pd.thermal_noise_pa_hz =
            get_num(p, "thermal_noise_pa_hz", link.pd.thermal_noise_pa_hz);
        link.pd.bw_ghz = get_num(p, "bw_ghz", link.pd.bw_ghz);
    }
    if (j.contains("ea")) {
        const auto& e = j["ea"];
        require_keys(e, "link.ea", {"gain_db", "bw_ghz"});
        link.ea.gain_db = get_num(e, "gain_db", link.ea.gain_db);
        link.ea.bw_ghz = get_num(e, "bw_ghz", link.ea.bw_ghz);
    }
    if (j.contains("dso")) {
        const auto& d = j["dso"];
        require_keys(d, "link.dso", {"rate_gsa", "bw_ghz", "bits"});
        link.dso.rate_gsa = get_num(d, "rate_gsa", link.dso.rate_gsa);
        link.dso.bw_ghz = get_num(d, "bw_ghz", link.dso.bw_ghz);
        link.dso.bits = get_int(d, "bits", link.dso.bits);
    }
    return link;
}

experiment::ThresholdMode parse_threshold_mode(const std::string& s) {
    if (s == "midpoint") return experiment::ThresholdMode::Midpoint;
    if (s == "map-pooled") return experiment::ThresholdMode::MapPooled;
    if (s == "map-per-level") return experiment::ThresholdMode::MapPerLevel;
    throw ConfigError("rx.thresholds must be midpoint, map-pooled or map-per-level");
}

const char* threshold_mode_name(experiment::ThresholdMode m) {
    switch (m) {
        case experiment::ThresholdMode::Midpoint: return "midpoint";
        case experiment::ThresholdMode::MapPooled: return "map-pooled";
        case experiment::ThresholdMode::MapPerLevel: return "map-per-level";
    }
    return "map-pooled";
}

ScenarioConfig parse_scenario(const json& j, int m) {
    ScenarioConfig sc;
    require_keys(j, "scenarios[]", {"label", "baud", "mode", "alpha", "entropy"});
    sc.label = get_str(j, "label", "");
    sc.baud = get_num(j, "baud", 0.0);
    if (!(sc.baud > 0.0)) {
        throw ConfigError("scenario baud must be positive");
    }
    const std::string mode = get_str(j, "mode", "uniform");
    if (mode == "uniform") {
        sc.uniform = true;
    } else if (mode == "cap") {
        sc.uniform = false;
    } else {
        throw ConfigError("shaping mode must be 'uniform' or 'cap'");
    }
    sc.alpha = get_num(j, "alpha", 0.0);
    sc.entropy = get_num(j, "entropy", 0.0);
    if (!sc.uniform && !(sc.alpha > 0.0)) {
        throw ConfigError("cap shaping requires alpha > 0");
    }
    if (sc.entropy != 0.0 &&
        (!(sc.entropy > 1.0) || sc.entropy > static_cast<double>(m))) {
        throw ConfigError("entropy override must lie in (1, m]");
    }
    return sc;
}

void check_rate_closure(const ExperimentConfig& cfg, const ScenarioConfig& sc,
                        double entropy) {
    const double se = entropy - cfg.m * (1.0 - cfg.r_fec);
    const double achieved = sc.baud * se;
    if (std::abs(achieved - cfg.net_rate) > 0.005 * cfg.net_rate) {
        std::ostringstream msg;
        msg << "scenario at " << sc.baud / 1e9 << " GBd with H=" << entropy
            << " gives net rate " << achieved / 1e9
            << " Gb/s, off the declared " << cfg.net_rate / 1e9
            << " Gb/s by more than 0.5% (SE = H - m(1-r_fec) check); set "
               "allow_rate_mismatch to override";
        throw ConfigError(msg.str());
    }
}

std::string default_label(const ScenarioConfig& sc) {
    char buf[96];
    if (sc.uniform) {
        std::snprintf(buf, sizeof(buf), "uniform-%.3ggbd", sc.baud / 1e9);
    } else {
        std::snprintf(buf, sizeof(buf), "cap-%.3ggbd-a%.2g", sc.baud / 1e9,
                      sc.alpha);
    }
    return buf;
}

}  // namespace

double awg_rate_for_baud(const std::string& preset, double baud) {
    struct Entry {
        double baud;
        double rate;
    };
    static const std::vector<Entry> paper = {{71e9, 100e9},
                                             {80e9, 107e9},
                                             {85e9, 113e9},
                                             {90e9, 120e9}};
    static const std::vector<Entry> desk = {{14.2e9, 20e9},
                                            {16e9, 21.4e9},
                                            {17e9, 22.6e9},
                                            {18e9, 24e9}};
    const std::vector<Entry>* table = nullptr;
    if (preset == "paper-awg") {
        table = &paper;
    } else if (preset == "desk-awg") {
        table = &desk;
    } else {
        throw ConfigError("unknown AWG preset '" + preset + "'");
    }
    for (const auto& e : *table) {
        if (std::abs(e.baud - baud) <= 0.005 * e.baud) {
            return e.rate;
        }
    }
    std::ostringstream msg;
    msg << "AWG preset '" << preset << "' has no entry for " << baud / 1e9
        << " GBd; set tx.awg to an explicit rate in Hz";
    throw ConfigError(msg.str());
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    require_keys(j, "",
                 {"rate", "shaping", "tx", "link", "rx", "sweep", "scenarios",
                  "threshold_ber", "out_dir", "allow_rate_mismatch"});

    ExperimentConfig cfg;
    double single_baud = 0.0;
    if (j.contains("rate")) {
        const auto& r = j["rate"];
        require_keys(r, "rate",
                     {"net_rate", "baud", "m", "r_fec", "fec_overhead_percent"});
        cfg.net_rate = get_num(r, "net_rate", cfg.net_rate);
        cfg.m = get_int(r, "m", cfg.m);
        single_baud = get_num(r, "baud", 0.0);
        const bool has_rfec = r.contains("r_fec");
        const bool has_oh = r.contains("fec_overhead_percent");
        if (has_rfec && has_oh) {
            throw ConfigError("give exactly one of rate.r_fec and "
                              "rate.fec_overhead_percent");
        }
        if (has_rfec) {
            cfg.r_fec = get_num(r, "r_fec", cfg.r_fec);
        } else if (has_oh) {
            const double oh = get_num(r, "fec_overhead_percent", 7.0);
            if (!(oh >= 0.0)) throw ConfigError("FEC overhead must be >= 0");
            cfg.r_fec = 1.0 / (1.0 + oh / 100.0);
        }
        if (!(cfg.r_fec > 0.0) || cfg.r_fec > 1.0) {
            throw ConfigError("r_fec must lie in (0, 1]");
        }
        if (!(cfg.net_rate > 0.0)) throw ConfigError("net_rate must be positive");
        if (cfg.m < 2) throw ConfigError("m must be >= 2");
    }

    ScenarioConfig base;
    base.uniform = true;
    if (j.contains("shaping")) {
        const auto& s = j["shaping"];
        require_keys(s, "shaping", {"mode", "alpha", "entropy"});
        const std::string mode = get_str(s, "mode", "uniform");
        if (mode == "cap") {
            base.uniform = false;
        } else if (mode != "uniform") {
            throw ConfigError("shaping.mode must be 'uniform' or 'cap'");
        }
        base.alpha = get_num(s, "alpha", 0.0);
        base.entropy = get_num(s, "entropy", 0.0);
        if (!base.uniform && !(base.alpha > 0.0)) {
            throw ConfigError("cap shaping requires alpha > 0");
        }
    }

    if (j.contains("scenarios")) {
        if (!j["scenarios"].is_array()) {
            throw ConfigError("scenarios must be an array");
        }
        for (const auto& sj : j["scenarios"]) {
            cfg.scenarios.push_back(parse_scenario(sj, cfg.m));
        }
        if (cfg.scenarios.empty()) {
            throw ConfigError("scenarios array is empty");
        }
    } else {
        if (!(single_baud > 0.0)) {
            throw ConfigError("rate.baud is required without a scenarios list");
        }
        base.baud = single_baud;
        cfg.scenarios.push_back(base);
    }

    if (j.contains("tx")) {
        const auto& t = j["tx"];
        require_keys(t, "tx", {"rolloff", "sps", "span", "dac_bits", "awg"});
        cfg.tx.rolloff = get_num(t, "rolloff", cfg.tx.rolloff);
        cfg.tx.sps = get_int(t, "sps", cfg.tx.sps);
        cfg.tx.rrc_span = get_int(t, "span", cfg.tx.rrc_span);
        cfg.tx.dac_bits = get_int(t, "dac_bits", cfg.tx.dac_bits);
        if (t.contains("awg")) {
            if (t["awg"].is_string()) {
                cfg.tx.awg_preset = t["awg"].get<std::string>();
                if (cfg.tx.awg_preset != "none") {
                    // validated per scenario during expansion
                }
            } else if (t["awg"].is_number()) {
                cfg.tx.awg_rate_hz = t["awg"].get<double>();
            } else {
                throw ConfigError("tx.awg must be a preset name or a rate in Hz");
            }
        }
    }

    if (j.contains("link")) {
        cfg.link = parse_link(j["link"]);
    }
    cfg.link.validate();

    if (j.contains("rx")) {
        const auto& r = j["rx"];
        require_keys(r, "rx",
                     {"l1", "l2", "l3", "train_fraction", "thresholds",
                      "timing_loop_bw"});
        cfg.rx.l1 = get_int(r, "l1", cfg.rx.l1);
        cfg.rx.l2 = get_int(r, "l2", cfg.rx.l2);
        cfg.rx.l3 = get_int(r, "l3", cfg.rx.l3);
        cfg.rx.train_fraction = get_num(r, "train_fraction", cfg.rx.train_fraction);
        if (r.contains("thresholds")) {
            cfg.rx.threshold_mode =
                parse_threshold_mode(r["thresholds"].get<std::string>());
        }
        cfg.rx.timing_loop_bw = get_num(r, "timing_loop_bw", cfg.rx.timing_loop_bw);
        if (cfg.rx.l1 < 1 || cfg.rx.l2 < 0 || cfg.rx.l3 < 0 ||
            cfg.rx.l2 > cfg.rx.l1 || cfg.rx.l3 > cfg.rx.l1) {
            throw ConfigError("rx memories need 1 <= l1 and 0 <= l2,l3 <= l1");
        }
        if (!(cfg.rx.train_fraction > 0.0) || cfg.rx.train_fraction >= 1.0) {
            throw ConfigError("rx.train_fraction must lie in (0, 1)");
        }
    }

    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        require_keys(s, "sweep", {"rop", "n_symbols", "seed", "jobs"});
        if (s.contains("rop")) {
            cfg.sweep.rops_dbm = parse_rop_field(s["rop"]);
        }
        cfg.sweep.n_symbols = static_cast<std::size_t>(
            get_num(s, "n_symbols", static_cast<double>(cfg.sweep.n_symbols)));
        cfg.sweep.seed =
            static_cast<std::uint64_t>(get_num(s, "seed", 1.0));
        cfg.sweep.jobs = get_int(s, "jobs", cfg.sweep.jobs);
    }
    if (cfg.sweep.rops_dbm.empty()) {
        throw ConfigError("sweep.rop is required");
    }

    cfg.threshold_ber = get_num(j, "threshold_ber", cfg.threshold_ber);
    if (!(cfg.threshold_ber > 0.0) || cfg.threshold_ber >= 1.0) {
        throw ConfigError("threshold_ber must lie in (0, 1)");
    }
    cfg.out_dir = get_str(j, "out_dir", cfg.out_dir);
    cfg.allow_rate_mismatch = get_bool(j, "allow_rate_mismatch", false);

    // Rate-plan closure per scenario (also resolves infeasible plans).
    for (auto& sc : cfg.scenarios) {
        double entropy;
        if (sc.uniform) {
            entropy = static_cast<double>(cfg.m);
        } else if (sc.entropy > 0.0) {
            entropy = sc.entropy;
        } else {
            try {
                entropy = shaping::required_entropy(cfg.net_rate, sc.baud, cfg.m,
                                                    cfg.r_fec);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("scenario rate plan: ") + e.what());
            }
        }
        if (!cfg.allow_rate_mismatch) {
            check_rate_closure(cfg, sc, entropy);
        }
        if (sc.label.empty()) {
            sc.label = default_label(sc);
        }
    }
    return cfg;
}

std::string serialize(const ExperimentConfig& cfg) {
    json j;
    j["rate"]["net_rate"] = cfg.net_rate;
    j["rate"]["m"] = cfg.m;
    j["rate"]["r_fec"] = cfg.r_fec;
    for (const auto& sc : cfg.scenarios) {
        json s;
        s["label"] = sc.label;
        s["baud"] = sc.baud;
        s["mode"] = sc.uniform ? "uniform" : "cap";
        if (!sc.uniform) s["alpha"] = sc.alpha;
        if (sc.entropy > 0.0) s["entropy"] = sc.entropy;
        j["scenarios"].push_back(s);
    }
    j["tx"]["rolloff"] = cfg.tx.rolloff;
    j["tx"]["sps"] = cfg.tx.sps;
    j["tx"]["span"] = cfg.tx.rrc_span;
    j["tx"]["dac_bits"] = cfg.tx.dac_bits;
    if (!cfg.tx.awg_preset.empty()) {
        j["tx"]["awg"] = cfg.tx.awg_preset;
    } else if (cfg.tx.awg_rate_hz > 0.0) {
        j["tx"]["awg"] = cfg.tx.awg_rate_hz;
    }
    auto& l = j["link"];
    l["awg_bw_ghz"] = cfg.link.awg_bw_ghz;
    l["tosa_bw_ghz"] = cfg.link.tosa_bw_ghz;
    l["tx_power_dbm"] = cfg.link.tx_power_dbm;
    l["eml"]["bias"] = cfg.link.eml.bias;
    l["eml"]["extinction_db"] = cfg.link.eml.extinction_db;
    l["eml"]["clip_lo"] = cfg.link.eml.clip_lo;
    l["eml"]["clip_hi"] = cfg.link.eml.clip_hi;
    if (!cfg.link.eml.polynomial.empty()) {
        l["eml"]["polynomial"] = cfg.link.eml.polynomial;
    }
    l["fiber"]["length_km"] = cfg.link.fiber.length_km;
    l["fiber"]["dispersion_ps_nm_km"] = cfg.link.fiber.dispersion_ps_nm_km;
    l["fiber"]["wavelength_nm"] = cfg.link.fiber.wavelength_nm;
    l["soa"]["gain_db"] = cfg.link.soa.gain_db;
    l["soa"]["nf_db"] = cfg.link.soa.nf_db;
    l["soa"]["ase"] = cfg.link.soa.ase;
    l["optical_filter_nm"] = cfg.link.optical_filter_nm;
    l["pd"]["responsivity_a_w"] = cfg.link.pd.responsivity_a_w;
    l["pd"]["thermal_noise_pa_hz"] = cfg.link.pd.thermal_noise_pa_hz;
    l["pd"]["bw_ghz"] = cfg.link.pd.bw_ghz;
    l["ea"]["gain_db"] = cfg.link.ea.gain_db;
    l["ea"]["bw_ghz"] = cfg.link.ea.bw_ghz;
    l["dso"]["rate_gsa"] = cfg.link.dso.rate_gsa;
    l["dso"]["bw_ghz"] = cfg.link.dso.bw_ghz;
    l["dso"]["bits"] = cfg.link.dso.bits;
    j["rx"]["l1"] = cfg.rx.l1;
    j["rx"]["l2"] = cfg.rx.l2;
    j["rx"]["l3"] = cfg.rx.l3;
    j["rx"]["train_fraction"] = cfg.rx.train_fraction;
    j["rx"]["thresholds"] = threshold_mode_name(cfg.rx.threshold_mode);
    j["rx"]["timing_loop_bw"] = cfg.rx.timing_loop_bw;
    j["sweep"]["rop"] = cfg.sweep.rops_dbm;
    j["sweep"]["n_symbols"] = static_cast<double>(cfg.sweep.n_symbols);
    j["sweep"]["seed"] = static_cast<double>(cfg.sweep.seed);
    j["sweep"]["jobs"] = cfg.sweep.jobs;
    j["threshold_ber"] = cfg.threshold_ber;
    j["out_dir"] = cfg.out_dir;
    j["allow_rate_mismatch"] = cfg.allow_rate_mismatch;
    return j.dump(2) + "\n";
}

std::vector<std::string> preset_names() {
    return {"paper-b2b", "paper-5km", "desk-scale"};
}

std::string preset_config(const std::string& name) {
    // The paper-* presets reproduce the published rate plans and AWG
    // rate table; the link noise numbers are desk defaults, not a
    // calibration of any particular testbed. desk-scale divides rates
    // and bandwidths by 5 to keep a full sweep in the minutes range.
    static const char* kPaperScenarios = R"JSON([
      {"baud": 71e9, "mode": "uniform"},
      {"baud": 80e9, "mode": "cap", "alpha": 2},
      {"baud": 80e9, "mode": "cap", "alpha": 3.5},
      {"baud": 80e9, "mode": "cap", "alpha": 5},
      {"baud": 85e9, "mode": "cap", "alpha": 2},
      {"baud": 85e9, "mode": "cap", "alpha": 3.5},
      {"baud": 85e9, "mode": "cap", "alpha": 5},
      {"baud": 90e9, "mode": "cap", "alpha": 2},
      {"baud": 90e9, "mode": "cap", "alpha": 3.5},
      {"baud": 90e9, "mode": "cap", "alpha": 5}
    ])JSON";

    json j;
    if (name == "paper-b2b" || name == "paper-5km") {
        j = json::parse(std::string(R"JSON({
          "rate": {"net_rate": 200e9, "m": 3, "fec_overhead_percent": 7},
          "scenarios": )JSON") + kPaperScenarios + R"JSON(,
          "tx": {"rolloff": 0.4, "sps": 4, "span": 64, "dac_bits": 8, "awg": "paper-awg"},
          "link": {
            "awg_bw_ghz": 25, "tosa_bw_ghz": 40, "tx_power_dbm": -3.8,
            "eml": {"extinction_db": 6},
            "fiber": {"length_km": 0, "dispersion_ps_nm_km": 2, "wavelength_nm": 1310},
            "soa": {"gain_db": 15, "nf_db": 7, "ase": true},
            "optical_filter_nm": 2,
            "pd": {"responsivity_a_w": 0.5, "thermal_noise_pa_hz": 20, "bw_ghz": 70},
            "ea": {"gain_db": 11, "bw_ghz": 70},
            "dso": {"rate_gsa": 256, "bw_ghz": 113, "bits": 8}
          },
          "rx": {"l1": 311, "l2": 11, "l3": 11, "train_fraction": 0.2,
                 "thresholds": "map-per-level", "timing_loop_bw": 2e-3},
          "sweep": {"rop": "-22:1:-10", "n_symbols": 500000, "seed": 1, "jobs": 0},
          "out_dir": "results"
        })JSON");
        if (name == "paper-5km") {
            j["link"]["fiber"]["length_km"] = 5;
            j["out_dir"] = "results-paper-5km";
        } else {
            j["out_dir"] = "results-paper-b2b";
        }
        return j.dump(2) + "\n";
    }
    if (name == "desk-scale") {
        return std::string(R"JSON({
  "rate": {"net_rate": 40e9, "m": 3, "fec_overhead_percent": 7},
  "scenarios": [
    {"baud": 14.2e9, "mode": "uniform"},
    {"baud": 16e9, "mode": "cap", "alpha": 2},
    {"baud": 16e9, "mode": "cap", "alpha": 3.5},
    {"baud": 16e9, "mode": "cap", "alpha": 5},
    {"baud": 17e9, "mode": "cap", "alpha": 2},
    {"baud": 17e9, "mode": "cap", "alpha": 3.5},
    {"baud": 17e9, "mode": "cap", "alpha": 5},
    {"baud": 18e9, "mode": "cap", "alpha": 2},
    {"baud": 18e9, "mode": "cap", "alpha": 3.5},
    {"baud": 18e9, "mode": "cap", "alpha": 5}
  ],
  "tx": {"rolloff": 0.4, "sps": 4, "span": 64, "dac_bits": 8, "awg": "desk-awg"},
  "link": {
    "awg_bw_ghz": 5, "tosa_bw_ghz": 8, "tx_power_dbm": -3.8,
    "eml": {"extinction_db": 6},
    "fiber": {"length_km": 0, "dispersion_ps_nm_km": 2, "wavelength_nm": 1310},
    "soa": {"gain_db": 15, "nf_db": 7, "ase": true},
    "optical_filter_nm": 2,
    "pd": {"responsivity_a_w": 0.5, "thermal_noise_pa_hz": 20, "bw_ghz": 14},
    "ea": {"gain_db": 11, "bw_ghz": 14},
    "dso": {"rate_gsa": 51.2, "bw_ghz": 22.6, "bits": 8}
  },
  "rx": {"l1": 101, "l2": 9, "l3": 9, "train_fraction": 0.2,
         "thresholds": "map-per-level", "timing_loop_bw": 2e-3},
  "sweep": {"rop": "-22:1:-10", "n_symbols": 200000, "seed": 7, "jobs": 0},
  "out_dir": "results-desk-scale"
})JSON") + "\n";
    }
    throw ConfigError("unknown preset '" + name + "'");
}

std::string apply_override(const std::string& json_text,
                           const std::string& dotted_key,
                           const std::string& value) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (dotted_key.empty()) {
        throw ConfigError("override key is empty");
    }
    std::string pointer;
    std::string part;
    std::istringstream path(dotted_key);
    while (std::getline(path, part, '.')) {
        pointer += "/" + part;
    }
    json parsed_value;
    try {
        parsed_value = json::parse(value);
    } catch (const json::parse_error&) {
        parsed_value = value;  // plain string
    }
    j[json::json_pointer(pointer)] = parsed_value;
    return j.dump(2) + "\n";
}

std::vector<experiment::ScenarioSpec> expand_scenarios(
    const ExperimentConfig& cfg) {
    std::vector<experiment::ScenarioSpec> specs;
    const auto alphabet = shaping::make_pam_alphabet(1u << cfg.m);
    for (const auto& sc : cfg.scenarios) {
        experiment::ScenarioSpec spec;
        spec.label = sc.label;
        spec.alphabet = alphabet;
        spec.uniform = sc.uniform;
        spec.plan.net_rate = cfg.net_rate;
        spec.plan.baud = sc.baud;
        spec.plan.m = cfg.m;
        spec.plan.r_fec = cfg.r_fec;
        if (sc.uniform) {
            spec.plan.entropy = static_cast<double>(cfg.m);
        } else {
            spec.plan.entropy =
                sc.entropy > 0.0
                    ? sc.entropy
                    : shaping::required_entropy(cfg.net_rate, sc.baud, cfg.m,
                                                cfg.r_fec);
            spec.alpha = sc.alpha;
            const double v = shaping::solve_v_for_entropy(alphabet, sc.alpha,
                                                          spec.plan.entropy);
            spec.dist = shaping::mb_distribution(alphabet, v, sc.alpha);
        }
        if (!cfg.allow_rate_mismatch) {
            spec.plan.validate();
        }
        spec.rolloff = cfg.tx.rolloff;
        spec.sps = cfg.tx.sps;
        spec.rrc_span = cfg.tx.rrc_span;
        spec.dac_bits = cfg.tx.dac_bits;
        if (cfg.tx.awg_rate_hz > 0.0) {
            spec.awg_rate_hz = cfg.tx.awg_rate_hz;
        } else if (!cfg.tx.awg_preset.empty() && cfg.tx.awg_preset != "none") {
            spec.awg_rate_hz = awg_rate_for_baud(cfg.tx.awg_preset, sc.baud);
        }
        spec.l1 = cfg.rx.l1;
        spec.l2 = cfg.rx.l2;
        spec.l3 = cfg.rx.l3;
        spec.train_fraction = cfg.rx.train_fraction;
        spec.threshold_mode = cfg.rx.threshold_mode;
        spec.timing.loop_bandwidth = cfg.rx.timing_loop_bw;
        specs.push_back(std::move(spec));
    }
    return specs;
}

int run_experiment(const ExperimentConfig& cfg) {
    const auto specs = expand_scenarios(cfg);

    std::vector<experiment::BerCurve> curves;
    experiment::SensitivityReport report;
    report.threshold_ber = cfg.threshold_ber;
    bool failed = false;

    for (const auto& spec : specs) {
        std::cout << "running " << spec.label << " ("
                  << cfg.sweep.rops_dbm.size() << " ROP points, "
                  << cfg.sweep.n_symbols << " symbols/point)\n";
        try {
            curves.push_back(experiment::run_sweep(spec, cfg.link, cfg.sweep));
        } catch (const std::exception& e) {
            std::cerr << "scenario '" << spec.label << "' failed: " << e.what()
                      << "\n";
            failed = true;
        }
    }

    for (const auto& curve : curves) {
        experiment::SensitivityEntry entry;
        entry.label = curve.label;
        try {
            entry.sensitivity_dbm =
                experiment::sensitivity(curve, cfg.threshold_ber);
        } catch (const std::exception& e) {
            entry.error = e.what();
            failed = true;
        }
        report.entries.push_back(entry);
    }
    // Shaping gains relative to the first scenario (the baseline).
    if (!report.entries.empty() && report.entries[0].sensitivity_dbm) {
        for (std::size_t i = 1; i < report.entries.size(); ++i) {
            if (!report.entries[i].sensitivity_dbm) continue;
            experiment::SensitivityDelta d;
            d.label_a = report.entries[0].label;
            d.label_b = report.entries[i].label;
            d.delta_db = experiment::compare(*report.entries[0].sensitivity_dbm,
                                             *report.entries[i].sensitivity_dbm);
            report.deltas.push_back(d);
        }
    }

    experiment::emit_results(curves, report, cfg.out_dir);

    std::cout << "\nreceiver sensitivity at BER " << cfg.threshold_ber << ":\n";
    std::printf("  %-28s %14s %12s\n", "label", "sens (dBm)", "gain (dB)");
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        const auto& e = report.entries[i];
        if (e.sensitivity_dbm) {
            double gain = 0.0;
            if (i > 0 && report.entries[0].sensitivity_dbm) {
                gain = experiment::compare(*report.entries[0].sensitivity_dbm,
                                           *e.sensitivity_dbm);
            }
            std::printf("  %-28s %14.2f %12.2f\n", e.label.c_str(),
                        *e.sensitivity_dbm, gain);
        } else {
            std::printf("  %-28s %14s %12s  (%s)\n", e.label.c_str(), "-", "-",
                        e.error.c_str());
        }
    }
    std::cout << "artifacts written to " << cfg.out_dir << "\n";
    return failed ? 2 : 0;
}

}  // namespace imdd::cfg
