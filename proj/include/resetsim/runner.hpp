// Copyright 2026 The resetsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment dispatch and CSV / JSON emission for the command-line tool.

#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "resetsim/analysis_fitting.hpp"
#include "resetsim/config.hpp"
#include "resetsim/readout.hpp"
#include "resetsim/virtual_experiments.hpp"

namespace resetsim {

/// Everything one run produces, before it touches the file system.
struct RunOutput {
    std::string experiment;
    std::string csv;
    std::vector<std::pair<std::string, std::string>> extra_csv;  // suffix, content
    nlohmann::json summary;
    std::string line;  // one-line human summary
};

namespace detail {

class CsvWriter {
public:
    explicit CsvWriter(const std::string& header) {
        os_.imbue(std::locale::classic());
        os_.precision(17);
        os_ << header << '\n';
    }
    template <typename... Ts>
    void row(const Ts&... values) {
        bool first = true;
        ((os_ << (first ? "" : ",") << values, first = false), ...);
        os_ << '\n';
    }
    [[nodiscard]] std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

inline std::string percent(double x, int digits = 3) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(digits) << 100.0 * x << " %";
    return os.str();
}

inline nlohmann::json fit_json(const FitResult& f) {
    nlohmann::json cov = nlohmann::json::array();
    for (Eigen::Index i = 0; i < f.covariance.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < f.covariance.cols(); ++j) row.push_back(f.covariance(i, j));
        cov.push_back(row);
    }
    return {{"params", f.params}, {"covariance", cov}, {"residual_rms", f.residual_rms},
            {"converged", f.converged}};
}

inline nlohmann::json diagnostics_json(const PhysicsDiagnostics& d) {
    return {{"trace_error", d.trace_error},
            {"hermiticity_error", d.hermiticity_error},
            {"min_eigenvalue", d.min_eigenvalue}};
}

inline nlohmann::json reset_json(const ResetConfig& r) {
    return {{"ef_pulse_duration", r.ef_pulse_duration}, {"f0g1_amplitude", r.f0g1_amplitude},
            {"f0g1_duration", r.f0g1_duration},         {"f0g1_ramp", r.f0g1_ramp},
            {"f0g1_stark_offset", r.f0g1_stark_offset}, {"f0g1_freq_offset", r.f0g1_freq_offset},
            {"use_ideal_x", r.use_ideal_x},             {"x_over_rotation", r.x_over_rotation},
            {"idle_after", r.idle_after}};
}

inline std::vector<double> drive_amplitudes(const std::vector<double>& amps, const std::vector<double>& volts,
                                            const AwgMap& awg) {
    if (volts.empty()) return amps;
    std::vector<double> out;
    for (double v : volts) out.push_back(v < 0.0 ? -awg.amplitude(-v) : awg.amplitude(v));
    return out;
}

inline RunOutput run_spectroscopy(const RunConfig& cfg, const SystemModel& model) {
    const auto& c = cfg.spectroscopy;
    const auto amps = drive_amplitudes(c.amplitudes, c.voltages, cfg.awg);
    std::vector<double> freqs;
    const auto n = static_cast<long long>(std::floor((c.freq_stop - c.freq_start) / c.freq_step + 1e-9));
    for (long long i = 0; i <= n; ++i) freqs.push_back(c.freq_start + static_cast<double>(i) * c.freq_step);
    const SpectroscopyMap map = spectroscopy_scan(model, amps, freqs, c.probe_duration, cfg.integrator, c.ramp);

    RunOutput out;
    CsvWriter csv("amplitude_ghz,frequency_ghz,qubit_population");
    for (std::size_t i = 0; i < amps.size(); ++i) {
        for (std::size_t j = 0; j < freqs.size(); ++j) {
            csv.row(amps[i], freqs[j],
                    map.qubit_population(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }
    out.csv = csv.str();
    out.summary["amplitudes"] = amps;
    out.summary["nominal_f0g1"] = derived_frequencies(model.params()).omega_f0g1;
    out.summary["diagnostics"] = diagnostics_json(map.diagnostics);
    try {
        const SpectroscopyAnalysis an = analyze_spectroscopy(map);
        nlohmann::json fits = nlohmann::json::array();
        for (std::size_t k = 0; k < an.amplitudes.size(); ++k) {
            fits.push_back({{"amplitude", an.amplitudes[k]}, {"center", an.centers[k]},
                            {"width", an.widths[k]}, {"fit", fit_json(an.fits[k])}});
        }
        out.summary["resonances"] = fits;
        out.summary["quadratic"] = fit_json(an.quadratic);
        out.summary["zero_amplitude_frequency"] = an.zero_amplitude_frequency;
        out.summary["zero_amplitude_width"] = an.zero_amplitude_width;
        std::ostringstream line;
        line.imbue(std::locale::classic());
        line << std::setprecision(7) << "spectroscopy: resonance at zero drive " << an.zero_amplitude_frequency
             << " GHz (fit width " << std::setprecision(3) << an.zero_amplitude_width * 1e3
             << " MHz), Stark curvature " << an.quadratic.at("c2") << " GHz/GHz^2";
        out.line = line.str();
    } catch (const ConvergenceError& e) {
        out.summary["analysis_error"] = e.what();
        out.line = std::string("spectroscopy: map written, resonance analysis failed: ") + e.what();
    }
    return out;
}

inline RunOutput run_rabi(const RunConfig& cfg, const SystemModel& model) {
    const auto& c = cfg.rabi;
    std::vector<double> amps = drive_amplitudes(c.amplitudes, c.voltages, cfg.awg);
    if (amps.empty()) {
        const double top = transfer_amplitude_for(model, cfg.reset.f0g1_duration, cfg.reset.f0g1_ramp);
        for (int k = 0; k < 5; ++k) amps.push_back(top * (0.5 + 0.125 * k));
    }
    std::vector<double> durations;
    const auto n = static_cast<long long>(std::floor((c.t_stop - c.t_start) / c.t_step + 1e-9));
    for (long long i = 0; i <= n; ++i) durations.push_back(c.t_start + static_cast<double>(i) * c.t_step);
    const double nominal = derived_frequencies(model.params()).omega_f0g1;

    RunOutput out;
    CsvWriter csv("amplitude_ghz,duration_ns,p_g,p_e,p_f,p_h,excited");
    nlohmann::json points = nlohmann::json::array();
    double rate_lo = 1e300;
    double rate_hi = -1e300;
    PhysicsDiagnostics diag;
    for (double amp : amps) {
        if (!(amp > 0.0)) throw ConfigError("rabi.amplitudes: entries must be > 0");
        const F0G1Resonance res = f0g1_resonance(model, amp);
        const double freq = nominal + res.stark_shift + c.detuning;
        nlohmann::json pt{{"amplitude", amp}, {"frequency", freq}, {"coupling", res.coupling},
                          {"stark_shift", res.stark_shift}};
        const RabiResult r = rabi_scan(model, amp, freq, durations, cfg.integrator, c.ramp);
        try {
            const Minimum m = first_minimum(r.durations, r.excited);
            pt["t_opt"] = m.t;
            pt["residual"] = m.y;
        } catch (const NoMinimumError&) {
            pt["t_opt"] = nullptr;
            pt["residual"] = nullptr;
        }
        pt["fit"] = fit_json(r.fit);
        pt["rabi_rate_per_us"] = r.fit.params.empty() ? 0.0 : r.fit.at("freq_per_us");
        if (!r.fit.params.empty()) {
            rate_lo = std::min(rate_lo, r.fit.at("freq_per_us"));
            rate_hi = std::max(rate_hi, r.fit.at("freq_per_us"));
        }
        diag.merge(r.diagnostics);
        for (std::size_t i = 0; i < r.durations.size(); ++i) {
            const auto& t = r.transmon[i];
            csv.row(amp, r.durations[i], t[0], t[1], t[2], t.size() > 3 ? t[3] : 0.0, r.excited[i]);
        }
        points.push_back(pt);
    }
    out.csv = csv.str();
    out.summary["points"] = points;
    out.summary["diagnostics"] = diagnostics_json(diag);
    out.summary["kappa_r_per_us"] = model.params().kappa_r;
    std::ostringstream line;
    line.imbue(std::locale::classic());
    line << std::setprecision(3) << "rabi: " << amps.size() << " amplitudes, Rabi rates " << rate_lo << " to "
         << rate_hi << " (us)^-1";
    out.line = line.str();
    return out;
}

inline std::string trace_csv(const TimeTrace& t) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    t.write_csv(os);
    return os.str();
}

inline RunOutput run_reset_trace(const RunConfig& cfg, const SystemModel& model) {
    const ResetTraceResult r = reset_trace(model, cfg.reset, cfg.reset_trace.mismatch, cfg.integrator);
    RunOutput out;
    out.csv = trace_csv(r.pulsed);
    out.extra_csv.emplace_back("free_decay", trace_csv(r.free_decay));
    out.summary["residual"] = r.residual;
    out.summary["residual_after_transfer"] = r.residual_after_transfer;
    out.summary["free_decay_final"] = r.free_decay.qubit_excited().back();
    out.summary["mismatch"] = cfg.reset_trace.mismatch;
    out.summary["resolved_reset"] = reset_json(r.resolved);
    out.summary["schedule"] = r.schedule.describe();
    PhysicsDiagnostics diag = r.pulsed.diagnostics;
    diag.merge(r.free_decay.diagnostics);
    out.summary["diagnostics"] = diagnostics_json(diag);
    std::ostringstream line;
    line.imbue(std::locale::classic());
    line << "reset-trace: residual " << percent(r.residual) << " (" << percent(r.residual_after_transfer)
         << " right after transfer), mismatch " << cfg.reset_trace.mismatch * 1e6 << " kHz";
    out.line = line.str();
    return out;
}

inline RunOutput run_trigger_scan(const RunConfig& cfg, const SystemModel& model) {
    const auto& c = cfg.trigger;
    const bool want_plain = c.mode != TriggerMode::reset;
    const bool want_reset = c.mode != TriggerMode::no_reset;
    TriggerScanConfig scan = c.scan;
    scan.reset = cfg.reset;
    std::optional<TriggerScanResult> plain;
    std::optional<TriggerScanResult> pulsed;
    if (want_plain) {
        scan.with_reset = false;
        plain = trigger_rate_experiment(model, c.rates, scan, cfg.integrator);
    }
    if (want_reset) {
        scan.with_reset = true;
        pulsed = trigger_rate_experiment(model, c.rates, scan, cfg.integrator);
    }
    std::string header = "rate_khz";
    if (want_plain) header += ",population_no_reset";
    if (want_reset) header += ",population_with_reset";
    CsvWriter csv(header);
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < c.rates.size(); ++i) {
        nlohmann::json pt{{"rate_khz", c.rates[i]}};
        if (plain) {
            pt["no_reset"] = plain->points[i].population;
            pt["no_reset_rounds"] = plain->points[i].per_round.size();
        }
        if (pulsed) {
            pt["with_reset"] = pulsed->points[i].population;
            pt["with_reset_rounds"] = pulsed->points[i].per_round.size();
        }
        if (plain && pulsed) {
            csv.row(c.rates[i], plain->points[i].population, pulsed->points[i].population);
        } else if (plain) {
            csv.row(c.rates[i], plain->points[i].population);
        } else {
            csv.row(c.rates[i], pulsed->points[i].population);
        }
        points.push_back(pt);
    }
    RunOutput out;
    out.csv = csv.str();
    out.summary["points"] = points;
    out.summary["thermal_floor"] = model.params().p_thermal_e;
    if (pulsed) out.summary["resolved_reset"] = reset_json(pulsed->resolved);
    std::ostringstream line;
    line.imbue(std::locale::classic());
    line << "trigger-scan: " << c.rates.size() << " rates";
    const std::size_t last = c.rates.size() - 1;
    if (plain) line << ", no reset " << percent(plain->points[last].population);
    if (pulsed) line << ", with reset " << percent(pulsed->points[last].population);
    line << " at " << c.rates[last] << " kHz";
    out.line = line.str();
    return out;
}

inline RunOutput run_readout_demo(const RunConfig& cfg, const SystemModel& model) {
    const auto& c = cfg.readout;
    ReadoutModel ro = ReadoutModel::with_separation(c.separation, c.sigma);
    ro.seed = cfg.seed;
    Rng cal_g(derive_seed(cfg.seed, 0));
    Rng cal_f(derive_seed(cfg.seed, 1));
    Rng test_g(derive_seed(cfg.seed, 2));
    Rng test_f(derive_seed(cfg.seed, 3));
    const std::vector<double> ground{1.0, 0.0, 0.0};
    const std::vector<double> second{0.0, 0.0, 1.0};
    const ShotSet shots_g = readout_shots(ground, ro, c.shots, cal_g);
    const ShotSet shots_f = readout_shots(second, ro, c.shots, cal_f);
    const LinearBoundary boundary = train_classifier(shots_g, shots_f);
    ShotSet calibration = shots_g;
    calibration.append(shots_f);
    ShotSet test = readout_shots(ground, ro, c.shots, test_g);
    test.append(readout_shots(second, ro, c.shots, test_f));
    const double f_train = assignment_fidelity(boundary, calibration);
    const double f_test = assignment_fidelity(boundary, test);

    // end states of the trigger experiment at the configured rate
    TriggerScanConfig scan = cfg.trigger.scan;
    scan.reset = cfg.reset;
    scan.with_reset = false;
    const auto plain = trigger_rate_experiment(model, {c.rate_khz}, scan, cfg.integrator);
    scan.with_reset = true;
    const auto pulsed = trigger_rate_experiment(model, {c.rate_khz}, scan, cfg.integrator);
    Rng end_plain(derive_seed(cfg.seed, 4));
    Rng end_pulsed(derive_seed(cfg.seed, 5));
    const ShotSet shots_plain = readout_shots(plain.points[0].transmon, ro, c.shots, end_plain);
    const ShotSet shots_pulsed = readout_shots(pulsed.points[0].transmon, ro, c.shots, end_pulsed);
    const PopulationEstimate est_plain =
        population_estimate(boundary, shots_plain, c.repetitions, derive_seed(cfg.seed, 6));
    const PopulationEstimate est_pulsed =
        population_estimate(boundary, shots_pulsed, c.repetitions, derive_seed(cfg.seed, 7));

    CsvWriter csv("set,label,i,q");
    auto dump = [&csv](const char* set, const ShotSet& s) {
        for (std::size_t k = 0; k < s.size(); ++k) csv.row(set, s.labels[k], s.points[k][0], s.points[k][1]);
    };
    dump("calibration", calibration);
    dump("t1_reset", shots_plain);
    dump("pulsed_reset", shots_pulsed);

    RunOutput out;
    out.csv = csv.str();
    auto centers = nlohmann::json::array();
    for (const auto& z : ro.iq_centers) centers.push_back({z.real(), z.imag()});
    out.summary["iq_centers"] = centers;
    out.summary["blob_sigma"] = ro.blob_sigma;
    out.summary["boundary"] = {{"normal", boundary.normal}, {"offset", boundary.offset}};
    out.summary["fidelity_calibration"] = f_train;
    out.summary["fidelity_test"] = f_test;
    out.summary["fidelity_optimal"] = optimal_two_blob_fidelity(c.separation);
    // assignment error rates from the labeled test shots
    const ShotSet test_ground = test.with_label(level::g);
    const ShotSet test_second = test.with_label(level::f);
    const double false_excited = population_estimate(boundary, test_ground, 0).value;
    const double false_ground = 1.0 - population_estimate(boundary, test_second, 0).value;
    auto est_json = [&](const PopulationEstimate& e, double truth) {
        return nlohmann::json{{"estimate", e.value},
                              {"p25", e.p25},
                              {"p75", e.p75},
                              {"corrected", assignment_corrected(e.value, false_excited, false_ground)},
                              {"true_excited", truth}};
    };
    out.summary["assignment_errors"] = {{"p_f_given_g", false_excited}, {"p_g_given_f", false_ground}};
    out.summary["t1_reset"] = est_json(est_plain, plain.points[0].population);
    out.summary["pulsed_reset"] = est_json(est_pulsed, pulsed.points[0].population);
    out.summary["stream_seeds"] = {{"master", cfg.seed}, {"streams", 8}};
    std::ostringstream line;
    line.imbue(std::locale::classic());
    line << "readout-demo: assignment fidelity " << percent(f_test, 4) << ", T1 reset "
         << percent(est_plain.value) << " (corrected "
         << percent(assignment_corrected(est_plain.value, false_excited, false_ground)) << "), pulsed reset "
         << percent(est_pulsed.value) << " (corrected "
         << percent(assignment_corrected(est_pulsed.value, false_excited, false_ground)) << ") at "
         << c.rate_khz << " kHz";
    out.line = line.str();
    return out;
}

inline RunOutput run_thermal_pop(const RunConfig& cfg, const SystemModel& model) {
    const ThermalEstimate th = thermal_population_measurement(model, cfg.thermal.n_angles);
    CsvWriter csv("angle_rad,pe_thermal,pe_prepared");
    for (std::size_t i = 0; i < th.angles.size(); ++i) csv.row(th.angles[i], th.pe_thermal[i], th.pe_prepared[i]);
    RunOutput out;
    out.csv = csv.str();
    out.summary["estimate"] = th.estimate;
    out.summary["configured"] = model.params().p_thermal_e;
    out.summary["amplitude_thermal"] = th.amplitude_thermal;
    out.summary["amplitude_prepared"] = th.amplitude_prepared;
    out.summary["ratio"] = th.ratio;
    out.line = "thermal-pop: estimated p_e " + percent(th.estimate, 4) + " (configured " +
               percent(model.params().p_thermal_e, 4) + ")";
    return out;
}

}  // namespace detail

/// Runs the configured experiment in memory.
inline RunOutput execute(const RunConfig& cfg) {
    const SystemModel model(cfg.device, cfg.hilbert);
    RunOutput out;
    switch (cfg.experiment) {
        case ExperimentKind::spectroscopy: out = detail::run_spectroscopy(cfg, model); break;
        case ExperimentKind::rabi: out = detail::run_rabi(cfg, model); break;
        case ExperimentKind::reset_trace: out = detail::run_reset_trace(cfg, model); break;
        case ExperimentKind::trigger_scan: out = detail::run_trigger_scan(cfg, model); break;
        case ExperimentKind::readout_demo: out = detail::run_readout_demo(cfg, model); break;
        case ExperimentKind::thermal_pop: out = detail::run_thermal_pop(cfg, model); break;
    }
    out.experiment = to_string(cfg.experiment);
    nlohmann::json full;
    full["config"] = to_json(cfg);
    full["results"] = out.summary;
    out.summary = std::move(full);
    return out;
}

/// UTC timestamp used in output file names.
inline std::string timestamp_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
    return os.str();
}

struct WrittenFiles {
    std::filesystem::path csv;
    std::filesystem::path json;
    std::vector<std::filesystem::path> extra;
};

/// Writes <experiment>_<timestamp>.{csv,json} (plus extra CSVs) into dir,
/// adding a counter when the stem is taken.
inline WrittenFiles write_outputs(const RunOutput& out, const std::filesystem::path& dir,
                                  const std::string& timestamp) {
    std::filesystem::create_directories(dir);
    std::string stem = out.experiment + "_" + timestamp;
    for (int k = 2; std::filesystem::exists(dir / (stem + ".csv")) || std::filesystem::exists(dir / (stem + ".json"));
         ++k) {
        stem = out.experiment + "_" + timestamp + "_" + std::to_string(k);
    }
    WrittenFiles files{dir / (stem + ".csv"), dir / (stem + ".json"), {}};
    auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw ConfigError("output_dir: cannot write " + p.string());
        f << text;
    };
    write(files.csv, out.csv);
    for (const auto& [suffix, text] : out.extra_csv) {
        files.extra.push_back(dir / (stem + "_" + suffix + ".csv"));
        write(files.extra.back(), text);
    }
    nlohmann::json j = out.summary;
    j["timestamp"] = timestamp;
    j["files"] = {{"csv", files.csv.filename().string()}};
    for (const auto& p : files.extra) j["files"]["extra"].push_back(p.filename().string());
    write(files.json, j.dump(2) + "\n");
    return files;
}

/// Process exit code for an error category; 0 is success.
inline int exit_code(ErrorCategory c) { return 10 + static_cast<int>(c); }

}  // namespace resetsim
