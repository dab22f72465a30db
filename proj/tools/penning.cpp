// penning: command-line front end for the Penning-trap axialisation toolkit.
//
// Subcommands: frequencies, envelope, simulate, correlate, phase-scan,
// image, spot-size, scenario <name>, sweep. All physical parameters come
// from a flat key=value config file (see README); every consumed key is
// echoed into the run manifest.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "penning/envelope_model.hpp"
#include "penning/errors.hpp"
#include "penning/imaging.hpp"
#include "penning/io.hpp"
#include "penning/photon_stats.hpp"
#include "penning/scenarios.hpp"
#include "penning/spectrum.hpp"
#include "penning/trap_model.hpp"

namespace fs = std::filesystem;
using namespace penning;

namespace {

Config load_config(const std::string& path) {
    return path.empty() ? Config{} : Config::from_file(path);
}

void apply_overrides(Config& cfg, const std::vector<std::string>& sets) {
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
}

int cmd_frequencies(const Config& cfg) {
    const Scene scene = scene_from_config(cfg);
    const auto f = derive_frequencies(scene.species, scene.geometry, scene.fields);
    std::cout.precision(10);
    std::cout << "f_c_hz=" << f.omega_c / constants::two_pi << "\n"
              << "f_z_hz=" << f.omega_z / constants::two_pi << "\n"
              << "f_1_hz=" << f.omega_1 / constants::two_pi << "\n"
              << "f_c_prime_hz=" << f.omega_c_prime / constants::two_pi << "\n"
              << "f_m_hz=" << f.omega_m / constants::two_pi << "\n"
              << "omega_c_rad_per_s=" << f.omega_c << "\n"
              << "omega_z_rad_per_s=" << f.omega_z << "\n"
              << "omega_c_prime_rad_per_s=" << f.omega_c_prime << "\n"
              << "omega_m_rad_per_s=" << f.omega_m << "\n";
    return 0;
}

int cmd_envelope(const Config& cfg, const std::string& out) {
    EnvelopeParams p;
    p.delta = cfg.get_double("envelope.delta_per_s", 0.0);
    if (cfg.has("envelope.drive_amplitude_v"))
        p.delta = coupling_from_drive(cfg.get_double("envelope.drive_amplitude_v", 0.0),
                                      cfg.get_double("envelope.k_delta_per_s_per_v", 400.0));
    p.gamma_c = cfg.get_double("envelope.gamma_c_per_s", 0.0);
    p.gamma_m = cfg.get_double("envelope.gamma_m_per_s", 0.0);
    const EnvelopeState s0{cfg.get_double("envelope.r_c0_m", 0.0),
                           cfg.get_double("envelope.r_m0_m", 1e-6)};
    const double duration = cfg.get_double("envelope.duration_s", 0.01);
    const double dt = cfg.get_double("envelope.dt_s", duration / 1000.0);

    const auto regime = classify_regime(p, default_regime_tol(p));
    CsvWriter csv(out, {"t_s", "r_c_m", "r_m_m", "regime"});
    for (double t = 0.0; t <= duration; t += dt) {
        const auto s = evolve_envelope(p, s0, t);
        csv.row_mixed({std::to_string(t), std::to_string(s.r_c), std::to_string(s.r_m),
                       regime_name(regime.regime)});
    }
    std::cout << "regime=" << regime_name(regime.regime) << "\n"
              << "lambda_plus_re_per_s=" << regime.lambda_plus.real() << "\n"
              << "lambda_minus_re_per_s=" << regime.lambda_minus.real() << "\n"
              << "out=" << out << "\n";
    return 0;
}

int cmd_simulate(const Config& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const Scene scene = scene_from_config(cfg);
    const SimConfig sim = sim_config_from_config(cfg, scene);
    const auto res = run(sim, scene);

    const auto traj_path = (fs::path(out_dir) / "trajectory.csv").string();
    {
        CsvWriter csv(traj_path, {"t_s", "ion_id", "x_m", "y_m", "z_m", "vx", "vy", "vz"});
        for (std::size_t i = 0; i < res.trajectory.times.size(); ++i)
            for (std::size_t k = 0; k < res.trajectory.states[i].size(); ++k) {
                const auto& ion = res.trajectory.states[i][k];
                csv.row({res.trajectory.times[i], static_cast<double>(k), ion.position.x,
                         ion.position.y, ion.position.z, ion.velocity.x, ion.velocity.y,
                         ion.velocity.z});
            }
    }
    const auto photon_path = (fs::path(out_dir) / "photons.bin").string();
    write_photon_stream(photon_path, res.photons);

    RunManifest m;
    m.scenario = "simulate";
    m.code_version = code_version;
    m.seed = sim.rng_seed;
    m.resolved_config = cfg.resolved();
    m.output_checksums["trajectory.csv"] = file_checksum(traj_path);
    m.output_checksums["photons.bin"] = file_checksum(photon_path);
    write_manifest((fs::path(out_dir) / "manifest.json").string(), m);

    std::cout << "photons=" << res.photons.timestamps.size() << "\n"
              << "scatter_events=" << res.scatter_events << "\n"
              << "trajectory_samples=" << res.trajectory.times.size() << "\n"
              << "out_dir=" << out_dir << "\n";
    return 0;
}

int cmd_correlate(const Config& cfg, const std::string& photons_path,
                  const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto photons = read_photon_stream(photons_path);
    const double bin = cfg.get_double("correlate.bin_s", 0.5e-6);
    const double max_lag = cfg.get_double("correlate.max_lag_s", 200e-6);
    const double snr = cfg.get_double("correlate.peak_snr", 4.0);

    const auto h = waiting_time_histogram(photons, bin, max_lag);
    const auto res = detrend_and_fft(h, snr);

    {
        CsvWriter csv((fs::path(out_dir) / "histogram.csv").string(),
                      {"lag_s", "counts", "detrended"});
        for (std::size_t i = 0; i < h.counts.size(); ++i)
            csv.row({(static_cast<double>(i) + 0.5) * h.bin_width,
                     static_cast<double>(h.counts[i]), res.detrended[i]});
    }
    {
        CsvWriter csv((fs::path(out_dir) / "spectrum.csv").string(), {"freq_hz", "power"});
        for (std::size_t i = 0; i < res.spectrum.frequency_hz.size(); ++i)
            csv.row({res.spectrum.frequency_hz[i], res.spectrum.power[i]});
    }
    std::cout << "background_rate_per_s=" << res.background.rate << "\n"
              << "background_chi2_per_dof=" << res.background.chi2_per_dof << "\n"
              << "background_fit_ok=" << (res.background.fit_ok ? 1 : 0) << "\n"
              << "n_peaks=" << res.peaks.size() << "\n";
    for (const auto& p : res.peaks)
        std::cout << "peak_hz=" << p.frequency_hz << " snr=" << p.snr << "\n";
    return 0;
}

int cmd_phase_scan(const Config& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto res = run_fig5_phase_scan(cfg);
    CsvWriter csv((fs::path(out_dir) / "fits.csv").string(),
                  {"amplitude_v", "gamma_per_s", "gamma_hz", "omega0_hz"});
    for (const auto& a : res.amplitudes) {
        csv.row({a.amplitude_v, a.gamma_fit, a.gamma_fit / constants::two_pi,
                 a.omega_0 / constants::two_pi});
        CsvWriter scsv((fs::path(out_dir) /
                        ("scan_" + std::to_string(a.amplitude_v) + "V.csv"))
                           .string(),
                       {"drive_hz", "phase_rad", "depth", "sigma"});
        for (const auto& m : a.scan)
            scsv.row({m.drive_omega / constants::two_pi, m.phase, m.depth, m.uncertainty});
    }
    for (const auto& a : res.amplitudes)
        std::cout << "gamma_per_s[" << a.amplitude_v << "V]=" << a.gamma_fit << "\n";
    std::cout << "linear_r_squared=" << res.linear_r_squared << "\n"
              << "enhancement_ratio=" << res.enhancement_ratio << "\n";
    return 0;
}

int cmd_image(const Config& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const Scene scene = scene_from_config(cfg);
    const SimConfig sim = sim_config_from_config(cfg, scene);
    const auto res = run(sim, scene);
    const CameraModel cam = camera_from_config(cfg);
    const auto weights =
        detection_weights(res.trajectory, scene, sim.detection_efficiency);
    const Image img = accumulate_image(res.trajectory, weights, cam);
    const auto pgm = (fs::path(out_dir) / "image.pgm").string();
    write_pgm16(pgm, img);
    std::cout << "image=" << pgm << "\n"
              << "total_weight=" << img.total_weight << "\n"
              << "spilled_weight=" << img.spilled << "\n";
    return 0;
}

int cmd_spot_size(const std::string& pgm_path, double meters_per_pixel) {
    // Reads back a 16-bit PGM produced by `image` and reports spot measures.
    std::ifstream in(pgm_path, std::ios::binary);
    if (!in) throw Error("Io", "cannot open image: " + pgm_path);
    std::string magic;
    int w, h, maxval;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 65535)
        throw Error("Io", "expected 16-bit binary PGM");
    in.get();
    Image img;
    img.width = w;
    img.height = h;
    img.meters_per_pixel = meters_per_pixel;
    img.pixels.resize(static_cast<std::size_t>(w) * h);
    for (auto& px : img.pixels) {
        const int hi = in.get(), lo = in.get();
        px = static_cast<double>((hi << 8) | lo);
    }
    const auto s = measure_spot_size(img);
    std::cout << "rms_x_m=" << s.rms_x << "\n"
              << "rms_z_m=" << s.rms_z << "\n"
              << "fwhm_x_m=" << s.fwhm_x << "\n"
              << "fwhm_z_m=" << s.fwhm_z << "\n"
              << "fwhm_x_direct_m=" << s.fwhm_x_direct << "\n"
              << "fwhm_z_direct_m=" << s.fwhm_z_direct << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Penning trap axialisation and laser-cooling toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir = "out", out_file = "envelope.csv";
    std::string photons_path, scenario_name, pgm_path;
    double meters_per_pixel = 13e-6;
    std::vector<std::string> overrides;

    app.add_option("-c,--config", config_path, "flat key=value config file")
        ->check(CLI::ExistingFile);
    app.add_option("-s,--set", overrides, "override config entries (key=value)");

    auto* freq = app.add_subcommand("frequencies", "trap mode frequencies from the config");
    auto* env = app.add_subcommand("envelope", "closed-form envelope evolution to CSV");
    env->add_option("-o,--out", out_file, "output CSV path");
    auto* sim = app.add_subcommand("simulate", "full Newtonian run: trajectory + photons");
    sim->add_option("-o,--out-dir", out_dir, "output directory");
    auto* corr = app.add_subcommand("correlate", "waiting-time histogram + FFT of a photon stream");
    corr->add_option("photons", photons_path, "photon stream .bin")->required();
    corr->add_option("-o,--out-dir", out_dir, "output directory");
    auto* scan = app.add_subcommand("phase-scan", "rf-photon damping-rate measurement");
    scan->add_option("-o,--out-dir", out_dir, "output directory");
    auto* img = app.add_subcommand("image", "synthetic ICCD exposure of a run");
    img->add_option("-o,--out-dir", out_dir, "output directory");
    auto* spot = app.add_subcommand("spot-size", "spot measures of a PGM image");
    spot->add_option("image", pgm_path, "PGM path")->required();
    spot->add_option("--meters-per-pixel", meters_per_pixel, "physical scale");
    auto* scen = app.add_subcommand("scenario", "run a named scenario");
    scen->add_option("name", scenario_name, "scenario name")->required();
    scen->add_option("-o,--out-dir", out_dir, "output directory");
    auto* sweep = app.add_subcommand("sweep", "grid sweep of a scenario (sweep.* keys)");
    sweep->add_option("-o,--out-dir", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg = load_config(config_path);
        apply_overrides(cfg, overrides);
        if (freq->parsed()) return cmd_frequencies(cfg);
        if (env->parsed()) return cmd_envelope(cfg, out_file);
        if (sim->parsed()) return cmd_simulate(cfg, out_dir);
        if (corr->parsed()) return cmd_correlate(cfg, photons_path, out_dir);
        if (scan->parsed()) return cmd_phase_scan(cfg, out_dir);
        if (img->parsed()) return cmd_image(cfg, out_dir);
        if (spot->parsed()) return cmd_spot_size(pgm_path, meters_per_pixel);
        if (scen->parsed()) {
            const auto m = run_scenario(scenario_name, cfg, out_dir);
            std::cout << "scenario=" << m.scenario << "\n"
                      << "out_dir=" << out_dir << "\n"
                      << "outputs=" << m.output_checksums.size() << "\n";
            return 0;
        }
        if (sweep->parsed()) {
            const auto outcomes = run_sweep(cfg, out_dir);
            int failed = 0;
            for (const auto& o : outcomes) {
                std::cout << "point " << o.value << ": " << (o.ok ? "ok" : o.error) << "\n";
                if (!o.ok) ++failed;
            }
            return failed == 0 ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error code=" << e.code() << " msg=" << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error code=Internal msg=" << e.what() << "\n";
        return 3;
    }
    return 0;
}
