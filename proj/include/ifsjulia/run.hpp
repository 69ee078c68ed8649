#pragma once

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>

#include "ifsjulia/io.hpp"
#include "ifsjulia/semigroup.hpp"
#include "ifsjulia/uqr.hpp"

namespace ifsjulia {

namespace exit_code {
constexpr int ok = 0;
constexpr int validation_failure = 2;
constexpr int gate_failure = 3;
}  // namespace exit_code

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline void write_run_report(const MetricsRecord& rec, const std::string& path) {
    std::ofstream out(path);
    out << "run " << rec.run_id << " (" << rec.command << " on " << rec.system << ")\n";
    out << "config hash " << rec.config_hash << ", wall time " << std::setprecision(4)
        << rec.wall_time_s << " s\n";
    for (const auto& g : rec.gates)
        out << (g.pass ? "  [pass] " : "  [FAIL] ") << g.name << ": " << std::setprecision(10)
            << g.value << " " << g.op << " " << g.threshold << "\n";
}

inline std::string artifact_path(const RunConfig& cfg, const std::string& stem,
                                 const std::string& ext) {
    return (std::filesystem::path(cfg.out_dir) / (stem + ext)).string();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-command pipelines. Each writes its PGM artifacts plus a metrics record;
// gate enforcement (exit 3) happens only in `verify`.
// ---------------------------------------------------------------------------

struct CommandResult {
    MetricsRecord metrics;
    std::vector<std::string> artifacts;
};

inline CommandResult run_attractor(const RunConfig& cfg, const ConformalIFS& ifs,
                                   std::ostream& log) {
    detail::Stopwatch timer;
    CommandResult res;
    const auto cloud = attractor_chaos_game(ifs, cfg.chaos_points, cfg.burn_in, cfg.seed);
    const auto mask = rasterize(cloud.points, cfg.resolution, cfg.window);
    const std::string pgm = detail::artifact_path(cfg, "attractor_" + ifs.label, ".pgm");
    write_pgm(mask, pgm);
    res.artifacts.push_back(pgm);

    MetricsRecord rec;
    rec.command = "attractor";
    rec.system = ifs.label;
    rec.config_hash = config_hash(cfg);
    rec.run_id = rec.command + "_" + ifs.label + "_" + rec.config_hash.substr(0, 8);
    rec.details["points"] = cloud.points.size();
    rec.details["seed"] = cloud.meta.seed;
    rec.details["burn_in"] = cloud.meta.burn_in;
    rec.details["marked_pixels"] = mask.marked_count();
    double max_mod = 0.0;
    for (const auto& p : cloud.points) max_mod = std::max(max_mod, std::abs(p));
    rec.gates.push_back(gate_le("cloud_inside_unit_disk", max_mod, 1.0));
    rec.wall_time_s = timer.seconds();
    res.metrics = rec;
    log << "attractor: " << cloud.points.size() << " points, " << mask.marked_count()
        << " pixels\n";
    return res;
}

inline CommandResult run_semigroup(const RunConfig& cfg, const ConformalIFS& ifs,
                                   std::ostream& log) {
    detail::Stopwatch timer;
    CommandResult res;
    const auto plan = build_separation_plan(ifs, cfg.delta);
    const auto gens = build_all_generators(plan);

    double seam_max = 0.0;
    bool degrees_ok = true;
    DistortionReport rings;
    for (const auto& g : gens) {
        seam_max = std::max(seam_max, audit_generator_seams(g).worst);
        if (circle_winding([&](const cplx& z) { return g.evaluate(z).value; }) != 2)
            degrees_ok = false;
        rings = merge_reports(std::move(rings),
                              merge_reports(ring_distortion(g.ring_i(), 4, 32),
                                            ring_distortion(g.ring_j(), 4, 32)));
    }
    const double k_max = rings.k_estimate;

    const auto mask = julia_estimate_grid(gens, cfg.window, cfg.resolution, cfg.words_per_pixel,
                                          cfg.word_length, cfg.seed);
    const auto cloud = attractor_chaos_game(ifs, cfg.chaos_points, cfg.burn_in, cfg.seed);
    const double hd_px = mask.marked_count() == 0
                             ? std::numeric_limits<double>::infinity()
                             : hausdorff_distance(mask.marked_points(), cloud.points) /
                                   mask.pixel_size();

    const std::string pgm = detail::artifact_path(cfg, "semigroup_" + ifs.label, ".pgm");
    write_pgm(mask, pgm);
    res.artifacts.push_back(pgm);

    MetricsRecord rec;
    rec.command = "semigroup";
    rec.system = ifs.label;
    rec.config_hash = config_hash(cfg);
    rec.run_id = rec.command + "_" + ifs.label + "_" + rec.config_hash.substr(0, 8);
    rec.details["word_length_N"] = plan.N;
    rec.details["generators"] = gens.size();
    rec.details["delta"] = plan.delta;
    rec.details["r"] = plan.r;
    rec.details["d_lower"] = plan.d_lower;
    rec.details["verified_min_distance"] = plan.verified_min_distance;
    rec.details["ring_distortion"] = distortion_to_json(rings);
    rec.details["marked_pixels"] = mask.marked_count();
    rec.gates.push_back(gate_le("julia_vs_attractor_px", hd_px, 3.0));
    rec.gates.push_back(gate_le("seam_max", seam_max, 1e-6));
    rec.gates.push_back(gate_eq("degrees_all_two", degrees_ok ? 1.0 : 0.0, 1.0));
    rec.gates.push_back(
        gate_ge("separation_margin", plan.verified_min_distance - plan.d_lower, 0.0));
    rec.wall_time_s = timer.seconds();
    res.metrics = rec;
    log << "semigroup: " << gens.size() << " generators, J(G)=S at " << hd_px
        << " px, seams " << seam_max << ", ring K " << k_max << "\n";
    return res;
}

inline CommandResult run_uqr(const RunConfig& cfg, const ConformalIFS& ifs, std::ostream& log) {
    detail::Stopwatch timer;
    CommandResult res;
    const auto plan = plan_uqr(ifs, cfg.eps);
    const UqrMap f(plan);
    const auto cloud = attractor_chaos_game(ifs, cfg.chaos_points, cfg.burn_in, cfg.seed);

    const double px = 2.0 * cfg.window.half_width / static_cast<double>(cfg.resolution);
    const std::size_t max_iter =
        cfg.max_iter ? cfg.max_iter : recommended_escape_iterations(ifs.max_factor(), px);
    const auto ver = verify_uqr(f, cloud, cfg.window, cfg.resolution, max_iter,
                                cfg.orbit_samples, cfg.seed);
    const auto seams = audit_uqr_seams(f);
    const auto dist = uqr_distortion(f);

    const std::string pgm = detail::artifact_path(cfg, "uqr_" + ifs.label, ".pgm");
    write_pgm(ver.mask, pgm);
    res.artifacts.push_back(pgm);

    MetricsRecord rec;
    rec.command = "uqr";
    rec.system = ifs.label;
    rec.config_hash = config_hash(cfg);
    rec.run_id = rec.command + "_" + ifs.label + "_" + rec.config_hash.substr(0, 8);
    rec.details["eps"] = plan.eps;
    rec.details["max_iter"] = max_iter;
    rec.details["non_escaping_pixels"] = ver.non_escaping;
    rec.details["distortion"] = {{"core", distortion_to_json(dist.core)},
                                 {"sectors", distortion_to_json(dist.sectors)},
                                 {"disk_rings", distortion_to_json(dist.disk_rings)},
                                 {"conformal", distortion_to_json(dist.conformal)}};
    rec.gates.push_back(gate_le("escape_vs_attractor_px", ver.hausdorff_pixels, 3.0));
    rec.gates.push_back(gate_le("seam_max", seams.worst, 1e-6));
    rec.gates.push_back(gate_eq("orbit_grammar_violations",
                                static_cast<double>(ver.grammar_violations), 0.0));
    rec.gates.push_back(gate_eq("exterior_power_exact", ver.exterior_exact ? 1.0 : 0.0, 1.0));
    rec.gates.push_back(gate_eq("boundary_degree", ver.boundary_degree,
                                static_cast<double>(plan.m)));
    rec.gates.push_back(gate_le("conformal_sup_mu", dist.conformal.sup_abs_mu, 1e-5));
    rec.wall_time_s = timer.seconds();
    res.metrics = rec;
    log << "uqr: J(f)=S at " << ver.hausdorff_pixels << " px, seams " << seams.worst
        << ", grammar violations " << ver.grammar_violations << "/" << ver.orbits_checked
        << ", K(core/sector/rings) " << dist.core.k_estimate << "/" << dist.sectors.k_estimate
        << "/" << dist.disk_rings.k_estimate << "\n";
    return res;
}

inline std::vector<CommandResult> run_verify(const RunConfig& cfg, const ConformalIFS& ifs,
                                             std::ostream& log) {
    std::vector<CommandResult> results;
    results.push_back(run_attractor(cfg, ifs, log));
    results.push_back(run_semigroup(cfg, ifs, log));

    // oracle equivalence: chaos cloud against the deepest admissible cover
    {
        detail::Stopwatch timer;
        const auto cloud = attractor_chaos_game(ifs, cfg.chaos_points, cfg.burn_in, cfg.seed);
        std::size_t depth = 8;
        while (depth > 1) {
            try {
                checked_word_count(ifs.maps.size(), depth, kDefaultWordCap);
                break;
            } catch (const std::invalid_argument&) {
                --depth;
            }
        }
        const auto cover = attractor_disk_cover(ifs, depth);
        CommandResult res;
        res.metrics.command = "cover";
        res.metrics.system = ifs.label;
        res.metrics.config_hash = config_hash(cfg);
        res.metrics.run_id = "cover_" + ifs.label + "_" + res.metrics.config_hash.substr(0, 8);
        res.metrics.details["depth"] = depth;
        res.metrics.details["disks"] = cover.disks.size();
        res.metrics.gates.push_back(
            gate_le("cloud_in_cover_excess", cover_excess(cloud, cover), 1e-9));
        res.metrics.wall_time_s = timer.seconds();
        log << "cover: depth " << depth << ", excess "
            << res.metrics.gates.back().value << "\n";
        results.push_back(std::move(res));
    }

    if (check_strong_disk_osc(ifs).passes) {
        results.push_back(run_uqr(cfg, ifs, log));
    } else {
        log << "uqr: skipped (strong disk open set condition fails)\n";
    }
    return results;
}

// ---------------------------------------------------------------------------
// The consolidated report command
// ---------------------------------------------------------------------------

inline int run_report(const RunConfig& cfg, std::ostream& log) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (fs::exists(cfg.out_dir))
        for (const auto& e : fs::directory_iterator(cfg.out_dir)) {
            const std::string name = e.path().filename().string();
            if (name.rfind("metrics_", 0) == 0 && e.path().extension() == ".json")
                files.push_back(e.path().string());
        }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        log << "report: no metrics records under " << cfg.out_dir << "\n";
        return exit_code::validation_failure;
    }

    const fs::path base_dir = fs::path(cfg.out_dir) / "baselines";
    const bool bootstrap = !fs::exists(base_dir);
    if (bootstrap) fs::create_directories(base_dir);

    json report = json::array();
    std::ostringstream table;
    table << std::left << std::setw(36) << "run" << std::setw(16) << "system" << std::setw(8)
          << "gates" << std::setw(8) << "status" << "regressions\n";
    bool any_regression = false;
    for (const auto& f : files) {
        const auto rec = load_metrics(f);
        std::vector<std::string> regressions;
        const fs::path base_file = base_dir / fs::path(f).filename();
        if (fs::exists(base_file)) {
            const auto base = load_metrics(base_file.string());
            for (const auto& g : rec.gates)
                for (const auto& bg : base.gates) {
                    if (g.name != bg.name) continue;
                    if (bg.pass && !g.pass)
                        regressions.push_back(g.name + " now failing");
                    else if (g.op == "<=" && bg.value > 0.0 &&
                             g.value > bg.value * 1.10 + 1e-12)
                        regressions.push_back(g.name + " worsened " +
                                              std::to_string(bg.value) + " -> " +
                                              std::to_string(g.value));
                }
        } else {
            fs::copy_file(f, base_file, fs::copy_options::overwrite_existing);
        }
        any_regression = any_regression || !regressions.empty();

        std::size_t passed = 0;
        for (const auto& g : rec.gates) passed += g.pass ? 1 : 0;
        json row;
        row["run_id"] = rec.run_id;
        row["system"] = rec.system;
        row["gates_passed"] = passed;
        row["gates_total"] = rec.gates.size();
        row["all_pass"] = rec.all_pass();
        row["regressions"] = regressions;
        report.push_back(row);
        table << std::left << std::setw(36) << rec.run_id << std::setw(16) << rec.system
              << std::setw(8)
              << (std::to_string(passed) + "/" + std::to_string(rec.gates.size()))
              << std::setw(8) << (rec.all_pass() ? "pass" : "FAIL");
        for (const auto& r : regressions) table << r << "; ";
        table << "\n";
    }
    if (bootstrap) table << "(baselines bootstrapped from this run)\n";

    std::ofstream txt((fs::path(cfg.out_dir) / "report.txt").string());
    txt << table.str();
    std::ofstream js((fs::path(cfg.out_dir) / "report.json").string());
    js << report.dump(2) << "\n";
    log << table.str();
    return any_regression ? exit_code::gate_failure : exit_code::ok;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(const RunConfig& cfg, std::ostream& log) {
    try {
        if (cfg.resolution < 64 || cfg.resolution > 8192) {
            log << "error: resolution " << cfg.resolution << " outside [64, 8192]\n";
            return exit_code::validation_failure;
        }
        std::filesystem::create_directories(cfg.out_dir);
        if (cfg.command == "report") return run_report(cfg, log);

        if (cfg.ifs_path.empty()) {
            log << "error: no IFS file given\n";
            return exit_code::validation_failure;
        }
        const ConformalIFS ifs = load_ifs_file(cfg.ifs_path);
        const auto validation = validate_ifs(ifs);
        if (!validation.pass) {
            log << "error: invalid IFS: " << validation.summary() << "\n";
            return exit_code::validation_failure;
        }
        const bool julia_command =
            cfg.command == "semigroup" || cfg.command == "uqr" || cfg.command == "verify";
        if (julia_command && !cfg.window.contains_closed_unit_disk()) {
            log << "error: window must contain the closed unit disk for " << cfg.command << "\n";
            return exit_code::validation_failure;
        }

        std::vector<CommandResult> results;
        if (cfg.command == "attractor") {
            results.push_back(run_attractor(cfg, ifs, log));
        } else if (cfg.command == "semigroup") {
            results.push_back(run_semigroup(cfg, ifs, log));
        } else if (cfg.command == "uqr") {
            results.push_back(run_uqr(cfg, ifs, log));
        } else if (cfg.command == "verify") {
            results = run_verify(cfg, ifs, log);
        } else {
            log << "error: unknown command '" << cfg.command << "'\n";
            return exit_code::validation_failure;
        }

        bool all_pass = true;
        for (auto& res : results) {
            const std::string stem = res.metrics.command + "_" + res.metrics.system;
            save_metrics(res.metrics, detail::artifact_path(cfg, "metrics_" + stem, ".json"));
            detail::write_run_report(res.metrics,
                                     detail::artifact_path(cfg, "report_" + stem, ".txt"));
            all_pass = all_pass && res.metrics.all_pass();
        }
        if (cfg.command == "verify" && !all_pass) {
            log << "verify: acceptance gate failure\n";
            return exit_code::gate_failure;
        }
        return exit_code::ok;
    } catch (const std::invalid_argument& e) {
        log << "error: " << e.what() << "\n";
        return exit_code::validation_failure;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return exit_code::validation_failure;
    }
}

}  // namespace ifsjulia
