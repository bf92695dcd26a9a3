#include "impactkam/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "impactkam/certify.hpp"
#include "impactkam/dynamics.hpp"
#include "impactkam/errors.hpp"
#include "impactkam/kam.hpp"
#include "impactkam/maps.hpp"
#include "impactkam/rotation.hpp"

namespace impactkam {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    /// Every payload file carries the library version and config hash in a
    /// comment preamble; the fixed column header is the first data row.
    CsvWriter(const std::filesystem::path& path, const std::string& header,
              const std::string& config_hash)
        : out_(path) {
        if (!out_) throw std::runtime_error("cannot open output file " + path.string());
        out_ << "# impactkam " << kVersion << " config " << config_hash << "\n";
        out_ << header << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ",";
            out_ << cells[i];
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

json base_meta(const CommandContext& ctx, const std::string& command) {
    json meta;
    meta["command"] = command;
    meta["config_hash"] = ctx.config.hash();
    meta["version"] = kVersion;
    return meta;
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file " + path.string());
    out << j.dump(2) << "\n";
}

std::uint64_t effective_seed(const CommandContext& ctx) {
    if (ctx.seed_override) return *ctx.seed_override;
    return ctx.config.get_uint64_or("seed", 0);
}

void check_experiment_label(const CommandContext& ctx, const std::string& command) {
    if (ctx.config.has("experiment") && ctx.config.get_string("experiment") != command)
        ctx.config.fail("experiment", "config is for '" + ctx.config.get_string("experiment") +
                                          "' but the '" + command + "' command was invoked");
}

struct CurveSettingsBundle {
    KamSettings kam;
    double omega0 = 0.0;
    double nu = 2.0;
    long q_max = 100000;
};

CurveSettingsBundle curve_settings(const RunConfig& cfg) {
    CurveSettingsBundle b;
    b.kam.order = static_cast<int>(cfg.get_int_or("curve.order", 64));
    if (b.kam.order < 4) cfg.fail("curve.order", "must be at least 4");
    b.kam.max_iter = static_cast<int>(cfg.get_int_or("curve.max_iter", 30));
    if (b.kam.max_iter < 1) cfg.fail("curve.max_iter", "must be positive");
    b.kam.tol = cfg.get_double_or("curve.tol", 0.0);
    b.omega0 = cfg.get_frequency_or("curve.omega0", kTwoPi * 0.61803398874989484820458683436564);
    b.nu = cfg.get_double_or("curve.nu", 2.0);
    b.q_max = cfg.get_int_or("curve.q_max", 100000);
    return b;
}

json report_to_json(const KamReport& r) {
    json j;
    j["verdict"] = to_string(r.verdict);
    j["quadratic_decay"] = r.quadratic_decay;
    j["final_error"] = r.final_error;
    j["tol"] = r.tol;
    j["rotation_check"] = std::isfinite(r.rotation_check) ? json(r.rotation_check) : json();
    j["fitted_strip_width"] = r.fitted_strip_width;
    if (!r.failure_message.empty()) j["failure_message"] = r.failure_message;
    j["iterations"] = json::array();
    for (const auto& it : r.iterations) {
        json row;
        row["error_norm"] = it.error_norm;
        row["deriv_error_norm"] = it.deriv_error_norm;
        row["avgA"] = std::isfinite(it.avgA) ? json(it.avgA) : json();
        row["correction_norm"] =
            std::isfinite(it.correction_norm) ? json(it.correction_norm) : json();
        j["iterations"].push_back(row);
    }
    return j;
}

json coeffs_to_json(const PeriodicFn& f) {
    json arr = json::array();
    for (int k = 0; k <= f.order(); ++k) {
        const auto c = f.coeff(k);
        arr.push_back({c.real(), c.imag()});
    }
    return arr;
}

void write_curve_files(const CommandContext& ctx, const std::string& stem,
                       const ScaledImpactMap& map, const CurveParametrization& curve,
                       const KamReport& report, const LadderRung& rung, double gamma) {
    const auto dir = std::filesystem::path(ctx.out_dir);
    const int m = 4 * std::max(curve.phi_part.order(), 1);
    const auto phi_vals = curve.phi_part.sample(m);
    const auto I_vals = curve.I_part.sample(m);

    CsvWriter csv(dir / (stem + ".csv"), "theta,phi_part,I_part,t0,y0",
                  ctx.config.hash());
    for (int j = 0; j < m; ++j) {
        const double theta = kTwoPi * double(j) / double(m);
        const double I = I_vals[static_cast<size_t>(j)];
        csv.row({fmt(theta), fmt(phi_vals[static_cast<size_t>(j)]), fmt(I),
                 fmt(theta + phi_vals[static_cast<size_t>(j)]), fmt(map.spec().y0_of_I(I))});
    }

    json meta = base_meta(ctx, "find-curve");
    meta["k"] = rung.k;
    meta["omega"] = rung.omega_k;
    meta["y0_star"] = rung.y0_star;
    meta["gamma"] = gamma;
    meta["report"] = report_to_json(report);
    meta["coefficients"]["phi_part"] = coeffs_to_json(curve.phi_part);
    meta["coefficients"]["I_part"] = coeffs_to_json(curve.I_part);
    write_json(dir / (stem + ".meta.json"), meta);
}

struct RungSolve {
    LadderRung rung;
    double gamma = 0.0;
    std::optional<KamSolveResult> result;
    std::string failure;
    std::string verdict = "converged";
};

RungSolve solve_rung(double eps, const ForcingSpec& forcing, const CurveSettingsBundle& bundle,
                     int k) {
    const auto rungs = frequency_ladder(eps, forcing.a0(), bundle.omega0, k, k);
    RungSolve out;
    out.rung = rungs.front();
    if (!out.rung.usable)
        throw ConfigError("ladder rung k = " + std::to_string(k) +
                          " gives y0_star <= 5, outside the trusted amplitude range");
    out.gamma = diophantine_margin(out.rung.omega_k, bundle.nu, bundle.q_max).gamma_best;
    const ScaledImpactMap map =
        ScaledImpactMap::for_ladder_rung(out.rung.y0_star, eps, forcing);
    try {
        out.result = solve_curve(map, out.rung.omega_k, std::nullopt, bundle.kam);
    } catch (const CurveSolveFailure& e) {
        out.failure = e.what();
        out.verdict = to_string(e.report.verdict);
    }
    return out;
}

}  // namespace

int cmd_simulate(const CommandContext& ctx) {
    check_experiment_label(ctx, "simulate");
    const auto& cfg = ctx.config;
    cfg.require({"epsilon", "simulate.y0", "simulate.n_impacts"});
    const double eps = cfg.get_double("epsilon");
    const ForcingSpec forcing = cfg.make_forcing();
    forcing.require_valid_eps(eps);
    const double t0 = cfg.get_double_or("simulate.t0", 0.0);
    const double y0 = cfg.get_double("simulate.y0");
    const long n = cfg.get_int("simulate.n_impacts");
    if (n <= 0) cfg.fail("simulate.n_impacts", "must be positive");
    if (!(y0 > kGrazingFloor)) cfg.fail("simulate.y0", "must exceed the grazing floor");

    const auto dir = std::filesystem::path(ctx.out_dir);
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / "orbit.csv", "impact_index,t,t_mod_2pi,y,E", cfg.hash());
    double t = t0, y = y0;
    csv.row({"0", fmt(t), fmt(wrap_angle(t)), fmt(y), fmt(-0.5 * y * y)});
    for (long i = 1; i <= n; ++i) {
        const auto out = impact_map({t, y}, eps, forcing);
        t = out.t_bar;
        y = out.y_bar;
        csv.row({std::to_string(i), fmt(t), fmt(wrap_angle(t)), fmt(y), fmt(-0.5 * y * y)});
    }

    json meta = base_meta(ctx, "simulate");
    meta["n_impacts"] = n;
    if (auto warn = forcing.validity_warning(eps)) meta["validity_warning"] = *warn;
    write_json(dir / "orbit.meta.json", meta);
    return 0;
}

int cmd_impact_map(const CommandContext& ctx) {
    check_experiment_label(ctx, "impact-map");
    const auto& cfg = ctx.config;
    cfg.require({"epsilon"});
    const double eps = cfg.get_double("epsilon");
    const ForcingSpec forcing = cfg.make_forcing();
    forcing.require_valid_eps(eps);
    const long t_count = cfg.get_int_or("impact_map.t_count", 16);
    const double y_min = cfg.get_double_or("impact_map.y_min", 8.0);
    const double y_max = cfg.get_double_or("impact_map.y_max", 16.0);
    const long y_count = cfg.get_int_or("impact_map.y_count", 8);
    if (t_count < 1) cfg.fail("impact_map.t_count", "must be positive");
    if (y_count < 1) cfg.fail("impact_map.y_count", "must be positive");
    if (!(y_min > kGrazingFloor) || y_max < y_min)
        cfg.fail("impact_map.y_min", "need grazing floor < y_min <= y_max");

    const auto dir = std::filesystem::path(ctx.out_dir);
    std::filesystem::create_directories(dir);
    CsvWriter csv(dir / "impact_map.csv", "t0,y0,t_bar,y_bar,alpha,f_t0,f_y0",
                  cfg.hash());
    for (long i = 0; i < t_count; ++i) {
        const double t0 = kTwoPi * double(i) / double(t_count);
        for (long j = 0; j < y_count; ++j) {
            const double y0 =
                y_count == 1 ? y_min : y_min + (y_max - y_min) * double(j) / double(y_count - 1);
            const auto out = impact_map({t0, y0}, eps, forcing);
            csv.row({fmt(t0), fmt(y0), fmt(out.t_bar), fmt(out.y_bar), fmt(out.alpha),
                     fmt(out.f_t0), fmt(out.f_y0)});
        }
    }
    json meta = base_meta(ctx, "impact-map");
    if (auto warn = forcing.validity_warning(eps)) meta["validity_warning"] = *warn;
    write_json(dir / "impact_map.meta.json", meta);
    return 0;
}

int cmd_find_curve(const CommandContext& ctx) {
    check_experiment_label(ctx, "find-curve");
    const auto& cfg = ctx.config;
    cfg.require({"epsilon", "curve.k"});
    const double eps = cfg.get_double("epsilon");
    const ForcingSpec forcing = cfg.make_forcing();
    forcing.require_valid_eps(eps);
    const auto bundle = curve_settings(cfg);
    const int k = static_cast<int>(cfg.get_int("curve.k"));

    std::filesystem::create_directories(ctx.out_dir);
    const RungSolve solve = solve_rung(eps, forcing, bundle, k);
    if (!solve.result) {
        json failure;
        failure["error"] = "CurveSolveFailure";
        failure["verdict"] = solve.verdict;
        failure["message"] = solve.failure;
        write_json(std::filesystem::path(ctx.out_dir) / "failure.json", failure);
        std::cerr << "find-curve failed: " << solve.failure << "\n";
        return 3;
    }
    const ScaledImpactMap map =
        ScaledImpactMap::for_ladder_rung(solve.rung.y0_star, eps, forcing);
    write_curve_files(ctx, "curve", map, solve.result->curve, solve.result->report, solve.rung,
                      solve.gamma);
    return 0;
}

int cmd_sweep_ladder(const CommandContext& ctx) {
    check_experiment_label(ctx, "sweep-ladder");
    const auto& cfg = ctx.config;
    cfg.require({"epsilon", "ladder.k_min", "ladder.k_max"});
    const double eps = cfg.get_double("epsilon");
    const ForcingSpec forcing = cfg.make_forcing();
    forcing.require_valid_eps(eps);
    const auto bundle = curve_settings(cfg);
    const int k_min = static_cast<int>(cfg.get_int("ladder.k_min"));
    const int k_max = static_cast<int>(cfg.get_int("ladder.k_max"));
    if (k_max < k_min) cfg.fail("ladder.k_max", "must be >= ladder.k_min");

    std::filesystem::create_directories(ctx.out_dir);
    const int count = k_max - k_min + 1;
    std::vector<RungSolve> solves(static_cast<size_t>(count));

    // Independent solves fan out over the worker pool; output stays ordered.
    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            solves[static_cast<size_t>(i)] = solve_rung(eps, forcing, bundle, k_min + i);
        }
    };
    const int workers = std::max(1, std::min(ctx.workers, count));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    CsvWriter csv(std::filesystem::path(ctx.out_dir) / "ladder.csv",
                  "k,omega,y0_star,gamma,verdict,iterations,final_error,quadratic_decay,"
                  "rotation_check",
                  cfg.hash());
    bool all_ok = true;
    for (const auto& s : solves) {
        std::string iters = "0", final_err = "", qflag = "0", rot = "";
        std::string verdict = s.verdict;
        if (s.result) {
            const auto& rep = s.result->report;
            iters = std::to_string(rep.iterations.size() - 1);
            final_err = fmt(rep.final_error);
            qflag = rep.quadratic_decay ? "1" : "0";
            rot = std::isfinite(rep.rotation_check) ? fmt(rep.rotation_check) : "";
            const ScaledImpactMap map =
                ScaledImpactMap::for_ladder_rung(s.rung.y0_star, eps, forcing);
            write_curve_files(ctx, "curve_k" + std::to_string(s.rung.k), map, s.result->curve,
                              rep, s.rung, s.gamma);
        } else {
            all_ok = false;
        }
        csv.row({std::to_string(s.rung.k), fmt(s.rung.omega_k), fmt(s.rung.y0_star),
                 fmt(s.gamma), verdict, iters, final_err, qflag, rot});
    }

    json meta = base_meta(ctx, "sweep-ladder");
    meta["k_min"] = k_min;
    meta["k_max"] = k_max;
    if (auto warn = forcing.validity_warning(eps)) meta["validity_warning"] = *warn;
    write_json(std::filesystem::path(ctx.out_dir) / "ladder.meta.json", meta);
    return all_ok ? 0 : 3;
}

int cmd_certify(const CommandContext& ctx) {
    check_experiment_label(ctx, "certify");
    const auto& cfg = ctx.config;
    cfg.require({"epsilon", "confine.k_inner"});
    const double eps = cfg.get_double("epsilon");
    const ForcingSpec forcing = cfg.make_forcing();
    forcing.require_valid_eps(eps);
    const auto bundle = curve_settings(cfg);
    const int k_inner = static_cast<int>(cfg.get_int("confine.k_inner"));
    const std::string control = cfg.get_string_or("confine.control", "none");
    if (control != "none" && control != "flat")
        cfg.fail("confine.control", "must be 'none' or 'flat'");

    std::filesystem::create_directories(ctx.out_dir);
    const RungSolve inner_solve = solve_rung(eps, forcing, bundle, k_inner);
    const RungSolve outer_solve = solve_rung(eps, forcing, bundle, k_inner + 1);
    for (const auto* s : {&inner_solve, &outer_solve}) {
        if (!s->result) {
            json failure;
            failure["error"] = "CurveSolveFailure";
            failure["verdict"] = s->verdict;
            failure["message"] = s->failure;
            failure["k"] = s->rung.k;
            write_json(std::filesystem::path(ctx.out_dir) / "failure.json", failure);
            std::cerr << "certify: curve solve failed at k = " << s->rung.k << ": "
                      << s->failure << "\n";
            return 3;
        }
    }
    const ScaledMapSpec inner_spec = ScaledMapSpec::from_y0_star(inner_solve.rung.y0_star, eps);
    const ScaledMapSpec outer_spec = ScaledMapSpec::from_y0_star(outer_solve.rung.y0_star, eps);
    SectionCurve inner = SectionCurve::from_scaled(inner_solve.result->curve, inner_spec);
    SectionCurve outer = SectionCurve::from_scaled(outer_solve.result->curve, outer_spec);

    double run_eps = eps;
    ConfinementSettings settings;
    settings.n_trials = static_cast<int>(cfg.get_int_or("confine.n_trials", 64));
    settings.n_impacts = cfg.get_int_or("confine.n_impacts", 100000);
    if (settings.n_trials <= 0) cfg.fail("confine.n_trials", "must be positive");
    if (settings.n_impacts <= 0) cfg.fail("confine.n_impacts", "must be positive");
    settings.seed = effective_seed(ctx);
    settings.workers = ctx.workers;
    if (control == "flat") {
        // Negative control: same mean radii, deliberately non-invariant band.
        inner = SectionCurve::flat(inner.radius().average());
        outer = SectionCurve::flat(outer.radius().average());
        run_eps = cfg.get_double_or("confine.control_epsilon", 0.05);
        forcing.require_valid_eps(run_eps);
        settings.skip_invariance_check = true;
    }

    const ConfinementReport report = confinement_run(inner, outer, run_eps, forcing, settings);

    CsvWriter csv(std::filesystem::path(ctx.out_dir) / "confinement.csv",
                  "trial,t0,y0,impacts_survived,min_y,max_y,breached,escaped", cfg.hash());
    for (size_t i = 0; i < report.trials.size(); ++i) {
        const auto& tr = report.trials[i];
        csv.row({std::to_string(i), fmt(tr.t0), fmt(tr.y0), std::to_string(tr.impacts_survived),
                 fmt(tr.min_y), fmt(tr.max_y), tr.breached ? "1" : "0", tr.escaped ? "1" : "0"});
    }

    json meta = base_meta(ctx, "certify");
    meta["epsilon_run"] = run_eps;
    meta["control"] = control;
    meta["seed"] = report.seed;
    meta["n_impacts"] = report.n_impacts;
    meta["breach_count"] = report.breach_count;
    meta["escape_count"] = report.escape_count;
    meta["band_min_gap"] = report.band_min_gap;
    meta["inner_invariance_defect"] = report.inner_invariance_defect;
    meta["outer_invariance_defect"] = report.outer_invariance_defect;
    meta["k_inner"] = k_inner;
    meta["k_outer"] = k_inner + 1;
    if (auto warn = forcing.validity_warning(run_eps)) meta["validity_warning"] = *warn;
    write_json(std::filesystem::path(ctx.out_dir) / "confinement.meta.json", meta);
    return 0;
}

int cmd_audit(const CommandContext& ctx) {
    check_experiment_label(ctx, "audit");
    const auto& cfg = ctx.config;
    cfg.require({"epsilon"});
    const double eps = cfg.get_double("epsilon");
    const ForcingSpec forcing = cfg.make_forcing();
    forcing.require_valid_eps(eps);

    const long t_count = cfg.get_int_or("audit.t_count", 20);
    const double y_min = cfg.get_double_or("audit.y_min", 10.0);
    const double y_max = cfg.get_double_or("audit.y_max", 80.0);
    const long y_count = cfg.get_int_or("audit.y_count", 20);
    const int n_quad = static_cast<int>(cfg.get_int_or("audit.n_quad", 512));
    const double E0 = cfg.get_double_or("audit.E0", -50.0);
    if (t_count < 1 || y_count < 1) cfg.fail("audit.t_count", "grid counts must be positive");
    if (!(y_min > 5.0) || y_max < y_min) cfg.fail("audit.y_min", "need 5 < y_min <= y_max");
    if (!(E0 < 0.0)) cfg.fail("audit.E0", "must be negative");

    std::vector<double> t_grid, y_grid;
    for (long i = 0; i < t_count; ++i) t_grid.push_back(kTwoPi * double(i) / double(t_count));
    for (long j = 0; j < y_count; ++j)
        y_grid.push_back(y_count == 1 ? y_min
                                      : y_min + (y_max - y_min) * double(j) / double(y_count - 1));

    const double det_energy =
        check_symplectic(MapId::impact_energy, t_grid, y_grid, eps, forcing);
    const double det_ty = check_symplectic(MapId::impact, t_grid, y_grid, eps, forcing);
    const double exact_energy = check_exactness(MapId::impact_energy, E0, eps, forcing, n_quad);
    const double exact_ty = check_exactness(MapId::impact, E0, eps, forcing, n_quad);
    const auto tau_bounds = check_tau_star_bounds(eps, forcing, y_grid, t_grid);

    const double contrast = exact_ty / std::max(exact_energy, 1e-300);

    struct Row {
        std::string name;
        double value;
        std::string threshold;
        bool pass;
    };
    std::vector<Row> rows = {
        {"det_defect_energy", det_energy, "< 1e-8", det_energy < 1e-8},
        {"det_defect_ty", det_ty, "(reported)", true},
        {"exactness_defect_energy", exact_energy, "< 1e-8", exact_energy < 1e-8},
        {"exactness_defect_ty", exact_ty, "(reported)", true},
        {"exactness_contrast_ratio", contrast, ">= 1e3 for eps > 0",
         eps == 0.0 || contrast >= 1e3},
        {"tau_star_ratio", tau_bounds.worst_ratio, "< 1", tau_bounds.worst_ratio < 1.0},
        {"tau_star_decay_exponent", tau_bounds.decay_exponent, "-1 +- 0.2 for eps > 0",
         eps == 0.0 || (tau_bounds.decay_exponent > -1.2 && tau_bounds.decay_exponent < -0.8)},
    };

    std::filesystem::create_directories(ctx.out_dir);
    CsvWriter csv(std::filesystem::path(ctx.out_dir) / "audit.csv",
                  "check,value,threshold,pass", cfg.hash());
    bool all_pass = true;
    for (const auto& r : rows) {
        csv.row({r.name, fmt(r.value), r.threshold, r.pass ? "1" : "0"});
        all_pass = all_pass && r.pass;
    }

    json meta = base_meta(ctx, "audit");
    meta["all_pass"] = all_pass;
    meta["p_tilde"] = forcing.p_tilde();
    if (auto warn = forcing.validity_warning(eps)) meta["validity_warning"] = *warn;
    write_json(std::filesystem::path(ctx.out_dir) / "audit.meta.json", meta);
    return 0;
}

int run_command(const std::string& name, CommandContext ctx) {
    if (ctx.seed_override)
        ctx.config.note_override("cli.seed", std::to_string(*ctx.seed_override));
    try {
        if (name == "simulate") return cmd_simulate(ctx);
        if (name == "impact-map") return cmd_impact_map(ctx);
        if (name == "find-curve") return cmd_find_curve(ctx);
        if (name == "sweep-ladder") return cmd_sweep_ladder(ctx);
        if (name == "certify") return cmd_certify(ctx);
        if (name == "audit") return cmd_audit(ctx);
        std::cerr << "unknown command: " << name << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CurveSolveFailure& e) {
        std::filesystem::create_directories(ctx.out_dir);
        json failure;
        failure["error"] = "CurveSolveFailure";
        failure["verdict"] = to_string(e.report.verdict);
        failure["message"] = e.what();
        write_json(std::filesystem::path(ctx.out_dir) / "failure.json", failure);
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::filesystem::create_directories(ctx.out_dir);
        json failure;
        failure["error"] = e.kind();
        failure["message"] = e.what();
        write_json(std::filesystem::path(ctx.out_dir) / "failure.json", failure);
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace impactkam
