#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "vclf/corollary.hpp"
#include "vclf/io.hpp"
#include "vclf/reaction.hpp"
#include "vclf/sim.hpp"

#ifdef VCLF_WITH_SERVE
#include <httplib.h>
#endif

namespace {

using nlohmann::json;
using namespace vclf;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerificationFailed = 2;

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(Clock::now() - start_).count();
    }

private:
    using Clock = std::chrono::steady_clock;
    Clock::time_point start_ = Clock::now();
};

io::RunManifest base_manifest(const std::string& config_path) {
    io::RunManifest m;
    m.config_hash = io::file_hash(config_path);
    m.tolerances = {
        {"inverse_rel_tol", kInverseRelTol},
        {"selection_margin", kSelectionMargin},
        {"active_set_slack", kActiveSetSlack},
        {"integrator_rel_tol", IntegrateOptions{}.rel_tol},
        {"integrator_abs_tol", IntegrateOptions{}.abs_tol},
        {"monitor_tol_scale", 1e-5},
    };
    return m;
}

void emit(const json& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream os(out_path);
        if (!os) throw std::runtime_error("cannot write '" + out_path + "'");
        os << report.dump(2) << "\n";
        std::cerr << "report written to " << out_path << "\n";
    }
}

std::vector<double> parse_csv_numbers(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

void print_condition_table(const ConditionReport& rep, std::ostream& os) {
    os << "  condition            hits    violations  worst excess\n";
    for (const auto& s : rep.stats) {
        char line[128];
        std::snprintf(line, sizeof line, "  %-20s %-7ld %-11ld %.3e\n", s.name.c_str(),
                      s.antecedent_hits, s.violation_count, s.worst_excess);
        os << line;
    }
}

void print_implication_table(const ImplicationReport& rep, std::ostream& os) {
    os << "  implication          applicable  hits    violations\n";
    for (const auto& s : rep.stats) {
        char line[128];
        std::snprintf(line, sizeof line, "  %-20s %-11s %-7ld %ld\n", to_string(s.id),
                      s.applicable ? "yes" : "no", s.antecedent_hits, s.violation_count);
        os << line;
    }
}

// ---------------------------------------------------------------------------

int run_smallgain(const std::string& path, const std::string& out,
                  bool regularize_first) {
    Stopwatch watch;
    auto gains = io::gains_from_json(io::load_json_file(path));
    if (regularize_first) gains = regularize_gains(gains);
    const auto report = check_small_gain(gains);

    auto manifest = base_manifest(path);
    manifest.wall_time_s = watch.seconds();
    json out_json = io::to_json(report);
    out_json["manifest"] = manifest.to_json();
    emit(out_json, out);
    std::cerr << "small-gain verdict: " << to_string(report.verdict) << " ("
              << report.cycles.size() << " cycles)\n";
    return report.verdict == SmallGainVerdict::Satisfied ? kExitOk
                                                         : kExitVerificationFailed;
}

int run_feascheck(const std::string& path, const std::string& out) {
    Stopwatch watch;
    auto inst = io::feasibility_from_json(io::load_json_file(path));
    const auto res = feasible_interval(inst.constraints, inst.input);
    json out_json = io::to_json(res, inst.constraints);
    if (res.feasible) {
        const double u = select_u(res.interval, inst.input);
        out_json["selected_u"] = u;
        std::cerr << "feasible: u in (" << res.interval.lower << ", "
                  << res.interval.upper << "), selected " << u << "\n";
    } else {
        std::cerr << "infeasible: " << to_string(res.infeasibility.cause)
                  << " at constraint " << res.infeasibility.witness_i << "\n";
    }
    auto manifest = base_manifest(path);
    manifest.wall_time_s = watch.seconds();
    out_json["manifest"] = manifest.to_json();
    emit(out_json, out);
    return res.feasible ? kExitOk : kExitVerificationFailed;
}

int run_verify(const std::string& path, long samples, std::uint64_t seed,
               const std::string& out) {
    Stopwatch watch;
    auto problem = io::problem_from_json(io::load_json_file(path),
                                         std::filesystem::path(path).parent_path());
    if (samples > 0) problem.sampling.samples = samples;
    if (seed != 0) problem.sampling.seed = seed;
    if (problem.sampling.box.empty())
        throw std::runtime_error("verify: the problem file needs a sampling box");

    problem.spec.validate(problem.sys);
    const auto report = check_implications(problem.sys, problem.spec, problem.sampling);

    print_implication_table(report, std::cerr);
    auto manifest = base_manifest(path);
    manifest.seeds["sampling"] = problem.sampling.seed;
    manifest.wall_time_s = watch.seconds();
    json out_json = io::to_json(report);
    out_json["manifest"] = manifest.to_json();
    emit(out_json, out);
    return report.passed() ? kExitOk : kExitVerificationFailed;
}

int run_synth(const std::string& path, const std::string& points_path,
              const std::string& out, int serve_port) {
    Stopwatch watch;
    auto problem = io::problem_from_json(io::load_json_file(path),
                                         std::filesystem::path(path).parent_path());
    const auto law = synthesize(problem.sys, problem.spec);

#ifdef VCLF_WITH_SERVE
    if (serve_port > 0) {
        httplib::Server server;
        server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok", "text/plain");
        });
        server.Post("/eval", [&](const httplib::Request& req, httplib::Response& res) {
            try {
                const auto body = json::parse(req.body);
                const auto x = body.at("x").get<std::vector<double>>();
                const auto ev = law.evaluate(x);
                res.set_content(
                    json{{"u", ev.u}, {"region", to_string(ev.region)}}.dump(),
                    "application/json");
            } catch (const std::exception& e) {
                res.status = 400;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            }
        });
        std::cerr << "feedback evaluation service on 127.0.0.1:" << serve_port << "\n";
        if (!server.listen("127.0.0.1", serve_port))
            throw std::runtime_error("synth: cannot bind port " + std::to_string(serve_port));
        return kExitOk;
    }
#else
    (void)serve_port;
#endif

    if (points_path.empty())
        throw CLI::ValidationError("synth", "need --points (or --serve)");
    std::ifstream in(points_path);
    if (!in) throw std::runtime_error("cannot open '" + points_path + "'");
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw std::runtime_error("cannot write '" + out + "'");
        os = &file;
    }
    for (int i = 0; i < problem.sys.n; ++i) *os << "x" << (i + 1) << ",";
    *os << "u,region\n";
    std::string line;
    char buf[32];
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'x' || line[0] == '#') continue;
        const auto x = parse_csv_numbers(line);
        if (static_cast<int>(x.size()) != problem.sys.n)
            throw std::runtime_error("synth: point dimension mismatch: " + line);
        const auto ev = law.evaluate(x);
        for (double v : x) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            *os << buf << ",";
        }
        std::snprintf(buf, sizeof buf, "%.17g", ev.u);
        *os << buf << "," << to_string(ev.region) << "\n";
    }
    auto manifest = base_manifest(path);
    manifest.wall_time_s = watch.seconds();
    std::cerr << "manifest " << manifest.to_json().dump() << "\n";
    return kExitOk;
}

int run_simulate(const std::string& path, const std::string& x0_text, double t_end,
                 double h_max, double tol_rel, double tol_abs, bool open_loop,
                 double u_const, std::uint64_t dist_seed, const std::string& out,
                 const std::string& report_out) {
    Stopwatch watch;
    auto problem = io::problem_from_json(io::load_json_file(path),
                                         std::filesystem::path(path).parent_path());
    const auto x0 = parse_csv_numbers(x0_text);
    IntegrateOptions opts;
    if (h_max > 0) opts.h_max = h_max;
    if (tol_rel > 0) opts.rel_tol = tol_rel;
    if (tol_abs > 0) opts.abs_tol = tol_abs;

    const auto dist = dist_seed != 0 ? DisturbanceSignal::seeded_random(dist_seed)
                                     : DisturbanceSignal::none();

    Trajectory traj;
    auto law = synthesize(problem.sys, problem.spec);
    if (open_loop) {
        traj = integrate(
            problem.sys, [u_const](double, std::span<const double>) { return u_const; },
            dist, x0, t_end, opts);
    } else {
        traj = integrate(law, dist, x0, t_end, opts);
    }
    annotate(traj, problem.sys, law.spec());
    const auto mon = monitor(traj, problem.sys, law.spec());

    if (!out.empty()) {
        std::ofstream os(out);
        if (!os) throw std::runtime_error("cannot write '" + out + "'");
        write_trajectory_csv(os, traj);
        std::cerr << "trajectory written to " << out << "\n";
    }

    auto manifest = base_manifest(path);
    manifest.seeds["disturbance"] = dist_seed;
    manifest.tolerances["h_max"] = opts.h_max;
    manifest.tolerances["integrator_rel_tol"] = opts.rel_tol;
    manifest.tolerances["integrator_abs_tol"] = opts.abs_tol;
    manifest.wall_time_s = watch.seconds();
    json rep{{"steps", traj.accepted},
             {"rejected", traj.rejected},
             {"final_state", traj.back_state()},
             {"monitor",
              {{"violations", mon.violation_count}, {"steps_checked", mon.steps_checked}}},
             {"manifest", manifest.to_json()}};
    if (!mon.violations.empty()) {
        json vs = json::array();
        for (const auto& v : mon.violations)
            vs.push_back({{"t", v.t}, {"check", v.check}, {"residual", v.residual}});
        rep["monitor"]["witnesses"] = vs;
    }
    emit(rep, report_out);
    return mon.passed() ? kExitOk : kExitVerificationFailed;
}

int run_example43(double lambda, double sigma, double q_scale, long samples,
                  std::uint64_t seed, int sims, double t_end, const std::string& out_dir,
                  const std::string& out) {
    Stopwatch watch;
    auto ex = example43_instance(lambda, sigma, MonotoneFn::identity(), q_scale);

    SampleParams params;
    params.box = {{-3.0, 3.0}, {-3.0, 3.0}, {-3.0, 3.0}};
    params.samples = samples;
    params.seed = seed;
    const auto conditions = check_corollary_conditions(ex.cfg, params);
    print_condition_table(conditions, std::cerr);

    const auto witness = find_condition49_witness(MonotoneFn::identity(), lambda, 1.0, 1.0);

    // closed-loop batch from random starts
    auto spec = build_corollary_spec(ex.cfg);
    auto law = synthesize(ex.sys, spec);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    IntegrateOptions opts;
    opts.h_max = 0.02;
    int converged = 0;
    for (int i = 0; i < sims; ++i) {
        const double x0[3] = {ux(rng), ux(rng), ux(rng)};
        auto traj = integrate(law, DisturbanceSignal::none(), x0, t_end, opts);
        double nrm = 0.0;
        for (double v : traj.back_state()) nrm += v * v;
        if (std::sqrt(nrm) <= 1e-3) ++converged;
        if (!out_dir.empty()) {
            std::ofstream os(out_dir + "/example43_run" + std::to_string(i) + ".csv");
            annotate(traj, ex.sys, law.spec());
            write_trajectory_csv(os, traj);
        }
    }

    auto manifest = base_manifest("/dev/null");
    manifest.config_hash = "builtin:example43";
    manifest.seeds["sampling"] = seed;
    manifest.wall_time_s = watch.seconds();
    json rep{{"conditions", io::to_json(conditions)},
             {"local_gain", ex.p},
             {"local_radius", ex.r},
             {"single_clf_witness_found", witness.has_value()},
             {"simulations", {{"total", sims}, {"converged", converged}}},
             {"manifest", manifest.to_json()}};
    if (witness)
        rep["single_clf_witness"] = {{"x", witness->x},
                                     {"lhs", witness->lhs},
                                     {"rhs", witness->rhs}};
    emit(rep, out);
    const bool ok = conditions.passed() && witness.has_value() && converged == sims;
    return ok ? kExitOk : kExitVerificationFailed;
}

int run_example44(double a, double c, double epsilon, double R, bool search,
                  const std::string& g_expr, long samples, std::uint64_t seed,
                  const std::string& out) {
    Stopwatch watch;
    Example44Params prm;
    prm.a = a;
    prm.c = c;
    prm.epsilon = epsilon;
    prm.R = R;
    const auto g = g_expr.empty()
                       ? ScalarField::state(1)
                       : ScalarField::parse(json::parse(g_expr), 3, 0);

    SampleParams sampling;
    sampling.box = {{-1.5, 1.5}, {-1.5, 1.5}, {-1.5, 1.5}};
    sampling.samples = samples;
    sampling.seed = seed;

    json rep;
    bool ok;
    if (search) {
        const auto found = example44_find_constants(g, prm, sampling);
        ok = found.has_value();
        if (found) {
            rep["constants"] = {{"a", found->a}, {"c", found->c}, {"epsilon", found->epsilon}};
            rep["conditions"] = io::to_json(example44_conditions(g, *found, sampling));
        }
    } else {
        const auto conditions = example44_conditions(g, prm, sampling);
        print_condition_table(conditions, std::cerr);
        rep["conditions"] = io::to_json(conditions);
        ok = true;
        for (const auto& s : conditions.stats)
            if (s.name != "slab_relaxation" && !s.passed()) ok = false;
        if (const auto* relax = conditions.find("slab_relaxation"))
            rep["relaxation_hits_outside_slab"] = relax->antecedent_hits;
    }
    auto manifest = base_manifest("/dev/null");
    manifest.config_hash = "builtin:example44";
    manifest.seeds["sampling"] = seed;
    manifest.wall_time_s = watch.seconds();
    rep["manifest"] = manifest.to_json();
    emit(rep, out);
    return ok ? kExitOk : kExitVerificationFailed;
}

int run_cstr_equilibria(const std::string& path, double dstar, const std::string& out) {
    Stopwatch watch;
    auto bundle = io::network_from_json(io::load_json_file(path));
    const auto rep = equilibria(bundle.net, dstar);
    json roots = json::array();
    for (std::size_t i = 0; i < rep.roots.size(); ++i)
        roots.push_back({{"c", rep.roots[i]}, {"residual", rep.residuals[i]}});
    json out_json{{"method", rep.method}, {"roots", roots}};
    if (rep.threshold_prediction) {
        out_json["threshold_prediction"] = *rep.threshold_prediction;
        out_json["threshold_consistent"] = rep.threshold_consistent;
        if (!rep.threshold_consistent)
            std::cerr << "note: closed-form threshold predicts " << *rep.threshold_prediction
                      << " roots, oracle found " << rep.roots.size() << "\n";
    }
    std::cerr << rep.roots.size() << " interior equilibria (" << rep.method << ")\n";
    auto manifest = base_manifest(path);
    manifest.wall_time_s = watch.seconds();
    out_json["manifest"] = manifest.to_json();
    emit(out_json, out);
    return kExitOk;
}

int run_cstr_check(const std::string& path, long samples, std::uint64_t seed,
                   const std::string& out) {
    Stopwatch watch;
    auto bundle = io::network_from_json(io::load_json_file(path));
    if (!bundle.certificate)
        throw std::runtime_error("cstr check: the network file has no certificate block");

    SampleParams params;
    params.box = {};
    for (int i = 0; i < bundle.net.n; ++i) params.box.push_back({0.05, 5.0});
    params.samples = samples;
    params.seed = seed;

    const auto hypo = verify_hypotheses(bundle.net, bundle.cons, params);
    const auto cond =
        check_thm52_conditions(bundle.net, bundle.cons, *bundle.certificate, params);
    std::cerr << "hypotheses:\n";
    print_condition_table(hypo, std::cerr);
    std::cerr << "feedback conditions:\n";
    print_condition_table(cond, std::cerr);

    auto manifest = base_manifest(path);
    manifest.seeds["sampling"] = seed;
    manifest.tolerances["epsilon"] = bundle.certificate->epsilon;
    manifest.tolerances["omega"] = bundle.certificate->omega;
    manifest.wall_time_s = watch.seconds();
    json rep{{"hypotheses", io::to_json(hypo)},
             {"conditions", io::to_json(cond)},
             {"manifest", manifest.to_json()}};
    emit(rep, out);
    return hypo.passed() && cond.passed() ? kExitOk : kExitVerificationFailed;
}

int run_cstr_stabilize(const std::string& path, const std::string& points_path,
                       const std::string& out) {
    Stopwatch watch;
    auto bundle = io::network_from_json(io::load_json_file(path));
    if (!bundle.certificate)
        throw std::runtime_error("cstr stabilize: the network file has no certificate block");
    const auto fb = stabilize(bundle.net, bundle.cons, *bundle.certificate);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw std::runtime_error("cannot write '" + out + "'");
        os = &file;
    }
    for (int i = 0; i < bundle.net.n; ++i) *os << "c" << (i + 1) << ",";
    *os << "D\n";
    char buf[32];
    auto put_row = [&](std::span<const double> c) {
        for (double v : c) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            *os << buf << ",";
        }
        std::snprintf(buf, sizeof buf, "%.17g", fb.dilution(c));
        *os << buf << "\n";
    };
    if (points_path.empty()) {
        // default probe grid around the unit equilibrium
        std::vector<double> c(static_cast<std::size_t>(bundle.net.n), 1.0);
        put_row(c);
        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> uc(0.05, 5.0);
        for (int t = 0; t < 64; ++t) {
            for (auto& v : c) v = uc(rng);
            put_row(c);
        }
    } else {
        std::ifstream in(points_path);
        if (!in) throw std::runtime_error("cannot open '" + points_path + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == 'c' || line[0] == '#') continue;
            const auto c = parse_csv_numbers(line);
            if (static_cast<int>(c.size()) != bundle.net.n)
                throw std::runtime_error("cstr stabilize: point dimension mismatch");
            put_row(c);
        }
    }
    auto manifest = base_manifest(path);
    manifest.wall_time_s = watch.seconds();
    std::cerr << "manifest " << manifest.to_json().dump() << "\n";
    return kExitOk;
}

int run_cstr_simulate(const std::string& path, const std::string& c0_text, int batch,
                      double t_end, double h_max, double tol_rel, double tol_abs,
                      bool open_loop, double d_const, std::uint64_t seed,
                      const std::string& out_dir, const std::string& out) {
    Stopwatch watch;
    auto bundle = io::network_from_json(io::load_json_file(path));
    if (!bundle.certificate)
        throw std::runtime_error("cstr simulate: the network file has no certificate block");
    const auto sys = log_transform(bundle.net);
    const auto fb = stabilize(bundle.net, bundle.cons, *bundle.certificate);

    IntegrateOptions opts;
    if (h_max > 0) opts.h_max = h_max;
    if (tol_rel > 0) opts.rel_tol = tol_rel;
    if (tol_abs > 0) opts.abs_tol = tol_abs;
    CsvOptions csv;
    csv.exponentiate_states = true;
    csv.state_prefix = "c";
    csv.dilution_input = true;
    csv.d_max = bundle.net.D_max;

    std::vector<std::vector<double>> starts;
    if (!c0_text.empty()) {
        starts.push_back(parse_csv_numbers(c0_text));
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uc(0.05, 5.0);
        for (int i = 0; i < std::max(1, batch); ++i) {
            std::vector<double> c(static_cast<std::size_t>(bundle.net.n));
            for (auto& v : c) v = uc(rng);
            starts.push_back(std::move(c));
        }
    }

    json runs = json::array();
    long total_violations = 0;
    int converged = 0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        std::vector<double> x0;
        for (double v : starts[i]) {
            if (!(v > 0.0)) throw std::runtime_error("cstr simulate: c0 must be positive");
            x0.push_back(std::log(v));
        }
        Trajectory traj;
        if (open_loop) {
            const double u_const = d_const - 1.0;
            traj = integrate(
                sys, [u_const](double, std::span<const double>) { return u_const; },
                DisturbanceSignal::none(), x0, t_end, opts);
        } else {
            traj = integrate(fb.law(), DisturbanceSignal::none(), x0, t_end, opts);
        }
        annotate(traj, sys, fb.law().spec());
        const auto mon = monitor(traj, sys, fb.law().spec());
        total_violations += open_loop ? 0 : mon.violation_count;

        double err = 0.0;
        for (double v : traj.back_state()) err += (std::exp(v) - 1.0) * (std::exp(v) - 1.0);
        err = std::sqrt(err);
        if (err <= 1e-3) ++converged;

        if (!out_dir.empty()) {
            std::ofstream os(out_dir + "/cstr_run" + std::to_string(i) + ".csv");
            write_trajectory_csv(os, traj, csv);
        }
        runs.push_back({{"c0", starts[i]},
                        {"final_error", err},
                        {"steps", traj.accepted},
                        {"monitor_violations", mon.violation_count}});
    }

    auto manifest = base_manifest(path);
    manifest.seeds["batch"] = seed;
    manifest.tolerances["h_max"] = opts.h_max;
    manifest.tolerances["epsilon"] = bundle.certificate->epsilon;
    manifest.tolerances["omega"] = bundle.certificate->omega;
    manifest.wall_time_s = watch.seconds();
    json rep{{"runs", runs},
             {"converged", converged},
             {"total", starts.size()},
             {"open_loop", open_loop},
             {"manifest", manifest.to_json()}};
    emit(rep, out);
    std::cerr << converged << "/" << starts.size() << " runs reached the equilibrium"
              << (open_loop ? " (open loop)" : "") << "\n";
    if (open_loop) return kExitOk;
    return (converged == static_cast<int>(starts.size()) && total_violations == 0)
               ? kExitOk
               : kExitVerificationFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vector-certificate feedback toolkit"};
    app.require_subcommand(1);

    std::string path, out, points, x0_text, g_expr, out_dir;
    long samples = 100000;
    std::uint64_t seed = 20240001;
    double dstar = 1.0, t_end = 10.0, h_max = 0.0, u_const = 0.0, d_const = 1.0;
    double tol_rel = 0.0, tol_abs = 0.0;
    double lambda = 0.5, sigma = 0.5, q_scale = 0.5;
    double a = 0.1, c = 0.05, epsilon = 0.05, R = 1.0;
    int sims = 20, batch = 0, serve_port = 0;
    bool regularize_first = false, open_loop = false, search = false;

    auto* sg = app.add_subcommand("smallgain", "check the cyclic small-gain conditions");
    sg->add_option("gains", path, "gain matrix JSON")->required();
    sg->add_option("--out", out, "report path (default: stdout)");
    sg->add_flag("--regularize", regularize_first, "regularize before checking");

    auto* fc = app.add_subcommand("feascheck", "solve one scalar inequality system");
    fc->add_option("constraints", path, "constraint list JSON")->required();
    fc->add_option("--out", out);

    auto* vf = app.add_subcommand("verify", "sampled certificate implication checks");
    vf->add_option("problem", path, "problem JSON")->required();
    vf->add_option("--samples", samples);
    vf->add_option("--seed", seed);
    vf->add_option("--out", out);

    auto* sy = app.add_subcommand("synth", "evaluate the synthesized feedback");
    sy->add_option("problem", path, "problem JSON")->required();
    sy->add_option("--points", points, "CSV of states (x1..xn per row)");
    sy->add_option("--out", out, "output CSV (default: stdout)");
    sy->add_option("--serve", serve_port, "run an HTTP evaluation service on this port");

    auto* si = app.add_subcommand("simulate", "integrate the closed loop with monitors");
    si->add_option("problem", path, "problem JSON")->required();
    si->add_option("--x0", x0_text, "initial state, comma separated")->required();
    si->add_option("--T", t_end, "horizon")->required();
    si->add_option("--h-max", h_max);
    si->add_option("--tol-rel", tol_rel, "integrator relative tolerance override");
    si->add_option("--tol-abs", tol_abs, "integrator absolute tolerance override");
    si->add_flag("--open-loop", open_loop, "hold u constant instead of the feedback");
    si->add_option("--u-const", u_const, "open-loop control value");
    si->add_option("--dist-seed", seed, "seeded random disturbance (0 = none)")
        ->default_val(0);
    si->add_option("--out", points, "trajectory CSV path");
    si->add_option("--report", out, "report JSON path (default: stdout)");

    auto* e43 = app.add_subcommand("example43", "worked three-state chain instance");
    e43->add_option("--lambda", lambda);
    e43->add_option("--sigma", sigma);
    e43->add_option("--q-scale", q_scale);
    e43->add_option("--samples", samples);
    e43->add_option("--seed", seed);
    e43->add_option("--sims", sims);
    e43->add_option("--T", t_end)->default_val(40.0);
    e43->add_option("--out-dir", out_dir, "directory for trajectory CSVs");
    e43->add_option("--out", out);

    auto* e44 = app.add_subcommand("example44", "ball-constrained chain variant");
    e44->add_option("--a", a);
    e44->add_option("--c", c);
    e44->add_option("--eps", epsilon);
    e44->add_option("--R", R);
    e44->add_flag("--search", search, "search small constants instead of checking one set");
    e44->add_option("--g-expr", g_expr, "coupling expression (prefix JSON, default x2)");
    e44->add_option("--samples", samples);
    e44->add_option("--seed", seed);
    e44->add_option("--out", out);

    auto* cstr = app.add_subcommand("cstr", "stirred-tank reaction network tools");
    cstr->require_subcommand(1);
    auto* ce = cstr->add_subcommand("equilibria", "interior equilibria at a dilution rate");
    ce->add_option("network", path, "network JSON")->required();
    ce->add_option("--dstar", dstar)->default_val(1.0);
    ce->add_option("--out", out);
    auto* cc = cstr->add_subcommand("check", "hypotheses and feedback conditions");
    cc->add_option("network", path, "network JSON")->required();
    cc->add_option("--samples", samples);
    cc->add_option("--seed", seed);
    cc->add_option("--out", out);
    auto* cs = cstr->add_subcommand("stabilize", "evaluate the dilution feedback");
    cs->add_option("network", path, "network JSON")->required();
    cs->add_option("--points", points, "CSV of concentrations (c1..cn per row)");
    cs->add_option("--out", out, "output CSV (default: stdout)");
    auto* cm = cstr->add_subcommand("simulate", "closed- or open-loop batch runs");
    cm->add_option("network", path, "network JSON")->required();
    cm->add_option("--c0", x0_text, "single start, comma separated");
    cm->add_option("--batch", batch, "number of random starts");
    cm->add_option("--T", t_end)->default_val(200.0);
    cm->add_option("--h-max", h_max)->default_val(0.02);
    cm->add_option("--tol-rel", tol_rel, "integrator relative tolerance override");
    cm->add_option("--tol-abs", tol_abs, "integrator absolute tolerance override");
    cm->add_flag("--open-loop", open_loop);
    cm->add_option("--D", d_const, "open-loop dilution rate")->default_val(1.0);
    cm->add_option("--seed", seed);
    cm->add_option("--out-dir", out_dir, "directory for trajectory CSVs");
    cm->add_option("--out", out, "report JSON path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sg->parsed()) return run_smallgain(path, out, regularize_first);
        if (fc->parsed()) return run_feascheck(path, out);
        if (vf->parsed()) return run_verify(path, samples, seed, out);
        if (sy->parsed()) return run_synth(path, points, out, serve_port);
        if (si->parsed())
            return run_simulate(path, x0_text, t_end, h_max, tol_rel, tol_abs, open_loop,
                                u_const, seed, points, out);
        if (e43->parsed())
            return run_example43(lambda, sigma, q_scale, samples, seed, sims, t_end,
                                 out_dir, out);
        if (e44->parsed())
            return run_example44(a, c, epsilon, R, search, g_expr, samples, seed, out);
        if (cstr->parsed()) {
            if (ce->parsed()) return run_cstr_equilibria(path, dstar, out);
            if (cc->parsed()) return run_cstr_check(path, samples, seed, out);
            if (cs->parsed()) return run_cstr_stabilize(path, points, out);
            if (cm->parsed())
                return run_cstr_simulate(path, x0_text, batch, t_end, h_max, tol_rel,
                                         tol_abs, open_loop, d_const, seed, out_dir, out);
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
