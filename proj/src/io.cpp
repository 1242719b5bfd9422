#include "vclf/io.hpp"

#include <fstream>

namespace vclf::io {

using nlohmann::json;

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // recover line/column from the byte offset
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw std::runtime_error(path.string() + ":" + std::to_string(line) + ":" +
                                 std::to_string(col) + ": " + e.what());
    }
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::uint64_t h = 1469598103934665603ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// -- monotone functions --------------------------------------------------------

namespace {

FnClass fn_class_from_string(const std::string& s) {
    if (s == "N1") return FnClass::N1;
    if (s == "K") return FnClass::K;
    if (s == "Kinf") return FnClass::Kinf;
    throw std::invalid_argument("unknown function class '" + s + "'");
}

}  // namespace

json to_json(const MonotoneFn& fn) {
    using Kind = MonotoneFn::Kind;
    switch (fn.kind()) {
        case Kind::Zero: return {{"kind", "zero"}};
        case Kind::Identity: return {{"kind", "identity"}};
        case Kind::Linear: return {{"kind", "linear"}, {"slope", fn.param_a()}};
        case Kind::Power:
            return {{"kind", "power"}, {"coeff", fn.param_a()}, {"exponent", fn.param_b()}};
        case Kind::Compose:
            return {{"kind", "compose"},
                    {"outer", to_json(fn.child(0))},
                    {"inner", to_json(fn.child(1))}};
        case Kind::Max:
            return {{"kind", "max"},
                    {"lhs", to_json(fn.child(0))},
                    {"rhs", to_json(fn.child(1))}};
        case Kind::ScaledInverse:
            return {{"kind", "scaled_inverse"},
                    {"inner", to_json(fn.child(0))},
                    {"pre", fn.param_a()},
                    {"post", fn.param_b()}};
        case Kind::Tabulated: {
            json pts = json::array();
            for (const auto& [s, v] : fn.table()) pts.push_back(json::array({s, v}));
            return {{"kind", "tabulated"},
                    {"points", pts},
                    {"class", to_string(fn.fn_class())}};
        }
        case Kind::Callback:
            throw std::invalid_argument("internal callback gains are not serializable");
    }
    throw std::logic_error("to_json: bad monotone kind");
}

MonotoneFn monotone_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw std::invalid_argument("function spec must be an object with a 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "zero") return MonotoneFn::zero();
    if (kind == "identity") return MonotoneFn::identity();
    if (kind == "linear") return MonotoneFn::linear(j.at("slope").get<double>());
    if (kind == "power")
        return MonotoneFn::power(j.at("coeff").get<double>(), j.at("exponent").get<double>());
    if (kind == "compose")
        return MonotoneFn::compose(monotone_from_json(j.at("outer")),
                                   monotone_from_json(j.at("inner")));
    if (kind == "max")
        return MonotoneFn::max_of(monotone_from_json(j.at("lhs")),
                                  monotone_from_json(j.at("rhs")));
    if (kind == "scaled_inverse")
        return MonotoneFn::scaled_inverse(monotone_from_json(j.at("inner")),
                                          j.at("pre").get<double>(),
                                          j.at("post").get<double>());
    if (kind == "tabulated") {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : j.at("points"))
            pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return MonotoneFn::tabulated(std::move(pts),
                                     fn_class_from_string(j.at("class").get<std::string>()));
    }
    throw std::invalid_argument("unknown function kind '" + kind + "'");
}

json to_json(const GainMatrix& gains) {
    json entries = json::array();
    for (int i = 0; i < gains.dim(); ++i) {
        json row = json::array();
        for (int j = 0; j < gains.dim(); ++j) row.push_back(to_json(gains.at(i, j)));
        entries.push_back(std::move(row));
    }
    return {{"k", gains.dim()}, {"entries", entries}};
}

GainMatrix gains_from_json(const json& j) {
    const int k = j.at("k").get<int>();
    const auto& entries = j.at("entries");
    if (static_cast<int>(entries.size()) != k)
        throw std::invalid_argument("gain matrix needs k rows");
    std::vector<MonotoneFn> fns;
    fns.reserve(static_cast<std::size_t>(k) * k);
    for (const auto& row : entries) {
        if (static_cast<int>(row.size()) != k)
            throw std::invalid_argument("gain matrix needs k columns per row");
        for (const auto& cell : row) fns.push_back(monotone_from_json(cell));
    }
    return GainMatrix(k, std::move(fns));
}

json to_json(const CycleReport& report) {
    json cycles = json::array();
    for (const auto& c : report.cycles) {
        cycles.push_back({{"nodes", c.nodes},
                          {"worst_margin", c.worst_margin},
                          {"witness_s", c.witness_s}});
    }
    json out{{"verdict", to_string(report.verdict)}, {"cycles", cycles}};
    if (report.witness_cycle) out["witness_cycle"] = *report.witness_cycle;
    if (report.witness_s) out["witness_s"] = *report.witness_s;
    return out;
}

// -- feasibility -----------------------------------------------------------------

ControlSet control_set_from_json(const json& j) {
    const auto c = j.at("case").get<std::string>();
    if (c == "P1") return ControlSet::all_reals();
    if (c == "P2") return ControlSet::lower_bounded(j.at("a").get<double>());
    if (c == "P3")
        return ControlSet::interval(j.at("a").get<double>(), j.at("b").get<double>());
    throw std::invalid_argument("unknown control-set case '" + c + "'");
}

FeasibilityInstance feasibility_from_json(const json& j) {
    FeasibilityInstance inst;
    for (const auto& c : j.at("constraints")) {
        AffineConstraint ac;
        ac.f = c.at("f").get<double>();
        ac.g = c.at("g").get<double>();
        if (c.contains("label")) ac.label = c.at("label").get<std::string>();
        inst.constraints.push_back(std::move(ac));
    }
    inst.input = j.contains("input") ? control_set_from_json(j.at("input"))
                                     : ControlSet::all_reals();
    return inst;
}

json to_json(const FeasibilityResult& result,
             const std::vector<AffineConstraint>& constraints) {
    json out{{"feasible", result.feasible}};
    if (result.feasible) {
        out["interval"] = {{"lower", result.interval.lower},
                           {"upper", result.interval.upper}};
        out["selected_u"] = json();  // filled by the caller when selected
    } else {
        json inf{{"violated", to_string(result.infeasibility.cause)},
                 {"witness_i", result.infeasibility.witness_i}};
        if (result.infeasibility.witness_j >= 0)
            inf["witness_j"] = result.infeasibility.witness_j;
        if (result.infeasibility.witness_i >= 0 &&
            !constraints[static_cast<std::size_t>(result.infeasibility.witness_i)]
                 .label.empty())
            inf["witness_label"] =
                constraints[static_cast<std::size_t>(result.infeasibility.witness_i)].label;
        out["infeasibility"] = inf;
    }
    return out;
}

// -- problems --------------------------------------------------------------------

namespace {

Scalar1D scalar1d_from_json(const json& j) {
    return Scalar1D(ScalarField::parse(j, 1, 0));
}

}  // namespace

Problem problem_from_json(const json& j, const std::filesystem::path& base_dir) {
    Problem p;
    const auto& sj = j.at("system");
    p.sys.n = sj.at("n").get<int>();
    p.sys.l = sj.value("disturbance_dim", 0);
    for (const auto& e : sj.at("f"))
        p.sys.f.push_back(ScalarField::parse(e, p.sys.n, p.sys.l));
    for (const auto& e : sj.at("g"))
        p.sys.g.push_back(ScalarField::parse(e, p.sys.n, 0));
    if (sj.contains("disturbance_box"))
        for (const auto& iv : sj.at("disturbance_box"))
            p.sys.dbox.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    p.sys.input = sj.contains("input") ? control_set_from_json(sj.at("input"))
                                       : ControlSet::all_reals();
    p.sys.validate();

    const auto& kj = j.at("spec");
    p.spec.k = kj.at("k").get<int>();
    for (const auto& e : kj.at("V"))
        p.spec.V.push_back(ScalarField::parse(e, p.sys.n, 0));
    p.spec.eta = ScalarField::parse(kj.at("eta"), p.sys.n, 0);
    p.spec.W = ScalarField::parse(kj.at("W"), p.sys.n, 0);
    p.spec.delta = scalar1d_from_json(kj.at("delta"));
    p.spec.Kfun = scalar1d_from_json(kj.at("K"));
    p.spec.rho = scalar1d_from_json(kj.at("rho"));
    p.spec.epsilon = kj.at("epsilon").get<double>();
    if (kj.at("gains").is_string())
        p.spec.gains =
            gains_from_json(load_json_file(base_dir / kj.at("gains").get<std::string>()));
    else
        p.spec.gains = gains_from_json(kj.at("gains"));
    const auto& lf = kj.at("local_feedback");
    if (lf.contains("kvec"))
        p.spec.local = LocalLaw::linear(lf.at("kvec").get<std::vector<double>>());
    else
        p.spec.local = LocalLaw::field(ScalarField::parse(lf.at("expr"), p.sys.n, 0));
    p.spec.radius = kj.at("radius").get<double>();
    p.spec.bound_lo = monotone_from_json(kj.at("bound_lo"));
    p.spec.bound_hi = monotone_from_json(kj.at("bound_hi"));

    if (j.contains("sampling")) {
        const auto& smp = j.at("sampling");
        for (const auto& iv : smp.at("box"))
            p.sampling.box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
        p.sampling.samples = smp.value("samples", 100000L);
        p.sampling.seed = smp.value("seed", 20240001ULL);
    }
    return p;
}

json to_json(const ImplicationReport& report) {
    json stats = json::array();
    for (const auto& s : report.stats) {
        json witnesses = json::array();
        for (const auto& w : s.witnesses) {
            json wj{{"x", w.x}, {"consequent_excess", w.consequent_excess}};
            if (!w.d.empty()) wj["d"] = w.d;
            witnesses.push_back(std::move(wj));
        }
        stats.push_back({{"id", to_string(s.id)},
                         {"applicable", s.applicable},
                         {"samples", s.samples},
                         {"antecedent_hits", s.antecedent_hits},
                         {"violations", s.violation_count},
                         {"witnesses", witnesses}});
    }
    json gaps = json::array();
    for (auto id : report.coverage_gaps()) gaps.push_back(to_string(id));
    return {{"passed", report.passed()},
            {"total_samples", report.total_samples},
            {"implications", stats},
            {"coverage_gaps", gaps}};
}

// -- networks --------------------------------------------------------------------

NetworkBundle network_from_json(const json& j) {
    NetworkBundle b;
    for (const auto& row : j.at("S"))
        b.net.S.push_back(row.get<std::vector<double>>());
    b.net.n = static_cast<int>(b.net.S.size());
    b.net.m = b.net.n > 0 ? static_cast<int>(b.net.S.front().size()) : 0;
    for (const auto& e : j.at("rates"))
        b.net.rates.push_back(ScalarField::parse(e, b.net.n, 0));
    b.net.c_f = j.at("c_f").get<std::vector<double>>();
    b.net.D_max = j.at("D_max").get<double>();
    b.net.validate();

    if (j.contains("conservation")) {
        for (const auto& pj : j.at("conservation")) {
            ConservationPair pair;
            pair.p = pj.at("p").get<std::vector<double>>();
            pair.q = pj.at("q").get<std::vector<double>>();
            if (!verify_conservation_pair(b.net.S, pair))
                throw std::invalid_argument("conservation pair fails S'p = q >= 0");
            b.cons.pairs.push_back(std::move(pair));
        }
    } else {
        b.cons.pairs = find_conservation(b.net.S);
    }
    if (j.contains("growth_bound")) {
        b.cons.b = j.at("growth_bound").at("b").get<double>();
        b.cons.R = j.at("growth_bound").at("R").get<double>();
    }
    if (j.contains("rate_profile"))
        b.cons.gfun = monotone_from_json(j.at("rate_profile"));

    if (j.contains("certificate")) {
        const auto& cj = j.at("certificate");
        const auto gamma = cj.contains("gamma") ? monotone_from_json(cj.at("gamma"))
                                                : MonotoneFn::identity();
        const double lambda = cj.value("lambda", 0.75);

        // the derived profile needs the two-species shape
        const bool two_species = b.net.n == 2 && b.net.m == 1 &&
                                 std::abs(b.net.stoich(0, 0) + 1.0) < 1e-12 &&
                                 b.net.stoich(1, 0) > 0.0;
        if (cj.value("qt", json("auto")) == json("auto")) {
            if (!two_species)
                throw std::invalid_argument(
                    "certificate: the automatic decay profile needs the two-species shape");
            const double one[2] = {1.0, 1.0};
            const double theta = b.net.rates[0].eval(one);
            const double mu = b.net.stoich(1, 0);
            double eps = cj.value("epsilon", 0.1);
            auto cfg = example51_config(theta, mu, eps, gamma, lambda);
            if (cj.contains("kvec")) cfg.kvec = cj.at("kvec").get<std::vector<double>>();
            if (cj.contains("omega")) cfg.omega = cj.at("omega").get<double>();
            b.certificate = std::move(cfg);
        } else {
            Thm52Config cfg;
            cfg.gamma_tilde = GainMatrix(b.net.n);
            if (cj.contains("gains"))
                cfg.gamma_tilde = gains_from_json(cj.at("gains"));
            else if (b.net.n == 2) {
                cfg.gamma_tilde.set(0, 1, gamma);
                cfg.gamma_tilde.set(1, 0, MonotoneFn::scaled_inverse(gamma, lambda, 1.0));
            }
            cfg.Qt = Scalar1D(ScalarField::parse(cj.at("qt"), 1, 0));
            cfg.epsilon = cj.value("epsilon", 0.1);
            cfg.omega = cj.value("omega", 0.5 * cfg.epsilon);
            cfg.kvec = cj.value("kvec", std::vector<double>(static_cast<std::size_t>(b.net.n), 0.0));
            b.certificate = std::move(cfg);
        }
    }
    return b;
}

json to_json(const ConditionReport& report) {
    json stats = json::array();
    for (const auto& s : report.stats) {
        json witnesses = json::array();
        for (const auto& w : s.witnesses) witnesses.push_back(w);
        stats.push_back({{"name", s.name},
                         {"samples", s.samples},
                         {"antecedent_hits", s.antecedent_hits},
                         {"violations", s.violation_count},
                         {"worst_excess", s.worst_excess},
                         {"witnesses", witnesses}});
    }
    return {{"passed", report.passed()},
            {"total_samples", report.total_samples},
            {"conditions", stats}};
}

// -- manifests ---------------------------------------------------------------------

json RunManifest::to_json() const {
    json seeds_j = json::object();
    for (const auto& [k, v] : seeds) seeds_j[k] = v;
    json tol_j = json::object();
    for (const auto& [k, v] : tolerances) tol_j[k] = v;
    json versions = json::object();
    for (const auto& [k, v] : module_versions()) versions[k] = v;
    return {{"config_hash", config_hash},
            {"seeds", seeds_j},
            {"tolerances", tol_j},
            {"module_versions", versions},
            {"wall_time_s", wall_time_s}};
}

const std::map<std::string, std::string>& module_versions() {
    static const std::map<std::string, std::string> v{
        {"gain_calculus", "0.1.0"}, {"feasibility", "0.1.0"}, {"vclf_core", "0.1.0"},
        {"corollary_lab", "0.1.0"}, {"reaction_network", "0.1.0"}, {"sim_harness", "0.1.0"},
        {"cli", "0.1.0"},
    };
    return v;
}

}  // namespace vclf::io
