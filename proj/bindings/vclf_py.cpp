#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "vclf/corollary.hpp"
#include "vclf/io.hpp"
#include "vclf/reaction.hpp"
#include "vclf/sim.hpp"

namespace py = pybind11;
using namespace vclf;
using nlohmann::json;

namespace {

json parse_json(const std::string& text) { return json::parse(text); }

py::dict condition_report_to_dict(const ConditionReport& rep) {
    py::dict out;
    out["passed"] = rep.passed();
    py::list stats;
    for (const auto& s : rep.stats) {
        py::dict d;
        d["name"] = s.name;
        d["antecedent_hits"] = s.antecedent_hits;
        d["violations"] = s.violation_count;
        d["worst_excess"] = s.worst_excess;
        stats.append(d);
    }
    out["conditions"] = stats;
    return out;
}

}  // namespace

PYBIND11_MODULE(_vclf, m) {
    m.doc() = "vector-certificate feedback toolkit (native core)";

    py::enum_<FnClass>(m, "FnClass")
        .value("N1", FnClass::N1)
        .value("K", FnClass::K)
        .value("Kinf", FnClass::Kinf);

    py::class_<MonotoneFn>(m, "MonotoneFn")
        .def_static("zero", &MonotoneFn::zero)
        .def_static("identity", &MonotoneFn::identity)
        .def_static("linear", &MonotoneFn::linear, py::arg("slope"))
        .def_static("power", &MonotoneFn::power, py::arg("coeff"), py::arg("exponent"))
        .def_static("compose", &MonotoneFn::compose)
        .def_static("max_of", &MonotoneFn::max_of)
        .def_static("scaled_inverse", &MonotoneFn::scaled_inverse, py::arg("inner"),
                    py::arg("pre") = 1.0, py::arg("post") = 1.0)
        .def_static(
            "from_json",
            [](const std::string& text) { return io::monotone_from_json(parse_json(text)); })
        .def("__call__", &MonotoneFn::eval)
        .def_property_readonly("fn_class", &MonotoneFn::fn_class);

    py::class_<GainMatrix>(m, "GainMatrix")
        .def(py::init<int>())
        .def_static(
            "from_json",
            [](const std::string& text) { return io::gains_from_json(parse_json(text)); })
        .def("set", &GainMatrix::set)
        .def("at", &GainMatrix::at)
        .def_property_readonly("dim", &GainMatrix::dim)
        .def("to_json", [](const GainMatrix& g) { return io::to_json(g).dump(); });

    m.def(
        "check_small_gain",
        [](const GainMatrix& g) {
            const auto rep = check_small_gain(g);
            py::dict out;
            out["verdict"] = std::string(to_string(rep.verdict));
            py::list cycles;
            for (const auto& c : rep.cycles) {
                py::dict d;
                d["nodes"] = c.nodes;
                d["worst_margin"] = c.worst_margin;
                d["witness_s"] = c.witness_s;
                cycles.append(d);
            }
            out["cycles"] = cycles;
            return out;
        },
        "Simple-cycle compositions against the identity on the default grid");

    m.def("regularize_gains", &regularize_gains,
          "Positive-definite unbounded replacement preserving the small-gain check");

    m.def(
        "feasible_interval",
        [](const std::vector<std::pair<double, double>>& fg, const std::string& kind,
           double a, double b) {
            std::vector<AffineConstraint> cs;
            for (auto [f, g] : fg) cs.push_back({f, g, ""});
            ControlSet set = kind == "P1"  ? ControlSet::all_reals()
                             : kind == "P2" ? ControlSet::lower_bounded(a)
                                            : ControlSet::interval(a, b);
            const auto res = feasible_interval(cs, set);
            py::dict out;
            out["feasible"] = res.feasible;
            if (res.feasible) {
                out["lower"] = res.interval.lower;
                out["upper"] = res.interval.upper;
                out["u"] = select_u(res.interval, set);
            } else {
                out["violated"] = std::string(to_string(res.infeasibility.cause));
                out["witness_i"] = res.infeasibility.witness_i;
                out["witness_j"] = res.infeasibility.witness_j;
            }
            return out;
        },
        py::arg("constraints"), py::arg("case") = "P1", py::arg("a") = 0.0,
        py::arg("b") = 0.0,
        "Exact solution interval of the strict inequality system f_i + g_i u < 0");

    py::class_<FeedbackLaw>(m, "FeedbackLaw")
        .def("__call__",
             [](const FeedbackLaw& law, const std::vector<double>& x) { return law.eval(x); })
        .def("region", [](const FeedbackLaw& law, const std::vector<double>& x) {
            return std::string(to_string(law.evaluate(x).region));
        });

    py::class_<io::Problem>(m, "Problem")
        .def_static(
            "from_json",
            [](const std::string& text, const std::string& base_dir) {
                return io::problem_from_json(parse_json(text), base_dir);
            },
            py::arg("text"), py::arg("base_dir") = ".")
        .def("verify",
             [](const io::Problem& p, long samples, std::uint64_t seed) {
                 auto sampling = p.sampling;
                 if (samples > 0) sampling.samples = samples;
                 if (seed != 0) sampling.seed = seed;
                 const auto rep = check_implications(p.sys, p.spec, sampling);
                 py::dict out;
                 out["passed"] = rep.passed();
                 py::list stats;
                 for (const auto& s : rep.stats) {
                     py::dict d;
                     d["id"] = std::string(to_string(s.id));
                     d["applicable"] = s.applicable;
                     d["hits"] = s.antecedent_hits;
                     d["violations"] = s.violation_count;
                     stats.append(d);
                 }
                 out["implications"] = stats;
                 return out;
             },
             py::arg("samples") = 0, py::arg("seed") = 0)
        .def("synthesize",
             [](const io::Problem& p) { return synthesize(p.sys, p.spec); });

    py::class_<DilutionFeedback>(m, "DilutionFeedback")
        .def("dilution", [](const DilutionFeedback& fb, const std::vector<double>& c) {
            return fb.dilution(c);
        });

    py::class_<io::NetworkBundle>(m, "Network")
        .def_static("from_json",
                    [](const std::string& text) { return io::network_from_json(parse_json(text)); })
        .def_static(
            "two_species",
            [](double theta, double mu, double d_max, double epsilon) {
                auto [net, cons] = example51_network(theta, mu, d_max);
                io::NetworkBundle b;
                b.net = std::move(net);
                b.cons = std::move(cons);
                b.certificate = example51_config(theta, mu, epsilon);
                return b;
            },
            py::arg("theta"), py::arg("mu"), py::arg("d_max") = 10.0,
            py::arg("epsilon") = 0.1)
        .def("equilibria",
             [](const io::NetworkBundle& b, double dstar) {
                 const auto rep = equilibria(b.net, dstar);
                 py::dict out;
                 out["method"] = rep.method;
                 out["roots"] = rep.roots;
                 out["residuals"] = rep.residuals;
                 if (rep.threshold_prediction) {
                     out["threshold_prediction"] = *rep.threshold_prediction;
                     out["threshold_consistent"] = rep.threshold_consistent;
                 }
                 return out;
             },
             py::arg("dstar") = 1.0)
        .def("verify_hypotheses",
             [](const io::NetworkBundle& b, long samples, std::uint64_t seed) {
                 SampleParams params;
                 for (int i = 0; i < b.net.n; ++i) params.box.push_back({0.05, 5.0});
                 params.samples = samples;
                 params.seed = seed;
                 return condition_report_to_dict(verify_hypotheses(b.net, b.cons, params));
             },
             py::arg("samples") = 20000, py::arg("seed") = 1)
        .def("check_conditions",
             [](const io::NetworkBundle& b, long samples, std::uint64_t seed) {
                 if (!b.certificate)
                     throw std::invalid_argument("network has no certificate block");
                 SampleParams params;
                 for (int i = 0; i < b.net.n; ++i) params.box.push_back({0.05, 5.0});
                 params.samples = samples;
                 params.seed = seed;
                 return condition_report_to_dict(
                     check_thm52_conditions(b.net, b.cons, *b.certificate, params));
             },
             py::arg("samples") = 20000, py::arg("seed") = 1)
        .def("stabilize",
             [](const io::NetworkBundle& b) {
                 if (!b.certificate)
                     throw std::invalid_argument("network has no certificate block");
                 return stabilize(b.net, b.cons, *b.certificate);
             })
        .def("simulate",
             [](const io::NetworkBundle& b, const std::vector<double>& c0, double t_end,
                double h_max) {
                 if (!b.certificate)
                     throw std::invalid_argument("network has no certificate block");
                 const auto fb = stabilize(b.net, b.cons, *b.certificate);
                 const auto sys = log_transform(b.net);
                 std::vector<double> x0;
                 for (double v : c0) x0.push_back(std::log(v));
                 IntegrateOptions opts;
                 opts.h_max = h_max;
                 auto traj = integrate(fb.law(), DisturbanceSignal::none(), x0, t_end, opts);
                 annotate(traj, sys, fb.law().spec());
                 const auto mon = monitor(traj, sys, fb.law().spec());
                 py::dict out;
                 std::vector<double> final_c;
                 for (double v : traj.back_state()) final_c.push_back(std::exp(v));
                 out["final_c"] = final_c;
                 out["steps"] = traj.accepted;
                 out["monitor_violations"] = mon.violation_count;
                 std::ostringstream csv;
                 CsvOptions copts;
                 copts.exponentiate_states = true;
                 copts.state_prefix = "c";
                 copts.dilution_input = true;
                 copts.d_max = b.net.D_max;
                 write_trajectory_csv(csv, traj, copts);
                 out["csv"] = csv.str();
                 return out;
             },
             py::arg("c0"), py::arg("t_end") = 200.0, py::arg("h_max") = 0.02);

    m.def("dmax_bound", &dmax_bound, py::arg("theta"), py::arg("mu"),
          "Lower bounds on the admissible dilution cap for the two-species family");
    m.def("bump", &bump, "Smooth 0-to-1 transition used for blending");

    m.attr("__version__") = "0.1.0";
}
