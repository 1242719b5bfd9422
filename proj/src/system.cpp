#include "vclf/system.hpp"

#include <cmath>
#include <stdexcept>

namespace vclf {

void ControlAffineSystem::validate() const {
    if (n < 1) throw std::invalid_argument("system: state dimension must be positive");
    if (static_cast<int>(f.size()) != n || static_cast<int>(g.size()) != n)
        throw std::invalid_argument("system: f and g need one component per state");
    if (static_cast<int>(dbox.size()) != l)
        throw std::invalid_argument("system: disturbance box needs one interval per axis");
    for (const auto& [lo, hi] : dbox)
        if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("system: disturbance box intervals must be finite and ordered");
    for (const auto& gi : g)
        if (gi.depends_on_disturbance())
            throw std::invalid_argument("system: input field may not depend on the disturbance");
}

std::vector<double> ControlAffineSystem::dbox_center() const {
    std::vector<double> c(static_cast<std::size_t>(l));
    for (int i = 0; i < l; ++i)
        c[static_cast<std::size_t>(i)] =
            0.5 * (dbox[static_cast<std::size_t>(i)][0] + dbox[static_cast<std::size_t>(i)][1]);
    return c;
}

void ControlAffineSystem::rhs(std::span<const double> x, std::span<const double> d,
                              double u, std::span<double> out) const {
    for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        out[ui] = f[ui].eval(x, d) + g[ui].eval(x) * u;
    }
}

LieDerivatives lie_derivatives(const ControlAffineSystem& sys, const ScalarField& phi,
                               std::span<const double> x, std::span<const double> d) {
    const auto grad = phi.gradient(sys.n, x, d);
    LieDerivatives lie;
    for (int i = 0; i < sys.n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        lie.along_f += grad[ui] * sys.f[ui].eval(x, d);
        lie.along_g += grad[ui] * sys.g[ui].eval(x);
    }
    return lie;
}

namespace {

double drift_lie(const ControlAffineSystem& sys, std::span<const double> grad,
                 std::span<const double> x, std::span<const double> d) {
    double v = 0.0;
    for (int i = 0; i < sys.n; ++i)
        v += grad[static_cast<std::size_t>(i)] * sys.f[static_cast<std::size_t>(i)].eval(x, d);
    return v;
}

}  // namespace

DisturbanceMax max_lie_over_disturbances(const ControlAffineSystem& sys,
                                         const ScalarField& phi,
                                         std::span<const double> x) {
    DisturbanceMax result;
    const auto d0 = sys.dbox_center();
    const auto grad = phi.gradient(sys.n, x, d0);

    if (sys.l == 0) {
        result.value = drift_lie(sys, grad, x, {});
        return result;
    }

    bool affine = true;
    for (const auto& fi : sys.f)
        if (fi.disturbance_degree() == ScalarField::DistDegree::Nonlinear) {
            affine = false;
            break;
        }

    result.value = -std::numeric_limits<double>::infinity();
    std::vector<double> d(static_cast<std::size_t>(sys.l));

    if (affine) {
        if (sys.l > 24)
            throw std::invalid_argument("max_lie_over_disturbances: too many disturbance axes");
        const std::size_t corners = std::size_t{1} << sys.l;
        for (std::size_t mask = 0; mask < corners; ++mask) {
            for (int i = 0; i < sys.l; ++i)
                d[static_cast<std::size_t>(i)] =
                    sys.dbox[static_cast<std::size_t>(i)][(mask >> i) & 1U];
            const double v = drift_lie(sys, grad, x, d);
            if (v > result.value) {
                result.value = v;
                result.argmax = d;
            }
        }
        return result;
    }

    // Dense grid fallback for non-affine dependence; the reported maximum is
    // only a lower bound on the true one.
    result.conservative = true;
    double cells = 1.0;
    for (int i = 0; i < sys.l; ++i) cells *= kDistGridPointsPerAxis;
    if (cells > 1e6)
        throw std::invalid_argument("max_lie_over_disturbances: disturbance grid too large");

    std::vector<int> idx(static_cast<std::size_t>(sys.l), 0);
    while (true) {
        for (int i = 0; i < sys.l; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const auto [lo, hi] = sys.dbox[ui];
            d[ui] = lo + (hi - lo) * idx[ui] / (kDistGridPointsPerAxis - 1);
        }
        const double v = drift_lie(sys, grad, x, d);
        if (v > result.value) {
            result.value = v;
            result.argmax = d;
        }
        int carry = 0;
        while (carry < sys.l) {
            auto& c = idx[static_cast<std::size_t>(carry)];
            if (++c < kDistGridPointsPerAxis) break;
            c = 0;
            ++carry;
        }
        if (carry == sys.l) break;
    }
    return result;
}

}  // namespace vclf
