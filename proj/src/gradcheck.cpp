#include "ssr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ssr/error.hpp"

namespace ssr {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

namespace {

struct Probe {
    double value;
    std::uint64_t signature;
};

void consider(GradCheckResult& res, double analytic, double numeric, std::size_t index, const std::string& name) {
    const double err = relative_error(analytic, numeric);
    ++res.checked;
    if (res.checked == 1 || err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst_index = index;
        res.worst_name = name;
    }
}

}  // namespace

GradCheckResult finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Tensor& point, double step) {
    if (!(step > 0.0)) throw ContractError("finite_diff_check: step must be positive");
    auto eval = [&](const Tensor& x) {
        Tape tape;
        tape.track_kinks = true;
        Var out = f(tape, tape.constant(x));
        if (out.value().numel() != 1) throw ContractError("finite_diff_check: function must return a scalar");
        return Probe{out.value()[0], tape.kink_signature()};
    };

    Tape tape;
    tape.track_kinks = true;
    Var x = tape.variable(point);
    Var y = f(tape, x);
    tape.backward(y);
    const Tensor analytic = tape.grad(x.id);
    const std::uint64_t base_sig = tape.kink_signature();

    GradCheckResult res;
    Tensor probe = point;
    for (std::size_t i = 0; i < point.numel(); ++i) {
        probe[i] = point[i] + step;
        const Probe up = eval(probe);
        probe[i] = point[i] - step;
        const Probe down = eval(probe);
        probe[i] = point[i];
        if (up.signature != base_sig || down.signature != base_sig) {
            ++res.excluded;
            continue;
        }
        consider(res, analytic[i], (up.value - down.value) / (2.0 * step), i, {});
    }
    return res;
}

GradCheckResult finite_diff_check(const std::function<Var(Tape&)>& loss, ParameterStore& store, double step) {
    if (!(step > 0.0)) throw ContractError("finite_diff_check: step must be positive");
    auto eval = [&] {
        Tape tape;
        tape.track_kinks = true;
        Var out = loss(tape);
        if (out.value().numel() != 1) throw ContractError("finite_diff_check: loss must be a scalar");
        return Probe{out.value()[0], tape.kink_signature()};
    };

    store.zero_grad();
    std::uint64_t base_sig;
    {
        Tape tape;
        tape.track_kinks = true;
        Var out = loss(tape);
        tape.backward(out);
        base_sig = tape.kink_signature();
    }

    GradCheckResult res;
    for (std::size_t p = 0; p < store.size(); ++p) {
        Parameter& param = store[p];
        for (std::size_t i = 0; i < param.value.numel(); ++i) {
            const double orig = param.value[i];
            param.value[i] = orig + step;
            const Probe up = eval();
            param.value[i] = orig - step;
            const Probe down = eval();
            param.value[i] = orig;
            if (up.signature != base_sig || down.signature != base_sig) {
                ++res.excluded;
                continue;
            }
            consider(res, param.grad[i], (up.value - down.value) / (2.0 * step), i, param.name);
        }
    }
    return res;
}

}  // namespace ssr
