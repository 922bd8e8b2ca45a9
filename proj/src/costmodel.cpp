#include "mixopt/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mixopt/error.hpp"

namespace mixopt::cost {

void CostParams::validate() const {
    const auto count_ok = [](double v) { return std::isfinite(v) && v >= 1.0; };
    if (!count_ok(N) || !count_ok(D_t) || !count_ok(D_e) || !count_ok(m)) {
        throw ConfigError("N, D_t, D_e and m must be finite and >= 1");
    }
    // Zero rounds is admitted as the degenerate no-reweighting case.
    if (!std::isfinite(T) || T < 0.0) throw ConfigError("T must be finite and >= 0");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
}

std::string_view to_string(Method method) {
    switch (method) {
        case Method::standard: return "standard";
        case Method::skill_it: return "skill_it";
        case Method::aioli: return "aioli";
        case Method::dga: return "dga";
        case Method::randb: return "randb";
    }
    return "unknown";
}

namespace {

double checked(double value, const CostParams& p) {
    if (!std::isfinite(value)) {
        throw NumericalError("FLOPs overflowed for N=" + std::to_string(p.N) + ", D_t=" + std::to_string(p.D_t) +
                             ", D_e=" + std::to_string(p.D_e));
    }
    return value;
}

}  // namespace

double standard_flops(const CostParams& p) {
    p.validate();
    return checked(6.0 * p.D_t * p.N, p);
}

double total_flops(Method method, const CostParams& p) {
    p.validate();
    const double train = 6.0 * p.D_t * p.N;
    switch (method) {
        case Method::standard: return checked(train, p);
        case Method::skill_it:
            return checked(6.0 * (1.0 + p.m * p.delta) * p.D_t * p.N + 2.0 * (p.T + p.m) * p.D_e * p.N, p);
        case Method::aioli: return checked(train + 2.0 * (p.T * p.m) * p.D_e * p.N, p);
        case Method::dga: return checked(6.0 * (1.0 + p.m * p.delta) * p.D_t * p.N + 6.0 * p.T * (p.delta * p.D_e) * p.N, p);
        case Method::randb: return checked(train + p.T * p.m * p.m * p.N, p);
    }
    throw ConfigError("unknown method");
}

double relative_overhead(Method method, const CostParams& p) {
    p.validate();
    switch (method) {
        case Method::standard: return 0.0;
        case Method::skill_it: return p.m * p.delta + (p.T + p.m) * p.D_e / (3.0 * p.D_t);
        case Method::aioli: return p.T * p.m * p.D_e / (3.0 * p.D_t);
        case Method::dga: return p.m * p.delta + p.T * p.delta * p.D_e / p.D_t;
        case Method::randb: return p.T * p.m * p.m / (6.0 * p.D_t);
    }
    throw ConfigError("unknown method");
}

double prose_total_flops(Method method, const CostParams& p) {
    p.validate();
    switch (method) {
        case Method::skill_it:
            return checked(6.0 * (1.0 + p.delta) * p.D_t * p.N + 2.0 * (p.T + p.m) * p.D_e * p.N, p);
        case Method::dga:
            return checked(6.0 * (1.0 + p.delta) * p.D_t * p.N + 6.0 * p.T * (p.D_e + p.m) * p.N, p);
        case Method::randb: return checked(6.0 * p.D_t * p.N + p.m * p.m * p.N, p);
        case Method::standard:
        case Method::aioli: return total_flops(method, p);
    }
    throw ConfigError("unknown method");
}

CostReport compare(const CostParams& params) {
    params.validate();
    CostReport report;
    const double base = standard_flops(params);
    for (Method method : kAllMethods) {
        MethodCost row{method};
        row.total_flops = total_flops(method, params);
        row.relative_overhead = relative_overhead(method, params);
        row.overhead_from_total = (row.total_flops - base) / base;
        const double scale = std::max({std::abs(row.relative_overhead), std::abs(row.overhead_from_total), 1e-300});
        // Subtracting 6 D_t N from the total loses digits when the overhead is
        // tiny, so the comparison also admits an absolute ulp-level slack.
        const double diff = std::abs(row.relative_overhead - row.overhead_from_total);
        row.consistent = diff <= 1e-9 * scale || diff <= 8.0 * std::numeric_limits<double>::epsilon() * (row.total_flops / base);
        row.prose_total_flops = prose_total_flops(method, params);
        report.methods.push_back(row);
    }
    report.randb_cheaper_than_dga_eval = params.m < std::sqrt(params.D_e);
    return report;
}

}  // namespace mixopt::cost
