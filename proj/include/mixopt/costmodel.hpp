#ifndef MIXOPT_COSTMODEL_HPP
#define MIXOPT_COSTMODEL_HPP

#include <array>
#include <string_view>
#include <vector>

namespace mixopt::cost {

/// Inputs to the FLOPs model. `delta` is the fraction of training tokens
/// a method spends on its reweighting machinery.
struct CostParams {
    double N = 1.0;    // model parameters
    double D_t = 1.0;  // training tokens
    double D_e = 1.0;  // evaluation tokens
    double m = 1.0;    // skills
    double T = 1.0;    // rounds
    double delta = 0.1;

    void validate() const;
};

enum class Method { standard, skill_it, aioli, dga, randb };

inline constexpr std::array<Method, 5> kAllMethods = {Method::standard, Method::skill_it, Method::aioli, Method::dga,
                                                      Method::randb};

std::string_view to_string(Method method);

/// Training FLOPs, 6 D_t N, shared by every method.
double standard_flops(const CostParams& params);

/// Summary-table total cost:
///   standard  6 D_t N
///   skill_it  6(1 + m δ) D_t N + 2(T + m) D_e N
///   aioli     6 D_t N + 2 T m D_e N
///   dga       6(1 + m δ) D_t N + 6 T δ D_e N
///   randb     6 D_t N + T m² N
double total_flops(Method method, const CostParams& params);

/// Summary-table overhead column, evaluated from its own closed form.
double relative_overhead(Method method, const CostParams& params);

/// Per-method derivation-text variants, which differ from the summary
/// table for skill_it, dga and randb. Same value as total_flops otherwise.
double prose_total_flops(Method method, const CostParams& params);

struct MethodCost {
    Method method;
    double total_flops = 0.0;
    double relative_overhead = 0.0;
    /// (total - 6 D_t N) / (6 D_t N), recomputed from the total column.
    double overhead_from_total = 0.0;
    /// The two columns agree within 1e-9 relative.
    bool consistent = false;
    double prose_total_flops = 0.0;
};

struct CostReport {
    std::vector<MethodCost> methods;
    /// m < sqrt(D_e): the Gram-based method beats gradient-alignment on evaluation cost.
    bool randb_cheaper_than_dga_eval = false;
};

CostReport compare(const CostParams& params);

}  // namespace mixopt::cost

#endif  // MIXOPT_COSTMODEL_HPP
