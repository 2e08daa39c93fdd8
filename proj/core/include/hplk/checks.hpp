#pragma once

#include <functional>
#include <string>
#include <vector>

namespace hplk {

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double residual = 0.0;   // worst observed value of the criterion's metric
    double threshold = 0.0;  // metric bound
    double seconds = 0.0;
    double time_limit = 0.0;
    std::string detail;
};

enum class Suite { fast, full };

// full uses the published sizes; fast shrinks sample counts and grids for smoke testing
CheckResult check_determinant_identity(Suite s);
CheckResult check_eigenvalue_rotation(Suite s);
CheckResult check_dual_oracle(Suite s);
CheckResult check_paste_dvector(Suite s);
CheckResult check_adjacency(Suite s);
CheckResult check_polynomial_points(Suite s);
CheckResult check_boundary_equations(Suite s);
CheckResult check_level_curve(Suite s);
CheckResult check_portrait_properties(Suite s, int threads = 1);
CheckResult check_bessel_identity(Suite s);
CheckResult check_product_certificates(Suite s);

// all criteria in order; the callback sees each result as soon as it is available
std::vector<CheckResult> run_suite(Suite s, int threads = 1, const std::function<void(const CheckResult&)>& on_result = {});
std::string format_result(const CheckResult& r);
std::string report_json(const std::vector<CheckResult>& results, int indent = 2);

}  // namespace hplk
