#pragma once

#include <stdexcept>
#include <string>

namespace collapselab {

// Base of everything thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad inputs, malformed fixtures, out-of-contract arguments. CLI exit code 2.
struct validation_error : error {
    using error::error;
};

// A computation that started from valid inputs failed to converge or lost an
// invariant along the way. CLI exit code 3.
struct numerical_error : error {
    using error::error;
};

// --- lattice / cone geometry ---
struct not_full_dimensional : validation_error { using validation_error::validation_error; };
struct non_simplicial : validation_error { using validation_error::validation_error; };
struct not_gorenstein : validation_error { using validation_error::validation_error; };
struct degenerate_parameter : validation_error { using validation_error::validation_error; };
struct non_positive_modulus : validation_error { using validation_error::validation_error; };
struct empty_domain : validation_error { using validation_error::validation_error; };

// --- Monge-Ampere solver ---
struct domain_violation : validation_error { using validation_error::validation_error; };
struct resolution_too_coarse : validation_error { using validation_error::validation_error; };
struct newton_diverged : numerical_error { using numerical_error::numerical_error; };
struct loss_of_convexity : numerical_error { using numerical_error::numerical_error; };

// --- semi-flat geometry ---
struct boundary_too_close : validation_error { using validation_error::validation_error; };
struct zero_form : validation_error { using validation_error::validation_error; };
struct dimension_mismatch : validation_error { using validation_error::validation_error; };

// --- tropical ---
struct empty_variety : validation_error { using validation_error::validation_error; };
struct empty_after_clip : validation_error { using validation_error::validation_error; };
struct root_solve_failure : numerical_error { using numerical_error::numerical_error; };

// --- degenerations ---
struct non_convex_psi : validation_error { using validation_error::validation_error; };
struct non_integral_slope : validation_error { using validation_error::validation_error; };
struct not_gorenstein_locally : validation_error { using validation_error::validation_error; };

// --- fixtures / CLI ---
struct fixture_error : validation_error { using validation_error::validation_error; };
struct unknown_subcommand : validation_error { using validation_error::validation_error; };
struct invalid_flag : validation_error { using validation_error::validation_error; };

}  // namespace collapselab
