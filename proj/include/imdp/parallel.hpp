#pragma once

#include <cstddef>
#include <exception>
#include <limits>

namespace imdp {

/// Execution policy for the data-parallel sweeps. `serial` is the reference path.
enum class Exec { serial, parallel };

/**
 * Runs body(i) for i in [0, count). With Exec::parallel the iterations are
 * distributed over OpenMP threads; an exception thrown by any iteration is
 * rethrown after the loop, choosing the one with the lowest index so both
 * paths report the same error.
 */
template <class Body>
void parallel_for(std::ptrdiff_t count, Exec exec, Body&& body) {
    if (exec == Exec::serial || count < 2) {
        for (std::ptrdiff_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::ptrdiff_t error_index = std::numeric_limits<std::ptrdiff_t>::max();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical(imdp_parallel_for_error)
            {
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace imdp
