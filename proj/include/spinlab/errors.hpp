#pragma once

#include <stdexcept>
#include <string>

namespace spinlab {

// Error taxonomy shared by the library and the CLI. Each class carries the
// process exit code the CLI maps it to, so library call sites can throw the
// semantically right thing without knowing about the CLI at all.
//
//   invalid_input   -> 2   (bad arguments, malformed files, violated preconditions)
//   capacity_error  -> 3   (instance exceeds the exact-computation caps)
//   search_failure  -> 4   (randomized construction/search exhausted its budget,
//                           or a produced object is unusable for the request)

struct invalid_input : std::runtime_error {
    explicit invalid_input(const std::string& what) : std::runtime_error(what) {}
    static constexpr int exit_code = 2;
};

struct capacity_error : std::runtime_error {
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
    static constexpr int exit_code = 3;
};

struct search_failure : std::runtime_error {
    explicit search_failure(const std::string& what) : std::runtime_error(what) {}
    static constexpr int exit_code = 4;
};

// Guarded log: refuse arguments that would silently produce -inf/nan deep in a
// free-energy computation. Callers that legitimately need log 0 (empty phase
// classes etc.) handle that case explicitly before calling.
double checked_log(double x, const char* context);

} // namespace spinlab
