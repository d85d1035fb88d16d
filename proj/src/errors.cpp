#include "spinlab/errors.hpp"

#include <cmath>

namespace spinlab {

double checked_log(double x, const char* context) {
    if (!(x >= 1e-300)) {
        throw invalid_input(std::string("log argument out of domain (") + context +
                            "): " + std::to_string(x));
    }
    return std::log(x);
}

} // namespace spinlab
