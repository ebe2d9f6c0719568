#include "libs/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "libs/errors.hpp"

namespace libs {

double normalized_score(double logprob, int length, double length_penalty) {
    if (length <= 0) {
        throw invalid_input("normalized_score requires a positive length");
    }
    if (length_penalty == 0.0) {
        return logprob;
    }
    return logprob / std::pow(static_cast<double>(length), length_penalty);
}

double log_sum_exp(std::span<const double> logprobs) {
    double max = -std::numeric_limits<double>::infinity();
    for (double v : logprobs) {
        max = std::max(max, v);
    }
    if (!std::isfinite(max)) {
        return max;
    }
    double sum = 0.0;
    for (double v : logprobs) {
        sum += std::exp(v - max);
    }
    return max + std::log(sum);
}

}  // namespace libs
