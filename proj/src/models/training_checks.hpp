#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "tsad/error.hpp"
#include "tsad/matrix.hpp"

namespace tsad::detail {

inline void check_training_inputs(const FeatureMatrix& x, std::span<const std::uint8_t> y, bool need_both_classes) {
    if (x.rows() != y.size()) {
        throw std::invalid_argument("training: " + std::to_string(x.rows()) + " rows but " +
                                    std::to_string(y.size()) + " labels");
    }
    if (x.rows() == 0) {
        throw std::invalid_argument("training: empty training set");
    }
    for (double v : x.data()) {
        if (!std::isfinite(v)) {
            throw InputError("training: non-finite feature value");
        }
    }
    if (need_both_classes) {
        bool pos = false;
        bool neg = false;
        for (auto label : y) {
            (label ? pos : neg) = true;
        }
        if (!pos || !neg) {
            throw DegenerateLabelsError("training: labels contain a single class");
        }
    }
}

}  // namespace tsad::detail
