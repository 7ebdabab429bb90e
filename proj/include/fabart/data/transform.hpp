#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "fabart/core/error.hpp"
#include "fabart/core/linalg.hpp"

namespace fabart::data {

/// FRED-MD transformation codes supported by the loader.
enum class TransformCode : int { Level = 1, Diff = 2, Log = 4, DiffLog = 5, DiffPctChange = 7 };

inline TransformCode to_transform_code(int c) {
    switch (c) {
        case 1: case 2: case 4: case 5: case 7: return static_cast<TransformCode>(c);
        default: throw DataError("unsupported transform code " + std::to_string(c) + " (allowed: 1, 2, 4, 5, 7)");
    }
}

inline bool is_differenced(TransformCode c) {
    return c == TransformCode::Diff || c == TransformCode::DiffLog || c == TransformCode::DiffPctChange;
}

/// Applies the code element-wise. Differenced codes shorten the series by one
/// (the result at i belongs to input row i + 1). NaN inputs stay NaN.
/// `label` is used to name the offending row in errors.
inline Vector apply_transform(const Vector& x, TransformCode code, const std::string& label = "series",
                              const std::vector<std::string>* dates = nullptr) {
    auto where = [&](Eigen::Index i) {
        return label + (dates ? " at " + (*dates)[static_cast<std::size_t>(i)] : " row " + std::to_string(i + 1));
    };
    const bool needs_log = code == TransformCode::Log || code == TransformCode::DiffLog || code == TransformCode::DiffPctChange;
    if (needs_log)
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (std::isfinite(x(i)) && !(x(i) > 0.0))
                throw DataError("non-positive value " + std::to_string(x(i)) + " under transform code " +
                                std::to_string(static_cast<int>(code)) + " for " + where(i));
    const Eigen::Index n = x.size();
    switch (code) {
        case TransformCode::Level: return x;
        case TransformCode::Log: return x.array().log().matrix();
        case TransformCode::Diff:
            if (n < 2) return Vector(0);
            return x.tail(n - 1) - x.head(n - 1);
        case TransformCode::DiffLog: {
            if (n < 2) return Vector(0);
            const Vector l = x.array().log().matrix();
            return l.tail(n - 1) - l.head(n - 1);
        }
        case TransformCode::DiffPctChange: {
            // growth rate g_t = x_t / x_{t-1} - 1, then its first difference;
            // the leading element has no lagged growth and is NaN
            if (n < 2) return Vector(0);
            Vector out(n - 1);
            out(0) = std::numeric_limits<double>::quiet_NaN();
            for (Eigen::Index i = 2; i < n; ++i)
                out(i - 1) = (x(i) / x(i - 1) - 1.0) - (x(i - 1) / x(i - 2) - 1.0);
            return out;
        }
    }
    return x;
}

}  // namespace fabart::data
