// Shared test utilities: scratch directories and curve comparison helpers.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace testutil {

// Fresh per-test scratch directory under the system temp root.
inline std::filesystem::path scratchDir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "signdyn-tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double supAbsGap(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

inline double supAbs(const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s = std::max(s, std::abs(x));
    return s;
}

inline double supRelGap(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double scale = std::max(std::abs(b[i]), 1e-300);
        s = std::max(s, std::abs(a[i] - b[i]) / scale);
    }
    return s;
}

inline double meanOfTail(const std::vector<double>& v, double fraction) {
    const std::size_t n = v.size();
    const std::size_t k0 = n - std::max<std::size_t>(1, std::size_t(double(n) * fraction));
    double mu = 0.0;
    for (std::size_t i = k0; i < n; ++i) mu += v[i];
    return mu / double(n - k0);
}

}  // namespace testutil
