#pragma once

// Shared small utilities: error types, seed mixing, grids, quantiles,
// deterministic float formatting.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

namespace signdyn {

// Thrown for malformed specs, configs and argument validation failures.
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for filesystem problems (missing inputs, unwritable outputs).
// The CLI maps this to exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Order-sensitive seed derivation. Used to give every (dimension, rate,
// run, purpose) combination its own independent stream so results do not
// depend on thread scheduling.
inline std::uint64_t deriveSeed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = splitmix64(base);
    for (std::uint64_t t : tags) s = splitmix64(s ^ (t + 0x9e3779b97f4a7c15ULL));
    return s;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw ConfigError("linspace: n must be >= 1");
    std::vector<double> v(n);
    if (n == 1) { v[0] = lo; return v; }
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return v;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
    if (lo <= 0 || hi <= 0) throw ConfigError("logspace: endpoints must be positive");
    auto e = linspace(std::log(lo), std::log(hi), n);
    for (double& x : e) x = std::exp(x);
    e.front() = lo;
    if (n > 1) e.back() = hi;
    return e;
}

// Linear-interpolation quantile on a sorted copy (same convention as the
// usual statistical default).
inline double quantileSorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ConfigError("quantile: empty sample");
    if (q <= 0) return sorted.front();
    if (q >= 1) return sorted.back();
    double pos = q * double(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - double(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

inline double quantile(std::vector<double> sample, double q) {
    std::sort(sample.begin(), sample.end());
    return quantileSorted(sample, q);
}

inline std::string sha1Hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha1Hex: digest failure");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

// Hash in the same shape git uses for blobs, so inputs can be checked
// against a repository copy with git hash-object.
inline std::string gitBlobSha1(const std::string& content) {
    std::string framed = "blob " + std::to_string(content.size());
    framed.push_back('\0');
    framed += content;
    return sha1Hex(framed);
}

// Shortest decimal string that round-trips to the same double. Keeps CSV
// output byte-stable across reruns.
inline std::string formatDouble(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    double back = std::strtod(buf, nullptr);
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[40];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
        if (std::strtod(shorter, nullptr) == back) return shorter;
    }
    return buf;
}

}  // namespace signdyn
