#pragma once

// Learning-rate schedules on macroscopic time t = step/d. The discrete
// simulators apply eta'(k) = eta(k/d)/d.

#include <utility>
#include <vector>

#include "signdyn/common.hpp"

namespace signdyn {

struct Schedule {
    enum class Kind { Constant, PiecewiseLinear, GreedyIsotropic };

    Kind kind = Kind::Constant;
    double eta = 0.0;
    std::vector<std::pair<double, double>> points;  // (t, eta), strictly increasing t

    // eta = 0 is allowed: a frozen iterate is a useful degenerate case (the
    // dynamics must keep the risk exactly constant there).
    static Schedule constant(double eta) {
        if (!(eta >= 0)) throw ConfigError("schedule: constant eta must be nonnegative");
        Schedule s; s.kind = Kind::Constant; s.eta = eta; return s;
    }
    static Schedule piecewiseLinear(std::vector<std::pair<double, double>> pts) {
        if (pts.empty()) throw ConfigError("schedule: piecewiseLinear needs points");
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].second < 0) throw ConfigError("schedule: eta must be nonnegative");
            if (i > 0 && pts[i].first <= pts[i - 1].first)
                throw ConfigError("schedule: times must be strictly increasing");
        }
        Schedule s; s.kind = Kind::PiecewiseLinear; s.points = std::move(pts); return s;
    }
    // Placeholder resolved only by the greedy integrators; eval() rejects it.
    static Schedule greedyIsotropic() {
        Schedule s; s.kind = Kind::GreedyIsotropic; return s;
    }

    double eval(double t) const {
        switch (kind) {
            case Kind::Constant: return eta;
            case Kind::PiecewiseLinear: {
                if (t <= points.front().first) return points.front().second;
                if (t >= points.back().first) return points.back().second;
                for (std::size_t i = 1; i < points.size(); ++i) {
                    if (t <= points[i].first) {
                        const auto& [t0, e0] = points[i - 1];
                        const auto& [t1, e1] = points[i];
                        return e0 + (e1 - e0) * (t - t0) / (t1 - t0);
                    }
                }
                return points.back().second;
            }
            case Kind::GreedyIsotropic:
                throw ConfigError(
                    "schedule: greedyIsotropic is only valid for the isotropic greedy "
                    "integrators");
        }
        return eta;
    }

    double maxEta() const {
        if (kind == Kind::Constant) return eta;
        if (kind == Kind::PiecewiseLinear) {
            double m = 0.0;
            for (const auto& [t, e] : points) m = std::max(m, e);
            return m;
        }
        throw ConfigError("schedule: greedyIsotropic has no fixed eta bound");
    }
};

}  // namespace signdyn
