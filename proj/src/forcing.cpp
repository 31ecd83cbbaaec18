#include "coastflow/forcing.hpp"

#include "coastflow/errors.hpp"

#include <algorithm>
#include <cmath>

namespace coastflow {

namespace {

double interp(const Vector& times, const Vector& values, double t) {
    const Index n = times.size();
    if (t <= times(0)) return values(0);
    if (t >= times(n - 1)) return values(n - 1);
    const double* begin = times.data();
    const double* it = std::upper_bound(begin, begin + n, t);
    const Index hi = it - begin;
    const Index lo = hi - 1;
    const double w = (t - times(lo)) / (times(hi) - times(lo));
    return values(lo) + w * (values(hi) - values(lo));
}

} // namespace

double BoundaryForcing::upland_head_at(double t) const { return interp(times, upland_head, t); }
double BoundaryForcing::stream_stage_at(double t) const { return interp(times, stream_stage, t); }
double BoundaryForcing::stream_salinity_at(double t) const { return interp(times, stream_salinity, t); }

void BoundaryForcing::validate() const {
    if (times.size() == 0) throw ConfigError("forcing time axis is empty");
    const Index n = times.size();
    if (upland_head.size() != n || stream_stage.size() != n || stream_salinity.size() != n)
        throw ConfigError("forcing series must share the time axis length");
    for (Index i = 1; i < n; ++i)
        if (!(times(i) > times(i - 1)))
            throw ConfigError("forcing times must be strictly increasing");
    if ((stream_salinity.array() < 0.0).any())
        throw ConfigError("stream_salinity must be >= 0");
}

BoundaryForcing synth_tidal_forcing(double mean_stage, const std::vector<TideComponent>& components,
                                    double salinity_level, double upland_head, const Vector& times) {
    if (times.size() == 0) throw ConfigError("synth_tidal_forcing: times must be non-empty");
    for (const auto& c : components)
        if (!(c.period > 0.0)) throw ConfigError("synth_tidal_forcing: tide period must be > 0");
    if (salinity_level < 0.0) throw ConfigError("synth_tidal_forcing: salinity_level must be >= 0");

    BoundaryForcing f;
    f.times = times;
    f.upland_head = Vector::Constant(times.size(), upland_head);
    f.stream_salinity = Vector::Constant(times.size(), salinity_level);
    f.stream_stage.resize(times.size());
    const double two_pi = 2.0 * M_PI;
    for (Index i = 0; i < times.size(); ++i) {
        double s = mean_stage;
        for (const auto& c : components)
            s += c.amplitude * std::sin(two_pi * times(i) / c.period + c.phase);
        f.stream_stage(i) = s;
    }
    f.validate();
    return f;
}

} // namespace coastflow
