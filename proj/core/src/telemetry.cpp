#include "regenfeel/telemetry.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace regenfeel::telemetry {

namespace {

constexpr std::array<std::string_view, kColumnCount> kColumns{
    "t",
    "lead_position",
    "lead_velocity",
    "lead_acceleration",
    "follower_position",
    "follower_velocity",
    "follower_acceleration",
    "gap",
    "throttle",
    "brake_x",
    "F_reg",
    "F_fric",
    "a_demand",
    "F_sea_ref",
    "F_sea_actual",
    "F_dyno_ref",
    "F_dyno_actual",
    "F_pedal_felt",
    "F_throttle",
    "P_regen",
    "saturated",
    "collision",
};

std::string header_line()
{
    std::string h;
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
        if (i > 0) {
            h += ',';
        }
        h += kColumns[i];
    }
    return h;
}

} // namespace

const std::array<std::string_view, kColumnCount>& column_names()
{
    return kColumns;
}

std::array<double, kColumnCount> row_values(const TraceRow& r)
{
    return {r.t,
            r.lead_position,
            r.lead_velocity,
            r.lead_acceleration,
            r.follower_position,
            r.follower_velocity,
            r.follower_acceleration,
            r.gap,
            r.throttle,
            r.brake_x,
            r.F_reg,
            r.F_fric,
            r.a_demand,
            r.F_sea_ref,
            r.F_sea_actual,
            r.F_dyno_ref,
            r.F_dyno_actual,
            r.F_pedal_felt,
            r.F_throttle,
            r.P_regen,
            r.saturated ? 1.0 : 0.0,
            r.collision ? 1.0 : 0.0};
}

TraceRow row_from_values(const std::array<double, kColumnCount>& v)
{
    TraceRow r;
    r.t = v[0];
    r.lead_position = v[1];
    r.lead_velocity = v[2];
    r.lead_acceleration = v[3];
    r.follower_position = v[4];
    r.follower_velocity = v[5];
    r.follower_acceleration = v[6];
    r.gap = v[7];
    r.throttle = v[8];
    r.brake_x = v[9];
    r.F_reg = v[10];
    r.F_fric = v[11];
    r.a_demand = v[12];
    r.F_sea_ref = v[13];
    r.F_sea_actual = v[14];
    r.F_dyno_ref = v[15];
    r.F_dyno_actual = v[16];
    r.F_pedal_felt = v[17];
    r.F_throttle = v[18];
    r.P_regen = v[19];
    r.saturated = v[20] != 0.0;
    r.collision = v[21] != 0.0;
    return r;
}

std::string format_double(double v)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void write_trace_csv(std::ostream& os, const Trace& trace)
{
    os << header_line() << '\n';
    std::array<char, 32> buf{};
    std::string line;
    for (const auto& row : trace.rows) {
        line.clear();
        const auto values = row_values(row);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i > 0) {
                line += ',';
            }
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), values[i]);
            line.append(buf.data(), res.ptr);
        }
        line += '\n';
        os << line;
    }
}

void write_trace_csv(const std::string& path, const Trace& trace)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    write_trace_csv(os, trace);
}

Trace read_trace_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != header_line()) {
        throw std::runtime_error("trace CSV header does not match the expected columns");
    }
    Trace trace;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::array<double, kColumnCount> values{};
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t i = 0; i < kColumnCount; ++i) {
            const auto res = std::from_chars(p, end, values[i]);
            if (res.ec != std::errc{}) {
                throw std::runtime_error("malformed trace cell on line " + std::to_string(line_no));
            }
            p = res.ptr;
            if (i + 1 < kColumnCount) {
                if (p == end || *p != ',') {
                    throw std::runtime_error("too few columns on line " + std::to_string(line_no));
                }
                ++p;
            }
        }
        if (p != end) {
            throw std::runtime_error("too many columns on line " + std::to_string(line_no));
        }
        trace.rows.push_back(row_from_values(values));
    }
    if (trace.rows.size() >= 2) {
        trace.dt = trace.rows[1].t - trace.rows[0].t;
    }
    return trace;
}

Trace read_trace_csv(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path);
    }
    return read_trace_csv(is);
}

std::vector<std::string> validate_trace(const Trace& trace)
{
    std::vector<std::string> problems;
    if (!(trace.dt > 0.0)) {
        problems.emplace_back("non-positive timestep");
        return problems;
    }
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        const auto values = row_values(trace.rows[i]);
        for (std::size_t c = 0; c < values.size(); ++c) {
            if (!std::isfinite(values[c])) {
                problems.push_back("row " + std::to_string(i) + ": non-finite " +
                                   std::string(kColumns[c]));
            }
        }
        const double expected = trace.rows.front().t + static_cast<double>(i) * trace.dt;
        if (std::abs(trace.rows[i].t - expected) > 1e-6) {
            problems.push_back("row " + std::to_string(i) + ": non-uniform time step");
        }
        const auto& r = trace.rows[i];
        if (r.throttle < 0.0 || r.throttle > 1.0 || r.brake_x < 0.0 || r.brake_x > 80.0) {
            problems.push_back("row " + std::to_string(i) + ": pedal value out of range");
        }
        if (r.F_reg < 0.0 || r.F_fric < 0.0 || r.follower_velocity < 0.0) {
            problems.push_back("row " + std::to_string(i) + ": negative force or speed");
        }
        if (problems.size() > 20) {
            problems.emplace_back("further problems suppressed");
            break;
        }
    }
    return problems;
}

int count_hard_brakings(const Trace& trace, const HardBrakingParams& p)
{
    int events = 0;
    bool inside = false;
    bool have_previous = false;
    std::size_t last_hard = 0;
    const auto merge_ticks = p.min_gap / trace.dt;
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        const bool hard = -trace.rows[i].follower_acceleration > p.threshold;
        if (hard && !inside) {
            const bool merges =
                have_previous && static_cast<double>(i - last_hard) < merge_ticks;
            if (!merges) {
                ++events;
            }
        }
        if (hard) {
            last_hard = i;
            have_previous = true;
        }
        inside = hard;
    }
    return events;
}

double pct_rmse_gap(const Trace& trace, double reference_gap)
{
    if (trace.empty()) {
        throw std::invalid_argument("pct_rmse_gap needs a non-empty trace");
    }
    double sum = 0.0;
    for (const auto& r : trace.rows) {
        const double e = r.gap - reference_gap;
        sum += e * e;
    }
    return 100.0 * std::sqrt(sum / static_cast<double>(trace.size())) / reference_gap;
}

double regen_energy(const Trace& trace)
{
    double energy = 0.0;
    for (const auto& r : trace.rows) {
        energy += r.F_reg * r.follower_velocity * trace.dt;
    }
    return energy;
}

double pct_throttle_use(const Trace& trace, double eps)
{
    if (trace.empty()) {
        return 0.0;
    }
    const auto active = std::count_if(trace.rows.begin(), trace.rows.end(),
                                      [eps](const TraceRow& r) { return r.throttle > eps; });
    return 100.0 * static_cast<double>(active) / static_cast<double>(trace.size());
}

int count_collisions(const Trace& trace)
{
    int count = 0;
    bool prev = false;
    for (const auto& r : trace.rows) {
        if (r.collision && !prev) {
            ++count;
        }
        prev = r.collision;
    }
    return count;
}

TrialMetrics compute_metrics(const Trace& trace, const MetricParams& p)
{
    TrialMetrics m;
    m.hard_braking_count = count_hard_brakings(trace, p.hard_braking);
    m.pct_rmse_gap = pct_rmse_gap(trace, p.reference_gap);
    m.regen_energy = regen_energy(trace);
    m.pct_throttle_use = pct_throttle_use(trace, p.throttle_eps);
    m.collision_count = count_collisions(trace);
    for (std::size_t i = 0; i < kThrottleEpsSweep.size(); ++i) {
        m.throttle_use_sensitivity[i] = pct_throttle_use(trace, kThrottleEpsSweep[i]);
    }
    return m;
}

std::string metrics_to_json(const TrialMetrics& m)
{
    nlohmann::ordered_json j;
    j["hard_braking_count"] = m.hard_braking_count;
    j["pct_rmse_gap"] = m.pct_rmse_gap;
    j["regen_energy"] = m.regen_energy;
    j["pct_throttle_use"] = m.pct_throttle_use;
    j["collision_count"] = m.collision_count;
    auto& sens = j["throttle_use_by_eps"];
    for (std::size_t i = 0; i < kThrottleEpsSweep.size(); ++i) {
        sens[format_double(kThrottleEpsSweep[i])] = m.throttle_use_sensitivity[i];
    }
    return j.dump(2);
}

} // namespace regenfeel::telemetry
