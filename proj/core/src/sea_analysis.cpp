#include "regenfeel/sea_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace regenfeel::sea {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kVelocityBound = 1e3; // rad/s; anything above is a blow-up

} // namespace

std::vector<double> track_locked(const std::function<double(double)>& ref_of_time,
                                 double duration_s,
                                 const CascadedGains& gains,
                                 const SeaPlantParams& plant)
{
    CascadedForceController ctrl(gains, plant);
    SeaState s;
    const auto n = static_cast<std::size_t>(std::llround(duration_s / kBaseDt));
    std::vector<double> force;
    force.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * kBaseDt;
        const double cmd = ctrl.step(ref_of_time(t), s, k);
        s = step_plant_driven(s, cmd, 0.0, 0.0, kBaseDt, plant);
        force.push_back(pedal_force(s, plant));
    }
    return force;
}

double sine_tracking_error_pct(double freq_hz,
                               double amplitude,
                               const CascadedGains& gains,
                               const SeaPlantParams& plant,
                               double settle_s,
                               double measure_s)
{
    if (!(freq_hz > 0.0) || !(amplitude > 0.0) || settle_s < 0.0 || !(measure_s > 0.0)) {
        throw std::invalid_argument("sine tracking needs positive frequency, amplitude and window");
    }
    const auto ref = [&](double t) { return amplitude * std::sin(kTwoPi * freq_hz * t); };
    const auto force = track_locked(ref, settle_s + measure_s, gains, plant);
    const auto first = static_cast<std::size_t>(std::llround(settle_s / kBaseDt));
    double err = 0.0;
    double norm = 0.0;
    for (std::size_t k = first; k < force.size(); ++k) {
        // force[k] is the state after tick k, i.e. at time (k + 1) dt.
        const double r = ref(static_cast<double>(k + 1) * kBaseDt);
        err += (force[k] - r) * (force[k] - r);
        norm += r * r;
    }
    return 100.0 * std::sqrt(err / norm);
}

FrfResult measure_frf(const std::vector<double>& freqs_hz,
                      double amplitude,
                      const CascadedGains& gains,
                      const SeaPlantParams& plant,
                      const FrfOptions& opts)
{
    if (!(amplitude > 0.0) || amplitude > plant.pedal_force_max) {
        throw std::invalid_argument("frf amplitude must be in (0, pedal_force_max]");
    }
    FrfResult out;
    for (double f : freqs_hz) {
        if (!(f > 0.0) || !std::isfinite(f)) {
            throw std::invalid_argument("frf frequencies must be positive");
        }
        const double period = 1.0 / f;
        const int settle = std::max(opts.settle_cycles,
                                    static_cast<int>(std::ceil(opts.min_settle_s / period)));
        const double t_start = settle * period;
        const double t_end = t_start + opts.measure_cycles * period;

        const auto ref = [&](double t) { return amplitude * std::sin(kTwoPi * f * t); };
        const auto force = track_locked(ref, t_end, gains, plant);

        // Projection over whole cycles of the sampled signal.
        double in_phase = 0.0;
        double quadrature = 0.0;
        std::size_t count = 0;
        const auto first = static_cast<std::size_t>(std::llround(t_start / kBaseDt));
        for (std::size_t k = first; k < force.size(); ++k) {
            const double arg = kTwoPi * f * static_cast<double>(k + 1) * kBaseDt;
            in_phase += force[k] * std::sin(arg);
            quadrature += force[k] * std::cos(arg);
            ++count;
        }
        in_phase *= 2.0 / static_cast<double>(count);
        quadrature *= 2.0 / static_cast<double>(count);

        const double gain = std::hypot(in_phase, quadrature) / amplitude;
        out.points.push_back(FrfPoint{f, 20.0 * std::log10(gain),
                                      std::atan2(quadrature, in_phase) * 180.0 / std::numbers::pi});
    }

    for (std::size_t i = 0; i < out.points.size(); ++i) {
        if (out.points[i].gain_db < -3.0) {
            if (i == 0) {
                out.crossover_hz = out.points[0].freq_hz;
            } else {
                const auto& a = out.points[i - 1];
                const auto& b = out.points[i];
                const double w = (-3.0 - a.gain_db) / (b.gain_db - a.gain_db);
                out.crossover_hz = std::exp(std::log(a.freq_hz) +
                                            w * (std::log(b.freq_hz) - std::log(a.freq_hz)));
            }
            break;
        }
    }
    return out;
}

std::vector<double> log_grid(double lo_hz, double hi_hz, int points)
{
    if (!(lo_hz > 0.0 && hi_hz > lo_hz) || points < 2) {
        throw std::invalid_argument("log_grid needs 0 < lo < hi and at least two points");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(points));
    const double step = std::log(hi_hz / lo_hz) / (points - 1);
    for (int i = 0; i < points; ++i) {
        out.push_back(lo_hz * std::exp(step * i));
    }
    return out;
}

void write_frf_csv(std::ostream& os, const FrfResult& frf)
{
    os << "freq,gain_db,phase_deg\n";
    for (const auto& p : frf.points) {
        os << p.freq_hz << ',' << p.gain_db << ',' << p.phase_deg << '\n';
    }
}

ContactResult simulate_contact(const HumanFootModel& foot,
                               const std::function<double(double)>& render,
                               double duration_s,
                               const CascadedGains& gains,
                               const SeaPlantParams& plant,
                               const SeaState& initial)
{
    CascadedForceController ctrl(gains, plant);
    SeaState s = initial;
    const double stroke_angle = 0.080 / plant.lever_arm;

    ContactResult out;
    const auto n = static_cast<std::size_t>(std::llround(duration_s / kBaseDt));
    const auto first_window = static_cast<std::size_t>(std::llround(1.0 / kBaseDt));
    const std::size_t last_window_start = n > first_window ? n - first_window : 0;

    double prev_foot = 0.0;
    bool finite = true;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * kBaseDt;
        const double x = pedal_displacement_mm(s, plant) / 1000.0;
        const double xdot = -s.output_velocity * plant.lever_arm;
        // Foot spring is anchored at the rest position of the pedal.
        const double foot_force = foot.intent(t) - foot.stiffness * x - foot.damping * xdot;

        const double x_mm = std::clamp(x * 1000.0, 0.0, 80.0);
        const double cmd = ctrl.step(render(x_mm), s, k);
        s = step_plant(s, cmd, foot_force, kBaseDt, plant);

        // Stroke end-stops: position clamp, inelastic.
        if (s.output_angle > 0.0 || s.output_angle < -stroke_angle) {
            s.output_angle = std::clamp(s.output_angle, -stroke_angle, 0.0);
            s.output_velocity = 0.0;
            s.spring_deflection = s.motor_angle / plant.reduction() - s.output_angle;
            s.estimated_torque = plant.spring_stiffness * s.spring_deflection;
        }

        if (!std::isfinite(s.estimated_torque) || !std::isfinite(s.motor_velocity)) {
            finite = false;
            break;
        }
        const double f = std::abs(pedal_force(s, plant));
        if (k < first_window) {
            out.initial_peak = std::max(out.initial_peak, f);
        }
        if (k >= last_window_start) {
            out.final_peak = std::max(out.final_peak, f);
        }
        out.max_abs_velocity = std::max({out.max_abs_velocity, std::abs(s.output_velocity),
                                         std::abs(s.motor_velocity / plant.reduction())});

        if (k > 0 && ((prev_foot > 0.0) != (foot_force > 0.0))) {
            const double x_now = pedal_displacement_mm(s, plant) / 1000.0;
            out.energy_at_foot_zero_crossings.push_back(stored_energy(s, plant) +
                                                        0.5 * foot.stiffness * x_now * x_now);
        }
        prev_foot = foot_force;
    }

    out.stable = finite && out.max_abs_velocity < kVelocityBound &&
                 out.final_peak <= 2.0 * out.initial_peak + 1e-9;
    return out;
}

double StabilityReport::stable_fraction() const
{
    if (cells.empty()) {
        return 0.0;
    }
    const auto stable = std::count_if(cells.begin(), cells.end(),
                                      [](const StabilityCell& c) { return c.result.stable; });
    return static_cast<double>(stable) / static_cast<double>(cells.size());
}

StabilityReport coupled_stability_sweep(const SweepGrid& grid,
                                        const CascadedGains& gains,
                                        const SeaPlantParams& plant,
                                        double duration_s)
{
    StabilityReport report;
    report.n_stiffness = grid.foot_stiffness.size();
    report.n_damping = grid.foot_damping.size();
    report.n_rendered = grid.rendered_stiffness.size();
    report.cells.reserve(report.n_stiffness * report.n_damping * report.n_rendered);

    for (double kh : grid.foot_stiffness) {
        for (double bh : grid.foot_damping) {
            for (double kr : grid.rendered_stiffness) {
                HumanFootModel foot;
                foot.stiffness = kh;
                foot.damping = bh;
                // A 50 ms, 40 N press disturbs the coupled system; then hands-off.
                foot.intent = [](double t) { return t < 0.05 ? 40.0 : 0.0; };
                const auto render = [kr](double x_mm) { return kr * x_mm / 1000.0; };
                report.cells.push_back(StabilityCell{
                    kh, bh, kr, simulate_contact(foot, render, duration_s, gains, plant)});
            }
        }
    }
    return report;
}

void write_sweep_csv(std::ostream& os, const StabilityReport& report)
{
    os << "foot_stiffness,foot_damping,rendered_stiffness,stable,initial_peak,final_peak\n";
    for (const auto& c : report.cells) {
        os << c.foot_stiffness << ',' << c.foot_damping << ',' << c.rendered_stiffness << ','
           << (c.result.stable ? 1 : 0) << ',' << c.result.initial_peak << ','
           << c.result.final_peak << '\n';
    }
}

} // namespace regenfeel::sea
