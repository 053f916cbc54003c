#pragma once

#include "regenfeel/sea.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace regenfeel::sea {

struct FrfPoint {
    double freq_hz = 0.0;
    double gain_db = 0.0;
    double phase_deg = 0.0;
};

struct FrfResult {
    std::vector<FrfPoint> points;
    std::optional<double> crossover_hz; // first -3 dB crossing, log-interpolated
};

struct FrfOptions {
    int settle_cycles = 3;
    int measure_cycles = 5;
    double min_settle_s = 1.0;
};

/// Closed-loop force response against a locked pedal, by steady-state sine
/// sweep. Gain and phase come from projecting the measured pedal force onto
/// the reference sine over whole cycles.
[[nodiscard]] FrfResult measure_frf(const std::vector<double>& freqs_hz,
                                    double amplitude,
                                    const CascadedGains& gains,
                                    const SeaPlantParams& plant,
                                    const FrfOptions& opts = {});

/// Simulated force trace against a locked pedal for an arbitrary reference.
[[nodiscard]] std::vector<double> track_locked(const std::function<double(double)>& ref_of_time,
                                               double duration_s,
                                               const CascadedGains& gains,
                                               const SeaPlantParams& plant);

/// RMS tracking error of a locked-pedal sine, in percent of the reference
/// RMS, measured after `settle_s`.
[[nodiscard]] double sine_tracking_error_pct(double freq_hz,
                                             double amplitude,
                                             const CascadedGains& gains,
                                             const SeaPlantParams& plant,
                                             double settle_s = 1.0,
                                             double measure_s = 2.0);

/// Log-spaced frequency grid, inclusive of both ends.
[[nodiscard]] std::vector<double> log_grid(double lo_hz, double hi_hz, int points);

void write_frf_csv(std::ostream& os, const FrfResult& frf);

struct HumanFootModel {
    double stiffness = 0.0; // N/m, k_h
    double damping = 0.0;   // N s/m, b_h
    // Active force the driver intends (N, pressing positive), as a function of time.
    std::function<double(double)> intent = [](double) { return 0.0; };
};

struct ContactResult {
    bool stable = false;
    double initial_peak = 0.0; // N, |pedal force| peak over the first second
    double final_peak = 0.0;   // N, |pedal force| peak over the last second
    double max_abs_velocity = 0.0; // rad/s, pedal
    std::vector<double> energy_at_foot_zero_crossings; // J, device + foot spring
};

/// Foot in contact with a freely moving pedal that renders `render(x_mm)` N.
/// Pedal travel is clamped at the stroke ends.
[[nodiscard]] ContactResult simulate_contact(const HumanFootModel& foot,
                                             const std::function<double(double)>& render,
                                             double duration_s,
                                             const CascadedGains& gains,
                                             const SeaPlantParams& plant,
                                             const SeaState& initial = {});

struct StabilityCell {
    double foot_stiffness = 0.0;
    double foot_damping = 0.0;
    double rendered_stiffness = 0.0; // N/m
    ContactResult result;
};

struct StabilityReport {
    std::size_t n_stiffness = 0;
    std::size_t n_damping = 0;
    std::size_t n_rendered = 0;
    std::vector<StabilityCell> cells; // stiffness-major, then damping, then rendered

    [[nodiscard]] double stable_fraction() const;
};

struct SweepGrid {
    std::vector<double> foot_stiffness{0.0, 5e3, 2e4, 5e4};
    std::vector<double> foot_damping{0.0, 50.0, 150.0};
    std::vector<double> rendered_stiffness{0.0, 800.0, 3920.0, 1e4};
};

/// Each cell: 10 s of contact with a brief pressing pulse. Stable when every
/// state stays finite and bounded and the late pedal-force envelope is below
/// twice the initial peak.
[[nodiscard]] StabilityReport coupled_stability_sweep(const SweepGrid& grid,
                                                      const CascadedGains& gains,
                                                      const SeaPlantParams& plant,
                                                      double duration_s = 10.0);

void write_sweep_csv(std::ostream& os, const StabilityReport& report);

} // namespace regenfeel::sea
