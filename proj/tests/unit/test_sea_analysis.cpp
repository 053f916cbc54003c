#include "regenfeel/sea_analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace regenfeel::sea;

namespace {

const SeaPlantParams kPlant{};
const CascadedGains kGains{};

} // namespace

TEST(LogGrid, EndpointsAndSpacing)
{
    const auto g = log_grid(1.0, 100.0, 3);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_DOUBLE_EQ(g[0], 1.0);
    EXPECT_NEAR(g[1], 10.0, 1e-12);
    EXPECT_DOUBLE_EQ(g[2], 100.0);
    EXPECT_THROW((void)log_grid(0.0, 10.0, 5), std::invalid_argument);
}

TEST(MeasureFrf, LowFrequencyGainIsUnity)
{
    const auto frf = measure_frf({0.1}, 75.0, kGains, kPlant);
    ASSERT_EQ(frf.points.size(), 1u);
    EXPECT_NEAR(frf.points[0].gain_db, 0.0, 0.1);
    EXPECT_NEAR(frf.points[0].phase_deg, 0.0, 2.0);
}

TEST(MeasureFrf, CrossoverAtLeastTenHertz)
{
    const auto frf = measure_frf(log_grid(0.5, 60.0, 30), 75.0, kGains, kPlant);
    ASSERT_TRUE(frf.crossover_hz.has_value());
    EXPECT_GE(*frf.crossover_hz, 10.0);
}

TEST(MeasureFrf, GainNonIncreasingPastCrossover)
{
    const auto frf = measure_frf(log_grid(0.5, 60.0, 30), 75.0, kGains, kPlant);
    ASSERT_TRUE(frf.crossover_hz);
    double prev = 1e9;
    for (const auto& p : frf.points) {
        if (p.freq_hz < *frf.crossover_hz) {
            continue;
        }
        EXPECT_LE(p.gain_db, prev + 1e-9) << p.freq_hz;
        prev = p.gain_db;
    }
}

TEST(MeasureFrf, RejectsBadArguments)
{
    EXPECT_THROW((void)measure_frf({1.0}, 0.0, kGains, kPlant), std::invalid_argument);
    EXPECT_THROW((void)measure_frf({1.0}, 500.0, kGains, kPlant), std::invalid_argument);
    EXPECT_THROW((void)measure_frf({-1.0}, 75.0, kGains, kPlant), std::invalid_argument);
}

TEST(MeasureFrf, CsvHeader)
{
    const auto frf = measure_frf({1.0, 2.0}, 75.0, kGains, kPlant);
    std::ostringstream os;
    write_frf_csv(os, frf);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "freq,gain_db,phase_deg");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 2);
}

TEST(SineTracking, OneHertzSeventyFiveNewtons)
{
    EXPECT_LT(sine_tracking_error_pct(1.0, 75.0, kGains, kPlant), 5.0);
}

TEST(SineTracking, ErrorGrowsWithFrequency)
{
    EXPECT_LT(sine_tracking_error_pct(1.0, 75.0, kGains, kPlant),
              sine_tracking_error_pct(20.0, 75.0, kGains, kPlant));
}

TEST(CoupledStability, FreePedalZeroReferenceIsStable)
{
    HumanFootModel foot;
    const auto r = simulate_contact(foot, [](double) { return 0.0; }, 10.0, kGains, kPlant);
    EXPECT_TRUE(r.stable);
    EXPECT_EQ(r.final_peak, 0.0);
}

TEST(CoupledStability, StiffFootAgainstConventionalCurve)
{
    HumanFootModel foot;
    foot.stiffness = 5e4;
    foot.damping = 50.0;
    foot.intent = [](double t) { return t < 2.0 ? 60.0 * t / 2.0 : 60.0; };
    const auto render = [](double x_mm) {
        return x_mm <= 20.0 ? 0.80 * x_mm + 18.17 : 3.92 * x_mm - 44.23;
    };
    const auto r = simulate_contact(foot, render, 10.0, kGains, kPlant);
    EXPECT_TRUE(r.stable);
    EXPECT_LT(r.max_abs_velocity, 100.0);
}

TEST(CoupledStability, DefaultGridFullyStableWithMatchingShape)
{
    const SweepGrid grid;
    const auto report = coupled_stability_sweep(grid, kGains, kPlant);
    EXPECT_EQ(report.n_stiffness, grid.foot_stiffness.size());
    EXPECT_EQ(report.n_damping, grid.foot_damping.size());
    EXPECT_EQ(report.n_rendered, grid.rendered_stiffness.size());
    EXPECT_EQ(report.cells.size(), grid.foot_stiffness.size() * grid.foot_damping.size() *
                                       grid.rendered_stiffness.size());
    EXPECT_DOUBLE_EQ(report.stable_fraction(), 1.0);
    std::ostringstream os;
    write_sweep_csv(os, report);
    EXPECT_EQ(os.str().rfind("foot_stiffness,foot_damping,rendered_stiffness,stable", 0), 0u);
}

TEST(CoupledStability, PassiveFootEnergyNonIncreasingAtCrossings)
{
    // Released from a pressed, preloaded state with zero reference.
    SeaState start;
    start.output_angle = -0.1;
    start.motor_angle = (start.output_angle + 0.05) * kPlant.reduction();
    start.spring_deflection = start.motor_angle / kPlant.reduction() - start.output_angle;
    start.estimated_torque = kPlant.spring_stiffness * start.spring_deflection;

    const SweepGrid grid;
    for (double kh : grid.foot_stiffness) {
        for (double bh : grid.foot_damping) {
            HumanFootModel foot;
            foot.stiffness = kh;
            foot.damping = bh;
            const auto r =
                simulate_contact(foot, [](double) { return 0.0; }, 5.0, kGains, kPlant, start);
            ASSERT_TRUE(r.stable);
            const double x0 = pedal_displacement_mm(start, kPlant) / 1000.0;
            const double e0 = stored_energy(start, kPlant) + 0.5 * kh * x0 * x0;
            const double tol = 1e-4 * e0;
            const auto& e = r.energy_at_foot_zero_crossings;
            for (std::size_t i = 1; i < e.size(); ++i) {
                EXPECT_LE(e[i], e[i - 1] + tol)
                    << "kh=" << kh << " bh=" << bh << " crossing " << i;
            }
        }
    }
}
