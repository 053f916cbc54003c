#include "regenfeel/sea.hpp"

#include "gen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace regenfeel;
using namespace regenfeel::sea;

namespace {

const SeaPlantParams kPlant{};
const CascadedGains kGains{};

} // namespace

TEST(SeaPlantParams, DefaultReductionIsForty)
{
    EXPECT_DOUBLE_EQ(kPlant.reduction(), 40.0);
    // Motor limit reflected to the pedal equals the device force limit.
    EXPECT_DOUBLE_EQ(kPlant.motor_torque_max * kPlant.reduction() / kPlant.lever_arm,
                     kPlant.pedal_force_max);
}

TEST(SeaPlantParams, ValidateRejectsNonPositive)
{
    SeaPlantParams p;
    p.spring_stiffness = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = {};
    p.lever_arm = std::nan("");
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(StepPlant, EquilibriumStaysAtRest)
{
    SeaState s;
    for (int i = 0; i < 10000; ++i) {
        s = step_plant(s, 0.0, 0.0, kBaseDt, kPlant);
    }
    EXPECT_EQ(s.motor_angle, 0.0);
    EXPECT_EQ(s.output_angle, 0.0);
    EXPECT_EQ(s.estimated_torque, 0.0);
}

TEST(StepPlant, LockedOutputSettlesToStaticDeflection)
{
    SeaState s;
    // Reflected damping is light; give the ring-down 30 s.
    for (int i = 0; i < 30 * 5000; ++i) {
        s = step_plant_driven(s, 0.5, 0.0, 0.0, kBaseDt, kPlant);
    }
    EXPECT_NEAR(s.spring_deflection, 0.5 * 40.0 / 150.0, 1e-6);
    EXPECT_NEAR(pedal_force(s, kPlant), 100.0, 1e-4);
}

TEST(StepPlant, TorqueEstimateIsSpringTimesDeflection)
{
    proptest::Gen gen(2);
    SeaState s;
    for (int i = 0; i < 20000; ++i) {
        s = step_plant(s, gen.uniform(-1.0, 1.0), gen.uniform(-50.0, 50.0), kBaseDt, kPlant);
        ASSERT_DOUBLE_EQ(s.spring_deflection, s.motor_angle / kPlant.reduction() - s.output_angle);
        ASSERT_DOUBLE_EQ(s.estimated_torque, kPlant.spring_stiffness * s.spring_deflection);
    }
}

TEST(StepPlant, MotorTorqueIsClamped)
{
    SeaState a = step_plant_driven({}, 5.0, 0.0, 0.0, kBaseDt, kPlant);
    SeaState b = step_plant_driven({}, 1.0, 0.0, 0.0, kBaseDt, kPlant);
    EXPECT_DOUBLE_EQ(a.motor_velocity, b.motor_velocity);
}

TEST(StepPlant, NonFiniteInputsFault)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW((void)step_plant({}, nan, 0.0, kBaseDt, kPlant), NumericalFault);
    EXPECT_THROW((void)step_plant({}, 0.0, nan, kBaseDt, kPlant), NumericalFault);
    EXPECT_THROW((void)step_plant_driven({}, 0.0, nan, 0.0, kBaseDt, kPlant), NumericalFault);
}

TEST(StepPlant, ImpulseEnergyNeverExceedsInjectedWork)
{
    SeaState s;
    double work = 0.0;
    double peak_ratio = 0.0;
    for (int k = 0; k < 5 * 5000; ++k) {
        const double force = k < 50 ? 100.0 : 0.0; // 10 ms, 100 N press
        const SeaState next = step_plant(s, 0.0, force, kBaseDt, kPlant);
        // Pressing drives the output angle negative.
        work += force * kPlant.lever_arm * -(next.output_angle - s.output_angle);
        s = next;
        const double e = stored_energy(s, kPlant);
        ASSERT_LE(e, work * 1.01 + 1e-12) << "tick " << k;
        if (k >= 50) {
            peak_ratio = std::max(peak_ratio, e / work);
        }
    }
    EXPECT_GT(work, 0.0);
    EXPECT_LE(peak_ratio, 1.01);
    // Motor damping bleeds energy once the press ends.
    EXPECT_LT(stored_energy(s, kPlant), 0.5 * work);
}

TEST(CascadedForceController, ZeroReferenceAtRestCommandsZero)
{
    CascadedForceController ctrl(kGains, kPlant);
    SeaState s;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        EXPECT_EQ(ctrl.step(0.0, s, k), 0.0);
        s = step_plant_driven(s, ctrl.command(), 0.0, 0.0, kBaseDt, kPlant);
    }
}

TEST(CascadedForceController, StepResponseSettlesWithinTwoPercent)
{
    CascadedForceController ctrl(kGains, kPlant);
    SeaState s;
    double worst_after = 0.0;
    for (std::uint64_t k = 0; k < 5000; ++k) {
        const double cmd = ctrl.step(75.0, s, k);
        s = step_plant_driven(s, cmd, 0.0, 0.0, kBaseDt, kPlant);
        if (k >= 2500) {
            worst_after = std::max(worst_after, std::abs(pedal_force(s, kPlant) - 75.0));
        }
    }
    EXPECT_LT(worst_after, 0.02 * 75.0);
}

TEST(CascadedForceController, MultiRateSchedule)
{
    CascadedForceController ctrl(kGains, kPlant);
    proptest::Gen gen(9);
    SeaState s;
    double vref = ctrl.velocity_reference();
    double cmd = ctrl.command();
    for (std::uint64_t k = 0; k < 20000; ++k) {
        const double ref = gen.uniform(-150.0, 150.0);
        ctrl.step(ref, s, k);
        if (k % kOuterDivider != 0) {
            ASSERT_EQ(ctrl.velocity_reference(), vref) << "outer changed on tick " << k;
        }
        if (k % kInnerDivider != 0) {
            ASSERT_EQ(ctrl.command(), cmd) << "inner changed on tick " << k;
        }
        vref = ctrl.velocity_reference();
        cmd = ctrl.command();
        s = step_plant_driven(s, cmd, gen.uniform(-0.4, 0.0), gen.uniform(-1.0, 1.0), kBaseDt,
                              kPlant);
    }
}

TEST(CascadedForceController, CommandSaturatesAndFlags)
{
    // Square wave far past the rendering limit: the command saturates and the
    // ringing settles to a fixed envelope instead of growing.
    CascadedForceController ctrl(kGains, kPlant);
    SeaState s;
    bool flagged = false;
    std::vector<double> peaks;
    for (std::uint64_t k = 0; k < 12 * 2500; ++k) {
        if (k % 2500 == 0) {
            peaks.push_back(0.0);
        }
        const double cmd = ctrl.step((k / 2500) % 2 == 0 ? 500.0 : -500.0, s, k);
        ASSERT_LE(std::abs(cmd), kPlant.motor_torque_max);
        flagged = flagged || ctrl.saturated();
        s = step_plant_driven(s, cmd, 0.0, 0.0, kBaseDt, kPlant);
        peaks.back() = std::max(peaks.back(), std::abs(pedal_force(s, kPlant)));
    }
    EXPECT_TRUE(flagged);
    for (std::size_t i = 3; i < peaks.size(); ++i) {
        EXPECT_LE(peaks[i], peaks[i - 2] * 1.01) << "half period " << i;
        EXPECT_LT(peaks[i], 2.0 * kPlant.pedal_force_max);
    }
}

TEST(CascadedForceController, AntiWindupRecoversQuickly)
{
    // Hold an unreachable reference, then drop to a reachable one.
    CascadedForceController ctrl(kGains, kPlant);
    SeaState s;
    std::uint64_t k = 0;
    for (; k < 10000; ++k) {
        s = step_plant_driven(s, ctrl.step(1000.0, s, k), 0.0, 0.0, kBaseDt, kPlant);
    }
    for (; k < 12500; ++k) {
        s = step_plant_driven(s, ctrl.step(50.0, s, k), 0.0, 0.0, kBaseDt, kPlant);
    }
    EXPECT_NEAR(pedal_force(s, kPlant), 50.0, 1.0);
}

TEST(CascadedGains, Validate)
{
    CascadedGains g;
    g.torque_ki = -1.0;
    EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(PedalRig, TracksReferencesWithStationaryPedal)
{
    PedalRig rig(kPlant, kGains);
    RigSample out;
    for (int i = 0; i < 1000; ++i) {
        out = rig.advance(20.0, 30.0, 5.0, 0.001);
    }
    EXPECT_NEAR(out.sea_force, 30.0, 0.1);
    EXPECT_NEAR(out.dyno_force, 5.0, 0.1);
    EXPECT_NEAR(out.felt(), 35.0, 0.2);
    EXPECT_EQ(rig.base_tick(), 5000u);
}

TEST(PedalRig, TracksWhilePedalMoves)
{
    PedalRig rig(kPlant, kGains);
    double worst = 0.0;
    for (int i = 0; i < 4000; ++i) {
        const double t = i * 0.001;
        const double x = 20.0 + 10.0 * std::sin(t); // slow press-release
        const auto out = rig.advance(x, 40.0, 0.0, 0.001);
        if (t > 0.5) {
            worst = std::max(worst, std::abs(out.sea_force - 40.0));
        }
    }
    EXPECT_LT(worst, 0.5);
}

TEST(PedalRig, PhaseOffsetShiftsDynoSchedule)
{
    PedalRig a(kPlant, kGains, 0);
    PedalRig b(kPlant, kGains, 3);
    RigSample ra;
    RigSample rb;
    for (int i = 0; i < 5; ++i) {
        ra = a.advance(0.0, 0.0, 20.0, 0.001);
        rb = b.advance(0.0, 0.0, 20.0, 0.001);
    }
    EXPECT_NE(ra.dyno_force, rb.dyno_force);
    EXPECT_EQ(ra.sea_force, rb.sea_force);
    for (int i = 0; i < 1000; ++i) {
        ra = a.advance(0.0, 0.0, 20.0, 0.001);
        rb = b.advance(0.0, 0.0, 20.0, 0.001);
    }
    EXPECT_NEAR(ra.dyno_force, rb.dyno_force, 0.05);
}

TEST(PedalRig, RejectsFractionalWorldStep)
{
    PedalRig rig(kPlant, kGains);
    EXPECT_THROW(rig.advance(0.0, 0.0, 0.0, 0.00033), std::invalid_argument);
    EXPECT_NO_THROW(rig.advance(0.0, 0.0, 0.0, 0.0002));
}

TEST(PedalRig, ResetRestoresInitialState)
{
    PedalRig rig(kPlant, kGains);
    const auto first = rig.advance(10.0, 20.0, 3.0, 0.001);
    for (int i = 0; i < 100; ++i) {
        rig.advance(15.0, 25.0, 4.0, 0.001);
    }
    rig.reset();
    const auto again = rig.advance(10.0, 20.0, 3.0, 0.001);
    EXPECT_EQ(first.sea_force, again.sea_force);
    EXPECT_EQ(first.dyno_force, again.dyno_force);
}
