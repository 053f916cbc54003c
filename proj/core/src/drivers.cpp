#include "regenfeel/drivers.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace regenfeel::drivers {

namespace {

double approach(double current, double target, double max_step)
{
    return std::clamp(target, current - max_step, current + max_step);
}

} // namespace

void validate(const PedalInputs& in)
{
    if (!(in.throttle >= 0.0 && in.throttle <= 1.0)) {
        throw std::domain_error("throttle must lie in [0, 1]");
    }
    if (!(in.brake_x >= 0.0 && in.brake_x <= maps::PedalDisplacement::kMaxStroke)) {
        throw std::domain_error("brake_x must lie in [0, 80] mm");
    }
}

PedalInputs apply_guard(PedalInputs in, const ExclusionGuard& guard)
{
    if (guard.enabled && in.throttle > guard.throttle_threshold &&
        in.brake_x > guard.brake_threshold) {
        in.throttle = 0.0;
    }
    return in;
}

void PedalScript::validate() const
{
    if (knots.empty()) {
        throw std::invalid_argument("pedal script has no knots");
    }
    for (std::size_t i = 0; i < knots.size(); ++i) {
        const auto& k = knots[i];
        drivers::validate(PedalInputs{k.throttle, k.brake_x});
        if (!std::isfinite(k.t) || k.t < 0.0 || (i > 0 && k.t < knots[i - 1].t)) {
            throw std::invalid_argument("pedal script knots must be time-sorted and non-negative");
        }
    }
}

double PedalScript::end_time() const
{
    return knots.empty() ? 0.0 : knots.back().t;
}

PedalScript script_from_json(std::string_view text)
{
    const auto j = nlohmann::json::parse(text);
    const auto& list = j.is_object() ? j.at("knots") : j;
    PedalScript s;
    for (const auto& k : list) {
        s.knots.push_back(ScriptKnot{k.at("t").get<double>(), k.value("throttle", 0.0),
                                     k.value("brake_x", 0.0)});
    }
    s.validate();
    return s;
}

PedalInputs scripted_inputs(double t, const PedalScript& script)
{
    if (script.knots.empty()) {
        throw std::invalid_argument("pedal script has no knots");
    }
    if (!(t >= 0.0)) {
        throw std::domain_error("script time must be non-negative");
    }
    const auto& knots = script.knots;
    if (t <= knots.front().t) {
        return {knots.front().throttle, knots.front().brake_x};
    }
    if (t >= knots.back().t) {
        return {knots.back().throttle, knots.back().brake_x};
    }
    const auto hi = std::upper_bound(knots.begin(), knots.end(), t,
                                     [](double v, const ScriptKnot& k) { return v < k.t; });
    const auto lo = hi - 1;
    const double span = hi->t - lo->t;
    const double w = span > 0.0 ? (t - lo->t) / span : 1.0;
    return {lo->throttle + w * (hi->throttle - lo->throttle),
            lo->brake_x + w * (hi->brake_x - lo->brake_x)};
}

void FollowerDriverParams::validate() const
{
    if (!(target_gap > 0.0 && kp_gap >= 0.0 && kd_gap >= 0.0 && reaction_delay >= 0.0 &&
          brake_rate_limit > 0.0 && throttle_rate_limit > 0.0 && coast_band >= 0.0)) {
        throw std::invalid_argument("driver parameters are invalid");
    }
}

FollowerDriver::FollowerDriver(FollowerDriverParams params,
                               blend::PedalMode mode,
                               maps::MapParams map,
                               blend::OnePedalParams one_pedal,
                               world::FollowerParams vehicle,
                               double dt)
    : params_(params),
      mode_(mode),
      map_(map),
      one_pedal_(one_pedal),
      vehicle_(vehicle),
      dt_(dt),
      delay_ticks_(static_cast<std::size_t>(std::llround(params.reaction_delay / dt)))
{
    params_.validate();
    if (!(dt > 0.0)) {
        throw std::invalid_argument("driver dt must be positive");
    }
}

PedalInputs FollowerDriver::step(const world::WorldState& world)
{
    history_.push_back(Observation{world.gap,
                                   world.lead.vehicle.velocity - world.follower.velocity});
    PedalInputs target;
    if (history_.size() > delay_ticks_) {
        const Observation& seen = history_.front();
        request_ = params_.kp_gap * (seen.gap - params_.target_gap) + params_.kd_gap * seen.closing;
        target = map_request(request_);
        history_.pop_front();
    }

    PedalInputs out;
    out.throttle = std::clamp(approach(output_.throttle, target.throttle,
                                       params_.throttle_rate_limit * dt_), 0.0, 1.0);
    out.brake_x = std::clamp(approach(output_.brake_x, target.brake_x,
                                      params_.brake_rate_limit * dt_),
                             0.0, maps::PedalDisplacement::kMaxStroke);
    output_ = apply_guard(out, params_.guard);
    return output_;
}

PedalInputs FollowerDriver::map_request(double accel) const
{
    const double full_throttle = vehicle_.accel_max_g * map_.gravity;
    if (mode_ == blend::PedalMode::TwoPedal) {
        const double band = params_.coast_band;
        if (accel > band) {
            return {std::min(1.0, (accel - band) / full_throttle), 0.0};
        }
        if (accel < -band) {
            return {0.0, maps::decel_to_pedal(-accel - band, map_).mm()};
        }
        return {};
    }

    const double throttle = one_pedal_throttle(accel);
    const double liftoff = one_pedal_.regen_decel_cap_g * map_.gravity;
    if (throttle == 0.0 && -accel > liftoff) {
        return {0.0, maps::decel_to_pedal(-accel, map_).mm()};
    }
    return {throttle, 0.0};
}

// Inverts the driver's internal model of net acceleration against throttle:
// traction rises with throttle while lift-off regen fades out.
double FollowerDriver::one_pedal_throttle(double accel) const
{
    const double full_throttle = vehicle_.accel_max_g * map_.gravity;
    const double liftoff = one_pedal_.regen_decel_cap_g * map_.gravity;
    const auto net = [&](double u) {
        return u * full_throttle - blend::liftoff_activation(u, one_pedal_) * liftoff;
    };
    if (accel <= net(0.0)) {
        return 0.0;
    }
    if (accel >= net(1.0)) {
        return 1.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        (net(mid) < accel ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace regenfeel::drivers
