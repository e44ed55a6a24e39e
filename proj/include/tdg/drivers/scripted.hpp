#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdg/sim/episode.hpp"

namespace tdg::drivers {

enum class Group { experienced, inexperienced };

std::string to_string(Group g);
Group group_from_string(const std::string& s);

struct DriverProfile {
  std::string name;
  Group group = Group::experienced;
  double lookahead = 10.0;      // m
  double target_speed = 12.0;   // m/s
  double steer_noise_sd = 0.0;
  double pedal_noise_sd = 0.0;
  int reaction_lag = 0;         // ticks; low-pass constant 1 / (1 + lag)
  std::uint64_t seed = 0;

  // Throws ConfigError naming the violated bound.
  void validate() const;
  friend bool operator==(const DriverProfile&, const DriverProfile&) = default;
};

// Lateral acceleration the speed controller plans for in curves, m/s^2.
inline constexpr double kComfortLateralAccel = 2.0;
// Proportional gain of the speed loop, 1/s.
inline constexpr double kSpeedGain = 0.8;

// Pure pursuit toward the centerline point `lookahead` metres of arc ahead,
// mapped to [-1, 1] by the maximum steering angle. Positive steers right.
double pure_pursuit_steer(const sim::VehicleState& state, const sim::Terrain& terrain,
                          double lookahead, const sim::VehicleParams& vehicle = {});

struct Pedals {
  double accel = 0.0;
  double brake = 0.0;
};

// Proportional speed tracking with drag feed-forward. The target drops to the
// comfortable cornering speed of the sharpest curve within the preview
// distance. At most one of accel/brake is nonzero.
Pedals speed_control(const sim::VehicleState& state, const sim::Terrain& terrain,
                     const DriverProfile& profile, const sim::VehicleParams& vehicle = {});

// Pure pursuit + speed control with seeded Gaussian noise, followed by a
// first-order lag. Noise for a tick depends only on (profile seed, episode
// seed, tick).
class ScriptedDriver final : public sim::Driver {
 public:
  explicit ScriptedDriver(DriverProfile profile, sim::VehicleParams vehicle = {});

  std::string id() const override { return profile_.name; }
  void begin_episode(const sim::Terrain& terrain, std::uint64_t seed) override;
  sim::RawControl act(const sim::Observation& obs, const sim::Terrain& terrain) override;

  const DriverProfile& profile() const noexcept { return profile_; }

 private:
  DriverProfile profile_;
  sim::VehicleParams vehicle_;
  std::uint64_t noise_seed_ = 0;
  double steer_state_ = 0.0;
  double pedal_state_ = 0.0;
};

// Five experienced and fourteen inexperienced profiles with fixed seeds.
std::vector<DriverProfile> default_population();
std::vector<DriverProfile> select_group(const std::vector<DriverProfile>& all, Group group);
// Noise-free, lag-free experienced controller.
DriverProfile oracle_profile();

}  // namespace tdg::drivers
