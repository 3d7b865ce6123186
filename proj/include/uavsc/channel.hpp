#ifndef UAVSC_CHANNEL_HPP
#define UAVSC_CHANNEL_HPP

#include <complex>
#include <vector>

#include "uavsc/grid.hpp"
#include "uavsc/rng.hpp"

namespace uavsc::channel {

struct Position3D {
  double x = 0.0;  ///< meters
  double y = 0.0;  ///< meters
  double z = 0.0;  ///< meters; 0 for ground users, flight height for the UAV
};

/// Radio parameters of the air-to-ground uplink.
struct ChannelParams {
  double beta0 = 1e-3;        ///< reference power gain at d0 = 1 m
  double alpha = 2.0;         ///< path-loss exponent, in [2, 6]
  double rician_k = 10.0;     ///< Rician K-factor, linear
  double bandwidth_hz = 5e6;  ///< per-channel bandwidth B
  double noise_power_w = 5e-8;
  /// When false (default) noise_power_w is the total in-band noise power.
  /// When true it is read as a PSD in W/Hz and the CNR divisor becomes
  /// bandwidth_hz * noise_power_w.
  bool noise_is_psd = false;
  int num_users = 5;
  int num_channels = 3;

  double effective_noise_w() const {
    return noise_is_psd ? bandwidth_hz * noise_power_w : noise_power_w;
  }
  void validate() const;  ///< throws std::invalid_argument naming the bad field
};

/// One slot's fading draw: complex amplitudes h[n][m] and the derived
/// gain-to-noise ratios.
struct ChannelRealization {
  Grid<std::complex<double>> gains;  ///< h_{n,m}, amplitude
  Grid<double> cnrs;                 ///< |h_{n,m}|^2 / noise
};

/// Per-user channel choice; entry 0 means "not transmitting", 1..M pick a
/// channel.
struct ChannelAssignment {
  std::vector<int> choice;
};

/// Euclidean UAV-to-user distance. Requires uav.z > 0.
double distance(const Position3D& user, const Position3D& uav);

/// Distance-power law beta0 * d^-alpha. Rejects d below the 1 m reference
/// distance where the model is invalid.
double large_scale_gain(double d_m, const ChannelParams& params);

/// One Rician small-scale coefficient: sqrt(K/(K+1)) * g_los +
/// sqrt(1/(K+1)) * g_scatter, with g_los = 1 (unit magnitude, phase 0) and
/// g_scatter circularly-symmetric complex Gaussian of unit variance.
/// E|g|^2 = 1 for every K >= 0.
std::complex<double> sample_small_scale(RandomStream& rng, double rician_k);

/// Draws the full N x M gain matrix at the given UAV position. Small-scale
/// coefficients are drawn independently per (user, channel) pair in row-major
/// order, which pins the stream layout for reproducibility.
ChannelRealization realize_channel(const std::vector<Position3D>& user_positions,
                                   const Position3D& uav, const ChannelParams& params,
                                   RandomStream& rng);

/// Successive interference cancellation SINRs for the users sharing one
/// channel. Users are ranked by received power p_n * cnr_n, strongest first;
/// the user at rank J is decoded after ranks 1..J-1 have been cancelled, so
/// it sees interference only from ranks J+1..end. Ties in received power
/// break by ascending user index. Returns a full-length vector with zeros for
/// users not in `members`.
std::vector<double> sic_sinr(const std::vector<double>& powers_w,
                             const std::vector<double>& cnr_column,
                             const std::vector<int>& members);

/// Shannon rate B * log2(1 + sinr) in bits per second.
double rate(double sinr, double bandwidth_hz);

/// Per-user rates for a full assignment: groups users per channel, applies
/// sic_sinr and rate. Unassigned users (choice 0) get rate 0.
std::vector<double> all_rates(const ChannelRealization& realization,
                              const ChannelAssignment& assignment,
                              const std::vector<double>& powers_w,
                              const ChannelParams& params);

}  // namespace uavsc::channel

#endif  // UAVSC_CHANNEL_HPP
