#include "uavsc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace uavsc::channel {

void ChannelParams::validate() const {
  if (!(beta0 > 0.0)) throw std::invalid_argument("channel.beta0: must be > 0");
  if (!(alpha >= 2.0 && alpha <= 6.0))
    throw std::invalid_argument("channel.alpha: must be in [2, 6]");
  if (!(rician_k >= 0.0)) throw std::invalid_argument("channel.rician_k: must be >= 0");
  if (!(bandwidth_hz > 0.0))
    throw std::invalid_argument("channel.bandwidth_hz: must be > 0");
  if (!(noise_power_w > 0.0))
    throw std::invalid_argument("channel.noise_power_w: must be > 0");
  if (num_users < 1) throw std::invalid_argument("channel.num_users: must be >= 1");
  if (num_channels < 1)
    throw std::invalid_argument("channel.num_channels: must be >= 1");
}

double distance(const Position3D& user, const Position3D& uav) {
  const double dx = user.x - uav.x;
  const double dy = user.y - uav.y;
  const double dz = user.z - uav.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double large_scale_gain(double d_m, const ChannelParams& params) {
  if (d_m < 1.0)
    throw std::invalid_argument("large_scale_gain: distance below the 1 m reference");
  return params.beta0 * std::pow(d_m, -params.alpha);
}

std::complex<double> sample_small_scale(RandomStream& rng, double rician_k) {
  const double los_weight = std::sqrt(rician_k / (rician_k + 1.0));
  const double scatter_weight = std::sqrt(1.0 / (rician_k + 1.0));
  const std::complex<double> scattered = rng.complex_normal_unit();
  return std::complex<double>(los_weight, 0.0) + scatter_weight * scattered;
}

ChannelRealization realize_channel(const std::vector<Position3D>& user_positions,
                                   const Position3D& uav, const ChannelParams& params,
                                   RandomStream& rng) {
  const int n_users = static_cast<int>(user_positions.size());
  if (n_users != params.num_users)
    throw std::invalid_argument("realize_channel: user position count != num_users");
  if (!(uav.z > 0.0)) throw std::invalid_argument("realize_channel: uav height must be > 0");

  ChannelRealization out;
  out.gains = Grid<std::complex<double>>(n_users, params.num_channels);
  out.cnrs = Grid<double>(n_users, params.num_channels);
  const double noise = params.effective_noise_w();

  for (int n = 0; n < n_users; ++n) {
    const double beta = large_scale_gain(distance(user_positions[n], uav), params);
    const double amp = std::sqrt(beta);
    for (int m = 0; m < params.num_channels; ++m) {
      const std::complex<double> h = amp * sample_small_scale(rng, params.rician_k);
      out.gains(n, m) = h;
      out.cnrs(n, m) = std::norm(h) / noise;
    }
  }
  return out;
}

std::vector<double> sic_sinr(const std::vector<double>& powers_w,
                             const std::vector<double>& cnr_column,
                             const std::vector<int>& members) {
  if (powers_w.size() != cnr_column.size())
    throw std::invalid_argument("sic_sinr: powers/cnr length mismatch");

  std::vector<int> order = members;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ra = powers_w[a] * cnr_column[a];
    const double rb = powers_w[b] * cnr_column[b];
    if (ra != rb) return ra > rb;
    return a < b;  // deterministic tie break
  });

  std::vector<double> sinrs(powers_w.size(), 0.0);
  // Suffix sums of received power: rank J sees only ranks J+1..end.
  double interference = 0.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int n = *it;
    const double received = powers_w[n] * cnr_column[n];
    sinrs[n] = received / (1.0 + interference);
    interference += received;
  }
  return sinrs;
}

double rate(double sinr, double bandwidth_hz) {
  return bandwidth_hz * std::log2(1.0 + sinr);
}

std::vector<double> all_rates(const ChannelRealization& realization,
                              const ChannelAssignment& assignment,
                              const std::vector<double>& powers_w,
                              const ChannelParams& params) {
  const int n_users = realization.gains.rows();
  const int n_channels = realization.gains.cols();
  if (static_cast<int>(assignment.choice.size()) != n_users)
    throw std::invalid_argument("all_rates: assignment length mismatch");
  if (static_cast<int>(powers_w.size()) != n_users)
    throw std::invalid_argument("all_rates: powers length mismatch");

  std::vector<double> rates(n_users, 0.0);
  std::vector<double> cnr_column(n_users);
  std::vector<int> members;
  for (int m = 1; m <= n_channels; ++m) {
    members.clear();
    for (int n = 0; n < n_users; ++n) {
      if (assignment.choice[n] == m) members.push_back(n);
    }
    if (members.empty()) continue;
    for (int n = 0; n < n_users; ++n) cnr_column[n] = realization.cnrs(n, m - 1);
    const std::vector<double> sinrs = sic_sinr(powers_w, cnr_column, members);
    for (int n : members) rates[n] = rate(sinrs[n], params.bandwidth_hz);
  }
  return rates;
}

}  // namespace uavsc::channel
