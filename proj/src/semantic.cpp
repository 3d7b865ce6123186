#include "uavsc/semantic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace uavsc::semantic {

void QualityParams::validate() const {
  // The log argument must stay positive over the whole admissible range.
  // omega2 / eta + omega3 is monotone in eta, so checking both endpoints
  // is enough.
  const double at_min = omega2 / kEtaMin + omega3;
  const double at_one = omega2 + omega3;
  if (!(at_min > 0.0) || !(at_one > 0.0))
    throw std::invalid_argument(
        "quality: omega2/eta + omega3 must be > 0 over (eta_min, 1]");
}

void EnergyParams::validate() const {
  if (!(latent_size > 0.0)) throw std::invalid_argument("energy.latent_size: must be > 0");
  if (!(eps_encoder > 0.0)) throw std::invalid_argument("energy.eps_encoder: must be > 0");
  if (!(eps_decoder > 0.0)) throw std::invalid_argument("energy.eps_decoder: must be > 0");
  if (!(freq_encoder_hz > 0.0))
    throw std::invalid_argument("energy.freq_encoder_hz: must be > 0");
  if (!(freq_decoder_hz > 0.0))
    throw std::invalid_argument("energy.freq_decoder_hz: must be > 0");
  if (!(work_encoder_cycles > 0.0))
    throw std::invalid_argument("energy.work_encoder_cycles: must be > 0");
  if (!(work_decoder_cycles > 0.0))
    throw std::invalid_argument("energy.work_decoder_cycles: must be > 0");
}

void UtilityWeights::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("weights.lambda: must be in [0, 1]");
  if (energy_norm_j < 0.0)
    throw std::invalid_argument("weights.energy_norm_j: must be >= 0");
}

double quality(double eta, const QualityParams& qp) {
  if (!(eta > 0.0) || eta > 1.0)
    throw std::domain_error("quality: eta must be in (0, 1]");
  const double arg = qp.omega2 / eta + qp.omega3;
  if (!(arg > 0.0)) throw std::domain_error("quality: log argument not positive");
  return qp.omega1 * std::log(arg) + qp.omega4;
}

double energy(double eta, const EnergyParams& ep) {
  if (!(eta > 0.0) || eta > 1.0)
    throw std::domain_error("energy: eta must be in (0, 1]");
  const double per_latent = ep.eps_encoder * ep.freq_encoder_hz * ep.freq_encoder_hz *
                                ep.work_encoder_cycles +
                            ep.eps_decoder * ep.freq_decoder_hz * ep.freq_decoder_hz *
                                ep.work_decoder_cycles;
  return ep.latent_size * eta * eta * per_latent;
}

double default_energy_norm(const EnergyParams& ep) { return energy(1.0, ep); }

double utility(const std::vector<double>& etas, const UtilityWeights& weights,
               const QualityParams& qp, const EnergyParams& ep) {
  const double norm = weights.energy_norm_j > 0.0 ? weights.energy_norm_j
                                                  : default_energy_norm(ep);
  double quality_sum = 0.0;
  double energy_sum = 0.0;
  for (double eta : etas) {
    quality_sum += quality(eta, qp);
    energy_sum += energy(eta, ep) / norm;
  }
  return weights.lambda * quality_sum - (1.0 - weights.lambda) * energy_sum;
}

double optimal_eta(double lambda, int grid_size, const QualityParams& qp,
                   const EnergyParams& ep) {
  return optimal_eta(lambda, grid_size, qp, ep, default_energy_norm(ep));
}

double optimal_eta(double lambda, int grid_size, const QualityParams& qp,
                   const EnergyParams& ep, double energy_norm_j) {
  if (grid_size < 2) throw std::invalid_argument("optimal_eta: grid_size must be >= 2");
  double best_eta = kEtaMin;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_size; ++i) {
    const double eta =
        kEtaMin + (1.0 - kEtaMin) * static_cast<double>(i) / (grid_size - 1);
    const double value =
        lambda * quality(eta, qp) - (1.0 - lambda) * energy(eta, ep) / energy_norm_j;
    if (value >= best_value) {  // >= ties toward larger eta
      best_value = value;
      best_eta = eta;
    }
  }
  return best_eta;
}

}  // namespace uavsc::semantic
