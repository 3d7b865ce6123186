#ifndef UAVSC_SEMANTIC_HPP
#define UAVSC_SEMANTIC_HPP

#include <vector>

namespace uavsc::semantic {

/// Smallest admissible model scale ratio. Keeps the quality log argument
/// finite and rules out a zero-size model.
inline constexpr double kEtaMin = 0.01;

/// Coefficients of the fitted reconstruction-quality curve
/// Q(eta) = omega1 * ln(omega2 / eta + omega3) + omega4.
struct QualityParams {
  double omega1 = -0.0815;
  double omega2 = 10.7192;
  double omega3 = -0.7957;
  double omega4 = 1.0918;
  void validate() const;
};

/// Encoder/decoder computation-energy model.
struct EnergyParams {
  double latent_size = 512.0;        ///< latent dimension K
  double eps_encoder = 1e-26;        ///< hardware energy coefficient
  double eps_decoder = 1e-26;
  double freq_encoder_hz = 1e9;
  double freq_decoder_hz = 1e9;
  double work_encoder_cycles = 0.65e6;
  double work_decoder_cycles = 3.25e6;
  void validate() const;
};

/// Importance weighting between reconstruction quality and (normalized)
/// computational energy.
struct UtilityWeights {
  double lambda = 0.5;       ///< in [0, 1]; 1 = quality-first, 0 = energy-first
  double energy_norm_j = 0;  ///< joules; 0 means "resolve to energy(1)"
  void validate() const;
};

/// Reconstruction quality of a sub-model at scale ratio eta in (0, 1].
double quality(double eta, const QualityParams& qp);

/// Computational energy of one encode+decode pass at scale ratio eta, in
/// joules. Quadratic in eta.
double energy(double eta, const EnergyParams& ep);

/// Resolves the default energy normalization: energy at full scale.
double default_energy_norm(const EnergyParams& ep);

/// lambda * sum Q(eta_n) - (1 - lambda) * sum E(eta_n) / energy_norm.
double utility(const std::vector<double>& etas, const UtilityWeights& weights,
               const QualityParams& qp, const EnergyParams& ep);

/// Brute-force argmax of the single-user weighted objective over a uniform
/// eta grid on [kEtaMin, 1]. Ties break toward larger eta.
double optimal_eta(double lambda, int grid_size, const QualityParams& qp,
                   const EnergyParams& ep);
double optimal_eta(double lambda, int grid_size, const QualityParams& qp,
                   const EnergyParams& ep, double energy_norm_j);

}  // namespace uavsc::semantic

#endif  // UAVSC_SEMANTIC_HPP
