#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "adacast/packetization.hpp"

namespace adacast {

/// One Rayleigh block-fading draw shared by every packet of a frame.
struct ChannelRealization {
  int packet_count = 0;      // P
  int subchannel_count = 0;  // L
  std::vector<std::complex<double>> gains;  // h_l, E|h|^2 = 1
  Eigen::MatrixXd cnr;       // H_{p,l} = |h_l|^2 / (N0 Theta / L), P x L
  double noise_power = 0.0;  // N0 Theta / L
  double total_power = 0.0;  // Gamma_tot
  double csnr_db = 0.0;
};

/// Draws h_l and sets the per-subchannel noise so that equal power
/// Gamma_tot / L gives an average SNR of `csnr_db`.
ChannelRealization draw_channel(int packet_count, int subchannel_count, double csnr_db,
                                double total_power, std::uint64_t seed);

/// Omega_p as 0-based subchannel indices, in the order they were taken.
using SubchannelSets = std::vector<std::vector<int>>;

/// Greedy proportional-fair subchannel assignment under equal power
/// `equal_power` per subchannel. First every packet in turn takes its best
/// free subchannel; then the packet with the smallest R_p / eta_p takes its
/// best free subchannel until none remain. Ties go to the lowest index.
SubchannelSets allocate_subchannels(const Eigen::MatrixXd& cnr, const std::vector<double>& fairness,
                                    double equal_power);

/// R_p = sum over l in Omega_p of (1/L) log2(1 + g_{p,l} H_{p,l}).
/// `power` and `cnr` are indexed by subchannel.
double packet_capacity(const std::vector<int>& subchannels, const Eigen::Ref<const Eigen::RowVectorXd>& power,
                       const Eigen::Ref<const Eigen::RowVectorXd>& cnr, int subchannel_count);

struct TransmissionPlan {
  SubchannelSets subchannels;        // Omega_p
  Eigen::MatrixXd power;             // g_{p,l}, P x L, zero off Omega_p
  std::vector<double> packet_power;  // Gamma_{p,tot}
  std::vector<double> capacity;      // R_p
  std::vector<double> fairness;      // eta_p
  double total_power = 0.0;
  bool deactivated = false;          // some subchannel was switched off
  bool equal_power_fallback = false;
  int iterations = 0;                // Newton iterations of the last solve
};

struct PowerSolverOptions {
  int max_iterations = 100;
  double tolerance = 1e-9;
};

/// Water-filling inside each packet plus proportional-fair totals across
/// packets, solved by damped Newton on the capacity-ratio equations with the
/// sum-power constraint eliminated. Packets whose weakest subchannel would
/// need negative power lose that subchannel and the system is re-solved.
/// Throws an allocation error if Newton does not converge.
TransmissionPlan allocate_power(const Eigen::MatrixXd& cnr, const SubchannelSets& subchannels,
                                const std::vector<double>& fairness, double total_power,
                                const PowerSolverOptions& options = {});

/// Gamma_tot spread evenly over every assigned subchannel.
TransmissionPlan equal_power_plan(const Eigen::MatrixXd& cnr, const SubchannelSets& subchannels,
                                  const std::vector<double>& fairness, double total_power);

/// Full per-frame plan: fairness eta_p = pi_p over non-empty packets,
/// subchannel assignment, then power. Empty packets get no subchannel.
/// Falls back to equal power (flagged in the plan) when Newton fails.
TransmissionPlan plan_transmission(const PacketBatch& batch, const ChannelRealization& channel,
                                   const PowerSolverOptions& options = {});

enum class ScalingMode {
  Power,      // amplitude sqrt(g): transmit power per unit sample equals g
  Amplitude,  // amplitude g
};

struct TransmitOptions {
  std::uint64_t noise_seed = 0;
  std::uint64_t loss_seed = 0;
  double loss_rate = 0.0;
  bool noiseless = false;
  ScalingMode scaling = ScalingMode::Power;
};

/// Sends every packet over its active subchannels (round-robin by sample)
/// through h_l and complex AWGN, then equalizes: s_hat = Re(r / (h a)).
/// Each packet is independently erased with probability `loss_rate`.
PacketBatch transmit(const PacketBatch& batch, const TransmissionPlan& plan,
                     const ChannelRealization& channel, const TransmitOptions& options);

}  // namespace adacast
