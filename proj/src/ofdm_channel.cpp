#include "adacast/ofdm_channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "adacast/error.hpp"
#include "adacast/random.hpp"

namespace adacast {

ChannelRealization draw_channel(int packet_count, int subchannel_count, double csnr_db,
                                double total_power, std::uint64_t seed) {
  if (packet_count < 1 || subchannel_count < packet_count)
    throw Error(ErrorKind::Config, "need L >= P >= 1 (P=" + std::to_string(packet_count) +
                                       ", L=" + std::to_string(subchannel_count) + ")");
  if (!(total_power > 0.0)) throw Error(ErrorKind::Config, "total power must be positive");

  ChannelRealization ch;
  ch.packet_count = packet_count;
  ch.subchannel_count = subchannel_count;
  ch.total_power = total_power;
  ch.csnr_db = csnr_db;
  ch.noise_power = (total_power / subchannel_count) / std::pow(10.0, csnr_db / 10.0);

  RandomSource rng(seed);
  ch.gains.resize(subchannel_count);
  for (auto& h : ch.gains) {
    const double re = rng.normal();
    const double im = rng.normal();
    h = std::complex<double>(re, im) / std::sqrt(2.0);
  }
  ch.cnr.resize(packet_count, subchannel_count);
  for (int l = 0; l < subchannel_count; ++l) {
    const double value = std::norm(ch.gains[l]) / ch.noise_power;
    ch.cnr.col(l).setConstant(value);
  }
  return ch;
}

SubchannelSets allocate_subchannels(const Eigen::MatrixXd& cnr, const std::vector<double>& fairness,
                                    double equal_power) {
  const int packets = static_cast<int>(cnr.rows());
  const int subchannels = static_cast<int>(cnr.cols());
  if (subchannels < packets)
    throw Error(ErrorKind::Config, "fewer subchannels than packets");
  if (static_cast<int>(fairness.size()) != packets)
    throw Error(ErrorKind::Config, "one fairness weight per packet required");
  for (double eta : fairness)
    if (!(eta > 0.0)) throw Error(ErrorKind::Config, "fairness weights must be positive");

  std::vector<bool> available(subchannels, true);
  int remaining = subchannels;
  std::vector<double> capacity(packets, 0.0);
  SubchannelSets sets(packets);

  const auto take_best = [&](int p) {
    int best = -1;
    for (int l = 0; l < subchannels; ++l)
      if (available[l] && (best < 0 || cnr(p, l) > cnr(p, best))) best = l;
    sets[p].push_back(best);
    available[best] = false;
    --remaining;
    capacity[p] += std::log2(1.0 + equal_power * cnr(p, best)) / subchannels;
  };

  for (int p = 0; p < packets; ++p) take_best(p);
  while (remaining > 0) {
    int neediest = 0;
    for (int p = 1; p < packets; ++p)
      if (capacity[p] / fairness[p] < capacity[neediest] / fairness[neediest]) neediest = p;
    take_best(neediest);
  }
  return sets;
}

double packet_capacity(const std::vector<int>& subchannels, const Eigen::Ref<const Eigen::RowVectorXd>& power,
                       const Eigen::Ref<const Eigen::RowVectorXd>& cnr, int subchannel_count) {
  double rate = 0.0;
  for (int l : subchannels) rate += std::log2(1.0 + power(l) * cnr(l)) / subchannel_count;
  return rate;
}

namespace {

// Closed-form quantities of one packet's water-filling over its active
// subchannels, sorted by ascending CNR (weakest first).
struct PacketWaterfill {
  std::vector<int> active;  // subchannel indices, ascending CNR
  std::vector<double> cnr;
  double weakest = 0.0;     // H_{p,1}
  double offset = 0.0;      // mu_p
  double inverse_sum = 0.0; // sum of 1/H
  double log_spread = 0.0;  // log2 xi_p
  int count() const { return static_cast<int>(active.size()); }

  void refresh() {
    weakest = cnr.front();
    offset = 0.0;
    inverse_sum = 0.0;
    double log_sum = 0.0;
    for (std::size_t l = 0; l < cnr.size(); ++l) {
      inverse_sum += 1.0 / cnr[l];
      if (l == 0) continue;
      offset += (cnr[l] - weakest) / (cnr[l] * weakest);
      log_sum += std::log2(cnr[l] / weakest);
    }
    log_spread = log_sum / count();
  }

  double log_argument(double packet_power) const {
    return 1.0 + weakest * (packet_power - offset) / count();
  }

  double capacity(double packet_power, int subchannel_count) const {
    return static_cast<double>(count()) / subchannel_count *
           (std::log2(log_argument(packet_power)) + log_spread);
  }

  double capacity_slope(double packet_power, int subchannel_count) const {
    return weakest / subchannel_count / (std::log(2.0) * log_argument(packet_power));
  }

  double weakest_power(double packet_power) const { return (packet_power - offset) / count(); }
};

struct NewtonResult {
  std::vector<double> packet_power;
  int iterations = 0;
  bool converged = false;
};

// Unknowns are Gamma_2..Gamma_P; Gamma_1 = Gamma_tot - sum. Residuals are
// R_1/eta_1 - R_p/eta_p. The Jacobian is -(D + a 11^T), inverted with
// Sherman-Morrison.
NewtonResult solve_packet_powers(const std::vector<PacketWaterfill>& packets,
                                 const std::vector<double>& fairness, double total_power,
                                 int subchannel_count, const PowerSolverOptions& options) {
  const int n = static_cast<int>(packets.size());
  NewtonResult result;
  result.packet_power.assign(n, total_power / n);
  if (n == 1) {
    result.converged = true;
    return result;
  }

  const auto in_domain = [&](const std::vector<double>& gamma) {
    for (int p = 0; p < n; ++p)
      if (!(packets[p].log_argument(gamma[p]) > 0.0)) return false;
    return true;
  };
  const auto residuals = [&](const std::vector<double>& gamma) {
    std::vector<double> f(n, 0.0);
    const double lead = packets[0].capacity(gamma[0], subchannel_count) / fairness[0];
    for (int p = 1; p < n; ++p)
      f[p] = lead - packets[p].capacity(gamma[p], subchannel_count) / fairness[p];
    return f;
  };
  const auto max_abs = [](const std::vector<double>& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  };

  std::vector<double> gamma = result.packet_power;
  std::vector<double> f = residuals(gamma);
  double norm = max_abs(f);
  for (int it = 0; it < options.max_iterations; ++it) {
    if (norm < options.tolerance) {
      result.converged = true;
      result.iterations = it;
      break;
    }
    const double a = packets[0].capacity_slope(gamma[0], subchannel_count) / fairness[0];
    double sum_inv_d = 0.0;
    double sum_f_over_d = 0.0;
    std::vector<double> d(n, 0.0);
    for (int p = 1; p < n; ++p) {
      d[p] = packets[p].capacity_slope(gamma[p], subchannel_count) / fairness[p];
      sum_inv_d += 1.0 / d[p];
      sum_f_over_d += f[p] / d[p];
    }
    const double correction = a * sum_f_over_d / (1.0 + a * sum_inv_d);
    std::vector<double> step(n, 0.0);
    for (int p = 1; p < n; ++p) step[p] = (f[p] - correction) / d[p];

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      std::vector<double> trial = gamma;
      double others = 0.0;
      for (int p = 1; p < n; ++p) {
        trial[p] += t * step[p];
        others += trial[p];
      }
      trial[0] = total_power - others;
      if (!in_domain(trial)) continue;
      auto trial_f = residuals(trial);
      const double trial_norm = max_abs(trial_f);
      if (trial_norm < norm || trial_norm < options.tolerance) {
        gamma = std::move(trial);
        f = std::move(trial_f);
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    result.iterations = it + 1;
    if (!accepted) break;
  }
  if (norm < options.tolerance) result.converged = true;
  result.packet_power = gamma;
  return result;
}

TransmissionPlan empty_plan(const Eigen::MatrixXd& cnr, const SubchannelSets& subchannels,
                            const std::vector<double>& fairness, double total_power) {
  TransmissionPlan plan;
  plan.subchannels = subchannels;
  plan.power = Eigen::MatrixXd::Zero(cnr.rows(), cnr.cols());
  plan.packet_power.assign(subchannels.size(), 0.0);
  plan.capacity.assign(subchannels.size(), 0.0);
  plan.fairness = fairness;
  plan.total_power = total_power;
  return plan;
}

void fill_capacities(TransmissionPlan& plan, const Eigen::MatrixXd& cnr) {
  const int subchannel_count = static_cast<int>(cnr.cols());
  for (std::size_t p = 0; p < plan.subchannels.size(); ++p) {
    const auto row = static_cast<Eigen::Index>(p);
    plan.capacity[p] = packet_capacity(plan.subchannels[p], plan.power.row(row), cnr.row(row), subchannel_count);
    plan.packet_power[p] = 0.0;
    for (int l : plan.subchannels[p]) plan.packet_power[p] += plan.power(row, l);
  }
}

void validate_assignment(const Eigen::MatrixXd& cnr, const SubchannelSets& subchannels,
                         const std::vector<double>& fairness, double total_power) {
  if (static_cast<Eigen::Index>(subchannels.size()) != cnr.rows() || fairness.size() != subchannels.size())
    throw Error(ErrorKind::Config, "subchannel sets, fairness weights and CNR rows disagree");
  if (!(total_power > 0.0)) throw Error(ErrorKind::Config, "total power must be positive");
  std::vector<bool> used(cnr.cols(), false);
  for (std::size_t p = 0; p < subchannels.size(); ++p) {
    for (int l : subchannels[p]) {
      if (l < 0 || l >= cnr.cols() || used[l])
        throw Error(ErrorKind::Config, "subchannel sets must be disjoint and within range");
      used[l] = true;
      if (!(cnr(static_cast<Eigen::Index>(p), l) > 0.0))
        throw Error(ErrorKind::Config, "assigned subchannels need positive CNR");
    }
    if (!subchannels[p].empty() && !(fairness[p] > 0.0))
      throw Error(ErrorKind::Config, "fairness weights must be positive");
  }
}

}  // namespace

TransmissionPlan allocate_power(const Eigen::MatrixXd& cnr, const SubchannelSets& subchannels,
                                const std::vector<double>& fairness, double total_power,
                                const PowerSolverOptions& options) {
  validate_assignment(cnr, subchannels, fairness, total_power);
  const int subchannel_count = static_cast<int>(cnr.cols());

  // Only packets that own subchannels take part in the solve.
  std::vector<int> members;
  std::vector<PacketWaterfill> packets;
  std::vector<double> weights;
  for (std::size_t p = 0; p < subchannels.size(); ++p) {
    if (subchannels[p].empty()) continue;
    PacketWaterfill w;
    w.active = subchannels[p];
    std::sort(w.active.begin(), w.active.end(), [&](int a, int b) {
      const double ha = cnr(static_cast<Eigen::Index>(p), a);
      const double hb = cnr(static_cast<Eigen::Index>(p), b);
      return ha != hb ? ha < hb : a < b;
    });
    for (int l : w.active) w.cnr.push_back(cnr(static_cast<Eigen::Index>(p), l));
    w.refresh();
    members.push_back(static_cast<int>(p));
    packets.push_back(std::move(w));
    weights.push_back(fairness[p]);
  }
  if (packets.empty()) throw Error(ErrorKind::Allocation, "no packet owns a subchannel");

  TransmissionPlan plan = empty_plan(cnr, subchannels, fairness, total_power);
  const double negative_slack = 1e-12 * total_power;
  for (;;) {
    const NewtonResult solved =
        solve_packet_powers(packets, weights, total_power, subchannel_count, options);
    plan.iterations = solved.iterations;
    if (!solved.converged) {
      throw Error(ErrorKind::Allocation, "Newton solve did not converge in " +
                                             std::to_string(options.max_iterations) + " iterations");
    }
    bool repaired = false;
    for (std::size_t k = 0; k < packets.size(); ++k) {
      auto& w = packets[k];
      if (w.weakest_power(solved.packet_power[k]) < -negative_slack && w.count() > 1) {
        w.active.erase(w.active.begin());
        w.cnr.erase(w.cnr.begin());
        w.refresh();
        repaired = true;
      }
    }
    if (repaired) {
      plan.deactivated = true;
      continue;
    }
    plan.power.setZero();
    for (std::size_t k = 0; k < packets.size(); ++k) {
      const auto& w = packets[k];
      const auto row = static_cast<Eigen::Index>(members[k]);
      const double base = std::max(0.0, w.weakest_power(solved.packet_power[k]));
      for (int i = 0; i < w.count(); ++i)
        plan.power(row, w.active[i]) = base + (w.cnr[i] - w.weakest) / (w.cnr[i] * w.weakest);
    }
    break;
  }
  fill_capacities(plan, cnr);
  return plan;
}

TransmissionPlan equal_power_plan(const Eigen::MatrixXd& cnr, const SubchannelSets& subchannels,
                                  const std::vector<double>& fairness, double total_power) {
  validate_assignment(cnr, subchannels, fairness, total_power);
  TransmissionPlan plan = empty_plan(cnr, subchannels, fairness, total_power);
  std::size_t assigned = 0;
  for (const auto& s : subchannels) assigned += s.size();
  if (assigned == 0) throw Error(ErrorKind::Allocation, "no subchannel assigned");
  const double share = total_power / static_cast<double>(assigned);
  for (std::size_t p = 0; p < subchannels.size(); ++p)
    for (int l : subchannels[p]) plan.power(static_cast<Eigen::Index>(p), l) = share;
  plan.equal_power_fallback = true;
  fill_capacities(plan, cnr);
  return plan;
}

TransmissionPlan plan_transmission(const PacketBatch& batch, const ChannelRealization& channel,
                                   const PowerSolverOptions& options) {
  if (batch.packet_count() != channel.packet_count)
    throw Error(ErrorKind::Config, "channel drawn for a different packet count");
  const auto pi = batch.importance();
  std::vector<int> live;
  for (int p = 0; p < batch.packet_count(); ++p)
    if (batch.packets[p].length() > 0) live.push_back(p);
  if (live.empty()) throw Error(ErrorKind::Allocation, "frame has no samples to send");

  Eigen::MatrixXd live_cnr(static_cast<Eigen::Index>(live.size()), channel.cnr.cols());
  std::vector<double> live_eta;
  for (std::size_t k = 0; k < live.size(); ++k) {
    live_cnr.row(static_cast<Eigen::Index>(k)) = channel.cnr.row(live[k]);
    live_eta.push_back(pi[live[k]]);
  }
  const double equal_power = channel.total_power / channel.subchannel_count;
  const SubchannelSets live_sets = allocate_subchannels(live_cnr, live_eta, equal_power);

  SubchannelSets sets(batch.packet_count());
  std::vector<double> eta(batch.packet_count(), 0.0);
  for (std::size_t k = 0; k < live.size(); ++k) {
    sets[live[k]] = live_sets[k];
    eta[live[k]] = live_eta[k];
  }
  try {
    return allocate_power(channel.cnr, sets, eta, channel.total_power, options);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Allocation) throw;
    return equal_power_plan(channel.cnr, sets, eta, channel.total_power);
  }
}

PacketBatch transmit(const PacketBatch& batch, const TransmissionPlan& plan,
                     const ChannelRealization& channel, const TransmitOptions& options) {
  if (static_cast<int>(plan.subchannels.size()) != batch.packet_count() ||
      channel.packet_count != batch.packet_count())
    throw Error(ErrorKind::Transmission, "plan, channel and packet batch disagree on P");
  if (options.loss_rate < 0.0 || options.loss_rate > 1.0)
    throw Error(ErrorKind::Config, "loss rate must lie in [0, 1]");

  RandomSource noise(options.noise_seed);
  RandomSource loss(options.loss_seed ^ 0x9E3779B97F4A7C15ULL);
  const double component_sigma = std::sqrt(channel.noise_power / 2.0);

  PacketBatch received = batch;
  for (int p = 0; p < batch.packet_count(); ++p) {
    auto& packet = received.packets[p];
    // Loss is drawn for every packet, empty or not.
    const bool lost = options.loss_rate >= 1.0 || loss.uniform() < options.loss_rate;
    if (packet.length() == 0) {
      packet.erased = packet.erased || lost;
      continue;
    }
    std::vector<int> active;
    for (int l : plan.subchannels[p])
      if (plan.power(p, l) > 0.0) active.push_back(l);
    std::sort(active.begin(), active.end());
    if (active.empty())
      throw Error(ErrorKind::Transmission, "packet " + std::to_string(p) + " has no powered subchannel");

    for (int k = 0; k < packet.length(); ++k) {
      const int l = active[static_cast<std::size_t>(k) % active.size()];
      const double g = plan.power(p, l);
      const double amplitude = options.scaling == ScalingMode::Power ? std::sqrt(g) : g;
      const std::complex<double> h = channel.gains[l];
      std::complex<double> r = h * amplitude * packet.samples[k];
      if (!options.noiseless) r += std::complex<double>(component_sigma * noise.normal(), component_sigma * noise.normal());
      packet.samples[k] = (r / (h * amplitude)).real();
    }
    if (lost || packet.erased) {
      packet.erased = true;
      std::fill(packet.samples.begin(), packet.samples.end(), 0.0);
    }
  }
  return received;
}

}  // namespace adacast
