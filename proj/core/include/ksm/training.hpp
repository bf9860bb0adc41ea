#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ksm/data.hpp"
#include "ksm/model.hpp"

namespace ksm {

struct Phase {
    int iterations = 1;
    double eta_w = 0.0;
    double eta_q = 0.0;
    double eta_l = 0.0;
};

struct TrainConfig {
    Index batch_size = 64;
    std::vector<Phase> phases;
    double lambda = 1e-3;
    std::uint64_t seed = 0;
    double q_floor = 1e-4;
    int log_every = 100;

    /// Rejects empty schedules, non-positive iteration counts, negative rates
    /// and any phase where eta_w or eta_q exceeds eta_l.
    void validate() const;

    [[nodiscard]] long total_iterations() const noexcept;
};

/// Two 10k-iteration phases, the second annealed by 10x (half-moons recipe).
[[nodiscard]] TrainConfig half_moons_schedule();

/// 10k iterations at eta_w=1e-3, eta_l=1e-2 then 5k at a tenth of that (MNIST recipe).
[[nodiscard]] TrainConfig mnist_schedule();

struct TrainLogEntry {
    long iter = 0;
    double mean_energy = 0.0;
    double grad_w_norm = 0.0;
    double grad_q_norm = 0.0;
    double grad_l_norm = 0.0;
    double wall_ms = 0.0;
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;

    /// `meta` entries become leading `# key=value` lines.
    void write_csv(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& meta = {}) const;
};

struct TrainResult {
    ModelState state;
    TrainLog log;
    std::vector<std::uint64_t> seed_history;
};

/// Called after each completed phase with the phase index and current state.
using PhaseCallback = std::function<void(std::size_t phase, const ModelState& state)>;

/// Stochastic gradient descent on W and q, ascent on L, one minibatch per
/// iteration. The W step is scaled by eta_w / max(q_i^2, q_floor).
[[nodiscard]] TrainResult train(const Dataset& dataset, const Kernel& kernel, Index neurons,
                                const TrainConfig& config, const PhaseCallback& on_phase = {});

/// Same loop with q pinned at 1 and eta_q ignored. Requires a homogeneous kernel.
[[nodiscard]] TrainResult train_homogeneous(const Dataset& dataset, const Kernel& kernel,
                                            Index neurons, const TrainConfig& config,
                                            const PhaseCallback& on_phase = {});

/// For a homogeneous kernel of degree d, maps every (q_i, w_i) with q_i > 0 to
/// (1, q_i^{1/d} w_i). Feedforward drives, and therefore energies and
/// responses, are unchanged.
[[nodiscard]] ModelState absorb_gains(const ModelState& state);

/// Seed of the minibatch sampler derived from the run seed; the init seed is
/// the run seed itself.
[[nodiscard]] std::uint64_t sampler_seed(std::uint64_t seed) noexcept;

/// One update step on a fixed minibatch. Exposed for hand-stepped checks.
/// Returns the minibatch-mean energy before the update.
double apply_update(ModelState& state, const Matrix& batch, const Phase& rates, double q_floor,
                    bool pin_q, ParamGradients* grads_out = nullptr);

}  // namespace ksm
