#include "ksm/training.hpp"

#include <chrono>
#include <cmath>

#include "ksm/csv.hpp"

namespace ksm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

void check_finite(const ModelState& s, long iter) {
    auto fail = [iter](const char* name) {
        throw Error(ErrorCode::NonFinite, "training aborted at iteration " + std::to_string(iter) +
                                              ": parameter " + name + " became non-finite");
    };
    if (!s.W.allFinite()) fail("W");
    if (!s.q.allFinite()) fail("q");
    if (!s.L.allFinite()) fail("L");
}

TrainResult run(const Dataset& dataset, const Kernel& kernel, Index neurons, const TrainConfig& config,
                bool pin_q, const PhaseCallback& on_phase) {
    config.validate();
    dataset.validate();
    if (config.batch_size > dataset.size()) {
        throw Error(ErrorCode::InvalidConfig, "training.batch_size exceeds the dataset size");
    }

    const std::uint64_t init_seed = config.seed;
    TrainResult result;
    result.seed_history = {init_seed, sampler_seed(config.seed)};
    result.state = init_model(neurons, dataset.dim(), kernel, config.lambda, init_seed);
    ModelState& state = result.state;
    Rng sampler(result.seed_history[1]);

    const auto start = std::chrono::steady_clock::now();
    const long total = config.total_iterations();
    long iter = 0;
    for (std::size_t p = 0; p < config.phases.size(); ++p) {
        Phase rates = config.phases[p];
        if (pin_q) {
            rates.eta_q = 0.0;
        }
        for (int k = 0; k < rates.iterations; ++k, ++iter) {
            const Matrix batch = sample_minibatch(dataset, config.batch_size, sampler);
            ParamGradients grads;
            double mean_energy = 0.0;
            try {
                mean_energy = apply_update(state, batch, rates, config.q_floor, pin_q, &grads);
            } catch (const NotPositiveDefiniteError& e) {
                throw NotPositiveDefiniteError(e.min_eigenvalue(),
                                               "training aborted at iteration " + std::to_string(iter));
            }
            if (!std::isfinite(mean_energy)) {
                throw Error(ErrorCode::NonFinite, "training aborted at iteration " + std::to_string(iter) +
                                                      ": energy became non-finite");
            }
            check_finite(state, iter);
            if (iter % config.log_every == 0 || iter + 1 == total) {
                const auto now = std::chrono::steady_clock::now();
                result.log.entries.push_back(
                    {iter, mean_energy, grads.dW.norm(), pin_q ? 0.0 : grads.dq.norm(), grads.dL.norm(),
                     std::chrono::duration<double, std::milli>(now - start).count()});
            }
        }
        if (on_phase) {
            on_phase(p, state);
        }
    }
    return result;
}

}  // namespace

void TrainConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
    if (batch_size < 1) fail("training.batch_size must be positive");
    if (phases.empty()) fail("training.phases must contain at least one phase");
    if (!(lambda >= 0.0)) fail("model.lambda must be non-negative");
    if (!(q_floor > 0.0)) fail("training.q_floor must be positive");
    if (log_every < 1) fail("training.log_every must be positive");
    for (std::size_t p = 0; p < phases.size(); ++p) {
        const Phase& ph = phases[p];
        const std::string where = "training.phases[" + std::to_string(p) + "]";
        if (ph.iterations < 1) fail(where + ".iterations must be at least 1");
        if (!(ph.eta_w >= 0.0) || !(ph.eta_q >= 0.0) || !(ph.eta_l >= 0.0)) {
            fail(where + ": learning rates must be non-negative");
        }
        if (ph.eta_w > ph.eta_l || ph.eta_q > ph.eta_l) {
            fail(where + ": two-timescale rule violated, eta_w and eta_q must not exceed eta_l");
        }
    }
}

long TrainConfig::total_iterations() const noexcept {
    long total = 0;
    for (const Phase& p : phases) {
        total += p.iterations;
    }
    return total;
}

TrainConfig half_moons_schedule() {
    TrainConfig c;
    c.batch_size = 64;
    c.phases = {{10000, 0.01, 0.01, 0.1}, {10000, 0.001, 0.001, 0.01}};
    return c;
}

TrainConfig mnist_schedule() {
    TrainConfig c;
    c.batch_size = 64;
    c.phases = {{10000, 0.001, 0.0, 0.01}, {5000, 0.0001, 0.0, 0.001}};
    return c;
}

void TrainLog::write_csv(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, std::string>>& meta) const {
    auto out = csv::open(path);
    csv::write_preamble(out, meta);
    out << "iter,mean_energy,grad_w_norm,grad_q_norm,grad_l_norm,wall_ms\n";
    for (const auto& e : entries) {
        out << e.iter << ',' << csv::format(e.mean_energy) << ',' << csv::format(e.grad_w_norm) << ','
            << csv::format(e.grad_q_norm) << ',' << csv::format(e.grad_l_norm) << ','
            << csv::format(std::round(e.wall_ms * 1000.0) / 1000.0) << '\n';
    }
}

double apply_update(ModelState& state, const Matrix& batch, const Phase& rates, double q_floor, bool pin_q,
                    ParamGradients* grads_out) {
    StepEvaluation step = evaluate_step(state, batch);
    ParamGradients& g = step.grads;
    for (Index i = 0; i < state.neurons(); ++i) {
        const double scale = rates.eta_w / std::max(state.q[i] * state.q[i], q_floor);
        state.W.row(i) -= scale * g.dW.row(i);
    }
    if (!pin_q) {
        state.q -= rates.eta_q * g.dq;
    }
    state.L += rates.eta_l * g.dL;
    if (grads_out) {
        *grads_out = std::move(g);
    }
    return step.response.energies.mean();
}

std::uint64_t sampler_seed(std::uint64_t seed) noexcept { return splitmix64(seed); }

ModelState absorb_gains(const ModelState& state) {
    const auto degree = state.kernel.homogeneity();
    if (!degree) {
        throw Error(ErrorCode::InvalidArgument, "absorb_gains: kernel '" + state.kernel.describe() +
                                                    "' has no homogeneity degree");
    }
    ModelState out = state;
    for (Index i = 0; i < state.neurons(); ++i) {
        if (!(state.q[i] > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "absorb_gains: gains must be positive");
        }
        out.W.row(i) *= std::pow(state.q[i], 1.0 / *degree);
        out.q[i] = 1.0;
    }
    return out;
}

TrainResult train(const Dataset& dataset, const Kernel& kernel, Index neurons, const TrainConfig& config,
                  const PhaseCallback& on_phase) {
    return run(dataset, kernel, neurons, config, false, on_phase);
}

TrainResult train_homogeneous(const Dataset& dataset, const Kernel& kernel, Index neurons,
                              const TrainConfig& config, const PhaseCallback& on_phase) {
    if (!kernel.homogeneity()) {
        throw Error(ErrorCode::InvalidArgument,
                    "train_homogeneous: kernel '" + kernel.describe() + "' has no homogeneity degree");
    }
    return run(dataset, kernel, neurons, config, true, on_phase);
}

}  // namespace ksm
