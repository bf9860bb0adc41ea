#include "ksm_cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <ostream>
#include <set>

#include "ksm/analysis.hpp"
#include "ksm/baselines.hpp"
#include "ksm/checkpoint.hpp"
#include "ksm/csv.hpp"
#include "ksm/linalg.hpp"

namespace ksm::cli {
namespace {

using json = nlohmann::json;
using Meta = std::vector<std::pair<std::string, std::string>>;

void say(const CommandOptions& o, const std::string& line) {
    if (o.log) *o.log << line << '\n';
}

Meta meta_for(const RunConfig& rc, std::uint64_t seed) {
    return {{"config_hash", rc.hash}, {"seed", std::to_string(seed)}};
}

void write_json(const fs::path& path, const json& j) {
    auto out = csv::open(path);
    out << j.dump(2) << '\n';
}

void require_training(const RunConfig& rc, const std::string& why) {
    if (rc.training.phases.empty()) {
        throw Error(ErrorCode::InvalidConfig, "config: " + why + " needs a 'training' section with phases");
    }
}

TrainResult run_training(const RunConfig& rc, const Dataset& data, Index neurons, std::uint64_t seed,
                         const PhaseCallback& on_phase = {}) {
    TrainConfig tc = rc.training;
    tc.seed = seed;
    return rc.model.homogeneous ? train_homogeneous(data, rc.kernel, neurons, tc, on_phase)
                                : train(data, rc.kernel, neurons, tc, on_phase);
}

Checkpoint make_checkpoint(const RunConfig& rc, const ModelState& s, std::uint64_t seed) {
    return {s, {seed, sampler_seed(seed)}, rc.hash, std::nullopt};
}

const std::vector<int>& require_labels(const Dataset& d, const std::string& task) {
    if (!d.labels) {
        throw Error(ErrorCode::InvalidArgument, "analyze: task '" + task + "' needs a labelled dataset");
    }
    return *d.labels;
}

// Projection of the centered rows onto the top two principal axes.
Matrix top2_components(const Matrix& Z) {
    const Matrix C = Z.rowwise() - Z.colwise().mean();
    const auto eig = linalg::eig_descending(C.transpose() * C);
    Matrix P = Matrix::Zero(Z.rows(), 2);
    const Index k = std::min<Index>(2, eig.vectors.cols());
    P.leftCols(k) = C * eig.vectors.leftCols(k);
    return P;
}

}  // namespace

fs::path output_root(const std::optional<fs::path>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("KSM_OUT"); env && *env) return env;
    return "out";
}

fs::path run_directory(const RunConfig& rc, const std::optional<fs::path>& out_root) {
    return output_root(out_root) / rc.hash;
}

fs::path cmd_prepare(const CommandOptions& opts) {
    const RunConfig rc = load_config(opts.config, opts.seed);
    const fs::path dir = run_directory(rc, opts.out_root);
    const Dataset data = load_dataset(rc.dataset);
    write_dataset_csv(dir / "dataset.csv", data);
    say(opts, "dataset " + data.name + ": T=" + std::to_string(data.size()) + " M=" + std::to_string(data.dim()));
    return dir;
}

fs::path cmd_train(const CommandOptions& opts) {
    const RunConfig rc = load_config(opts.config, opts.seed);
    require_training(rc, "train");
    const fs::path dir = run_directory(rc, opts.out_root);
    const Dataset data = load_dataset(rc.dataset);
    const std::uint64_t seed = rc.training.seed;
    say(opts, "training " + rc.kernel.describe() + " N=" + std::to_string(rc.model.neurons) + " on " + data.name +
                  " (T=" + std::to_string(data.size()) + ") -> " + dir.string());

    const TrainResult result =
        run_training(rc, data, rc.model.neurons, seed, [&](std::size_t phase, const ModelState& s) {
            save_checkpoint(dir / ("checkpoint.phase" + std::to_string(phase) + ".json"),
                            make_checkpoint(rc, s, seed));
            say(opts, "phase " + std::to_string(phase) + " done");
        });
    save_checkpoint(dir / "checkpoint.json", make_checkpoint(rc, result.state, seed));
    result.log.write_csv(dir / "trainlog.csv", meta_for(rc, seed));

    json summary{{"config_hash", rc.hash},
                 {"seed", seed},
                 {"iterations", rc.training.total_iterations()},
                 {"final_mean_energy", result.log.entries.back().mean_energy}};
    const Matrix F = rc.kernel.gram(data.X);
    const ModelState init = init_model(rc.model.neurons, data.dim(), rc.kernel, rc.training.lambda, seed);
    summary["nrmse_initial"] = nrmse(F, response_closed_form(init, data.X).Y);
    summary["nrmse_final"] = nrmse(F, response_closed_form(result.state, data.X).Y);
    write_json(dir / "reports" / "train.json", summary);
    say(opts, "nrmse " + csv::format(summary["nrmse_initial"].get<double>()) + " -> " +
                  csv::format(summary["nrmse_final"].get<double>()));
    return dir;
}

fs::path cmd_compare(const CommandOptions& opts) {
    const RunConfig rc = load_config(opts.config, opts.seed);
    if (!rc.compare) {
        throw Error(ErrorCode::InvalidConfig, "config: compare needs a 'compare' section");
    }
    const CompareSpec& spec = *rc.compare;
    const auto wants = [&](const char* m) {
        return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end();
    };
    if (wants("hebbian") || wants("nystrom_learned")) {
        require_training(rc, "compare methods 'hebbian' and 'nystrom_learned'");
    }
    const fs::path dir = run_directory(rc, opts.out_root);
    const Dataset data = load_dataset(rc.dataset);
    const Matrix F = rc.kernel.gram(data.X);
    const Index max_dim = *std::max_element(spec.dims.begin(), spec.dims.end());
    if (max_dim > data.size()) {
        throw Error(ErrorCode::InvalidConfig, "config: 'compare.dims' exceeds the dataset size");
    }
    Matrix pca;
    if (wants("kernel_pca")) {
        pca = kernel_pca_features(F, max_dim);
    }

    std::vector<ApproxReport> rows;
    const std::string kname = rc.kernel.describe();
    auto add = [&](const std::string& method, Index n, std::uint64_t seed, const Matrix& Y) {
        rows.push_back({method, n, nrmse(F, Y), seed, data.name, kname});
        say(opts, method + " n=" + std::to_string(n) + " seed=" + std::to_string(seed) +
                      " nrmse=" + csv::format(rows.back().nrmse));
    };
    for (Index n : spec.dims) {
        for (std::uint64_t seed : spec.seeds) {
            // fixed method order regardless of how the config lists them
            if (wants("hebbian") || wants("nystrom_learned")) {
                const TrainResult r = run_training(rc, data, n, seed);
                save_checkpoint(dir / "checkpoints" / ("n" + std::to_string(n) + "_s" + std::to_string(seed) + ".json"),
                                make_checkpoint(rc, r.state, seed));
                if (wants("hebbian")) add("hebbian", n, seed, response_closed_form(r.state, data.X).Y);
                if (wants("nystrom_learned")) {
                    add("nystrom_learned", n, seed,
                        nystrom_features(rc.kernel, data.X, {r.state.W, LandmarkSource::LearnedHebbian}));
                }
            }
            if (wants("nystrom_uniform")) {
                add("nystrom_uniform", n, seed,
                    nystrom_features(rc.kernel, data.X, select_landmarks_uniform(data.X, n, seed)));
            }
            if (wants("nystrom_kmeans")) {
                add("nystrom_kmeans", n, seed,
                    nystrom_features(rc.kernel, data.X, select_landmarks_kmeans(data.X, n, seed)));
            }
            if (wants("rff")) {
                add("rff", n, seed, random_fourier_features(std::get<GaussianKernel>(rc.kernel.params()).sigma,
                                                            data.X, n, seed));
            }
            if (wants("kernel_pca")) add("kernel_pca", n, seed, pca.leftCols(n));
        }
    }

    write_reports_csv(dir / "reports" / "compare.csv", rows,
                      {{"config_hash", rc.hash}, {"normalization", "frobenius_relative"}});
    json j{{"config_hash", rc.hash}, {"normalization", "frobenius_relative"}, {"rows", json::array()}};
    for (const auto& r : rows) {
        j["rows"].push_back({{"method", r.method},
                             {"dim", r.dimensionality},
                             {"nrmse", r.nrmse},
                             {"seed", r.seed},
                             {"dataset", r.dataset},
                             {"kernel", r.kernel}});
    }
    write_json(dir / "reports" / "compare.json", j);
    return dir;
}

fs::path cmd_analyze(const CommandOptions& opts) {
    const RunConfig rc = load_config(opts.config, opts.seed);
    if (!rc.analyze || rc.analyze->tasks.empty()) {
        throw Error(ErrorCode::InvalidConfig, "config: analyze needs 'analyze.tasks'");
    }
    const AnalyzeSpec& spec = *rc.analyze;
    const fs::path dir = run_directory(rc, opts.out_root);
    const fs::path ckpt_path = opts.checkpoint.value_or(dir / "checkpoint.json");
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const ModelState& state = ckpt.state;
    const Dataset data = load_dataset(rc.dataset);
    if (data.dim() != state.input_dim()) {
        throw Error(ErrorCode::DimensionMismatch, "analyze: checkpoint expects M=" +
                                                      std::to_string(state.input_dim()) + ", dataset has M=" +
                                                      std::to_string(data.dim()));
    }
    const std::uint64_t seed = spec.seed;
    const Meta meta = meta_for(rc, seed);
    const Matrix Y = response_closed_form(state, data.X).Y;
    const SignFixed fixed = fix_sign_degeneracy(state, Y);
    const fs::path reports = dir / "reports";

    for (const std::string& task : spec.tasks) {
        say(opts, "analyze: " + task);
        if (task == "spectrum") {
            const Vector in = spectrum(state.kernel.gram(data.X));
            const Vector out = spectrum(Y * Y.transpose());
            auto f = csv::open(reports / "spectrum.csv");
            csv::write_preamble(f, meta);
            f << "index,input,output\n";
            for (Index i = 0; i < in.size(); ++i) {
                f << i << ',' << csv::format(in[i]) << ',' << csv::format(out[i]) << '\n';
            }
        } else if (task == "histogram") {
            const Histogram h = response_histogram(fixed.Y, spec.bins);
            Meta m = meta;
            m.emplace_back("excess_kurtosis", csv::format(h.excess_kurtosis));
            auto f = csv::open(reports / "histogram.csv");
            csv::write_preamble(f, m);
            f << "left,right,count\n";
            for (std::size_t b = 0; b < h.counts.size(); ++b) {
                f << csv::format(h.edges[b]) << ',' << csv::format(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
            }
        } else if (task == "rfields") {
            csv::write_matrix(reports / "rfields.csv", linearized_responses(data.X, fixed.Y), meta, "x");
        } else if (task == "cluster") {
            const auto& labels = require_labels(data, task);
            const Index k = static_cast<Index>(std::set<int>(labels.begin(), labels.end()).size());
            const ClusterEval on_y = kmeans_cluster_eval(Y, labels, k, spec.n_init, seed);
            const ClusterEval on_x = kmeans_cluster_eval(data.X, labels, k, spec.n_init, seed);
            write_json(reports / "cluster.json", {{"config_hash", rc.hash},
                                                  {"seed", seed},
                                                  {"k", k},
                                                  {"n_init", spec.n_init},
                                                  {"accuracy_y", on_y.accuracy},
                                                  {"accuracy_x", on_x.accuracy},
                                                  {"inertia_y", on_y.inertia},
                                                  {"inertia_x", on_x.inertia}});
        } else if (task == "classify") {
            const auto& labels = require_labels(data, task);
            Rng rng(seed);
            const std::vector<Index> order = sample_without_replacement(data.size(), data.size(), rng);
            const auto n_test = static_cast<Index>(static_cast<double>(data.size()) * spec.classify.test_fraction);
            const std::vector<Index> test(order.begin(), order.begin() + n_test);
            const std::vector<Index> trn(order.begin() + n_test, order.end());
            auto rows_of = [](const Matrix& Z, const std::vector<Index>& idx) {
                Matrix out(static_cast<Index>(idx.size()), Z.cols());
                for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = Z.row(idx[i]);
                return out;
            };
            auto labels_of = [&](const std::vector<Index>& idx) {
                std::vector<int> out;
                for (Index i : idx) out.push_back(labels[static_cast<std::size_t>(i)]);
                return out;
            };
            auto f = csv::open(reports / "classify.csv");
            csv::write_preamble(f, meta);
            f << "features,labels_per_class,best_weight_decay,train_accuracy,test_accuracy\n";
            for (const auto& [name, Z] : std::vector<std::pair<std::string, const Matrix*>>{{"y", &Y}, {"x", &data.X}}) {
                const auto rows = linear_classifier_eval(rows_of(*Z, trn), labels_of(trn), rows_of(*Z, test),
                                                         labels_of(test), spec.classify.labels_per_class,
                                                         spec.classify.weight_decays, spec.classify.seeds);
                for (const auto& r : rows) {
                    f << name << ',' << r.labels_per_class << ',' << csv::format(r.best_weight_decay) << ','
                      << csv::format(r.train_accuracy) << ',' << csv::format(r.test_accuracy) << '\n';
                }
            }
        } else if (task == "pca") {
            const Matrix px = top2_components(data.X), py = top2_components(fixed.Y);
            auto f = csv::open(reports / "pca.csv");
            csv::write_preamble(f, meta);
            f << "x_pc1,x_pc2,y_pc1,y_pc2" << (data.labels ? ",label\n" : "\n");
            for (Index t = 0; t < data.size(); ++t) {
                f << csv::format(px(t, 0)) << ',' << csv::format(px(t, 1)) << ',' << csv::format(py(t, 0)) << ','
                  << csv::format(py(t, 1));
                if (data.labels) f << ',' << (*data.labels)[static_cast<std::size_t>(t)];
                f << '\n';
            }
        }
    }
    return dir;
}

}  // namespace ksm::cli
