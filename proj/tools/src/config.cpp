#include "ksm_cli/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

namespace ksm::cli {
namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        fail("config: '" + section + "' must be an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.count(key)) {
            fail("config: unknown key '" + key + "' in '" + section + "'");
        }
    }
}

template <typename T>
T get(const json& j, const char* key, const std::string& section, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail("config: '" + section + "." + key + "' has the wrong type");
    }
}

template <typename T>
T require(const json& j, const char* key, const std::string& section) {
    if (!j.contains(key)) {
        fail("config: missing '" + section + "." + key + "'");
    }
    return get<T>(j, key, section, T{});
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : base / p; }

DatasetSpec parse_dataset(const json& j, const fs::path& base) {
    DatasetSpec d;
    d.kind = require<std::string>(j, "kind", "dataset");
    if (d.kind == "half_moons") {
        check_keys(j, "dataset", {"kind", "count", "noise_std", "seed"});
        d.count = get<Index>(j, "count", "dataset", d.count);
        d.noise_std = get<double>(j, "noise_std", "dataset", d.noise_std);
        d.seed = get<std::uint64_t>(j, "seed", "dataset", d.seed);
        if (d.count < 2) fail("config: 'dataset.count' must be at least 2");
        if (!(d.noise_std >= 0.0)) fail("config: 'dataset.noise_std' must be non-negative");
    } else if (d.kind == "idx") {
        check_keys(j, "dataset", {"kind", "images", "labels", "crop", "subsample", "full_scale", "seed"});
        d.images = resolve(require<std::string>(j, "images", "dataset"), base);
        if (j.contains("labels")) {
            d.labels = resolve(require<std::string>(j, "labels", "dataset"), base);
        }
        d.crop = get<int>(j, "crop", "dataset", d.crop);
        d.subsample = get<Index>(j, "subsample", "dataset", d.subsample);
        d.full_scale = get<bool>(j, "full_scale", "dataset", d.full_scale);
        d.seed = get<std::uint64_t>(j, "seed", "dataset", d.seed);
        if (d.crop < 0) fail("config: 'dataset.crop' must be non-negative");
        if (d.subsample < 1) fail("config: 'dataset.subsample' must be positive");
    } else if (d.kind == "csv") {
        check_keys(j, "dataset", {"kind", "path"});
        d.path = resolve(require<std::string>(j, "path", "dataset"), base);
    } else {
        fail("config: unknown dataset kind '" + d.kind + "' (expected half_moons, idx or csv)");
    }
    return d;
}

TrainConfig parse_training(const json& j) {
    check_keys(j, "training",
               {"schedule", "phases", "batch_size", "seed", "q_floor", "log_every"});
    TrainConfig c;
    if (j.contains("schedule")) {
        const auto name = require<std::string>(j, "schedule", "training");
        if (name == "half_moons") {
            c = half_moons_schedule();
        } else if (name == "mnist") {
            c = mnist_schedule();
        } else {
            fail("config: unknown 'training.schedule' '" + name + "' (expected half_moons or mnist)");
        }
    }
    if (j.contains("phases")) {
        if (!j["phases"].is_array()) fail("config: 'training.phases' must be an array");
        c.phases.clear();
        for (std::size_t p = 0; p < j["phases"].size(); ++p) {
            const json& ph = j["phases"][p];
            const std::string where = "training.phases[" + std::to_string(p) + "]";
            check_keys(ph, where, {"iterations", "eta_w", "eta_q", "eta_l"});
            c.phases.push_back({require<int>(ph, "iterations", where), get<double>(ph, "eta_w", where, 0.0),
                                get<double>(ph, "eta_q", where, 0.0), get<double>(ph, "eta_l", where, 0.0)});
        }
    }
    c.batch_size = get<Index>(j, "batch_size", "training", c.batch_size);
    c.seed = get<std::uint64_t>(j, "seed", "training", c.seed);
    c.q_floor = get<double>(j, "q_floor", "training", c.q_floor);
    c.log_every = get<int>(j, "log_every", "training", c.log_every);
    return c;
}

CompareSpec parse_compare(const json& j) {
    check_keys(j, "compare", {"dims", "methods", "seeds"});
    CompareSpec c;
    c.dims = require<std::vector<Index>>(j, "dims", "compare");
    c.methods = require<std::vector<std::string>>(j, "methods", "compare");
    c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", "compare", c.seeds);
    if (c.dims.empty() || c.methods.empty() || c.seeds.empty()) {
        fail("config: 'compare.dims', 'compare.methods' and 'compare.seeds' must be non-empty");
    }
    for (Index d : c.dims) {
        if (d < 1) fail("config: 'compare.dims' entries must be positive");
    }
    for (const auto& m : c.methods) {
        if (std::find(kCompareMethods.begin(), kCompareMethods.end(), m) == kCompareMethods.end()) {
            fail("config: unknown compare method '" + m + "'");
        }
    }
    return c;
}

AnalyzeSpec parse_analyze(const json& j) {
    check_keys(j, "analyze", {"tasks", "bins", "n_init", "seed", "classify"});
    AnalyzeSpec a;
    a.tasks = get<std::vector<std::string>>(j, "tasks", "analyze", a.tasks);
    a.bins = get<int>(j, "bins", "analyze", a.bins);
    a.n_init = get<int>(j, "n_init", "analyze", a.n_init);
    a.seed = get<std::uint64_t>(j, "seed", "analyze", a.seed);
    for (const auto& t : a.tasks) {
        if (std::find(kAnalyzeTasks.begin(), kAnalyzeTasks.end(), t) == kAnalyzeTasks.end()) {
            fail("config: unknown analyze task '" + t + "'");
        }
    }
    if (a.bins < 1) fail("config: 'analyze.bins' must be positive");
    if (a.n_init < 1) fail("config: 'analyze.n_init' must be positive");
    if (j.contains("classify")) {
        const json& c = j["classify"];
        check_keys(c, "analyze.classify", {"labels_per_class", "weight_decays", "seeds", "test_fraction"});
        ClassifySpec& s = a.classify;
        s.labels_per_class = get(c, "labels_per_class", "analyze.classify", s.labels_per_class);
        s.weight_decays = get(c, "weight_decays", "analyze.classify", s.weight_decays);
        s.seeds = get(c, "seeds", "analyze.classify", s.seeds);
        s.test_fraction = get(c, "test_fraction", "analyze.classify", s.test_fraction);
        if (!(s.test_fraction > 0.0 && s.test_fraction < 1.0)) {
            fail("config: 'analyze.classify.test_fraction' must lie in (0, 1)");
        }
    }
    return a;
}

}  // namespace

std::string config_hash(const json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(json j, const fs::path& base_dir, std::optional<std::uint64_t> seed_override) {
    check_keys(j, "config", {"dataset", "kernel", "model", "training", "compare", "analyze"});
    if (seed_override) {
        // one seed for every stochastic stage except dataset generation
        if (j.contains("training")) j["training"]["seed"] = *seed_override;
        if (j.contains("compare") && j["compare"].is_object()) j["compare"]["seeds"] = {*seed_override};
        if (j.contains("analyze") && j["analyze"].is_object()) j["analyze"]["seed"] = *seed_override;
    }
    RunConfig rc;
    if (!j.contains("dataset")) fail("config: missing 'dataset'");
    if (!j.contains("kernel")) fail("config: missing 'kernel'");
    rc.dataset = parse_dataset(j["dataset"], base_dir);
    rc.kernel = kernel_from_json(j["kernel"]);

    const json model = j.value("model", json::object());
    check_keys(model, "model", {"neurons", "lambda", "homogeneous"});
    rc.model.neurons = get<Index>(model, "neurons", "model", rc.model.neurons);
    rc.model.homogeneous = get<bool>(model, "homogeneous", "model", rc.model.homogeneous);
    if (rc.model.neurons < 1) fail("config: 'model.neurons' must be positive");
    if (rc.model.homogeneous && !rc.kernel.homogeneity()) {
        fail("config: 'model.homogeneous' requires a kernel with a homogeneity degree, got '" +
             rc.kernel.describe() + "'");
    }

    rc.training = parse_training(j.value("training", json::object()));
    rc.training.lambda = get<double>(model, "lambda", "model", rc.training.lambda);
    if (j.contains("training")) {
        rc.training.validate();
    }
    if (j.contains("compare")) rc.compare = parse_compare(j["compare"]);
    if (j.contains("analyze")) rc.analyze = parse_analyze(j["analyze"]);
    if (rc.compare && rc.kernel.kind() != KernelKind::Gaussian &&
        std::find(rc.compare->methods.begin(), rc.compare->methods.end(), "rff") != rc.compare->methods.end()) {
        fail("config: compare method 'rff' needs a gaussian kernel, got '" + rc.kernel.describe() + "'");
    }
    rc.raw = std::move(j);
    rc.hash = config_hash(rc.raw);
    return rc;
}

RunConfig load_config(const fs::path& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "config: cannot open '" + path.string() + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail("config: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(std::move(j), path.parent_path(), seed_override);
}

Dataset load_dataset(const DatasetSpec& spec) {
    if (spec.kind == "half_moons") {
        return make_half_moons(spec.count, spec.noise_std, spec.seed);
    }
    if (spec.kind == "idx") {
        Dataset d = load_idx_images(spec.images, spec.labels, spec.crop);
        d.name = spec.images.stem().string();
        if (!spec.full_scale && spec.subsample < d.size()) {
            d = subsample(d, spec.subsample, spec.seed);
        }
        return d;
    }
    Dataset d = read_dataset_csv(spec.path);
    d.name = spec.path.stem().string();
    return d;
}

}  // namespace ksm::cli
