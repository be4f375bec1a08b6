#include "clickcfa/recipe.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "clickcfa/errors.hpp"
#include "clickcfa/tensor.hpp"

namespace clickcfa {

const char* model_kind_name(ModelKind m) {
    switch (m) {
    case ModelKind::Gru: return "gru";
    case ModelKind::Cnn: return "cnn";
    case ModelKind::Ngram3: return "3gram";
    case ModelKind::Ngram4: return "4gram";
    }
    return "?";
}

const char* criterion_name(Criterion c) { return c == Criterion::C1 ? "C1" : "C2"; }

std::string TrainRecipe::name() const {
    if (model != ModelKind::Gru) return model_kind_name(model);
    std::string n;
    if (pretrain) n += "pre-";
    n += "gru";
    if (meta) {
        n += "-meta-";
        n += criterion == Criterion::C1 ? "c1" : "c2";
    }
    return n;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ModelKind model_from_string(const std::string& s) {
    if (s == "gru") return ModelKind::Gru;
    if (s == "cnn") return ModelKind::Cnn;
    if (s == "3gram" || s == "ngram3") return ModelKind::Ngram3;
    if (s == "4gram" || s == "ngram4") return ModelKind::Ngram4;
    fail(ErrorKind::Usage, "unknown model kind: " + s);
}

} // namespace

std::map<std::string, std::string> recipe_to_map(const TrainRecipe& r) {
    std::map<std::string, std::string> kv;
    kv["model"] = model_kind_name(r.model);
    kv["pretrain"] = r.pretrain ? "1" : "0";
    kv["meta"] = r.meta ? "1" : "0";
    kv["criterion"] = criterion_name(r.criterion);
    kv["hidden_dim"] = std::to_string(r.hidden_dim);
    kv["batch_size"] = std::to_string(r.batch_size);
    kv["meta_batch_size"] = std::to_string(r.meta_batch_size);
    kv["lr"] = fmt_double(r.lr);
    kv["meta_lr"] = fmt_double(r.meta_lr);
    kv["epochs"] = std::to_string(r.epochs);
    kv["pretrain_epochs"] = std::to_string(r.pretrain_epochs);
    kv["meta_fraction"] = fmt_double(r.meta_fraction);
    kv["n_folds"] = std::to_string(r.n_folds);
    kv["cluster_k_min"] = std::to_string(r.cluster_k_min);
    kv["cluster_k_max"] = std::to_string(r.cluster_k_max);
    kv["seed"] = std::to_string(r.seed);
    kv["stratify_folds"] = r.stratify_folds ? "1" : "0";
    kv["f1_positive_cfa"] = r.f1_positive_cfa ? "1" : "0";
    kv["pretrain_gap_marker"] = r.pretrain_gap_marker ? "1" : "0";
    kv["standardize_weight_input"] = r.standardize_weight_input ? "1" : "0";
    kv["theta_update_per_epoch"] = r.theta_update_per_epoch ? "1" : "0";
    kv["conv_channels"] = std::to_string(r.conv_channels);
    kv["conv_kernel"] = std::to_string(r.conv_kernel);
    kv["eps_skip"] = fmt_double(r.encoding.eps_skip);
    kv["coalesce_window"] = fmt_double(r.encoding.coalesce_window);
    kv["rate_max"] = fmt_double(r.encoding.rate_max);
    kv["dt_cap"] = fmt_double(r.encoding.dt_cap);
    return kv;
}

TrainRecipe recipe_from_map(const std::map<std::string, std::string>& kv) {
    TrainRecipe r;
    auto get = [&](const char* key, auto&& apply) {
        auto it = kv.find(key);
        if (it != kv.end()) apply(it->second);
    };
    auto to_u = [](const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); };
    get("model", [&](const std::string& s) { r.model = model_from_string(s); });
    get("pretrain", [&](const std::string& s) { r.pretrain = s == "1"; });
    get("meta", [&](const std::string& s) { r.meta = s == "1"; });
    get("criterion", [&](const std::string& s) {
        if (s == "C1" || s == "c1")
            r.criterion = Criterion::C1;
        else if (s == "C2" || s == "c2")
            r.criterion = Criterion::C2;
        else
            fail(ErrorKind::Usage, "unknown criterion: " + s);
    });
    get("hidden_dim", [&](const std::string& s) { r.hidden_dim = to_u(s); });
    get("batch_size", [&](const std::string& s) { r.batch_size = to_u(s); });
    get("meta_batch_size", [&](const std::string& s) { r.meta_batch_size = to_u(s); });
    get("lr", [&](const std::string& s) { r.lr = std::stod(s); });
    get("meta_lr", [&](const std::string& s) { r.meta_lr = std::stod(s); });
    get("epochs", [&](const std::string& s) { r.epochs = to_u(s); });
    get("pretrain_epochs", [&](const std::string& s) { r.pretrain_epochs = to_u(s); });
    get("meta_fraction", [&](const std::string& s) { r.meta_fraction = std::stod(s); });
    get("n_folds", [&](const std::string& s) { r.n_folds = to_u(s); });
    get("cluster_k_min", [&](const std::string& s) { r.cluster_k_min = std::stoi(s); });
    get("cluster_k_max", [&](const std::string& s) { r.cluster_k_max = std::stoi(s); });
    get("seed", [&](const std::string& s) { r.seed = std::stoull(s); });
    get("stratify_folds", [&](const std::string& s) { r.stratify_folds = s == "1"; });
    get("f1_positive_cfa", [&](const std::string& s) { r.f1_positive_cfa = s == "1"; });
    get("pretrain_gap_marker", [&](const std::string& s) { r.pretrain_gap_marker = s == "1"; });
    get("standardize_weight_input",
        [&](const std::string& s) { r.standardize_weight_input = s == "1"; });
    get("theta_update_per_epoch",
        [&](const std::string& s) { r.theta_update_per_epoch = s == "1"; });
    get("conv_channels", [&](const std::string& s) { r.conv_channels = to_u(s); });
    get("conv_kernel", [&](const std::string& s) { r.conv_kernel = to_u(s); });
    get("eps_skip", [&](const std::string& s) { r.encoding.eps_skip = std::stod(s); });
    get("coalesce_window",
        [&](const std::string& s) { r.encoding.coalesce_window = std::stod(s); });
    get("rate_max", [&](const std::string& s) { r.encoding.rate_max = std::stod(s); });
    get("dt_cap", [&](const std::string& s) { r.encoding.dt_cap = std::stod(s); });
    validate_recipe(r);
    return r;
}

bool is_recipe_preset(const std::string& name) {
    static const char* names[] = {"gru",         "pre-gru",        "gru-meta-c1",
                                  "gru-meta-c2", "pre-gru-meta-c1", "pre-gru-meta-c2",
                                  "3gram",       "4gram",           "cnn"};
    for (const char* n : names)
        if (name == n) return true;
    return false;
}

TrainRecipe recipe_preset(const std::string& name) {
    TrainRecipe r;
    if (name == "gru") {
        // defaults
    } else if (name == "pre-gru") {
        r.pretrain = true;
    } else if (name == "gru-meta-c1") {
        r.meta = true;
        r.criterion = Criterion::C1;
    } else if (name == "gru-meta-c2") {
        r.meta = true;
        r.criterion = Criterion::C2;
    } else if (name == "pre-gru-meta-c1") {
        r.pretrain = true;
        r.meta = true;
        r.criterion = Criterion::C1;
    } else if (name == "pre-gru-meta-c2") {
        r.pretrain = true;
        r.meta = true;
        r.criterion = Criterion::C2;
    } else if (name == "3gram" || name == "ngram3") {
        r.model = ModelKind::Ngram3;
    } else if (name == "4gram" || name == "ngram4") {
        r.model = ModelKind::Ngram4;
    } else if (name == "cnn") {
        r.model = ModelKind::Cnn;
    } else {
        fail(ErrorKind::Usage, "unknown recipe preset: " + name);
    }
    return r;
}

std::string recipe_fingerprint(const TrainRecipe& r) {
    std::string blob;
    for (const auto& [k, v] : recipe_to_map(r)) blob += k + "=" + v + "\n";
    const std::uint64_t h = nn::fnv1a(blob.data(), blob.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void validate_recipe(const TrainRecipe& r) {
    if (r.batch_size == 0 || r.meta_batch_size == 0)
        fail(ErrorKind::Usage, "batch sizes must be positive");
    if (r.lr <= 0.0) fail(ErrorKind::Usage, "learning rate must be positive");
    if (r.meta_lr < 0.0) fail(ErrorKind::Usage, "meta learning rate must be non-negative");
    if (r.hidden_dim == 0) fail(ErrorKind::Usage, "hidden_dim must be positive");
    if (r.n_folds < 2) fail(ErrorKind::Usage, "n_folds must be at least 2");
    if (r.cluster_k_min < 2 || r.cluster_k_max < r.cluster_k_min)
        fail(ErrorKind::Usage, "bad cluster k range");
    if (r.meta && (r.meta_fraction <= 0.0 || r.meta_fraction >= 0.5))
        fail(ErrorKind::Usage, "meta_fraction must be in (0, 0.5)");
    if (r.pretrain && (r.model == ModelKind::Ngram3 || r.model == ModelKind::Ngram4))
        fail(ErrorKind::Usage, "n-gram models cannot use pre-training (incompatible input space)");
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot read config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Usage, "bad config line (expected key=value): " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void write_kv_file(const std::string& path, const std::map<std::string, std::string>& kv) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write config file: " + path);
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

} // namespace clickcfa
