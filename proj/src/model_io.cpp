#include "pvcast/model_io.hpp"

#include <fstream>
#include <sstream>

#include "pvcast/errors.hpp"

namespace pvcast {

using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out.good()) throw DataError("failed while writing " + path);
}

std::string expect_kind(const json& j, const std::string& kind, const std::string& path) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw DataError(path + ": not a model file (missing kind tag)");
    const std::string got = j["kind"].get<std::string>();
    if (got != kind)
        throw DataError(path + ": expected a " + kind + " model, found \"" + got + "\"");
    return got;
}

const char* family_name(Family f) { return f == Family::Normal ? "normal" : "laplace"; }

Family family_from(const std::string& s) {
    if (s == "normal") return Family::Normal;
    if (s == "laplace") return Family::Laplace;
    throw DataError("unknown distribution family \"" + s + "\"");
}

const char* rule_name(ScoreRule r) {
    return r == ScoreRule::LogScore ? "log_score" : "crps";
}

ScoreRule rule_from(const std::string& s) {
    if (s == "log_score") return ScoreRule::LogScore;
    if (s == "crps") return ScoreRule::Crps;
    throw DataError("unknown scoring rule \"" + s + "\"");
}

const char* kernel_name(KernelKind k) {
    switch (k) {
        case KernelKind::RBF: return "rbf";
        case KernelKind::RQ: return "rq";
        case KernelKind::Periodic: return "periodic";
        case KernelKind::SumRQPer: return "rq_plus_periodic";
        case KernelKind::ProductRQPer: return "rq_times_periodic";
    }
    throw DataError("unknown kernel kind");
}

KernelKind kernel_from(const std::string& s) {
    if (s == "rbf") return KernelKind::RBF;
    if (s == "rq") return KernelKind::RQ;
    if (s == "periodic") return KernelKind::Periodic;
    if (s == "rq_plus_periodic") return KernelKind::SumRQPer;
    if (s == "rq_times_periodic") return KernelKind::ProductRQPer;
    throw DataError("unknown kernel kind \"" + s + "\"");
}

json scaler_to_json(const Scaler& s) {
    return json{{"mean", s.mean}, {"std", s.std}};
}

Scaler scaler_from_json(const json& j) {
    Scaler s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    if (s.mean.size() != s.std.size()) throw DataError("scaler arrays disagree in length");
    return s;
}

json kernel_params_to_json(const KernelParams& p) {
    return json{{"log_var", p.log_var},
                {"log_length", p.log_length},
                {"log_alpha", p.log_alpha},
                {"log_period", p.log_period}};
}

KernelParams kernel_params_from_json(const json& j) {
    KernelParams p;
    p.log_var = j.at("log_var").get<double>();
    p.log_length = j.at("log_length").get<double>();
    p.log_alpha = j.at("log_alpha").get<double>();
    p.log_period = j.at("log_period").get<double>();
    return p;
}

}  // namespace

json tree_to_json(const RegressionTree& tree) {
    json nodes = json::array();
    for (const TreeNode& n : tree.nodes) {
        nodes.push_back(json{{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"cover", n.cover},
                             {"value", n.value}});
    }
    return json{{"feature_count", tree.feature_count},
                {"max_depth", tree.max_depth},
                {"nodes", nodes}};
}

RegressionTree tree_from_json(const json& j) {
    RegressionTree tree;
    tree.feature_count = j.at("feature_count").get<std::size_t>();
    tree.max_depth = j.at("max_depth").get<int>();
    const json& nodes = j.at("nodes");
    if (!nodes.is_array() || nodes.empty())
        throw DataError("tree JSON must carry a nonempty node array");
    for (const json& nj : nodes) {
        TreeNode n;
        n.feature = nj.at("feature").get<int>();
        n.threshold = nj.at("threshold").get<double>();
        n.left = nj.at("left").get<int>();
        n.right = nj.at("right").get<int>();
        n.cover = nj.at("cover").get<std::int64_t>();
        n.value = nj.at("value").get<double>();
        tree.nodes.push_back(n);
    }
    const int count = static_cast<int>(tree.nodes.size());
    for (const TreeNode& n : tree.nodes) {
        const bool leaf = n.left < 0 && n.right < 0;
        if (!leaf && (n.left < 0 || n.left >= count || n.right < 0 || n.right >= count ||
                      n.feature < 0 || n.feature >= static_cast<int>(tree.feature_count)))
            throw DataError("tree JSON has out-of-range node links");
    }
    return tree;
}

void save_ngb_model(const NgbModel& model, const std::string& path) {
    json stages = json::array();
    for (const NgbStage& s : model.stages) {
        stages.push_back(json{{"rho", s.rho},
                              {"mu_tree", tree_to_json(s.tree_mu)},
                              {"scale_tree", tree_to_json(s.tree_log_scale)}});
    }
    const json j{
        {"kind", "ngboost"},
        {"config",
         json{{"n_stages", model.config.n_stages},
              {"learning_rate", model.config.learning_rate},
              {"max_depth", model.config.max_depth},
              {"min_samples_leaf", model.config.min_samples_leaf},
              {"family", family_name(model.config.family)},
              {"rule", rule_name(model.config.rule)},
              {"line_search",
               json{{"max_doublings", model.config.line_search.max_doublings},
                    {"rel_tol", model.config.line_search.rel_tol},
                    {"min_bracket", model.config.line_search.min_bracket}}}}},
        {"feature_names", model.feature_names},
        {"nominal_power", model.nominal_power},
        {"scaled", model.scaled},
        {"theta0", json{{"mu", model.theta0.mu}, {"log_scale", model.theta0.log_scale}}},
        {"theta0_floored", model.theta0_floored},
        {"stages", stages},
    };
    write_json_file(j, path);
}

NgbModel load_ngb_model(const std::string& path) {
    const json j = load_json_file(path);
    expect_kind(j, "ngboost", path);
    NgbModel model;
    try {
        const json& c = j.at("config");
        model.config.n_stages = c.at("n_stages").get<int>();
        model.config.learning_rate = c.at("learning_rate").get<double>();
        model.config.max_depth = c.at("max_depth").get<int>();
        model.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
        model.config.family = family_from(c.at("family").get<std::string>());
        model.config.rule = rule_from(c.at("rule").get<std::string>());
        const json& ls = c.at("line_search");
        model.config.line_search.max_doublings = ls.at("max_doublings").get<int>();
        model.config.line_search.rel_tol = ls.at("rel_tol").get<double>();
        model.config.line_search.min_bracket = ls.at("min_bracket").get<double>();

        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        model.nominal_power = j.at("nominal_power").get<double>();
        model.scaled = j.at("scaled").get<bool>();
        model.theta0.family = model.config.family;
        model.theta0.mu = j.at("theta0").at("mu").get<double>();
        model.theta0.log_scale = j.at("theta0").at("log_scale").get<double>();
        model.theta0_floored = j.at("theta0_floored").get<bool>();
        for (const json& sj : j.at("stages")) {
            NgbStage stage;
            stage.rho = sj.at("rho").get<double>();
            stage.tree_mu = tree_from_json(sj.at("mu_tree"));
            stage.tree_log_scale = tree_from_json(sj.at("scale_tree"));
            if (stage.tree_mu.feature_count != model.feature_names.size() ||
                stage.tree_log_scale.feature_count != model.feature_names.size())
                throw DataError("stage tree feature count disagrees with feature_names");
            model.stages.push_back(std::move(stage));
        }
    } catch (const json::exception& e) {
        throw DataError(path + ": invalid ngboost model: " + e.what());
    }
    return model;
}

void save_gp_model(const GpModel& model, const std::string& path) {
    const json j{
        {"kind", "gp"},
        {"kernel",
         json{{"kind", kernel_name(model.kernel.kind)},
              {"a", kernel_params_to_json(model.kernel.a)},
              {"b", kernel_params_to_json(model.kernel.b)},
              {"noise_variance", model.kernel.noise_variance}}},
        {"x_scaler", scaler_to_json(model.x_scaler)},
        {"y_mean", model.y_mean},
        {"y_std", model.y_std},
        {"rows", model.X.rows()},
        {"cols", model.X.cols()},
        {"x", model.X.data()},
        {"y", model.y_std_units},
        {"truncated", model.truncated},
        {"nlml_trace", model.nlml_trace},
    };
    write_json_file(j, path);
}

GpModel load_gp_model(const std::string& path) {
    const json j = load_json_file(path);
    expect_kind(j, "gp", path);
    GpModel model;
    try {
        const json& k = j.at("kernel");
        model.kernel.kind = kernel_from(k.at("kind").get<std::string>());
        model.kernel.a = kernel_params_from_json(k.at("a"));
        model.kernel.b = kernel_params_from_json(k.at("b"));
        model.kernel.noise_variance = k.at("noise_variance").get<double>();
        model.x_scaler = scaler_from_json(j.at("x_scaler"));
        model.y_mean = j.at("y_mean").get<double>();
        model.y_std = j.at("y_std").get<double>();
        const auto rows = j.at("rows").get<std::size_t>();
        const auto cols = j.at("cols").get<std::size_t>();
        const auto flat = j.at("x").get<std::vector<double>>();
        if (flat.size() != rows * cols)
            throw DataError("gp model: matrix payload size mismatch");
        model.X = Matrix(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) model.X(r, c) = flat[r * cols + c];
        model.y_std_units = j.at("y").get<std::vector<double>>();
        if (model.y_std_units.size() != rows)
            throw DataError("gp model: target payload size mismatch");
        model.truncated = j.at("truncated").get<bool>();
        model.nlml_trace = j.at("nlml_trace").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw DataError(path + ": invalid gp model: " + e.what());
    }
    gp_refactorize(model);
    return model;
}

void save_lube_model(const LubeNet& net, const std::string& path) {
    const json j{
        {"kind", "lube"},
        {"input_dim", net.input_dim},
        {"hidden", net.hidden},
        {"weights", net.weights},
        {"x_scaler", scaler_to_json(net.x_scaler)},
    };
    write_json_file(j, path);
}

LubeNet load_lube_model(const std::string& path) {
    const json j = load_json_file(path);
    expect_kind(j, "lube", path);
    LubeNet net;
    try {
        net.input_dim = j.at("input_dim").get<int>();
        net.hidden = j.at("hidden").get<int>();
        net.weights = j.at("weights").get<std::vector<double>>();
        net.x_scaler = scaler_from_json(j.at("x_scaler"));
    } catch (const json::exception& e) {
        throw DataError(path + ": invalid lube model: " + e.what());
    }
    const std::size_t expected =
        static_cast<std::size_t>(net.hidden) * static_cast<std::size_t>(net.input_dim + 3) + 2;
    if (net.input_dim < 1 || net.hidden < 1 || net.weights.size() != expected)
        throw DataError(path + ": inconsistent lube weight payload");
    return net;
}

std::string model_kind(const std::string& path) {
    const json j = load_json_file(path);
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw DataError(path + ": not a model file (missing kind tag)");
    return j["kind"].get<std::string>();
}

}  // namespace pvcast
