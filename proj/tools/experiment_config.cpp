#include "experiment_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace meerts::io {

std::string_view output_format_name(OutputFormat f) { return f == OutputFormat::json ? "json" : "csv"; }

std::optional<OutputFormat> parse_output_format(std::string_view name) {
    if (name == "csv") return OutputFormat::csv;
    if (name == "json") return OutputFormat::json;
    return std::nullopt;
}

std::vector<Algorithm> default_algorithms(const ScenarioSpec& spec) {
    if (spec.nonlinear())
        return {Algorithm::kf, Algorithm::rts, Algorithm::mckf, Algorithm::mc_rts, Algorithm::mee_kf,
                Algorithm::mee_erts};
    return {Algorithm::kf, Algorithm::rts, Algorithm::mckf, Algorithm::mc_rts, Algorithm::mee_kf, Algorithm::mee_rts};
}

namespace {

std::string_view noise_type_name(const NoiseSpec& spec) {
    struct V {
        std::string_view operator()(const MixedGaussian&) const { return "mixed-gaussian"; }
        std::string_view operator()(const AlphaStable&) const { return "alpha-stable"; }
        std::string_view operator()(const Rayleigh&) const { return "rayleigh"; }
        std::string_view operator()(const Gaussian&) const { return "gaussian"; }
        std::string_view operator()(const Mixture&) const { return "mixture"; }
    };
    return std::visit(V{}, spec.law);
}

/// Parsing context: every error carries source, line and column.
class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& field, const std::string& msg) const {
        std::ostringstream os;
        os << source_;
        const YAML::Mark mark = at.IsDefined() ? at.Mark() : YAML::Mark::null_mark();
        if (!mark.is_null())
            os << ':' << mark.line + 1 << ':' << mark.column + 1;
        os << ": " << field << ": " << msg;
        throw ConfigError(os.str());
    }

    void require_map(const YAML::Node& n, const std::string& field) const {
        if (!n.IsMap()) fail(n, field.empty() ? "config" : field, "expected a mapping");
    }

    void check_keys(const YAML::Node& n, const std::string& field, std::initializer_list<const char*> allowed) const {
        require_map(n, field);
        for (const auto& kv : n) {
            const std::string key = kv.first.as<std::string>();
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) fail(kv.first, join(field, key), "unknown field");
        }
    }

    YAML::Node required(const YAML::Node& parent, const std::string& parent_field, const char* key) const {
        const YAML::Node n = parent[key];
        if (!n) fail(parent, join(parent_field, key), "missing required field");
        return n;
    }

    std::string scalar(const YAML::Node& n, const std::string& field) const {
        if (!n.IsScalar()) fail(n, field, "expected a scalar");
        return n.Scalar();
    }

    double number(const YAML::Node& n, const std::string& field) const {
        const std::string s = scalar(n, field);
        double v = 0.0;
        try {
            v = n.as<double>();
        } catch (const YAML::Exception&) {
            fail(n, field, "expected a number, got '" + s + "'");
        }
        if (!std::isfinite(v)) fail(n, field, "must be finite");
        return v;
    }

    std::uint64_t unsigned_integer(const YAML::Node& n, const std::string& field) const {
        const std::string s = scalar(n, field);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            fail(n, field, "expected a non-negative integer, got '" + s + "'");
        return v;
    }

    std::size_t positive_count(const YAML::Node& n, const std::string& field) const {
        const std::uint64_t v = unsigned_integer(n, field);
        if (v < 1) fail(n, field, "must be >= 1");
        return static_cast<std::size_t>(v);
    }

    bool boolean(const YAML::Node& n, const std::string& field) const {
        const std::string s = scalar(n, field);
        if (s == "true") return true;
        if (s == "false") return false;
        fail(n, field, "expected true or false, got '" + s + "'");
    }

    std::vector<double> number_list(const YAML::Node& n, const std::string& field) const {
        if (!n.IsSequence()) fail(n, field, "expected a list of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], index(field, i)));
        return out;
    }

    Matrix matrix(const YAML::Node& n, const std::string& field) const {
        if (!n.IsSequence() || n.size() == 0) fail(n, field, "expected a non-empty list of rows");
        const auto rows = static_cast<Index>(n.size());
        Index cols = -1;
        Matrix M;
        for (Index i = 0; i < rows; ++i) {
            const YAML::Node row = n[static_cast<std::size_t>(i)];
            const std::string rf = index(field, static_cast<std::size_t>(i));
            const auto values = number_list(row, rf);
            if (cols < 0) {
                cols = static_cast<Index>(values.size());
                if (cols == 0) fail(row, rf, "rows must not be empty");
                M.resize(rows, cols);
            } else if (static_cast<Index>(values.size()) != cols) {
                fail(row, rf, "expected " + std::to_string(cols) + " entries");
            }
            for (Index j = 0; j < cols; ++j) M(i, j) = values[static_cast<std::size_t>(j)];
        }
        return M;
    }

    /// A matrix, or a scalar s meaning s I of the given size.
    Matrix covariance(const YAML::Node& n, const std::string& field, Index dim) const {
        if (n.IsScalar()) return number(n, field) * Matrix::Identity(dim, dim);
        return matrix(n, field);
    }

    NoiseSpec noise(const YAML::Node& n, const std::string& field) const {
        require_map(n, field);
        const std::string type = scalar(required(n, field, "type"), join(field, "type"));
        auto num = [&](const char* key) { return number(required(n, field, key), join(field, key)); };
        if (type == "mixed-gaussian") {
            check_keys(n, field, {"type", "lambda", "a1", "a2", "mu1", "mu2"});
            return NoiseSpec{MixedGaussian{num("lambda"), num("a1"), num("a2"), num("mu1"), num("mu2")}};
        }
        if (type == "alpha-stable") {
            check_keys(n, field, {"type", "a3", "b", "gamma", "theta"});
            return NoiseSpec{AlphaStable{num("a3"), num("b"), num("gamma"), num("theta")}};
        }
        if (type == "rayleigh") {
            check_keys(n, field, {"type", "sigma"});
            return NoiseSpec{Rayleigh{num("sigma")}};
        }
        if (type == "gaussian") {
            check_keys(n, field, {"type", "mean", "variance"});
            return NoiseSpec{Gaussian{num("mean"), num("variance")}};
        }
        if (type == "mixture") {
            check_keys(n, field, {"type", "weights", "components"});
            Mixture mix;
            mix.weights = number_list(required(n, field, "weights"), join(field, "weights"));
            const YAML::Node comps = required(n, field, "components");
            const std::string cf = join(field, "components");
            if (!comps.IsSequence()) fail(comps, cf, "expected a list of noise laws");
            for (std::size_t i = 0; i < comps.size(); ++i) mix.components.push_back(noise(comps[i], index(cf, i)));
            return NoiseSpec{std::move(mix)};
        }
        fail(n["type"], join(field, "type"),
             "unknown noise type '" + type + "' (expected mixed-gaussian, alpha-stable, rayleigh, gaussian or mixture)");
    }

    /// Either a single law (broadcast) or {components: [...], shaping: matrix}.
    VectorNoise vector_noise(const YAML::Node& n, const std::string& field) const {
        require_map(n, field);
        if (n["type"]) return VectorNoise{{noise(n, field)}, Matrix()};
        check_keys(n, field, {"components", "shaping"});
        VectorNoise out;
        const YAML::Node comps = required(n, field, "components");
        const std::string cf = join(field, "components");
        if (!comps.IsSequence() || comps.size() == 0) fail(comps, cf, "expected a non-empty list of noise laws");
        for (std::size_t i = 0; i < comps.size(); ++i) out.components.push_back(noise(comps[i], index(cf, i)));
        if (n["shaping"]) out.shaping = matrix(n["shaping"], join(field, "shaping"));
        return out;
    }

    static std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }
    static std::string index(const std::string& a, std::size_t i) { return a + "[" + std::to_string(i) + "]"; }

private:
    std::string source_;
};

void parse_model(const Reader& rd, const YAML::Node& n, const std::string& field, ScenarioSpec& spec) {
    rd.check_keys(n, field, {"type", "dt", "F", "H"});
    if (n["type"]) {
        const std::string t = rd.scalar(n["type"], field + ".type");
        const auto kind = parse_model_kind(t);
        if (!kind)
            rd.fail(n["type"], field + ".type",
                    "unknown model '" + t + "' (expected constant-acceleration, vehicle-tracking or linear)");
        spec.model = *kind;
    }
    if (n["dt"]) spec.dt = rd.number(n["dt"], field + ".dt");
    if (spec.model == ModelKind::linear) {
        if (n["F"]) spec.F = rd.matrix(n["F"], field + ".F");
        if (n["H"]) spec.H = rd.matrix(n["H"], field + ".H");
        if (spec.F.size() == 0) rd.fail(n, field + ".F", "missing required field");
        if (spec.H.size() == 0) rd.fail(n, field + ".H", "missing required field");
    } else if (n["F"] || n["H"]) {
        rd.fail(n["F"] ? n["F"] : n["H"], field, "F and H are only allowed for the linear model");
    }
}

ScenarioSpec parse_scenario(const Reader& rd, const YAML::Node& n, const std::string& field) {
    if (n.IsScalar()) {
        const std::string name = n.Scalar();
        auto spec = find_scenario(name);
        if (!spec) rd.fail(n, field, "unknown scenario '" + name + "' (see list-scenarios)");
        return *spec;
    }
    rd.check_keys(n, field,
                  {"name", "base", "description", "model", "filter_q", "process_noise", "filter_r",
                   "measurement_noise", "sensors", "horizon", "mc_runs", "mee_sigma", "mcc_sigma"});

    ScenarioSpec spec;
    spec.filter_Q.resize(0, 0);
    if (n["base"]) {
        const std::string base = rd.scalar(n["base"], field + ".base");
        auto b = find_scenario(base);
        if (!b) rd.fail(n["base"], field + ".base", "unknown scenario '" + base + "' (see list-scenarios)");
        spec = *b;
        spec.description.clear();
    }
    spec.name = rd.scalar(rd.required(n, field, "name"), field + ".name");
    if (spec.name.empty()) rd.fail(n["name"], field + ".name", "must not be empty");
    if (n["description"]) spec.description = rd.scalar(n["description"], field + ".description");
    if (n["model"]) {
        parse_model(rd, n["model"], field + ".model", spec);
    } else if (!n["base"]) {
        rd.fail(n, field + ".model", "missing required field");
    }

    const Index dim = spec.state_dim();
    if (n["filter_q"]) {
        spec.filter_Q = rd.covariance(n["filter_q"], field + ".filter_q", dim);
    } else if (!n["base"]) {
        rd.fail(n, field + ".filter_q", "missing required field");
    }
    if (n["process_noise"]) {
        spec.process_noise = rd.vector_noise(n["process_noise"], field + ".process_noise");
    } else if (!n["base"]) {
        rd.fail(n, field + ".process_noise", "missing required field");
    }

    const auto dims = spec.measurement_dims();
    const bool single = n["filter_r"] || n["measurement_noise"];
    if (n["sensors"] && single)
        rd.fail(n["sensors"], field + ".sensors", "give either sensors or filter_r/measurement_noise, not both");
    if (n["sensors"]) {
        const YAML::Node s = n["sensors"];
        const std::string sf = field + ".sensors";
        if (!s.IsSequence() || s.size() == 0) rd.fail(s, sf, "expected a non-empty list");
        spec.filter_R.clear();
        spec.measurement_noise.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            const std::string f = Reader::index(sf, i);
            rd.check_keys(s[i], f, {"filter_r", "noise"});
            const Index m = i < dims.size() ? dims[i] : 1;
            spec.filter_R.push_back(rd.covariance(rd.required(s[i], f, "filter_r"), f + ".filter_r", m));
            spec.measurement_noise.push_back(rd.vector_noise(rd.required(s[i], f, "noise"), f + ".noise"));
        }
    } else if (single) {
        if (dims.size() != 1)
            rd.fail(n, field, "this model has " + std::to_string(dims.size()) + " sensors; use the sensors list");
        if (n["filter_r"]) {
            spec.filter_R = {rd.covariance(n["filter_r"], field + ".filter_r", dims[0])};
        } else if (!n["base"]) {
            rd.fail(n, field + ".filter_r", "missing required field");
        }
        if (n["measurement_noise"]) {
            spec.measurement_noise = {rd.vector_noise(n["measurement_noise"], field + ".measurement_noise")};
        } else if (!n["base"]) {
            rd.fail(n, field + ".measurement_noise", "missing required field");
        }
    } else if (!n["base"]) {
        rd.fail(n, field + ".sensors", "missing required field");
    }

    if (n["horizon"]) spec.horizon = rd.positive_count(n["horizon"], field + ".horizon");
    if (n["mc_runs"]) spec.mc_runs = rd.positive_count(n["mc_runs"], field + ".mc_runs");
    if (n["mee_sigma"]) spec.mee_sigma = rd.number(n["mee_sigma"], field + ".mee_sigma");
    if (n["mcc_sigma"]) spec.mcc_sigma = rd.number(n["mcc_sigma"], field + ".mcc_sigma");
    return spec;
}

void validate_scenario(const Reader& rd, const YAML::Node& n, const std::string& field, const ScenarioSpec& spec) {
    try {
        spec.validate();
    } catch (const Error& e) {
        rd.fail(n, field, e.what());
    }
}

ExperimentConfig parse_root(const Reader& rd, YAML::Node root) {
    if (root.IsMap() && root["manifest_version"]) {
        // A manifest written by a previous run: replay its resolved config.
        root = rd.required(root, "", "config");
    }
    if (!root.IsDefined() || root.IsNull()) rd.fail(root, "scenario", "missing required field (empty config)");
    rd.check_keys(root, "",
                  {"scenario", "algorithms", "mee", "seed", "runs", "horizon", "output", "timing", "sweep"});

    ExperimentConfig cfg;
    const YAML::Node scen = rd.required(root, "", "scenario");
    cfg.scenario = parse_scenario(rd, scen, "scenario");

    std::optional<std::size_t> runs;
    std::optional<std::size_t> horizon;
    if (root["runs"]) runs = rd.positive_count(root["runs"], "runs");
    if (root["horizon"]) horizon = rd.positive_count(root["horizon"], "horizon");
    auto apply_overrides = [&](ScenarioSpec& s) {
        if (runs) s.mc_runs = *runs;
        if (horizon) s.horizon = *horizon;
    };
    apply_overrides(cfg.scenario);
    validate_scenario(rd, scen, "scenario", cfg.scenario);

    if (const YAML::Node a = root["algorithms"]) {
        if (!a.IsSequence() || a.size() == 0) rd.fail(a, "algorithms", "expected a non-empty list");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string f = Reader::index("algorithms", i);
            const std::string name = rd.scalar(a[i], f);
            const auto alg = parse_algorithm(name);
            if (!alg)
                rd.fail(a[i], f,
                        "unknown algorithm '" + name + "' (expected KF, RTS, MCKF, MC-RTS, MEE-KF, MEE-RTS or MEE-ERTS)");
            for (auto prev : cfg.algorithms)
                if (prev == *alg) rd.fail(a[i], f, "algorithm '" + name + "' listed twice");
            cfg.algorithms.push_back(*alg);
        }
    } else {
        cfg.algorithms = default_algorithms(cfg.scenario);
    }
    if (cfg.scenario.nonlinear())
        for (std::size_t i = 0; i < cfg.algorithms.size(); ++i)
            if (cfg.algorithms[i] == Algorithm::mee_rts)
                rd.fail(root["algorithms"], "algorithms", "MEE-RTS needs a linear model; use MEE-ERTS");

    cfg.mee.sigma = cfg.scenario.mee_sigma;
    if (const YAML::Node m = root["mee"]) {
        rd.check_keys(m, "mee", {"sigma", "tau", "max_iter", "jitter", "forgetting"});
        if (m["sigma"]) {
            cfg.mee.sigma = rd.number(m["sigma"], "mee.sigma");
            if (!(cfg.mee.sigma > 0.0)) rd.fail(m["sigma"], "mee.sigma", "must be > 0");
            cfg.scenario.mee_sigma = cfg.mee.sigma;
        }
        if (m["tau"]) {
            cfg.mee.tau = rd.number(m["tau"], "mee.tau");
            if (!(cfg.mee.tau > 0.0)) rd.fail(m["tau"], "mee.tau", "must be > 0");
        }
        if (m["max_iter"]) {
            const std::uint64_t it = rd.positive_count(m["max_iter"], "mee.max_iter");
            if (it > 100000) rd.fail(m["max_iter"], "mee.max_iter", "must be <= 100000");
            cfg.mee.max_iter = static_cast<int>(it);
        }
        if (m["jitter"]) {
            cfg.mee.jitter = rd.number(m["jitter"], "mee.jitter");
            if (cfg.mee.jitter < 0.0) rd.fail(m["jitter"], "mee.jitter", "must be >= 0");
        }
        if (m["forgetting"]) {
            cfg.mee.forgetting = rd.number(m["forgetting"], "mee.forgetting");
            if (!(cfg.mee.forgetting > 0.0 && cfg.mee.forgetting <= 1.0))
                rd.fail(m["forgetting"], "mee.forgetting", "must lie in (0, 1]");
        }
        try {
            cfg.mee.validate();
        } catch (const Error& e) {
            rd.fail(m, "mee", e.what());
        }
    }

    if (root["seed"]) cfg.seed = rd.unsigned_integer(root["seed"], "seed");
    if (root["timing"]) cfg.timing = rd.boolean(root["timing"], "timing");

    if (const YAML::Node o = root["output"]) {
        rd.check_keys(o, "output", {"dir", "format"});
        if (o["dir"]) {
            cfg.output_dir = rd.scalar(o["dir"], "output.dir");
            if (cfg.output_dir.empty()) rd.fail(o["dir"], "output.dir", "must not be empty");
        }
        if (o["format"]) {
            const std::string f = rd.scalar(o["format"], "output.format");
            const auto fmt = parse_output_format(f);
            if (!fmt) rd.fail(o["format"], "output.format", "expected csv or json, got '" + f + "'");
            cfg.format = *fmt;
        }
    }

    if (const YAML::Node s = root["sweep"]) {
        rd.check_keys(s, "sweep", {"parameter", "values", "scenarios"});
        SweepSpec sw;
        const YAML::Node p = rd.required(s, "sweep", "parameter");
        const std::string pname = rd.scalar(p, "sweep.parameter");
        const auto param = parse_sweep_parameter(pname);
        if (!param) rd.fail(p, "sweep.parameter", "expected sigma, tau or lambda, got '" + pname + "'");
        sw.parameter = *param;
        const YAML::Node v = rd.required(s, "sweep", "values");
        sw.values = rd.number_list(v, "sweep.values");
        if (sw.values.empty()) rd.fail(v, "sweep.values", "must not be empty");
        if (const YAML::Node list = s["scenarios"]) {
            if (!list.IsSequence() || list.size() == 0) rd.fail(list, "sweep.scenarios", "expected a non-empty list");
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string f = Reader::index("sweep.scenarios", i);
                ScenarioSpec sc = parse_scenario(rd, list[i], f);
                apply_overrides(sc);
                validate_scenario(rd, list[i], f, sc);
                if (sc.nonlinear())
                    for (auto alg : cfg.algorithms)
                        if (alg == Algorithm::mee_rts) rd.fail(list[i], f, "MEE-RTS needs a linear model");
                if (root["mee"] && root["mee"]["sigma"]) sc.mee_sigma = cfg.mee.sigma;
                sw.scenarios.push_back(std::move(sc));
            }
        }
        // Every value must be applicable before any work starts.
        for (std::size_t i = 0; i < sw.values.size(); ++i) {
            const std::string f = Reader::index("sweep.values", i);
            auto targets = sw.scenarios.empty() ? std::vector<ScenarioSpec>{cfg.scenario} : sw.scenarios;
            for (auto& t : targets) {
                MeeConfig mc = cfg.mee;
                try {
                    apply_sweep_value(sw.parameter, sw.values[i], t, mc);
                    t.validate();
                    mc.validate();
                } catch (const Error& e) {
                    rd.fail(v[i], f, e.what());
                }
            }
        }
        cfg.sweep = std::move(sw);
    }
    return cfg;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    const Reader rd(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": syntax error: " << e.msg;
        throw ConfigError(os.str());
    }
    try {
        return parse_root(rd, root);
    } catch (const YAML::Exception& e) {
        std::ostringstream os;
        os << source;
        if (!e.mark.is_null()) os << ':' << e.mark.line + 1 << ':' << e.mark.column + 1;
        os << ": " << e.msg;
        throw ConfigError(os.str());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json matrix_to_json(const Matrix& M) {
    auto rows = nlohmann::ordered_json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::ordered_json vector_noise_to_json(const VectorNoise& vn) {
    nlohmann::ordered_json j;
    auto comps = nlohmann::ordered_json::array();
    for (const auto& c : vn.components) comps.push_back(noise_to_json(c));
    j["components"] = std::move(comps);
    if (vn.shaping.size() > 0) j["shaping"] = matrix_to_json(vn.shaping);
    return j;
}

}  // namespace

nlohmann::ordered_json noise_to_json(const NoiseSpec& spec) {
    nlohmann::ordered_json j;
    j["type"] = std::string(noise_type_name(spec));
    std::visit(
        [&](const auto& law) {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, MixedGaussian>) {
                j["lambda"] = law.lambda;
                j["a1"] = law.a1;
                j["a2"] = law.a2;
                j["mu1"] = law.mu1;
                j["mu2"] = law.mu2;
            } else if constexpr (std::is_same_v<T, AlphaStable>) {
                j["a3"] = law.a3;
                j["b"] = law.b;
                j["gamma"] = law.gamma;
                j["theta"] = law.theta;
            } else if constexpr (std::is_same_v<T, Rayleigh>) {
                j["sigma"] = law.sigma;
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                j["mean"] = law.mean;
                j["variance"] = law.variance;
            } else {
                j["weights"] = law.weights;
                auto comps = nlohmann::ordered_json::array();
                for (const auto& c : law.components) comps.push_back(noise_to_json(c));
                j["components"] = std::move(comps);
            }
        },
        spec.law);
    return j;
}

nlohmann::ordered_json scenario_to_json(const ScenarioSpec& spec) {
    nlohmann::ordered_json j;
    j["name"] = spec.name;
    if (!spec.description.empty()) j["description"] = spec.description;
    nlohmann::ordered_json model;
    model["type"] = std::string(model_kind_name(spec.model));
    model["dt"] = spec.dt;
    if (spec.model == ModelKind::linear) {
        model["F"] = matrix_to_json(spec.F);
        model["H"] = matrix_to_json(spec.H);
    }
    j["model"] = std::move(model);
    j["filter_q"] = matrix_to_json(spec.filter_Q);
    j["process_noise"] = vector_noise_to_json(spec.process_noise);
    auto sensors = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < spec.filter_R.size(); ++s) {
        nlohmann::ordered_json e;
        e["filter_r"] = matrix_to_json(spec.filter_R[s]);
        e["noise"] = vector_noise_to_json(spec.measurement_noise.at(s));
        sensors.push_back(std::move(e));
    }
    j["sensors"] = std::move(sensors);
    j["horizon"] = spec.horizon;
    j["mc_runs"] = spec.mc_runs;
    j["mee_sigma"] = spec.mee_sigma;
    j["mcc_sigma"] = spec.mcc_sigma;
    return j;
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["scenario"] = scenario_to_json(cfg.scenario);
    auto algs = nlohmann::ordered_json::array();
    for (auto a : cfg.algorithms) algs.push_back(std::string(algorithm_name(a)));
    j["algorithms"] = std::move(algs);
    nlohmann::ordered_json mee;
    // sigma lives in each scenario's mee_sigma, so sweeps over several
    // scenarios keep their own bandwidths.
    mee["tau"] = cfg.mee.tau;
    mee["max_iter"] = cfg.mee.max_iter;
    mee["jitter"] = cfg.mee.jitter;
    mee["forgetting"] = cfg.mee.forgetting;
    j["mee"] = std::move(mee);
    j["seed"] = cfg.seed;
    j["output"] = {{"format", std::string(output_format_name(cfg.format))}};
    j["timing"] = cfg.timing;
    if (cfg.sweep) {
        nlohmann::ordered_json s;
        s["parameter"] = std::string(sweep_parameter_name(cfg.sweep->parameter));
        s["values"] = cfg.sweep->values;
        if (!cfg.sweep->scenarios.empty()) {
            auto list = nlohmann::ordered_json::array();
            for (const auto& sc : cfg.sweep->scenarios) list.push_back(scenario_to_json(sc));
            s["scenarios"] = std::move(list);
        }
        j["sweep"] = std::move(s);
    }
    return j;
}

}  // namespace meerts::io
