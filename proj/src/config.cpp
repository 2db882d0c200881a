#include "tmac/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "tmac/error.hpp"

namespace tmac {

using nlohmann::json;

namespace {

void require_object(const json& j, std::string_view where) {
    if (!j.is_object()) throw InputError(std::string(where) + " must be a JSON object");
}

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto k : keys) known = known || key == k;
        if (!known) throw InputError("unknown key '" + key + "' in " + std::string(where));
    }
}

std::string path_of(std::string_view where, std::string_view key) {
    return std::string(where) + "." + std::string(key);
}

double get_double(const json& j, std::string_view name) {
    if (!j.is_number()) throw InputError(std::string(name) + " must be a number");
    return j.get<double>();
}

std::uint64_t get_uint(const json& j, std::string_view name) {
    if (!j.is_number_unsigned()) throw InputError(std::string(name) + " must be a nonnegative integer");
    return j.get<std::uint64_t>();
}

bool get_bool(const json& j, std::string_view name) {
    if (!j.is_boolean()) throw InputError(std::string(name) + " must be true or false");
    return j.get<bool>();
}

std::string get_string(const json& j, std::string_view name) {
    if (!j.is_string()) throw InputError(std::string(name) + " must be a string");
    return j.get<std::string>();
}

// A scalar or a list of scalars.
template <typename T, typename Get>
std::vector<T> get_list(const json& j, std::string_view name, Get&& get) {
    std::vector<T> out;
    if (j.is_array()) {
        if (j.empty()) throw InputError(std::string(name) + " must not be empty");
        for (const auto& e : j) out.push_back(get(e, name));
    } else {
        out.push_back(get(j, name));
    }
    return out;
}

std::size_t get_size(const json& j, std::string_view name) { return static_cast<std::size_t>(get_uint(j, name)); }

RankScheme get_scheme(const json& j, std::string_view name) {
    try {
        return parse_rank_scheme(get_string(j, name));
    } catch (const InputError& e) {
        throw InputError(std::string(name) + ": " + e.what());
    }
}

MethodVariant parse_method(const json& j) {
    if (j.is_string()) return MethodVariant::of(parse_method_kind(j.get<std::string>()));
    require_object(j, "methods entry");
    reject_unknown(j, "methods entry", {"kind", "label", "alphas"});
    if (!j.contains("kind")) throw InputError("methods entry needs a 'kind'");
    MethodVariant v = MethodVariant::of(parse_method_kind(get_string(j["kind"], "methods.kind")));
    if (j.contains("label")) v.label = get_string(j["label"], "methods.label");
    if (v.label.empty() || v.label.find_first_of(",/\\\n") != std::string::npos)
        throw InputError("methods.label must be nonempty and free of ',', '/', '\\'");
    if (j.contains("alphas")) {
        if (v.kind == MethodKind::MatComp || v.kind == MethodKind::SquareDeal)
            throw InputError("methods.alphas applies to TMac kinds only");
        v.alphas = get_list<double>(j["alphas"], "methods.alphas", get_double);
    }
    return v;
}

}  // namespace

SolverConfig parse_solver_config(const json& j, SolverConfig cfg) {
    constexpr std::string_view where = "solver";
    require_object(j, where);
    reject_unknown(j, where,
                   {"alphas", "dynamic_weights", "ranks", "scheme", "rank_increment", "rank_max", "tol",
                    "max_iters", "seed", "pinv_tol", "svd_tol", "gap_threshold",
                    "slow_progress_threshold", "x_update"});
    auto has = [&](const char* k) { return j.contains(k); };
    auto key = [&](const char* k) { return path_of(where, k); };
    if (has("alphas")) cfg.alphas = get_list<double>(j["alphas"], key("alphas"), get_double);
    if (has("dynamic_weights")) cfg.dynamic_weights = get_bool(j["dynamic_weights"], key("dynamic_weights"));
    if (has("ranks")) cfg.ranks = get_list<std::size_t>(j["ranks"], key("ranks"), get_size);
    if (has("scheme")) cfg.scheme = get_list<RankScheme>(j["scheme"], key("scheme"), get_scheme);
    if (has("rank_increment"))
        cfg.rank_increment = get_list<std::size_t>(j["rank_increment"], key("rank_increment"), get_size);
    if (has("rank_max")) cfg.rank_max = get_list<std::size_t>(j["rank_max"], key("rank_max"), get_size);
    if (has("tol")) cfg.tol = get_double(j["tol"], key("tol"));
    if (has("max_iters")) cfg.max_iters = get_size(j["max_iters"], key("max_iters"));
    if (has("seed")) cfg.seed = get_uint(j["seed"], key("seed"));
    if (has("pinv_tol")) cfg.pinv_tol = get_double(j["pinv_tol"], key("pinv_tol"));
    if (has("svd_tol")) cfg.svd_tol = get_double(j["svd_tol"], key("svd_tol"));
    if (has("gap_threshold")) cfg.gap_threshold = get_double(j["gap_threshold"], key("gap_threshold"));
    if (has("slow_progress_threshold"))
        cfg.slow_progress_threshold = get_double(j["slow_progress_threshold"], key("slow_progress_threshold"));
    if (has("x_update")) {
        const std::string s = get_string(j["x_update"], key("x_update"));
        if (s == "plain")
            cfg.x_update = XUpdate::Plain;
        else if (s == "pinv")
            cfg.x_update = XUpdate::PseudoInverse;
        else
            throw InputError("solver.x_update must be 'plain' or 'pinv'");
    }
    return cfg;
}

SynthSpec parse_synth_spec(const json& j, SynthSpec spec) {
    constexpr std::string_view where = "synth";
    require_object(j, where);
    reject_unknown(j, where, {"dims", "rank", "family", "sr", "sigma", "seed"});
    if (j.contains("dims")) {
        if (!j["dims"].is_array()) throw InputError("synth.dims must be a list");
        spec.dims = get_list<std::size_t>(j["dims"], "synth.dims", get_size);
    }
    if (j.contains("rank")) spec.rank = get_size(j["rank"], "synth.rank");
    if (j.contains("family")) spec.family = parse_family(get_string(j["family"], "synth.family"));
    if (j.contains("sr")) spec.sr = get_double(j["sr"], "synth.sr");
    if (j.contains("sigma")) spec.sigma = get_double(j["sigma"], "synth.sigma");
    if (j.contains("seed")) spec.seed = get_uint(j["seed"], "synth.seed");
    return spec;
}

RunConfig parse_run_config(const json& j) {
    require_object(j, "config");
    reject_unknown(j, "config", {"solver", "synth", "grid", "methods", "seed", "threads"});
    RunConfig rc;
    if (j.contains("solver")) rc.solver = parse_solver_config(j["solver"]);
    if (j.contains("synth")) rc.synth = parse_synth_spec(j["synth"]);
    if (j.contains("grid")) {
        const json& g = j["grid"];
        require_object(g, "grid");
        reject_unknown(g, "grid", {"ranks", "srs", "trials", "success_relerr"});
        if (g.contains("ranks")) rc.grid.ranks = get_list<std::size_t>(g["ranks"], "grid.ranks", get_size);
        if (g.contains("srs")) rc.grid.srs = get_list<double>(g["srs"], "grid.srs", get_double);
        if (g.contains("trials")) rc.grid.trials = get_size(g["trials"], "grid.trials");
        if (g.contains("success_relerr"))
            rc.success_relerr = get_double(g["success_relerr"], "grid.success_relerr");
    }
    if (j.contains("methods")) {
        const json& m = j["methods"];
        if (!m.is_array() || m.empty()) throw InputError("methods must be a nonempty list");
        rc.methods.clear();
        for (const auto& e : m) rc.methods.push_back(parse_method(e));
        for (std::size_t a = 0; a < rc.methods.size(); ++a)
            for (std::size_t b = a + 1; b < rc.methods.size(); ++b)
                if (rc.methods[a].label == rc.methods[b].label)
                    throw InputError("duplicate method label '" + rc.methods[a].label + "'");
    }
    if (j.contains("seed")) rc.seed = get_uint(j["seed"], "seed");
    if (j.contains("threads")) {
        rc.threads = get_size(j["threads"], "threads");
        if (rc.threads < 1) throw InputError("threads must be >= 1");
    }

    // Schema checks that do not need data.
    validate(SynthSpec{rc.synth.dims, rc.synth.rank, rc.synth.family, 1.0, rc.synth.sigma, 0});
    if (!(rc.synth.sr > 0.0 && rc.synth.sr <= 1.0)) throw InputError("synth.sr must be in (0, 1]");
    if (rc.grid.ranks.empty() || rc.grid.srs.empty()) throw InputError("grid axes must be nonempty");
    if (rc.grid.trials < 1) throw InputError("grid.trials must be >= 1");
    for (double sr : rc.grid.srs)
        if (!(sr > 0.0 && sr <= 1.0)) throw InputError("grid.srs must lie in (0, 1]");
    if (!(rc.success_relerr > 0.0)) throw InputError("grid.success_relerr must be positive");
    if (!(rc.solver.tol >= 0.0)) throw InputError("solver.tol must be nonnegative");
    return rc;
}

RunConfig parse_run_config_text(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_run_config(j);
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config_text(ss.str());
}

json to_json(const SynthSpec& spec) {
    return json{{"dims", spec.dims},         {"rank", spec.rank},   {"family", std::string(to_string(spec.family))},
                {"sr", spec.sr},             {"sigma", spec.sigma}, {"seed", spec.seed}};
}

json to_json(const SolverConfig& cfg) {
    json schemes = json::array();
    for (auto s : cfg.scheme) schemes.push_back(std::string(to_string(s)));
    return json{{"alphas", cfg.alphas},
                {"dynamic_weights", cfg.dynamic_weights},
                {"ranks", cfg.ranks},
                {"scheme", schemes},
                {"rank_increment", cfg.rank_increment},
                {"rank_max", cfg.rank_max},
                {"tol", cfg.tol},
                {"max_iters", cfg.max_iters},
                {"seed", cfg.seed},
                {"pinv_tol", cfg.pinv_tol},
                {"svd_tol", cfg.svd_tol},
                {"gap_threshold", cfg.gap_threshold},
                {"slow_progress_threshold", cfg.slow_progress_threshold},
                {"x_update", cfg.x_update == XUpdate::Plain ? "plain" : "pinv"}};
}

}  // namespace tmac
