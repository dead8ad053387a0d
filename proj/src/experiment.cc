#include "bellqma/experiment.h"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bellqma/verifier.h"

namespace bellqma::experiment {
namespace {

using nlohmann::json;

void check_keys(const json& object, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!object.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
    for (const auto& [key, value] : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(fmt::format("{}: unknown field \"{}\"", where, key));
        }
    }
}

template <typename T>
T get_as(const json& value, std::string_view where) {
    if constexpr (std::is_same_v<T, bool>) {
        if (!value.is_boolean()) throw ConfigError(fmt::format("{}: expected a boolean", where));
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!value.is_string()) throw ConfigError(fmt::format("{}: expected a string", where));
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!value.is_number()) throw ConfigError(fmt::format("{}: expected a number", where));
    } else if constexpr (std::is_unsigned_v<T>) {
        if (!value.is_number_unsigned()) throw ConfigError(fmt::format("{}: expected a nonnegative integer", where));
    } else {
        if (!value.is_number_integer()) throw ConfigError(fmt::format("{}: expected an integer", where));
    }
    return value.get<T>();
}

template <typename T>
std::vector<T> get_list(const json& value, std::string_view where) {
    if (!value.is_array()) throw ConfigError(fmt::format("{}: expected an array", where));
    std::vector<T> out;
    for (std::size_t i = 0; i < value.size(); ++i) out.push_back(get_as<T>(value[i], fmt::format("{}[{}]", where, i)));
    return out;
}

ColoringRef parse_coloring_ref(const json& value, std::string_view where) {
    ColoringRef ref;
    if (value.is_string()) {
        ref.name = value.get<std::string>();
    } else if (value.is_array()) {
        ref.values = get_list<int>(value, where);
    } else if (value.is_object()) {
        check_keys(value, where, {"name", "values", "shift"});
        if (value.contains("name") == value.contains("values")) {
            throw ConfigError(fmt::format("{}: exactly one of name/values is required", where));
        }
        if (value.contains("name")) ref.name = get_as<std::string>(value["name"], fmt::format("{}.name", where));
        if (value.contains("values")) ref.values = get_list<int>(value["values"], fmt::format("{}.values", where));
        if (value.contains("shift")) ref.shift = get_as<int>(value["shift"], fmt::format("{}.shift", where));
    } else {
        throw ConfigError(fmt::format("{}: expected a coloring name, list, or object", where));
    }
    return ref;
}

StrategySpec parse_strategy(const json& value) {
    check_keys(value, "strategy", {"kind", "parameters"});
    if (!value.contains("kind")) throw ConfigError("strategy.kind: missing");
    StrategySpec spec;
    spec.kind = get_as<std::string>(value["kind"], "strategy.kind");
    static const std::set<std::string> kinds = {"honest", "skewed", "phase_adversary", "inconsistent",
                                                "classical_basis"};
    if (!kinds.contains(spec.kind)) throw ConfigError(fmt::format("strategy.kind: unknown kind \"{}\"", spec.kind));
    if (!value.contains("parameters")) return spec;

    const json& p = value["parameters"];
    check_keys(p, "strategy.parameters",
               {"coloring", "colorings", "subset", "subset_fraction", "frequency", "assignment", "basis"});
    if (p.contains("coloring")) spec.coloring = parse_coloring_ref(p["coloring"], "strategy.parameters.coloring");
    if (p.contains("colorings")) {
        const json& list = p["colorings"];
        if (!list.is_array()) throw ConfigError("strategy.parameters.colorings: expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            spec.colorings.push_back(parse_coloring_ref(list[i], fmt::format("strategy.parameters.colorings[{}]", i)));
        }
    }
    if (p.contains("subset")) spec.subset = get_list<int>(p["subset"], "strategy.parameters.subset");
    if (p.contains("subset_fraction")) {
        spec.subset_fraction = get_as<double>(p["subset_fraction"], "strategy.parameters.subset_fraction");
    }
    if (p.contains("frequency")) spec.frequency = get_as<int>(p["frequency"], "strategy.parameters.frequency");
    if (p.contains("assignment")) spec.assignment = get_list<int>(p["assignment"], "strategy.parameters.assignment");
    if (p.contains("basis")) {
        const json& list = p["basis"];
        if (!list.is_array()) throw ConfigError("strategy.parameters.basis: expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            auto pair = get_list<int>(list[i], fmt::format("strategy.parameters.basis[{}]", i));
            if (pair.size() != 2) throw ConfigError(fmt::format("strategy.parameters.basis[{}]: expected [v, c]", i));
            spec.basis.emplace_back(pair[0], pair[1]);
        }
    }
    return spec;
}

GeneratorParams parse_generator(const json& value) {
    check_keys(value, "instance.generator", {"kind", "n", "K", "d", "density", "seed"});
    GeneratorParams params;
    if (!value.contains("kind")) throw ConfigError("instance.generator.kind: missing");
    const auto name = get_as<std::string>(value["kind"], "instance.generator.kind");
    const auto kind = parse_generator_kind(name);
    if (!kind) throw ConfigError(fmt::format("instance.generator.kind: unknown kind \"{}\"", name));
    params.kind = *kind;
    if (!value.contains("n")) throw ConfigError("instance.generator.n: missing");
    params.n = get_as<int>(value["n"], "instance.generator.n");
    if (value.contains("K")) params.K = get_as<int>(value["K"], "instance.generator.K");
    if (value.contains("d")) params.d = get_as<int>(value["d"], "instance.generator.d");
    if (value.contains("density")) params.density = get_as<double>(value["density"], "instance.generator.density");
    if (!value.contains("seed")) throw ConfigError("instance.generator.seed: missing");
    params.seed = get_as<std::uint64_t>(value["seed"], "instance.generator.seed");
    return params;
}

std::string generator_id(const GeneratorParams& p) {
    return fmt::format("{}-n{}-K{}-d{}-seed{}", to_string(p.kind), p.n, p.K, p.d, p.seed);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read {}", path.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{}", x);
}

json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

// Output goes to the --out file when given, else to `fallback`.
class Sink {
  public:
    Sink(const std::optional<std::filesystem::path>& path, std::ostream& fallback) : stream_(&fallback) {
        if (path) {
            file_ = std::make_unique<std::ofstream>(*path, std::ios::binary | std::ios::trunc);
            if (!*file_) throw ConfigError(fmt::format("cannot write {}", path->string()));
            stream_ = file_.get();
        }
    }
    std::ostream& operator*() { return *stream_; }

  private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

struct Prepared {
    LoadedInstance instance;
    ProtocolParams params;
    ProverStrategy strategy;
    std::vector<ProofState> states;
};

Prepared prepare(const ExperimentConfig& config) {
    Prepared out{load_instance(config), {}, {}, {}};
    const ConstraintGraph& graph = out.instance.file.graph;
    try {
        out.params = ProtocolParams::make(effective_C(config, graph), graph.n, graph.K);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("protocol: {}", e.what()));
    }
    out.strategy = resolve_strategy(config.strategy, out.instance, out.params, config.gap_budget);
    try {
        out.states = materialize(out.strategy, graph, out.params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("strategy: {}", e.what()));
    }
    return out;
}

void dump_states(const std::vector<ProofState>& states, std::ostream& out) {
    out << "prover,v,c,re,im\n";
    for (std::size_t i = 0; i < states.size(); ++i) {
        std::istringstream lines(dump_state(states[i]));
        for (std::string line; std::getline(lines, line);) out << i << ',' << line << '\n';
    }
}

void maybe_dump_states(const ExperimentConfig& config, const std::vector<ProofState>& states, std::ostream& err) {
    if (!config.dump_states) return;
    if (config.out) {
        auto path = config.out->string() + ".states.csv";
        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        if (!file) throw ConfigError(fmt::format("cannot write {}", path));
        dump_states(states, file);
    } else {
        dump_states(states, err);
    }
}

// ---- run rows -------------------------------------------------------------

struct RunRow {
    std::string instance;
    std::string strategy;
    ProtocolParams params;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    EstimateResult result;
    double exact_uniformity = 0.0;
    std::optional<double> exact_acceptance;
};

constexpr std::string_view kRunColumns =
    "instance,strategy,C,n,K,num_provers,z_threshold,mu,trials,seed,acceptance,ci_halfwidth,"
    "exact_uniformity_acceptance,exact_acceptance,uniformity_trials";

std::string run_header() {
    std::string header(kRunColumns);
    for (RejectReason reason : kRejectReasons) header += fmt::format(",{}", to_string(reason));
    return header;
}

std::string run_csv(const RunRow& row) {
    std::string line = fmt::format(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", row.instance, row.strategy, format_double(row.params.C),
        row.params.n, row.params.K, row.params.num_provers, row.params.z_threshold, format_double(row.params.mu),
        row.trials, row.seed, format_double(row.result.estimate.value), format_double(row.result.estimate.ci_halfwidth),
        format_double(row.exact_uniformity), row.exact_acceptance ? format_double(*row.exact_acceptance) : "",
        row.result.uniformity_trials);
    for (RejectReason reason : kRejectReasons) line += fmt::format(",{}", row.result.count(reason));
    return line;
}

json run_json(const RunRow& row) {
    json reasons = json::object();
    for (RejectReason reason : kRejectReasons) reasons[std::string(to_string(reason))] = row.result.count(reason);
    return json{{"instance", row.instance},
                {"strategy", row.strategy},
                {"C", row.params.C},
                {"n", row.params.n},
                {"K", row.params.K},
                {"num_provers", row.params.num_provers},
                {"z_threshold", row.params.z_threshold},
                {"mu", row.params.mu},
                {"trials", row.trials},
                {"seed", row.seed},
                {"acceptance", row.result.estimate.value},
                {"ci_halfwidth", row.result.estimate.ci_halfwidth},
                {"exact_uniformity_acceptance", row.exact_uniformity},
                {"exact_acceptance", row.exact_acceptance ? json(*row.exact_acceptance) : json(nullptr)},
                {"uniformity_trials", row.result.uniformity_trials},
                {"reject_reasons", reasons}};
}

RunRow execute_run(const ExperimentConfig& config, const Prepared& prepared, std::uint64_t trials,
                   std::uint64_t seed) {
    const ConstraintGraph& graph = prepared.instance.file.graph;
    const ProofEnsemble ensemble(prepared.states);
    const EdgeIndex edges(graph);
    MonteCarloOptions options;
    options.trials = trials;
    options.seed = seed;
    options.workers = config.workers;

    RunRow row;
    row.instance = prepared.instance.id;
    row.strategy = std::string(kind_name(prepared.strategy));
    row.params = prepared.params;
    row.trials = trials;
    row.seed = seed;
    row.result = estimate_acceptance(ensemble, edges, prepared.params, options);
    row.exact_uniformity = exact_uniformity_acceptance(ensemble, prepared.params).value;
    try {
        const double consistency = brute_force_consistency_acceptance(prepared.states, graph).value;
        row.exact_acceptance = 0.5 * row.exact_uniformity + 0.5 * consistency;
    } catch (const std::length_error&) {
    }
    return row;
}

// ---- collision rows ------------------------------------------------------

CollisionSetup collision_setup(const Prepared& prepared, int m_prime, double epsilon) {
    const int n = prepared.instance.file.graph.n;
    CollisionSetup setup;
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) all[static_cast<std::size_t>(v)] = v;
    setup.s_sets.push_back(std::move(all));
    const auto& states = prepared.states;
    const bool shared = std::all_of(states.begin(), states.end(), [&](const ProofState& s) { return s == states[0]; });
    if (shared) {
        setup.color_rules.push_back(ColorRule::from_state(states[0]));
    } else {
        for (int i = 0; i < m_prime; ++i) {
            setup.color_rules.push_back(ColorRule::from_state(states[static_cast<std::size_t>(i) % states.size()]));
        }
    }
    setup.m_prime = m_prime;
    setup.epsilon = epsilon;
    return setup;
}

constexpr std::string_view kCollisionColumns =
    "instance,m_prime,trials,seed,e_v,e_v_se,e_v_ci,e_v_lower_bound,exact_e_v,pair_mean,pair_mean_se,"
    "pr_v_zero,pr_v_zero_se,pr_v_zero_ci,e_v2,chebyshev_upper_bound";

struct CollisionRow {
    std::string instance;
    CollisionEstimate estimate;
    double exact_e_v = 0.0;
};

std::string lemma3_csv(const CollisionRow& row) {
    const auto& e = row.estimate;
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", row.instance, e.m_prime, e.trials, e.seed,
                       format_double(e.e_v_empirical), format_double(e.e_v_se), format_double(e.e_v_ci),
                       format_double(e.e_v_lower_bound), format_double(row.exact_e_v), format_double(e.pair_mean),
                       format_double(e.pair_mean_se), format_double(e.pr_v_zero_empirical),
                       format_double(e.pr_v_zero_se), format_double(e.pr_v_zero_ci), format_double(e.e_v2_empirical),
                       format_double(e.chebyshev_upper_bound));
}

json lemma3_json(const CollisionRow& row) {
    const auto& e = row.estimate;
    return json{{"instance", row.instance},
                {"m_prime", e.m_prime},
                {"trials", e.trials},
                {"seed", e.seed},
                {"e_v", json_number(e.e_v_empirical)},
                {"e_v_se", json_number(e.e_v_se)},
                {"e_v_ci", json_number(e.e_v_ci)},
                {"e_v_lower_bound", json_number(e.e_v_lower_bound)},
                {"exact_e_v", json_number(row.exact_e_v)},
                {"pair_mean", json_number(e.pair_mean)},
                {"pair_mean_se", json_number(e.pair_mean_se)},
                {"pr_v_zero", json_number(e.pr_v_zero_empirical)},
                {"pr_v_zero_se", json_number(e.pr_v_zero_se)},
                {"pr_v_zero_ci", json_number(e.pr_v_zero_ci)},
                {"e_v2", json_number(e.e_v2_empirical)},
                {"chebyshev_upper_bound", json_number(e.chebyshev_upper_bound)}};
}

// ---- plot -----------------------------------------------------------------

struct PlotPoint {
    double x;
    double y;
    double err;
};

void write_plot(const std::filesystem::path& path, std::string_view x_label, std::string_view y_label,
                const std::vector<PlotPoint>& points) {
    constexpr double width = 640, height = 400, left = 70, right = 20, top = 20, bottom = 50;
    double x_min = points.front().x, x_max = points.front().x;
    for (const auto& p : points) {
        x_min = std::min(x_min, p.x);
        x_max = std::max(x_max, p.x);
    }
    if (x_max == x_min) x_max = x_min + 1;
    const auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (width - left - right); };
    const auto sy = [&](double y) { return height - bottom - std::clamp(y, 0.0, 1.0) * (height - top - bottom); };

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
    fmt::print(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
                    "font-size=\"12\">\n", width, height);
    fmt::print(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    fmt::print(out, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, height - bottom,
               width - right);
    fmt::print(out, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top,
               height - bottom);
    for (int tick = 0; tick <= 4; ++tick) {
        const double y = tick / 4.0;
        fmt::print(out, "<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", left - 6, sy(y) + 4, y);
    }
    for (const auto& p : points) {
        fmt::print(out, "<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", sx(p.x),
                   height - bottom + 16, format_double(p.x));
    }
    fmt::print(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (left + width - right) / 2,
               height - 10, x_label);
    fmt::print(out, "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
               (top + height - bottom) / 2, (top + height - bottom) / 2, y_label);
    std::string polyline;
    for (const auto& p : points) polyline += fmt::format("{:.2f},{:.2f} ", sx(p.x), sy(p.y));
    fmt::print(out, "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n", polyline);
    for (const auto& p : points) {
        fmt::print(out, "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"steelblue\"/>\n",
                   sx(p.x), sy(p.y - p.err), sy(p.y + p.err));
        fmt::print(out, "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"steelblue\"/>\n", sx(p.x), sy(p.y));
    }
    out << "</svg>\n";
}

// ---- audit ----------------------------------------------------------------

enum class Status { pass, fail, info };

std::string_view to_string(Status s) {
    switch (s) {
        case Status::pass: return "PASS";
        case Status::fail: return "FAIL";
        case Status::info: return "INFO";
    }
    return "?";
}

struct AuditItem {
    std::string audit;
    std::string item;
    std::string measured;
    std::string bound;
    Status status;
};

Status pass_if(bool ok) { return ok ? Status::pass : Status::fail; }

void chernoff_items(const ExperimentConfig& config, std::vector<AuditItem>& items) {
    for (int n : config.chernoff_grid.n) {
        for (int K : config.chernoff_grid.K) {
            for (double C : config.chernoff_grid.C) {
                ProtocolParams params;
                try {
                    params = ProtocolParams::make(C, n, K);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(fmt::format("analysis.chernoff_grid: {}", e.what()));
                }
                for (const auto& a : {completeness_chernoff(params), soundness_chernoff(params)}) {
                    items.push_back({"chernoff",
                                     fmt::format("{} n={} K={} C={} N={} threshold={}", to_string(a.side), n, K,
                                                 format_double(C), a.num_provers, a.threshold),
                                     format_double(a.exact_tail), format_double(a.bound), pass_if(a.holds)});
                }
            }
        }
    }
}

void soundness_items(const Prepared& prepared, double epsilon, std::vector<AuditItem>& items) {
    const auto report = soundness_report(prepared.states, prepared.instance.file.graph, prepared.params, epsilon);
    const auto provers = report.p0.size();
    const auto count = [](const std::vector<bool>& flags) { return std::count(flags.begin(), flags.end(), true); };
    items.push_back({"soundness", "case", std::string(to_string(report.case_label)), "", Status::info});
    items.push_back({"soundness", "epsilon", format_double(report.epsilon), "", Status::info});
    items.push_back({"soundness", "z_prime_size", std::to_string(report.z_prime.size()), std::to_string(provers),
                     Status::info});
    items.push_back({"soundness", "gamma_alpha_ok", std::to_string(count(report.gamma_alpha_ok)),
                     std::to_string(provers), pass_if(count(report.gamma_alpha_ok) == static_cast<long>(provers))});
    items.push_back({"soundness", "gamma_bound_ok", std::to_string(count(report.gamma_bound_ok)),
                     std::to_string(provers), pass_if(count(report.gamma_bound_ok) == static_cast<long>(provers))});
    double worst = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < provers; ++i) {
        if (!report.fourier_distance[i]) continue;
        any = true;
        const auto d = fourier_distance(prepared.states[i]);
        worst = std::max(worst, std::abs(d.via_transform - d.via_direct));
    }
    if (any) {
        items.push_back({"soundness", "fourier_distance_paths", format_double(worst),
                         format_double(kInequalityTolerance), pass_if(worst <= kInequalityTolerance)});
    }
}

void second_moment_items(const ExperimentConfig& config, const Prepared& prepared, double epsilon,
                         std::vector<AuditItem>& items) {
    const RandomStream master(config.seed);
    for (std::size_t i = 0; i < config.lemma3_m_prime.size(); ++i) {
        const int m = config.lemma3_m_prime[i];
        const auto setup = collision_setup(prepared, m, epsilon);
        const auto report = second_moment_audit(prepared.instance.file.graph, setup, config.lemma3_trials,
                                                master.substream(i).key());
        const auto& e = report.estimate;
        const std::string prefix = fmt::format("m_prime={} ", m);
        items.push_back({"second_moment", prefix + "exact_e_v", format_double(e.e_v_empirical),
                         fmt::format("{} +- {}", format_double(report.exact_e_v), format_double(4 * e.e_v_se)),
                         pass_if(report.exact_agreement_ok)});
        items.push_back({"second_moment", prefix + "lower_bound", format_double(e.e_v_empirical),
                         format_double(e.e_v_lower_bound), pass_if(report.lower_bound_ok)});
        if (report.chebyshev_ok) {
            items.push_back({"second_moment", prefix + "chebyshev", format_double(e.pr_v_zero_empirical),
                             format_double(e.chebyshev_upper_bound), pass_if(*report.chebyshev_ok)});
        } else {
            items.push_back({"second_moment", prefix + "chebyshev", format_double(e.pr_v_zero_empirical),
                             "degenerate", Status::info});
        }
    }
}

int with_errors(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        fmt::print(err, "error: {}\n", e.what());
    } catch (const ParseError& e) {
        fmt::print(err, "error: {}\n", e.what());
    } catch (const std::invalid_argument& e) {
        fmt::print(err, "error: {}\n", e.what());
    }
    return kUsageError;
}

}  // namespace

// ---- config ---------------------------------------------------------------

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    check_keys(root, "config", {"instance", "instance_id", "strategy", "protocol", "analysis", "output"});
    ExperimentConfig config;

    if (!root.contains("instance")) throw ConfigError("instance: missing");
    const json& instance = root["instance"];
    if (instance.is_string()) {
        config.instance_path = base_dir / instance.get<std::string>();
    } else {
        check_keys(instance, "instance", {"path", "generator"});
        if (instance.contains("path") == instance.contains("generator")) {
            throw ConfigError("instance: exactly one of path/generator is required");
        }
        if (instance.contains("path")) {
            config.instance_path = base_dir / get_as<std::string>(instance["path"], "instance.path");
        } else {
            config.generator = parse_generator(instance["generator"]);
        }
    }
    if (root.contains("instance_id")) {
        config.instance_id = get_as<std::string>(root["instance_id"], "instance_id");
    } else if (config.instance_path) {
        config.instance_id = config.instance_path->stem().string();
    } else {
        config.instance_id = generator_id(*config.generator);
    }

    if (!root.contains("strategy")) throw ConfigError("strategy: missing");
    config.strategy = parse_strategy(root["strategy"]);

    if (!root.contains("protocol")) throw ConfigError("protocol: missing");
    const json& protocol = root["protocol"];
    check_keys(protocol, "protocol", {"C", "trials", "seed", "workers", "gap_budget"});
    if (protocol.contains("C")) {
        config.C = get_as<double>(protocol["C"], "protocol.C");
        if (!(*config.C > 0)) throw ConfigError("protocol.C: must be positive");
    }
    if (protocol.contains("trials")) config.trials = get_as<std::uint64_t>(protocol["trials"], "protocol.trials");
    if (config.trials < 1) throw ConfigError("protocol.trials: must be at least 1");
    if (!protocol.contains("seed")) throw ConfigError("protocol.seed: missing");
    config.seed = get_as<std::uint64_t>(protocol["seed"], "protocol.seed");
    if (protocol.contains("workers")) config.workers = get_as<unsigned>(protocol["workers"], "protocol.workers");
    if (protocol.contains("gap_budget")) {
        config.gap_budget = get_as<std::uint64_t>(protocol["gap_budget"], "protocol.gap_budget");
    }

    if (root.contains("analysis")) {
        const json& analysis = root["analysis"];
        check_keys(analysis, "analysis", {"epsilon", "lemma3_m_prime", "lemma3_trials", "audits", "chernoff_grid"});
        if (analysis.contains("epsilon")) {
            config.epsilon = get_as<double>(analysis["epsilon"], "analysis.epsilon");
            if (!(*config.epsilon > 0 && *config.epsilon < 1)) throw ConfigError("analysis.epsilon: must be in (0, 1)");
        }
        if (analysis.contains("lemma3_m_prime")) {
            config.lemma3_m_prime = get_list<int>(analysis["lemma3_m_prime"], "analysis.lemma3_m_prime");
            for (int m : config.lemma3_m_prime) {
                if (m < 2) throw ConfigError("analysis.lemma3_m_prime: entries must be at least 2");
            }
        }
        if (analysis.contains("lemma3_trials")) {
            config.lemma3_trials = get_as<std::uint64_t>(analysis["lemma3_trials"], "analysis.lemma3_trials");
            if (config.lemma3_trials < 1) throw ConfigError("analysis.lemma3_trials: must be at least 1");
        }
        if (analysis.contains("audits")) {
            const json& audits = analysis["audits"];
            check_keys(audits, "analysis.audits", {"chernoff", "soundness", "second_moment"});
            if (audits.contains("chernoff")) config.audit_chernoff = get_as<bool>(audits["chernoff"], "analysis.audits.chernoff");
            if (audits.contains("soundness")) {
                config.audit_soundness = get_as<bool>(audits["soundness"], "analysis.audits.soundness");
            }
            if (audits.contains("second_moment")) {
                config.audit_second_moment = get_as<bool>(audits["second_moment"], "analysis.audits.second_moment");
            }
        }
        if (analysis.contains("chernoff_grid")) {
            const json& grid = analysis["chernoff_grid"];
            check_keys(grid, "analysis.chernoff_grid", {"n", "K", "C"});
            if (grid.contains("n")) config.chernoff_grid.n = get_list<int>(grid["n"], "analysis.chernoff_grid.n");
            if (grid.contains("K")) config.chernoff_grid.K = get_list<int>(grid["K"], "analysis.chernoff_grid.K");
            if (grid.contains("C")) config.chernoff_grid.C = get_list<double>(grid["C"], "analysis.chernoff_grid.C");
        }
    }

    if (root.contains("output")) {
        const json& output = root["output"];
        check_keys(output, "output", {"format", "path", "dump_states"});
        if (output.contains("format")) config.format = get_as<std::string>(output["format"], "output.format");
        if (output.contains("path")) config.out = base_dir / get_as<std::string>(output["path"], "output.path");
        if (output.contains("dump_states")) config.dump_states = get_as<bool>(output["dump_states"], "output.dump_states");
    }
    if (config.format != "csv" && config.format != "json") {
        throw ConfigError(fmt::format("output.format: expected csv or json, got \"{}\"", config.format));
    }
    return config;
}

ExperimentConfig read_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.parent_path());
}

LoadedInstance load_instance(const ExperimentConfig& config) {
    LoadedInstance out;
    out.id = config.instance_id;
    if (config.instance_path) {
        try {
            out.file = read_instance(*config.instance_path);
        } catch (const ParseError& e) {
            throw ConfigError(fmt::format("{}: {}", config.instance_path->string(), e.what()));
        } catch (const std::runtime_error& e) {
            throw ConfigError(e.what());
        }
    } else {
        try {
            auto generated = generate(*config.generator);
            out.file.graph = std::move(generated.graph);
            if (generated.planted) out.file.colorings["planted"] = std::move(*generated.planted);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(fmt::format("instance.generator: {}", e.what()));
        }
    }
    const auto diagnostics = validate(out.file.graph);
    if (!diagnostics.empty()) {
        throw ConfigError(fmt::format("instance {}: {}", out.id, diagnostics.front().message));
    }
    return out;
}

Coloring resolve_coloring(const ColoringRef& ref, const LoadedInstance& instance, std::uint64_t gap_budget) {
    const ConstraintGraph& graph = instance.file.graph;
    Coloring coloring;
    if (ref.values) {
        coloring = *ref.values;
    } else {
        std::string name = ref.name;
        if (name.empty()) name = instance.file.colorings.contains("planted") ? "planted" : "best";
        if (auto it = instance.file.colorings.find(name); it != instance.file.colorings.end()) {
            coloring = it->second;
        } else if (name == "best") {
            const auto certificate = certify_gap(graph, gap_budget);
            if (!certificate.exhaustive) {
                throw ConfigError(fmt::format("coloring \"best\": K^n exceeds the gap budget {}", gap_budget));
            }
            coloring = certificate.witness;
        } else {
            throw ConfigError(fmt::format("coloring \"{}\" is not defined by instance {}", name, instance.id));
        }
    }
    if (ref.shift != 0) {
        for (int& c : coloring) c = ((c + ref.shift) % graph.K + graph.K) % graph.K;
    }
    try {
        require_coloring(graph, coloring);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return coloring;
}

ProverStrategy resolve_strategy(const StrategySpec& spec, const LoadedInstance& instance, const ProtocolParams& params,
                                std::uint64_t gap_budget) {
    const int n = instance.file.graph.n;
    try {
        if (spec.kind == "honest") return honest(resolve_coloring(spec.coloring, instance, gap_budget));
        if (spec.kind == "skewed") {
            std::vector<int> subset;
            if (spec.subset) {
                subset = *spec.subset;
            } else {
                const double fraction = spec.subset_fraction.value_or(0.5);
                if (!(fraction > 0 && fraction <= 1)) throw ConfigError("strategy: subset_fraction must be in (0, 1]");
                const int size = robust_ceil(fraction * n);
                for (int v = 0; v < size; ++v) subset.push_back(v);
            }
            return skewed(std::move(subset), resolve_coloring(spec.coloring, instance, gap_budget));
        }
        if (spec.kind == "phase_adversary") return phase_adversary(spec.frequency);
        if (spec.kind == "inconsistent") {
            if (spec.colorings.empty()) throw ConfigError("strategy: inconsistent needs parameters.colorings");
            std::vector<Coloring> colorings;
            for (const auto& ref : spec.colorings) colorings.push_back(resolve_coloring(ref, instance, gap_budget));
            auto assignment = spec.assignment.value_or(
                block_assignment(params.num_provers, static_cast<int>(colorings.size())));
            return inconsistent(std::move(colorings), std::move(assignment));
        }
        if (spec.kind == "classical_basis") return classical_basis(spec.basis);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("strategy: {}", e.what()));
    }
    throw ConfigError(fmt::format("strategy.kind: unknown kind \"{}\"", spec.kind));
}

double effective_C(const ExperimentConfig& config, const ConstraintGraph& graph) {
    if (config.C) return *config.C;
    int m = 2;
    for (int v : config.lemma3_m_prime) m = std::max(m, v);
    return 32.0 * graph.K * graph.K * m / std::sqrt(static_cast<double>(graph.n));
}

double effective_epsilon(const ExperimentConfig& config, const LoadedInstance& instance) {
    if (config.epsilon) return *config.epsilon;
    const auto certificate = certify_gap(instance.file.graph, config.gap_budget);
    if (!certificate.exhaustive) {
        throw ConfigError("analysis.epsilon: required when K^n exceeds the gap budget");
    }
    if (certificate.eta.numerator == 0) {
        return 1.0 / (21.0 * static_cast<double>(instance.file.graph.edges.size()));
    }
    return default_epsilon(certificate.eta);
}

SweepGrid parse_grid(std::string_view spec) {
    const auto eq = spec.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("grid \"{}\": expected name=v1,v2,...", spec));
    SweepGrid grid;
    grid.parameter = std::string(spec.substr(0, eq));
    static const std::set<std::string> axes = {"C", "trials", "m_prime", "strategy.frequency",
                                               "strategy.subset_fraction"};
    if (!axes.contains(grid.parameter)) throw ConfigError(fmt::format("grid: unknown parameter \"{}\"", grid.parameter));
    std::string_view rest = spec.substr(eq + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto token = rest.substr(0, comma);
        double value = 0;
        const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || end != token.data() + token.size()) {
            throw ConfigError(fmt::format("grid: \"{}\" is not a number", token));
        }
        grid.values.push_back(value);
        rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
    }
    if (grid.values.empty()) throw ConfigError(fmt::format("grid {}: no values", grid.parameter));
    const bool integral = grid.parameter != "C" && grid.parameter != "strategy.subset_fraction";
    for (double v : grid.values) {
        if (integral && (v != std::floor(v) || v < 1)) {
            throw ConfigError(fmt::format("grid {}: {} is not a positive integer", grid.parameter, v));
        }
    }
    return grid;
}

// ---- commands -------------------------------------------------------------

int cmd_validate(const std::filesystem::path& file, std::uint64_t gap_budget, std::ostream& out, std::ostream& err) {
    InstanceFile instance;
    try {
        instance = read_instance(file);
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}: {}\n", file.string(), e.what());
        return kUsageError;
    }
    const ConstraintGraph& graph = instance.graph;
    fmt::print(out, "n={} K={} edges={}", graph.n, graph.K, graph.edges.size());
    if (graph.degree) fmt::print(out, " d={}", *graph.degree);
    out << '\n';
    const auto diagnostics = validate(graph);
    fmt::print(out, "diagnostics={}\n", diagnostics.size());
    for (const auto& d : diagnostics) {
        fmt::print(out, "diagnostic {}{}: {}\n", d.invariant, d.index ? fmt::format("[{}]", *d.index) : "", d.message);
    }
    if (!diagnostics.empty()) return kAuditFailure;

    double space = 1.0;
    for (int i = 0; i < graph.n && space <= static_cast<double>(gap_budget); ++i) space *= graph.K;
    if (space > static_cast<double>(gap_budget)) {
        fmt::print(out, "certificate skipped: K^n exceeds budget {}\n", gap_budget);
        return kSuccess;
    }
    const auto certificate = certify_gap(graph, gap_budget);
    std::string witness;
    for (std::size_t v = 0; v < certificate.witness.size(); ++v) {
        witness += fmt::format("{}{}", v ? "," : "", certificate.witness[v]);
    }
    fmt::print(out, "max_satisfied_fraction={} eta={} exhaustive={} witness={}\n",
               certificate.max_satisfied_fraction.str(), certificate.eta.str(), certificate.exhaustive, witness);
    return kSuccess;
}

int cmd_generate(const GeneratorParams& params, const std::optional<std::filesystem::path>& out_path,
                 std::ostream& out, std::ostream& err) {
    return with_errors(err, [&] {
        auto generated = generate(params);
        InstanceFile file{std::move(generated.graph), {}};
        if (generated.planted) file.colorings["planted"] = std::move(*generated.planted);
        Sink sink(out_path, out);
        *sink << format_instance(file);
        return int{kSuccess};
    });
}

int cmd_run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    return with_errors(err, [&] {
        const Prepared prepared = prepare(config);
        const RunRow row = execute_run(config, prepared, config.trials, config.seed);
        Sink sink(config.out, out);
        if (config.format == "json") {
            *sink << run_json(row).dump(2) << '\n';
        } else {
            *sink << run_header() << '\n' << run_csv(row) << '\n';
        }
        maybe_dump_states(config, prepared.states, err);
        return int{kSuccess};
    });
}

int cmd_sweep(const ExperimentConfig& config, const SweepGrid& grid, const std::optional<std::filesystem::path>& plot,
              std::ostream& out, std::ostream& err) {
    return with_errors(err, [&] {
        if (grid.values.empty()) throw ConfigError("grid: no values");
        const RandomStream master(config.seed);
        std::vector<PlotPoint> points;

        if (grid.parameter == "m_prime") {
            ExperimentConfig point_config = config;
            for (double v : grid.values) point_config.lemma3_m_prime.push_back(static_cast<int>(v));
            const Prepared prepared = prepare(point_config);
            const double epsilon = effective_epsilon(config, prepared.instance);
            std::vector<CollisionRow> rows;
            for (std::size_t i = 0; i < grid.values.size(); ++i) {
                const auto setup = collision_setup(prepared, static_cast<int>(grid.values[i]), epsilon);
                CollisionRow row{prepared.instance.id,
                              lemma3_estimate(prepared.instance.file.graph, setup, config.lemma3_trials,
                                              master.substream(i).key(), config.workers),
                              exact_expected_violations(prepared.instance.file.graph, setup)};
                points.push_back({grid.values[i], row.estimate.pr_v_zero_empirical, row.estimate.pr_v_zero_ci});
                rows.push_back(std::move(row));
            }
            Sink sink(config.out, out);
            if (config.format == "json") {
                json list = json::array();
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    json entry = lemma3_json(rows[i]);
                    entry["parameter"] = grid.parameter;
                    entry["value"] = grid.values[i];
                    list.push_back(std::move(entry));
                }
                *sink << json{{"parameter", grid.parameter}, {"rows", list}}.dump(2) << '\n';
            } else {
                *sink << "parameter,value," << kCollisionColumns << '\n';
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    *sink << grid.parameter << ',' << format_double(grid.values[i]) << ',' << lemma3_csv(rows[i])
                          << '\n';
                }
            }
            if (plot) write_plot(*plot, "m'", "Pr[V = 0]", points);
            return int{kSuccess};
        }

        std::vector<RunRow> rows;
        for (std::size_t i = 0; i < grid.values.size(); ++i) {
            ExperimentConfig point_config = config;
            const double v = grid.values[i];
            if (grid.parameter == "C") point_config.C = v;
            if (grid.parameter == "trials") point_config.trials = static_cast<std::uint64_t>(v);
            if (grid.parameter == "strategy.frequency") point_config.strategy.frequency = static_cast<int>(v);
            if (grid.parameter == "strategy.subset_fraction") point_config.strategy.subset_fraction = v;
            const Prepared prepared = prepare(point_config);
            rows.push_back(execute_run(point_config, prepared, point_config.trials, master.substream(i).key()));
            points.push_back({v, rows.back().result.estimate.value, rows.back().result.estimate.ci_halfwidth});
        }
        Sink sink(config.out, out);
        if (config.format == "json") {
            json list = json::array();
            for (std::size_t i = 0; i < rows.size(); ++i) {
                json entry = run_json(rows[i]);
                entry["parameter"] = grid.parameter;
                entry["value"] = grid.values[i];
                list.push_back(std::move(entry));
            }
            *sink << json{{"parameter", grid.parameter}, {"rows", list}}.dump(2) << '\n';
        } else {
            *sink << "parameter,value," << run_header() << '\n';
            for (std::size_t i = 0; i < rows.size(); ++i) {
                *sink << grid.parameter << ',' << format_double(grid.values[i]) << ',' << run_csv(rows[i]) << '\n';
            }
        }
        if (plot) write_plot(*plot, grid.parameter, "acceptance", points);
        return int{kSuccess};
    });
}

int cmd_audit(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
    return with_errors(err, [&] {
        std::vector<AuditItem> items;
        if (config.audit_chernoff) chernoff_items(config, items);
        if (config.audit_soundness || (config.audit_second_moment && !config.lemma3_m_prime.empty())) {
            const Prepared prepared = prepare(config);
            const double epsilon = effective_epsilon(config, prepared.instance);
            if (config.audit_soundness) soundness_items(prepared, epsilon, items);
            if (config.audit_second_moment) second_moment_items(config, prepared, epsilon, items);
            maybe_dump_states(config, prepared.states, err);
        }
        const bool passed =
            std::none_of(items.begin(), items.end(), [](const AuditItem& it) { return it.status == Status::fail; });

        Sink sink(config.out, out);
        if (config.format == "json") {
            json list = json::array();
            for (const auto& it : items) {
                list.push_back({{"audit", it.audit},
                                {"item", it.item},
                                {"measured", it.measured},
                                {"bound", it.bound},
                                {"status", to_string(it.status)}});
            }
            *sink << json{{"instance", config.instance_id}, {"seed", config.seed}, {"passed", passed}, {"items", list}}
                         .dump(2)
                  << '\n';
        } else {
            *sink << "audit,item,measured,bound,status\n";
            for (const auto& it : items) {
                *sink << fmt::format("{},{},{},{},{}\n", it.audit, it.item, it.measured, it.bound, to_string(it.status));
            }
        }
        return int{passed ? kSuccess : kAuditFailure};
    });
}

int main_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"BellQMA protocol simulator"};
    app.require_subcommand(1);

    std::string file;
    std::uint64_t gap_budget = kDefaultGapBudget;
    auto* validate_cmd = app.add_subcommand("validate", "Check an instance file and certify its gap");
    validate_cmd->add_option("file", file, "Instance JSON")->required();
    validate_cmd->add_option("--gap-budget", gap_budget, "Maximum colorings to enumerate");

    GeneratorParams gen;
    std::string gen_kind;
    std::optional<std::string> gen_out;
    auto* generate_cmd = app.add_subcommand("generate", "Write a generated instance file");
    generate_cmd->add_option("--kind", gen_kind, "planted_satisfiable|odd_cycle_neq|clique_neq|random_regular")
        ->required();
    generate_cmd->add_option("--n", gen.n, "Vertices")->required();
    generate_cmd->add_option("--K", gen.K, "Colors");
    generate_cmd->add_option("--d", gen.d, "Degree");
    generate_cmd->add_option("--density", gen.density, "Relation density for random_regular");
    generate_cmd->add_option("--seed", gen.seed, "Seed")->required();
    generate_cmd->add_option("--out", gen_out, "Output path (default stdout)");

    struct Overrides {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<std::uint64_t> trials;
        std::optional<unsigned> workers;
        std::optional<std::string> format;
        std::optional<std::string> out;
        bool dump_states = false;
    };
    Overrides ov;
    std::string grid_spec;
    std::optional<std::string> plot;
    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", ov.config, "Experiment config JSON")->required();
        cmd->add_option("--seed", ov.seed, "Master seed");
        cmd->add_option("--trials", ov.trials, "Trials");
        cmd->add_option("--workers", ov.workers, "Worker threads (0 = all cores)");
        cmd->add_option("--format", ov.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--out", ov.out, "Output path (default stdout)");
        cmd->add_flag("--dump-states", ov.dump_states, "Write prover states as CSV");
    };
    auto* run_cmd = app.add_subcommand("run", "Estimate acceptance for one configuration");
    add_common(run_cmd);
    auto* sweep_cmd = app.add_subcommand("sweep", "Run one row per grid value");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--grid", grid_spec, "name=v1,v2,... over C|trials|m_prime|strategy.<param>")->required();
    sweep_cmd->add_option("--plot", plot, "Write an SVG plot");
    auto* audit_cmd = app.add_subcommand("audit", "Run the enabled audits");
    add_common(audit_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    if (validate_cmd->parsed()) return cmd_validate(file, gap_budget, out, err);
    if (generate_cmd->parsed()) {
        const auto kind = parse_generator_kind(gen_kind);
        if (!kind) {
            fmt::print(err, "error: unknown generator kind \"{}\"\n", gen_kind);
            return kUsageError;
        }
        gen.kind = *kind;
        std::optional<std::filesystem::path> path;
        if (gen_out) path = *gen_out;
        return cmd_generate(gen, path, out, err);
    }

    ExperimentConfig config;
    SweepGrid grid;
    try {
        config = read_config(ov.config);
        if (ov.seed) config.seed = *ov.seed;
        if (ov.trials) {
            if (*ov.trials < 1) throw ConfigError("--trials: must be at least 1");
            config.trials = *ov.trials;
        }
        if (ov.workers) config.workers = *ov.workers;
        if (ov.format) config.format = *ov.format;
        if (ov.out) config.out = *ov.out;
        if (ov.dump_states) config.dump_states = true;
        if (sweep_cmd->parsed()) grid = parse_grid(grid_spec);
    } catch (const ConfigError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kUsageError;
    }
    if (run_cmd->parsed()) return cmd_run(config, out, err);
    if (sweep_cmd->parsed()) {
        std::optional<std::filesystem::path> plot_path;
        if (plot) plot_path = *plot;
        return cmd_sweep(config, grid, plot_path, out, err);
    }
    return cmd_audit(config, out, err);
}

}  // namespace bellqma::experiment
