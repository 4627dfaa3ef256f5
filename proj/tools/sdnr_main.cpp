#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdnr/error.hpp"
#include "sdnr/manifest.hpp"
#include "sdnr/network.hpp"
#include "sdnr/oracle.hpp"
#include "sdnr/powerflow.hpp"
#include "sdnr/reconfig.hpp"
#include "sdnr/scenario.hpp"
#include "sdnr/stability.hpp"
#include "sdnr/surrogate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdnr;

namespace {

struct Params {
    std::string manifest;
    std::string network, scenarios, csv, scale, model, dataset, out = ".";
    int k = 5;
    double kl = 0.5, kv = -0.5, kr = 1.0;
    std::optional<double> loss_max, index_max;
    double power_factor = 0.95;
    int nmax = 5;
    std::uint64_t seed = 1;
    std::string evaluator = "exact";
    std::string open;
    bool meshed = false;
    bool no_limits = false;
    double tolerance = 1e-8;
    int max_iterations = 50;
    int hours = 672;
    std::size_t configs = 1000, per_config = 6, cap = 200000;
    double test_fraction = 0.3;
    std::string arch = "cnn1d";
    int epochs = 30, batch = 20;
    double learning_rate = 1e-3, dropout = 0.2;
    bool list = false;
    std::vector<std::string> topologies;
};

/// Registered flag plus the manifest key it falls back to.
struct Binding {
    CLI::Option* opt;
    std::string key;
    std::function<void(const json&)> assign;
    std::function<json()> value;
};

class Command {
  public:
    Command(CLI::App& parent, const std::string& name, const std::string& help, Params& p)
        : app_(parent.add_subcommand(name, help)), p_(p), name_(name) {
        app_->add_option("--manifest", p_.manifest, "run manifest JSON; flags override it");
        add("--out", "out", p_.out, "output directory");
    }

    template <class T>
    Command& add(const std::string& flag, const std::string& key, T& target, const std::string& help) {
        CLI::Option* opt = app_->add_option(flag, target, help);
        bindings_.push_back({opt, key, [&target](const json& j) { target = j.get<T>(); },
                             [&target] { return json(target); }});
        return *this;
    }

    template <class T>
    Command& add(const std::string& flag, const std::string& key, std::optional<T>& target, const std::string& help) {
        CLI::Option* opt = app_->add_option(flag, target, help);
        bindings_.push_back({opt, key, [&target](const json& j) { target = j.get<T>(); },
                             [&target] { return target ? json(*target) : json(nullptr); }});
        return *this;
    }

    Command& flag(const std::string& flag, const std::string& key, bool& target, const std::string& help) {
        CLI::Option* opt = app_->add_flag(flag, target, help);
        bindings_.push_back({opt, key, [&target](const json& j) { target = j.get<bool>(); },
                             [&target] { return json(target); }});
        return *this;
    }

    CLI::App* app() { return app_; }

    /// Fills unset flags from the manifest file and returns the resolved
    /// parameter set. Input files are hashed so the digest tracks their content.
    json resolve(const std::vector<std::string>& input_keys) {
        if (!p_.manifest.empty()) {
            std::ifstream in(p_.manifest);
            if (!in) throw InputError("manifest file '" + p_.manifest + "' does not exist");
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::parse_error& e) {
                throw InputError(p_.manifest + ": " + e.what());
            }
            for (auto& b : bindings_) {
                if (b.opt->count() > 0 || !doc.contains(b.key) || doc[b.key].is_null()) continue;
                try {
                    b.assign(doc[b.key]);
                } catch (const json::exception& e) {
                    throw InputError(p_.manifest + ": key '" + b.key + "': " + e.what());
                }
            }
        }
        json m;
        m["command"] = name_;
        json params;
        for (auto& b : bindings_)
            if (b.key != "out") params[b.key] = b.value();
        m["parameters"] = params;
        json inputs = json::object();
        for (const auto& key : input_keys) {
            const std::string path = params.value(key, std::string());
            if (path.empty()) {
                if (key == "network" || key == "dataset") throw InputError("--" + key + " is required");
                continue;
            }
            if (!fs::exists(path)) throw InputError(key + " file '" + path + "' does not exist");
            inputs[key] = sha256_file(path);
        }
        m["input_sha256"] = inputs;
        m["tool_version"] = kToolVersion;
        return m;
    }

  private:
    CLI::App* app_;
    Params& p_;
    std::string name_;
    std::vector<Binding> bindings_;
};

/// Output sink that stamps every file with the run's provenance.
class Outputs {
  public:
    Outputs(const std::string& dir, json manifest, std::uint64_t seed)
        : dir_(dir), manifest_(std::move(manifest)), hash_(manifest_hash(manifest_)), seed_(seed) {
        fs::create_directories(dir_);
        json doc = manifest_;
        doc["manifest_hash"] = hash_;
        write_text("manifest.json", doc.dump(2) + "\n");
    }

    const std::string& hash() const { return hash_; }

    json provenance() const { return {{"manifest_hash", hash_}, {"tool_version", kToolVersion}, {"seed", seed_}}; }

    void write_json(const std::string& name, json doc) const {
        doc["provenance"] = provenance();
        write_text(name, doc.dump(2) + "\n");
    }

    void write_csv(const std::string& name, const std::string& body) const {
        std::ostringstream s;
        s << "# " << kToolVersion << " manifest " << hash_ << " seed " << seed_ << '\n' << body;
        write_text(name, s.str());
    }

    std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

    void write_text(const std::string& name, const std::string& text) const {
        std::ofstream out(path(name), std::ios::binary);
        if (!out) throw InputError("cannot write '" + path(name) + "'");
        out << text;
    }

  private:
    std::string dir_;
    json manifest_;
    std::string hash_;
    std::uint64_t seed_;
};

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::vector<int> parse_ids(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ArgumentError("bad branch id '" + item + "'");
        }
    }
    return out;
}

SwitchStatus topology(const Network& net, const std::string& open) {
    const auto ids = parse_ids(open);
    for (int id : ids)
        if (id < 0 || id >= static_cast<int>(net.num_branches()))
            throw ArgumentError("branch " + std::to_string(id) + " does not exist");
    return SwitchStatus::with_open(net.num_branches(), ids);
}

ScenarioSet scenarios_or_nominal(const Params& p, const Network& net) {
    if (p.scenarios.empty()) return ScenarioSet::single(Sample::nominal(net));
    ScenarioSet set = load_scenarios(p.scenarios);
    for (const auto& s : set.scenarios)
        if (s.size() != net.num_buses())
            throw DimensionError("scenario file has " + std::to_string(s.size()) + " buses, network has " +
                                 std::to_string(net.num_buses()));
    return set;
}

std::vector<Sample> read_samples(const Params& p, const Network& net) {
    if (p.csv.empty()) throw InputError("--csv is required");
    std::ifstream in(p.csv);
    if (!in) throw InputError("cannot open '" + p.csv + "'");
    ScaleConfig scale;
    if (!p.scale.empty()) {
        std::ifstream s(p.scale);
        if (!s) throw InputError("cannot open '" + p.scale + "'");
        scale = ScaleConfig::from_json(json::parse(s));
    }
    return ingest_timeseries(in, net, p.power_factor, p.kr, scale);
}

SolverOptions solver(const Params& p) {
    SolverOptions s;
    s.tolerance = p.tolerance;
    s.max_iterations = p.max_iterations;
    s.allow_meshed = p.meshed;
    return s;
}

SbrOptions search_options(const Params& p) {
    SbrOptions o;
    o.solver = solver(p);
    o.solver.allow_meshed = false;
    o.enforce_limits = !p.no_limits;
    o.n_max = p.nmax;
    return o;
}

ObjectiveWeights weights(const Params& p) {
    ObjectiveWeights w;
    w.k_l = p.kl;
    w.k_v = p.kv;
    w.loss_max = p.loss_max;
    w.index_max = p.index_max;
    return w;
}

Evaluator evaluator(const Params& p) {
    if (p.evaluator == "exact") return Evaluator::exact();
    if (p.evaluator != "surrogate") throw ArgumentError("evaluator must be 'exact' or 'surrogate'");
    if (p.model.empty()) throw InputError("--model is required with the surrogate evaluator");
    return Evaluator::surrogate(std::make_shared<PredictorModel>(PredictorModel::load(p.model)));
}

int run_pf(const Params& p, const json& m) {
    const Network net = load_network(p.network);
    const ScenarioSet set = scenarios_or_nominal(p, net);
    const SwitchStatus alpha = topology(net, p.open);
    Outputs out(p.out, m, p.seed);
    std::ostringstream csv;
    csv << "scenario,label,probability,converged,iterations,loss,delta_min,violations\n";
    for (std::size_t w = 0; w < set.size(); ++w) {
        const auto sol = solve_pf(net, alpha, set.scenarios[w], solver(p));
        const auto violations = sol.converged ? check_limits(sol, net, alpha) : std::vector<Violation>{};
        const double index = sol.converged ? sigma_min(jacobian(net, alpha, sol)) : std::nan("");
        json doc = to_json(sol, violations);
        doc["scenario"] = w;
        doc["label"] = set.scenarios[w].label;
        doc["delta_min"] = std::isfinite(index) ? json(index) : json(nullptr);
        out.write_json("pf_" + std::to_string(w) + ".json", doc);
        csv << w << ',' << set.scenarios[w].label << ',' << num(set.pi[w]) << ',' << (sol.converged ? 1 : 0) << ','
            << sol.iterations << ',' << num(sol.loss) << ',' << num(index) << ',' << violations.size() << '\n';
    }
    out.write_csv("pf_summary.csv", csv.str());
    std::cout << "solved " << set.size() << " scenario(s); manifest " << out.hash() << '\n';
    return 0;
}

int run_synth(const Params& p, const json& m) {
    const Network net = load_network(p.network);
    if (p.hours < 1) throw ArgumentError("hours must be positive");
    Outputs out(p.out, m, p.seed);
    std::ostringstream csv;
    write_synthetic_timeseries(csv, net, p.hours, p.seed);
    out.write_csv("timeseries.csv", csv.str());
    std::cout << "wrote " << p.hours << " hours to " << out.path("timeseries.csv") << '\n';
    return 0;
}

int run_scenarios(const Params& p, const json& m) {
    const Network net = load_network(p.network);
    const auto samples = read_samples(p, net);
    const ScenarioSet set = kmedoids_reduce(samples, p.k, p.seed);
    Outputs out(p.out, m, p.seed);
    out.write_json("scenarios.json", to_json(set));
    std::ostringstream csv;
    csv << "scenario,label,probability\n";
    for (std::size_t w = 0; w < set.size(); ++w)
        csv << w << ',' << set.scenarios[w].label << ',' << num(set.pi[w]) << '\n';
    out.write_csv("scenarios.csv", csv.str());
    std::cout << set.size() << " scenarios from " << samples.size() << " samples\n";
    return 0;
}

int run_gendata(const Params& p, const json& m) {
    const Network net = load_network(p.network);
    const auto samples = read_samples(p, net);
    const auto configs = sample_radial_configs(net, p.configs, p.seed);
    DatasetOptions opts;
    opts.samples_per_config = p.per_config;
    opts.test_fraction = p.test_fraction;
    opts.seed = p.seed;
    opts.solver = solver(p);
    const LabeledDataset ds = generate_dataset(net, configs, samples, opts);
    Outputs out(p.out, m, p.seed);
    save_dataset(ds, out.path("dataset.json"));
    std::ifstream in(out.path("dataset.json"));
    json sidecar = json::parse(in);
    in.close();
    out.write_json("dataset.json", sidecar);
    std::cout << ds.size() << " rows from " << configs.size() << " configurations\n";
    return 0;
}

int run_train(const Params& p, const json& m) {
    if (p.dataset.empty()) throw InputError("--dataset is required");
    const LabeledDataset ds = load_dataset(p.dataset);
    if (ds.size() == 0) throw EmptyDatasetError("dataset '" + p.dataset + "' has no rows");
    Hyperparams hp;
    hp.architecture = architecture_from_string(p.arch);
    hp.epochs = p.epochs;
    hp.batch_size = p.batch;
    hp.learning_rate = p.learning_rate;
    hp.dropout = p.dropout;
    const PredictorModel model = train(ds, hp, p.seed);
    Outputs out(p.out, m, p.seed);
    out.write_json("model.json", model.to_json());
    const auto& md = model.metadata();
    json metrics{{"train_mse", md.train_mse},
                 {"test_mse", md.test_mse},
                 {"train_rmse", md.train_rmse},
                 {"test_rmse", md.test_rmse},
                 {"test_consistency", std::isfinite(md.test_consistency) ? json(md.test_consistency) : json(nullptr)},
                 {"train_rows", md.train_rows},
                 {"test_rows", md.test_rows},
                 {"epoch_loss", md.epoch_loss}};
    out.write_json("metrics.json", metrics);
    std::cout << "test consistency " << num(md.test_consistency) << "%, test rmse " << num(md.test_rmse) << '\n';
    return 0;
}

int run_reconfigure(const Params& p, const json& m) {
    const Network net = load_network(p.network);
    const ScenarioSet set = scenarios_or_nominal(p, net);
    const Evaluator ev = evaluator(p);
    const SbrResult res = two_stage_sbr(net, set, weights(p), ev, search_options(p));
    Outputs out(p.out, m, p.seed);
    out.write_json("result.json", to_json(res));
    std::ostringstream trace;
    write_trace_csv(trace, res);
    out.write_csv("trace.csv", trace.str());
    std::cout << "open branches:";
    for (int e : res.alpha_star.open_branches()) std::cout << ' ' << e;
    std::cout << "\nobjective " << num(res.objective) << '\n';
    return 0;
}

int run_oracle(const Params& p, const json& m) {
    const Network net = load_network(p.network);
    const ScenarioSet set = scenarios_or_nominal(p, net);
    const OracleReport report = brute_force_optimum(net, set, weights(p), search_options(p), p.cap);
    Outputs out(p.out, m, p.seed);
    std::ostringstream csv;
    write_oracle_csv(csv, report);
    out.write_csv("oracle.csv", csv.str());
    const auto& best = report.rows[report.best_row];
    out.write_json("best.json", {{"config", best.config},
                                 {"open_branches", best.open},
                                 {"objective", best.eval.score},
                                 {"expected_loss", best.eval.loss},
                                 {"expected_index", best.eval.index},
                                 {"configurations", report.rows.size()},
                                 {"infeasible", report.infeasible},
                                 {"weights", to_json(report.weights)}});
    std::cout << report.rows.size() << " configurations, best objective " << num(report.best_objective) << '\n';
    return 0;
}

int run_enumerate(const Params& p, const json& m) {
    const Network net = load_network(p.network);
    std::ostringstream csv;
    csv << "config,open_branches\n";
    std::size_t count = 0;
    enumerate_radial(net, p.cap, [&](const SwitchStatus& alpha) {
        if (p.list) {
            csv << count << ',';
            const auto open = alpha.open_branches();
            for (std::size_t k = 0; k < open.size(); ++k) csv << (k ? ";" : "") << open[k];
            csv << '\n';
        }
        ++count;
        return true;
    });
    if (p.list) {
        Outputs out(p.out, m, p.seed);
        out.write_csv("configurations.csv", csv.str());
    }
    std::cout << count << '\n';
    return 0;
}

/// Hourly loss and index per named topology, one row per (hour, topology).
int run_series(const Params& p, const json& m) {
    const Network net = load_network(p.network);
    const auto samples = read_samples(p, net);
    std::vector<std::pair<std::string, SwitchStatus>> tops;
    for (const auto& spec : p.topologies) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ArgumentError("topology must be name=ids, got '" + spec + "'");
        const SwitchStatus alpha = topology(net, spec.substr(eq + 1));
        if (!is_radial(net, alpha)) throw PreconditionError("topology '" + spec.substr(0, eq) + "' is not radial");
        tops.emplace_back(spec.substr(0, eq), alpha);
    }
    if (tops.empty()) throw ArgumentError("at least one --topology is required");
    std::ostringstream csv;
    csv << "hour,label,topology,converged,loss,delta_min\n";
    for (std::size_t h = 0; h < samples.size(); ++h)
        for (const auto& [name, alpha] : tops) {
            const auto sol = solve_pf(net, alpha, samples[h], solver(p));
            const double index = sol.converged ? sigma_min(jacobian(net, alpha, sol)) : std::nan("");
            csv << h << ',' << samples[h].label << ',' << name << ',' << (sol.converged ? 1 : 0) << ','
                << num(sol.converged ? sol.loss : std::nan("")) << ',' << num(index) << '\n';
        }
    Outputs out(p.out, m, p.seed);
    out.write_csv("series.csv", csv.str());
    std::cout << samples.size() << " hours x " << tops.size() << " topologies\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic distribution network reconfiguration toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    Params p;

    Command pf(app, "pf", "per-scenario power flow on one topology", p);
    pf.add("--network", "network", p.network, "network JSON")
        .add("--scenarios", "scenarios", p.scenarios, "scenario set JSON; nominal load when omitted")
        .add("--open", "open", p.open, "comma-separated open branch ids")
        .flag("--meshed", "meshed", p.meshed, "allow a meshed closed graph")
        .add("--tolerance", "tolerance", p.tolerance, "mismatch tolerance (p.u.)")
        .add("--max-iterations", "max_iterations", p.max_iterations, "Newton iteration cap")
        .add("--seed", "seed", p.seed, "recorded seed");

    Command synth(app, "synth", "synthetic hourly load and renewable series", p);
    synth.add("--network", "network", p.network, "network JSON")
        .add("--hours", "hours", p.hours, "number of hours")
        .add("--seed", "seed", p.seed, "generator seed");

    Command scen(app, "scenarios", "ingest a time series and reduce it with k-medoids", p);
    scen.add("--network", "network", p.network, "network JSON")
        .add("--csv", "csv", p.csv, "time-series CSV")
        .add("--scale", "scale", p.scale, "per-bus scale JSON")
        .add("--pf", "power_factor", p.power_factor, "power factor")
        .add("--kr", "kr", p.kr, "renewable scale factor")
        .add("--k", "k", p.k, "number of scenarios")
        .add("--seed", "seed", p.seed, "clustering seed");

    Command gen(app, "gendata", "label sampled radial configurations with the exact index", p);
    gen.add("--network", "network", p.network, "network JSON")
        .add("--csv", "csv", p.csv, "time-series CSV")
        .add("--scale", "scale", p.scale, "per-bus scale JSON")
        .add("--pf", "power_factor", p.power_factor, "power factor")
        .add("--kr", "kr", p.kr, "renewable scale factor")
        .add("--configs", "configs", p.configs, "radial configurations to sample")
        .add("--per-config", "per_config", p.per_config, "samples per configuration; 0 uses all")
        .add("--test-fraction", "test_fraction", p.test_fraction, "held-out share")
        .add("--tolerance", "tolerance", p.tolerance, "mismatch tolerance (p.u.)")
        .add("--max-iterations", "max_iterations", p.max_iterations, "Newton iteration cap")
        .add("--seed", "seed", p.seed, "sampling seed");

    Command tr(app, "train", "train the index predictor", p);
    tr.add("--dataset", "dataset", p.dataset, "dataset sidecar JSON")
        .add("--arch", "arch", p.arch, "cnn1d or mlp")
        .add("--epochs", "epochs", p.epochs, "training epochs")
        .add("--batch", "batch", p.batch, "minibatch size")
        .add("--lr", "learning_rate", p.learning_rate, "learning rate")
        .add("--dropout", "dropout", p.dropout, "dropout rate")
        .add("--seed", "seed", p.seed, "training seed");

    Command rc(app, "reconfigure", "two-stage successive branch reduction", p);
    rc.add("--network", "network", p.network, "network JSON")
        .add("--scenarios", "scenarios", p.scenarios, "scenario set JSON; nominal load when omitted")
        .add("--kl", "kl", p.kl, "loss weight")
        .add("--kv", "kv", p.kv, "index weight")
        .add("--loss-max", "loss_max", p.loss_max, "loss normalizer")
        .add("--index-max", "index_max", p.index_max, "index normalizer")
        .add("--nmax", "nmax", p.nmax, "outer iteration cap")
        .add("--evaluator", "evaluator", p.evaluator, "exact or surrogate")
        .add("--model", "model", p.model, "model JSON for the surrogate evaluator")
        .flag("--no-limits", "no_limits", p.no_limits, "ignore operating limits")
        .add("--tolerance", "tolerance", p.tolerance, "mismatch tolerance (p.u.)")
        .add("--max-iterations", "max_iterations", p.max_iterations, "Newton iteration cap")
        .add("--seed", "seed", p.seed, "recorded seed");

    Command orc(app, "oracle", "score every radial configuration", p);
    orc.add("--network", "network", p.network, "network JSON")
        .add("--scenarios", "scenarios", p.scenarios, "scenario set JSON; nominal load when omitted")
        .add("--kl", "kl", p.kl, "loss weight")
        .add("--kv", "kv", p.kv, "index weight")
        .add("--loss-max", "loss_max", p.loss_max, "loss normalizer")
        .add("--index-max", "index_max", p.index_max, "index normalizer")
        .add("--cap", "cap", p.cap, "enumeration cap")
        .flag("--no-limits", "no_limits", p.no_limits, "ignore operating limits")
        .add("--tolerance", "tolerance", p.tolerance, "mismatch tolerance (p.u.)")
        .add("--max-iterations", "max_iterations", p.max_iterations, "Newton iteration cap")
        .add("--seed", "seed", p.seed, "recorded seed");

    Command en(app, "enumerate", "count radial configurations", p);
    en.add("--network", "network", p.network, "network JSON")
        .add("--cap", "cap", p.cap, "enumeration cap")
        .flag("--list", "list", p.list, "write every configuration to the output directory")
        .add("--seed", "seed", p.seed, "recorded seed");

    Command se(app, "series", "hourly loss and index for fixed topologies", p);
    se.add("--network", "network", p.network, "network JSON")
        .add("--csv", "csv", p.csv, "time-series CSV")
        .add("--scale", "scale", p.scale, "per-bus scale JSON")
        .add("--pf", "power_factor", p.power_factor, "power factor")
        .add("--kr", "kr", p.kr, "renewable scale factor")
        .add("--topology", "topologies", p.topologies, "name=open,branch,ids (repeatable)")
        .add("--tolerance", "tolerance", p.tolerance, "mismatch tolerance (p.u.)")
        .add("--max-iterations", "max_iterations", p.max_iterations, "Newton iteration cap")
        .add("--seed", "seed", p.seed, "recorded seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*pf.app()) return run_pf(p, pf.resolve({"network", "scenarios"}));
        if (*synth.app()) return run_synth(p, synth.resolve({"network"}));
        if (*scen.app()) return run_scenarios(p, scen.resolve({"network", "csv", "scale"}));
        if (*gen.app()) return run_gendata(p, gen.resolve({"network", "csv", "scale"}));
        if (*tr.app()) return run_train(p, tr.resolve({"dataset"}));
        if (*rc.app()) return run_reconfigure(p, rc.resolve({"network", "scenarios", "model"}));
        if (*orc.app()) return run_oracle(p, orc.resolve({"network", "scenarios"}));
        if (*en.app()) return run_enumerate(p, en.resolve({"network"}));
        if (*se.app()) return run_series(p, se.resolve({"network", "csv", "scale"}));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
