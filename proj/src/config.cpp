#include "fdaopt/config.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

namespace fdaopt {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(ThetaMode mode) {
    return mode == ThetaMode::Adaptive ? "adaptive" : "fixed";
}

ThetaMode theta_mode_from_string(const std::string& name) {
    if (name == "adaptive") return ThetaMode::Adaptive;
    if (name == "fixed") return ThetaMode::Fixed;
    throw std::invalid_argument("unknown theta mode: " + name);
}

namespace {

std::string scoped(const std::string& scope, const std::string& key) {
    return scope.empty() ? key : scope + "." + key;
}

[[noreturn]] void fail(const std::string& scope, const std::string& key, const std::string& what) {
    throw std::invalid_argument("config: key \"" + scoped(scope, key) + "\" " + what);
}

void check_keys(const json& obj, const std::string& scope,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* name : allowed) {
            if (item.key() == name) {
                known = true;
                break;
            }
        }
        if (!known)
            throw std::invalid_argument("config: unknown key \"" + scoped(scope, item.key()) + "\"");
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const std::string& scope, const char* key, double def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number()) fail(scope, key, "must be a number");
    return v->get<double>();
}

std::int64_t get_int(const json& obj, const std::string& scope, const char* key, std::int64_t def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number_integer()) fail(scope, key, "must be an integer");
    return v->get<std::int64_t>();
}

int get_int32(const json& obj, const std::string& scope, const char* key, int def,
              std::int64_t lo, const char* what) {
    const std::int64_t v = get_int(obj, scope, key, def);
    if (v < lo || v > std::numeric_limits<int>::max()) fail(scope, key, what);
    return static_cast<int>(v);
}

std::uint64_t get_u64(const json& obj, const std::string& scope, const char* key, std::uint64_t def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
        fail(scope, key, "must be a nonnegative integer");
    return v->get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& scope, const char* key, std::string def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_string()) fail(scope, key, "must be a string");
    return v->get<std::string>();
}

bool get_bool(const json& obj, const std::string& scope, const char* key, bool def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_boolean()) fail(scope, key, "must be a boolean");
    return v->get<bool>();
}

const json* get_object(const json& obj, const std::string& scope, const char* key) {
    const json* v = find(obj, key);
    if (!v) return nullptr;
    if (!v->is_object()) fail(scope, key, "must be an object");
    return v;
}

OptimizerSpec parse_optimizer(const json* obj, const std::string& scope, OptimizerSpec spec) {
    if (obj) {
        check_keys(*obj, scope,
                   {"kind", "learning_rate", "momentum", "beta1", "beta2", "epsilon",
                    "weight_decay"});
        const std::string kind = get_string(*obj, scope, "kind", to_string(spec.kind));
        try {
            spec.kind = optimizer_kind_from_string(kind);
        } catch (const std::invalid_argument&) {
            fail(scope, "kind", "must be one of sgd, sgdm, adam, adamw, adagrad");
        }
        spec.learning_rate = get_double(*obj, scope, "learning_rate", spec.learning_rate);
        spec.momentum = get_double(*obj, scope, "momentum", spec.momentum);
        spec.beta1 = get_double(*obj, scope, "beta1", spec.beta1);
        spec.beta2 = get_double(*obj, scope, "beta2", spec.beta2);
        spec.epsilon = get_double(*obj, scope, "epsilon", spec.epsilon);
        spec.weight_decay = get_double(*obj, scope, "weight_decay", spec.weight_decay);
    }
    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("config: " + scope + ": " + e.what());
    }
    return spec;
}

ordered_json optimizer_json(const OptimizerSpec& spec) {
    ordered_json out;
    out["kind"] = to_string(spec.kind);
    out["learning_rate"] = spec.learning_rate;
    out["momentum"] = spec.momentum;
    out["beta1"] = spec.beta1;
    out["beta2"] = spec.beta2;
    out["epsilon"] = spec.epsilon;
    out["weight_decay"] = spec.weight_decay;
    return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("config: document must be a JSON object");

    check_keys(doc, "",
               {"experiment_id", "algorithm", "rounds", "tau_epochs", "tau_steps", "batch_size",
                "seed", "weighted_average", "model", "data", "partition", "cohort", "client_opt",
                "server_opt", "sketch", "fda", "targets", "output"});

    ExperimentConfig c;
    c.experiment_id = get_string(doc, "", "experiment_id", c.experiment_id);
    if (c.experiment_id.empty()) fail("", "experiment_id", "must be nonempty");

    const std::string algorithm = get_string(doc, "", "algorithm", to_string(c.algorithm));
    try {
        c.algorithm = algorithm_from_string(algorithm);
    } catch (const std::invalid_argument&) {
        fail("", "algorithm", "must be \"fedopt\" or \"fdaopt\"");
    }

    c.rounds = get_int32(doc, "", "rounds", c.rounds, 1, "must be >= 1");
    c.tau_epochs = get_int32(doc, "", "tau_epochs", c.tau_epochs, 1, "must be >= 1");
    c.tau_steps = get_int(doc, "", "tau_steps", c.tau_steps);
    if (c.tau_steps < 0) fail("", "tau_steps", "must be >= 0");
    c.batch_size = get_int32(doc, "", "batch_size", c.batch_size, 1, "must be >= 1");
    c.seed = get_u64(doc, "", "seed", c.seed);
    c.weighted_average = get_bool(doc, "", "weighted_average", c.weighted_average);

    if (const json* model = get_object(doc, "", "model")) {
        check_keys(*model, "model", {"kind", "hidden_dim", "init_seed"});
        const std::string kind = get_string(*model, "model", "kind", to_string(c.model.kind));
        try {
            c.model.kind = model_kind_from_string(kind);
        } catch (const std::invalid_argument&) {
            fail("model", "kind", "must be \"logreg\" or \"mlp\"");
        }
        c.model.hidden_dim = get_int32(*model, "model", "hidden_dim", c.model.hidden_dim, 0,
                                       "must be >= 0");
        c.model.init_seed = get_u64(*model, "model", "init_seed", c.model.init_seed);
    }
    if (c.model.kind == ModelKind::MLP && c.model.hidden_dim < 1)
        fail("model", "hidden_dim", "must be >= 1 for mlp");

    if (const json* data = get_object(doc, "", "data")) {
        check_keys(*data, "data",
                   {"source", "input_dim", "num_classes", "samples_per_class", "separation",
                    "seed", "csv_path"});
        c.data.source = get_string(*data, "data", "source", c.data.source);
        c.data.input_dim = get_int32(*data, "data", "input_dim", c.data.input_dim, 0, "must be >= 0");
        c.data.num_classes = get_int32(*data, "data", "num_classes", c.data.num_classes, 0, "must be >= 0");
        c.data.samples_per_class = get_int32(*data, "data", "samples_per_class",
                                             c.data.samples_per_class, 0, "must be >= 0");
        c.data.separation = get_double(*data, "data", "separation", c.data.separation);
        c.data.seed = get_u64(*data, "data", "seed", c.data.seed);
        c.data.csv_path = get_string(*data, "data", "csv_path", c.data.csv_path);
    }
    if (c.data.source != "synthetic" && c.data.source != "csv")
        fail("data", "source", "must be \"synthetic\" or \"csv\"");
    if (c.data.source == "csv" && c.data.csv_path.empty())
        fail("data", "csv_path", "must be set when data.source is \"csv\"");
    if (c.data.source == "synthetic") {
        if (c.data.input_dim < 1) fail("data", "input_dim", "must be >= 1");
        if (c.data.num_classes < 2) fail("data", "num_classes", "must be >= 2");
        if (c.data.samples_per_class < 1) fail("data", "samples_per_class", "must be >= 1");
        if (!(c.data.separation > 0.0) || !std::isfinite(c.data.separation))
            fail("data", "separation", "must be a positive finite number");
    }

    if (const json* partition = get_object(doc, "", "partition")) {
        check_keys(*partition, "partition", {"num_clients", "alpha", "seed"});
        c.partition.num_clients = get_int32(*partition, "partition", "num_clients",
                                            c.partition.num_clients, 2, "must be >= 2");
        c.partition.alpha = get_double(*partition, "partition", "alpha", c.partition.alpha);
        c.partition.seed = get_u64(*partition, "partition", "seed", c.partition.seed);
    }
    if (!(c.partition.alpha > 0.0) || !std::isfinite(c.partition.alpha))
        fail("partition", "alpha", "must be a positive finite number");

    if (const json* cohort = get_object(doc, "", "cohort")) {
        check_keys(*cohort, "cohort", {"size", "seed"});
        c.cohort.size = get_int32(*cohort, "cohort", "size", c.cohort.size, 1, "must be >= 1");
        c.cohort.seed = get_u64(*cohort, "cohort", "seed", c.cohort.seed);
    }
    if (c.cohort.size > c.partition.num_clients)
        fail("cohort", "size", "must be <= partition.num_clients");

    c.client_opt = parse_optimizer(get_object(doc, "", "client_opt"), "client_opt", c.client_opt);
    c.server_opt = parse_optimizer(get_object(doc, "", "server_opt"), "server_opt", c.server_opt);

    if (const json* sketch = get_object(doc, "", "sketch")) {
        check_keys(*sketch, "sketch", {"depth", "width", "seed"});
        c.sketch.depth = get_int32(*sketch, "sketch", "depth", c.sketch.depth, 1, "must be >= 1");
        c.sketch.width = get_int32(*sketch, "sketch", "width", c.sketch.width, 1, "must be >= 1");
        c.sketch.seed = get_u64(*sketch, "sketch", "seed", c.sketch.seed);
    }

    if (const json* fda = get_object(doc, "", "fda")) {
        check_keys(*fda, "fda", {"theta_mode", "theta_fixed", "theta_min", "tau_tilde_override"});
        const std::string mode = get_string(*fda, "fda", "theta_mode", to_string(c.fda.theta_mode));
        try {
            c.fda.theta_mode = theta_mode_from_string(mode);
        } catch (const std::invalid_argument&) {
            fail("fda", "theta_mode", "must be \"adaptive\" or \"fixed\"");
        }
        c.fda.theta_fixed = get_double(*fda, "fda", "theta_fixed", c.fda.theta_fixed);
        c.fda.theta_min = get_double(*fda, "fda", "theta_min", c.fda.theta_min);
        c.fda.tau_tilde_override = get_int(*fda, "fda", "tau_tilde_override", c.fda.tau_tilde_override);
    }
    if (!(c.fda.theta_min > 0.0)) fail("fda", "theta_min", "must be > 0");
    if (c.fda.tau_tilde_override < 0) fail("fda", "tau_tilde_override", "must be >= 0");

    if (const json* targets = get_object(doc, "", "targets")) {
        check_keys(*targets, "targets", {"fractions", "baseline_accuracy", "baseline_epochs"});
        if (const json* fractions = find(*targets, "fractions")) {
            if (!fractions->is_array()) fail("targets", "fractions", "must be an array of numbers");
            c.targets.fractions.clear();
            for (const json& f : *fractions) {
                if (!f.is_number()) fail("targets", "fractions", "must be an array of numbers");
                c.targets.fractions.push_back(f.get<double>());
            }
        }
        c.targets.baseline_accuracy =
            get_double(*targets, "targets", "baseline_accuracy", c.targets.baseline_accuracy);
        c.targets.baseline_epochs = get_int32(*targets, "targets", "baseline_epochs",
                                              c.targets.baseline_epochs, 0, "must be >= 0");
    }
    for (std::size_t i = 0; i < c.targets.fractions.size(); ++i) {
        const double f = c.targets.fractions[i];
        if (!(f > 0.0) || f > 1.0) fail("targets", "fractions", "entries must lie in (0, 1]");
        if (i > 0 && f <= c.targets.fractions[i - 1])
            fail("targets", "fractions", "must be strictly ascending");
    }
    if (c.targets.baseline_accuracy != 0.0 &&
        (!(c.targets.baseline_accuracy > 0.0) || c.targets.baseline_accuracy > 1.0))
        fail("targets", "baseline_accuracy", "must be 0 (measure) or in (0, 1]");

    if (const json* output = get_object(doc, "", "output")) {
        check_keys(*output, "output", {"dir", "prefix"});
        c.output.dir = get_string(*output, "output", "dir", c.output.dir);
        c.output.prefix = get_string(*output, "output", "prefix", c.output.prefix);
    }
    if (c.output.dir.empty()) fail("output", "dir", "must be nonempty");

    return c;
}

std::string serialize(const ExperimentConfig& c) {
    ordered_json doc;
    doc["experiment_id"] = c.experiment_id;
    doc["algorithm"] = to_string(c.algorithm);
    doc["rounds"] = c.rounds;
    doc["tau_epochs"] = c.tau_epochs;
    doc["tau_steps"] = c.tau_steps;
    doc["batch_size"] = c.batch_size;
    doc["seed"] = c.seed;
    doc["weighted_average"] = c.weighted_average;

    ordered_json model;
    model["kind"] = to_string(c.model.kind);
    model["hidden_dim"] = c.model.hidden_dim;
    model["init_seed"] = c.model.init_seed;
    doc["model"] = std::move(model);

    ordered_json data;
    data["source"] = c.data.source;
    data["input_dim"] = c.data.input_dim;
    data["num_classes"] = c.data.num_classes;
    data["samples_per_class"] = c.data.samples_per_class;
    data["separation"] = c.data.separation;
    data["seed"] = c.data.seed;
    data["csv_path"] = c.data.csv_path;
    doc["data"] = std::move(data);

    ordered_json partition;
    partition["num_clients"] = c.partition.num_clients;
    partition["alpha"] = c.partition.alpha;
    partition["seed"] = c.partition.seed;
    doc["partition"] = std::move(partition);

    ordered_json cohort;
    cohort["size"] = c.cohort.size;
    cohort["seed"] = c.cohort.seed;
    doc["cohort"] = std::move(cohort);

    doc["client_opt"] = optimizer_json(c.client_opt);
    doc["server_opt"] = optimizer_json(c.server_opt);

    ordered_json sketch;
    sketch["depth"] = c.sketch.depth;
    sketch["width"] = c.sketch.width;
    sketch["seed"] = c.sketch.seed;
    doc["sketch"] = std::move(sketch);

    ordered_json fda;
    fda["theta_mode"] = to_string(c.fda.theta_mode);
    fda["theta_fixed"] = c.fda.theta_fixed;
    fda["theta_min"] = c.fda.theta_min;
    fda["tau_tilde_override"] = c.fda.tau_tilde_override;
    doc["fda"] = std::move(fda);

    ordered_json targets;
    targets["fractions"] = c.targets.fractions;
    targets["baseline_accuracy"] = c.targets.baseline_accuracy;
    targets["baseline_epochs"] = c.targets.baseline_epochs;
    doc["targets"] = std::move(targets);

    ordered_json output;
    output["dir"] = c.output.dir;
    output["prefix"] = c.output.prefix;
    doc["output"] = std::move(output);

    return doc.dump(2) + "\n";
}

ExperimentConfig apply_override(const ExperimentConfig& config, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must have the form key=value: " + assignment);
    std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    std::string pointer = "/";
    for (char ch : path) pointer += ch == '.' ? '/' : ch;

    json doc = json::parse(serialize(config));
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;
    }
    try {
        doc[json::json_pointer(pointer)] = parsed;
    } catch (const json::exception&) {
        throw std::invalid_argument("config: unknown key \"" + path + "\"");
    }
    return parse_config(doc.dump());
}

}  // namespace fdaopt
