#include "aspectrl/service.hpp"

#include <atomic>
#include <chrono>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "aspectrl/rejection.hpp"
#include "aspectrl/version.hpp"

namespace aspectrl::service {

using nlohmann::json;

namespace {

struct RequestError : std::runtime_error {
    RequestError(std::string field_name, const std::string& reason)
        : std::runtime_error(reason), field(std::move(field_name)) {}
    std::string field;
};

std::string error_body(const std::string& field, const std::string& reason) {
    json doc;
    doc["error"]["field"] = field;
    doc["error"]["reason"] = reason;
    return doc.dump();
}

json parse_body(const std::string& body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw RequestError("body", "request body must be a JSON object");
    }
    return doc;
}

Task parse_task_field(const json& doc) {
    if (!doc.contains("task") || !doc["task"].is_string()) {
        throw RequestError("task", "missing string field 'task'");
    }
    auto task = task_from_string(doc["task"].get<std::string>());
    if (!task) {
        throw RequestError("task", "unknown task '" + doc["task"].get<std::string>() +
                                       "' (expected absc or aoste)");
    }
    return *task;
}

// Applies request-level config overrides to the service defaults.
void apply_config(const json& doc, RewardConfig& reward, FormatConfig& format) {
    if (!doc.contains("config")) return;
    const json& cfg = doc["config"];
    if (!cfg.is_object()) throw RequestError("config", "config must be an object");

    try {
        if (cfg.contains("lambda")) reward.lambda = cfg["lambda"].get<double>();
        if (cfg.contains("gamma")) reward.gamma = cfg["gamma"].get<double>();
        if (cfg.contains("tau")) reward.tau = cfg["tau"].get<double>();
        if (cfg.contains("format_weights")) {
            auto weights = cfg["format_weights"].get<std::vector<double>>();
            if (weights.size() != 3) {
                throw RequestError("config.format_weights", "expected [w_tag, w_flow, w_struct]");
            }
            format.w_tag = weights[0];
            format.w_flow = weights[1];
            format.w_struct = weights[2];
        }
        if (cfg.contains("flow_saturation")) {
            format.flow_saturation_count = cfg["flow_saturation"].get<int>();
        }
    } catch (const json::exception& e) {
        throw RequestError("config", e.what());
    }

    try {
        reward.validate();
        format.validate();
    } catch (const std::invalid_argument& e) {
        throw RequestError("config", e.what());
    }
}

json config_echo(const RewardConfig& reward, const FormatConfig& format) {
    json cfg;
    cfg["lambda"] = reward.lambda;
    cfg["gamma"] = reward.gamma;
    cfg["tau"] = reward.tau;
    cfg["format_weights"] = {format.w_tag, format.w_flow, format.w_struct};
    cfg["flow_saturation"] = format.flow_saturation_count;
    return cfg;
}

GoldRecord parse_gold_payload(const json& item, Task task, const std::string& field_prefix) {
    if (!item.contains("gold") || !item["gold"].is_object()) {
        throw RequestError(field_prefix + ".gold", "missing object field 'gold'");
    }
    const json& gold_json = item["gold"];

    GoldRecord gold;
    gold.id = item.value("id", "");
    gold.text = gold_json.value("text", "");
    if (task == Task::absc) {
        if (!gold_json.contains("label") || !gold_json["label"].is_string()) {
            throw RequestError(field_prefix + ".gold.label", "missing string field 'label'");
        }
        auto label = label_from_string(gold_json["label"].get<std::string>());
        if (!label) {
            throw RequestError(field_prefix + ".gold.label",
                               "unknown label '" + gold_json["label"].get<std::string>() + "'");
        }
        gold.payload = AbscGold{gold_json.value("aspect", ""), *label};
    } else {
        if (!gold_json.contains("triplets") || !gold_json["triplets"].is_array()) {
            throw RequestError(field_prefix + ".gold.triplets",
                               "missing array field 'triplets'");
        }
        AosteGold aoste;
        for (const json& tuple : gold_json["triplets"]) {
            if (!tuple.is_array() || tuple.size() != 3) {
                throw RequestError(field_prefix + ".gold.triplets",
                                   "triplet must be [aspect, opinion, polarity]");
            }
            auto polarity = label_from_string(tuple[2].get<std::string>());
            if (!polarity) {
                throw RequestError(field_prefix + ".gold.triplets",
                                   "unknown polarity '" + tuple[2].get<std::string>() + "'");
            }
            aoste.triplets.push_back(
                Triplet{tuple[0].get<std::string>(), tuple[1].get<std::string>(), *polarity});
        }
        gold.payload = std::move(aoste);
    }
    return gold;
}

json breakdown_to_json(const RewardBreakdown& b, bool correct) {
    json item;
    item["r_tag"] = b.r_tag;
    item["r_flow"] = b.r_flow;
    item["r_struct"] = b.r_struct;
    item["r_format"] = b.r_format;
    item["r_answer"] = b.r_answer;
    item["r_total"] = b.r_total;
    item["correct"] = correct;
    return item;
}

}  // namespace

HandlerResult handle_score(const std::string& request_body, const ServiceOptions& defaults) {
    try {
        json doc = parse_body(request_body);
        Task task = parse_task_field(doc);
        RewardConfig reward = defaults.reward;
        FormatConfig format = defaults.format;
        apply_config(doc, reward, format);

        if (!doc.contains("items") || !doc["items"].is_array() || doc["items"].empty()) {
            throw RequestError("items", "missing non-empty array field 'items'");
        }

        json items = json::array();
        int index = 0;
        for (const json& item : doc["items"]) {
            std::string prefix = "items[" + std::to_string(index) + "]";
            if (!item.is_object() || !item.contains("generation") ||
                !item["generation"].is_string()) {
                throw RequestError(prefix + ".generation", "missing string field 'generation'");
            }
            GoldRecord gold = parse_gold_payload(item, task, prefix);
            RawGeneration gen{item["generation"].get<std::string>(), 0};

            json out = breakdown_to_json(score_generation(gen, gold, reward, format),
                                         is_correct(gen, gold, reward));
            out["id"] = item.value("id", "");
            items.push_back(std::move(out));
            ++index;
        }

        json response;
        response["schema_version"] = kSchemaVersion;
        response["task"] = to_string(task);
        response["config"] = config_echo(reward, format);
        response["items"] = std::move(items);
        return {200, response.dump()};
    } catch (const RequestError& e) {
        return {400, error_body(e.field, e.what())};
    } catch (const std::exception& e) {
        return {400, error_body("body", e.what())};
    }
}

HandlerResult handle_filter(const std::string& request_body, const ServiceOptions& defaults) {
    try {
        json doc = parse_body(request_body);
        Task task = parse_task_field(doc);
        RewardConfig reward = defaults.reward;
        FormatConfig format = defaults.format;
        apply_config(doc, reward, format);

        if (!doc.contains("groups") || !doc["groups"].is_array() || doc["groups"].empty()) {
            throw RequestError("groups", "missing non-empty array field 'groups'");
        }

        json groups = json::array();
        int total = 0, correct_total = 0, retained_total = 0, skipped = 0;
        int index = 0;
        for (const json& group_json : doc["groups"]) {
            std::string prefix = "groups[" + std::to_string(index) + "]";
            if (!group_json.is_object() || !group_json.contains("samples") ||
                !group_json["samples"].is_array() || group_json["samples"].empty()) {
                throw RequestError(prefix + ".samples",
                                   "missing non-empty array field 'samples'");
            }

            GenerationGroup group;
            group.input_id = group_json.value("id", "");
            group.gold = parse_gold_payload(group_json, task, prefix);
            for (const json& sample : group_json["samples"]) {
                if (!sample.is_string()) {
                    throw RequestError(prefix + ".samples", "samples must be strings");
                }
                group.generations.push_back(RawGeneration{sample.get<std::string>(), 0});
            }

            FilteredGroup filtered = filter_group(group, reward);
            json out;
            out["id"] = group.input_id;
            out["correctness"] = json::array();
            for (char flag : filtered.correctness_flags) {
                out["correctness"].push_back(flag != 0);
            }
            out["retained_indices"] = filtered.retained_indices;
            out["all_correct"] = filtered.all_correct;
            out["all_incorrect"] = filtered.all_incorrect;
            groups.push_back(std::move(out));

            total += static_cast<int>(group.generations.size());
            retained_total += static_cast<int>(filtered.retained_indices.size());
            correct_total += static_cast<int>(group.generations.size()) -
                             static_cast<int>(filtered.retained_indices.size());
            if (filtered.all_correct) ++skipped;
            ++index;
        }

        json response;
        response["schema_version"] = kSchemaVersion;
        response["task"] = to_string(task);
        response["config"] = config_echo(reward, format);
        response["groups"] = std::move(groups);
        response["stats"] = {{"groups", index},
                             {"skipped_groups", skipped},
                             {"total_generations", total},
                             {"correct_generations", correct_total},
                             {"retained_generations", retained_total}};
        return {200, response.dump()};
    } catch (const RequestError& e) {
        return {400, error_body(e.field, e.what())};
    } catch (const std::exception& e) {
        return {400, error_body("body", e.what())};
    }
}

std::string health_body(const ServiceOptions& defaults) {
    json doc;
    doc["status"] = "ok";
    doc["version"] = kVersion;
    doc["schema_version"] = kSchemaVersion;
    doc["config"] = config_echo(defaults.reward, defaults.format);
    return doc.dump();
}

struct RewardServer::Impl {
    ServiceOptions options;
    httplib::Server server;
    std::thread thread;
    int bound_port = 0;
    std::atomic<bool> running{false};

    explicit Impl(ServiceOptions opts) : options(std::move(opts)) {
        const int threads = options.worker_threads;
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
        server.set_payload_max_length(options.max_body_bytes);

        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(health_body(options), "application/json");
        });
        server.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            const auto start = std::chrono::steady_clock::now();
            HandlerResult result = handle_score(req.body, options);
            res.status = result.status;
            res.set_content(result.body, "application/json");
            set_timing(res, start);
        });
        server.Post("/filter", [this](const httplib::Request& req, httplib::Response& res) {
            const auto start = std::chrono::steady_clock::now();
            HandlerResult result = handle_filter(req.body, options);
            res.status = result.status;
            res.set_content(result.body, "application/json");
            set_timing(res, start);
        });
    }

    static void set_timing(httplib::Response& res,
                           std::chrono::steady_clock::time_point start) {
        const auto elapsed = std::chrono::steady_clock::now() - start;
        const double ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed)
                .count();
        res.set_header("X-Timing-Ms", std::to_string(ms));
    }
};

RewardServer::RewardServer(ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

RewardServer::~RewardServer() { stop(); }

int RewardServer::start() {
    if (impl_->options.port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(impl_->options.host);
        if (impl_->bound_port <= 0) {
            throw std::runtime_error("cannot bind to " + impl_->options.host);
        }
    } else {
        if (!impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
            throw std::runtime_error("cannot bind to " + impl_->options.host + ":" +
                                     std::to_string(impl_->options.port));
        }
        impl_->bound_port = impl_->options.port;
    }
    impl_->running = true;
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->bound_port;
}

void RewardServer::run() {
    if (!impl_->running) start();
    impl_->thread.join();
    impl_->running = false;
}

void RewardServer::stop() {
    if (impl_ && impl_->running.exchange(false)) {
        impl_->server.stop();
        if (impl_->thread.joinable()) impl_->thread.join();
    }
}

int RewardServer::port() const { return impl_->bound_port; }

}  // namespace aspectrl::service
