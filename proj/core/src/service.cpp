#include "ocpscan/service.hpp"

#include <httplib.h>

#include <atomic>

#include "ocpscan/analysis.hpp"
#include "ocpscan/call_graph.hpp"
#include "ocpscan/error.hpp"
#include "ocpscan/sweep.hpp"

namespace ocpscan {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    send_error(res, 400, std::string("request body is not valid JSON: ") + e.what());
    return std::nullopt;
  }
}

}  // namespace

struct Service::Impl {
  explicit Impl(ServiceConfig cfg) : config(std::move(cfg)), store(config.storageDir) {
    server.set_payload_max_length(config.maxUploadBytes);
    const unsigned threads = std::max(2u, config.workerThreads);
    server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    routes();
  }

  std::shared_ptr<const BinaryImage> image_or_404(const std::string& id, httplib::Response& res) {
    auto image = store.get(id);
    if (!image) send_error(res, 404, "unknown binaryId " + id);
    return image;
  }

  void routes() {
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    server.Post("/binaries", [this](const httplib::Request& req, httplib::Response& res) {
      std::string content = req.body;
      if (req.is_multipart_form_data()) {
        if (!req.has_file("file")) {
          send_json(res, 422, {{"error", "invalid upload"},
                               {"fields", {{{"field", "file"}, {"message", "is required"}}}}});
          return;
        }
        content = req.get_file_value("file").content;
      }
      if (content.empty()) {
        send_json(res, 422, {{"error", "invalid upload"},
                             {"fields", {{{"field", "file"}, {"message", "empty image"}}}}});
        return;
      }
      const auto* bytes = reinterpret_cast<const std::uint8_t*>(content.data());
      const std::string id = store.put({bytes, content.size()});
      send_json(res, 201, {{"binaryId", id}, {"size", content.size()}});
    });

    server.Get(R"(/binaries/([0-9a-f]+))", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
      const std::string id = req.matches[1];
      if (auto image = image_or_404(id, res)) {
        send_json(res, 200, {{"binaryId", id}, {"size", image->size()},
                             {"hasAnalysis", store.get_result(id).has_value()}});
      }
    });

    server.Post(R"(/binaries/([0-9a-f]+)/analyze)", [this](const httplib::Request& req,
                                                           httplib::Response& res) {
      const std::string id = req.matches[1];
      auto image = image_or_404(id, res);
      if (!image) return;
      auto body = parse_body(req, res);
      if (!body) return;
      try {
        const auto params = params_from_json(*body);
        const std::string text = serialize(analyze(*image, params, config.scoring));
        store.put_result(id, text);
        res.status = 200;
        res.set_content(text, "application/json");
      } catch (const ValidationError& e) {
        send_json(res, 422, error_json(e));
      } catch (const Error& e) {
        send_json(res, 422, error_json(e));
      }
    });

    server.Post(R"(/binaries/([0-9a-f]+)/sweep)", [this](const httplib::Request& req,
                                                         httplib::Response& res) {
      const std::string id = req.matches[1];
      auto image = image_or_404(id, res);
      if (!image) return;
      auto body = parse_body(req, res);
      if (!body) return;
      try {
        if (!body->is_object()) throw ValidationError("sweep", "must be a JSON object");
        json specJson = *body;
        json paramsJson = specJson.value("params", json::object());
        specJson.erase("params");
        const auto spec = sweep_spec_from_json(specJson);
        const auto base = params_from_json(paramsJson);
        send_json(res, 200, to_json(run_sweep(*image, base, spec, config.scoring)));
      } catch (const Error& e) {
        send_json(res, 422, error_json(e));
      }
    });

    server.Get(R"(/binaries/([0-9a-f]+)/candidates/(\d+)/graph)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 if (!image_or_404(id, res)) return;
                 const std::string format =
                     req.has_param("format") ? req.get_param_value("format") : "json";
                 GraphFormat fmt;
                 try {
                   fmt = parse_graph_format(format);
                 } catch (const Error& e) {
                   send_json(res, 422, {{"error", e.what()},
                                        {"fields", {{{"field", "format"},
                                                     {"message", "must be dot or json"}}}}});
                   return;
                 }
                 const auto stored = store.get_result(id);
                 if (!stored) {
                   send_error(res, 404, "binary " + id + " has not been analyzed yet");
                   return;
                 }
                 const auto result = json::parse(*stored);
                 const auto& candidates = result.at("candidates");
                 const std::size_t k = std::stoul(req.matches[2]);
                 if (k >= candidates.size()) {
                   send_error(res, 404, "no candidate with rank " + std::to_string(k));
                   return;
                 }
                 const auto graph = call_graph_from_json(candidates[k].at("graph"));
                 res.status = 200;
                 if (fmt == GraphFormat::dot) {
                   res.set_content(export_graph(graph, GraphFormat::dot), "text/vnd.graphviz");
                 } else {
                   res.set_content(export_graph(graph, GraphFormat::json) + "\n",
                                   "application/json");
                 }
               });

    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            send_error(res, 500, e.what());
          } catch (...) {
            send_error(res, 500, "internal error");
          }
        });
  }

  ServiceConfig config;
  BinaryStore store;
  httplib::Server server;
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Service::~Service() { stop(); }

bool Service::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

int Service::bind_to_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

void Service::serve() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

}  // namespace ocpscan
