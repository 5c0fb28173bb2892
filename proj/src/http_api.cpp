#include "remnantflow/http_api.hpp"

#include <httplib.h>

#include "remnantflow/png_io.hpp"

namespace rf {
namespace {

void send_json(httplib::Response& res, const nlohmann::ordered_json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::string& detail) {
  send_json(res, {{"code", code}, {"message", message}, {"detail", detail}}, status);
}

nlohmann::json body_json(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(req.body);  // parse errors surface as 400
  if (!j.is_object()) throw Error(ErrorKind::validation, "request body must be a JSON object");
  return j;
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

nlohmann::ordered_json refine_json(const RefineOutcome& outcome) {
  nlohmann::ordered_json j;
  j["clarification"] = outcome.needs_clarification;
  j["message"] = outcome.message;
  j["iteration"] = outcome.iteration ? nlohmann::ordered_json(*outcome.iteration) : nlohmann::ordered_json(nullptr);
  j["session"] = to_json(outcome.session);
  return j;
}

/// Wraps a handler so every rf::Error becomes a JSON error response.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.kind()), to_string(e.kind()), e.what(), e.detail());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "validation", std::string("malformed request: ") + e.what(), "");
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what(), "");
    }
  };
}

}  // namespace

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::missing_placeholder:
    case ErrorKind::undefined_metric:
    case ErrorKind::unavailable_backend: return 422;
    case ErrorKind::not_found: return 404;
    case ErrorKind::wrong_state:
    case ErrorKind::missing_ground_truth: return 409;
    case ErrorKind::bad_index: return 400;
    case ErrorKind::provider_unavailable:
    case ErrorKind::protocol: return 502;
    case ErrorKind::generation_failed:
    case ErrorKind::numeric:
    case ErrorKind::io: return 500;
  }
  return 500;
}

HttpApi::HttpApi(Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;

  srv.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"status", "ok"}});
  }));

  srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::string photo;
    std::optional<std::string> truth;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("photo")) throw Error(ErrorKind::validation, "multipart field 'photo' is required");
      photo = req.get_file_value("photo").content;
      if (req.has_file("ground_truth")) truth = req.get_file_value("ground_truth").content;
    } else {
      photo = req.body;
    }
    std::optional<std::span<const std::uint8_t>> truth_bytes;
    if (truth) truth_bytes = as_bytes(*truth);
    const std::string id = service_.create_session(as_bytes(photo), truth_bytes);
    send_json(res, {{"id", id}}, 201);
  }));

  srv.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"sessions", service_.list()}});
  }));

  srv.Get(R"(/sessions/([A-Za-z0-9]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, to_json(service_.get(req.matches[1])));
  }));

  srv.Post(R"(/sessions/([A-Za-z0-9]+)/ground_truth)",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             std::string body = req.body;
             if (req.is_multipart_form_data()) {
               if (!req.has_file("ground_truth"))
                 throw Error(ErrorKind::validation, "multipart field 'ground_truth' is required");
               body = req.get_file_value("ground_truth").content;
             }
             send_json(res, to_json(service_.set_ground_truth(req.matches[1], as_bytes(body))));
           }));

  srv.Post(R"(/sessions/([A-Za-z0-9]+)/generate)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = body_json(req);
    if (!body.contains("checkpoint")) throw Error(ErrorKind::validation, "field 'checkpoint' is required");
    send_json(res, to_json(service_.run_generate(req.matches[1], body.at("checkpoint").get<std::string>())));
  }));

  srv.Post(R"(/sessions/([A-Za-z0-9]+)/refine)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = body_json(req);
    RefineInput input;
    if (body.contains("text")) input.text = body.at("text").get<std::string>();
    input.template_id = body.value("template_id", std::string());
    if (body.contains("params"))
      for (const auto& [key, value] : body.at("params").items()) input.params[key] = value.get<std::string>();
    input.provider_id = body.value("provider_id", std::string("mock"));
    if (!input.text && input.template_id.empty())
      throw Error(ErrorKind::validation, "refine needs 'text' or 'template_id' with 'params'");
    send_json(res, refine_json(service_.run_refine(req.matches[1], input)));
  }));

  srv.Get(R"(/sessions/([A-Za-z0-9]+)/overlay/(\d+))",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            OverlaySpec spec;
            if (req.has_param("thickness")) spec.thickness = std::stoi(req.get_param_value("thickness"));
            const RasterImage overlay =
                service_.render_overlay(req.matches[1], std::stoul(req.matches[2].str()), spec);
            const Bytes png = encode_png(overlay);
            res.set_content(std::string(png.begin(), png.end()), "image/png");
          }));

  srv.Get(R"(/sessions/([A-Za-z0-9]+)/images/([A-Za-z0-9_\-]+))",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Bytes png = service_.artifact(req.matches[1], req.matches[2]);
            res.set_content(std::string(png.begin(), png.end()), "image/png");
          }));

  srv.Post(R"(/sessions/([A-Za-z0-9]+)/accept)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = body_json(req);
    if (!body.contains("iteration") || !body.at("iteration").is_number_integer() || body.at("iteration").get<long long>() < 0)
      throw Error(ErrorKind::validation, "field 'iteration' must be a non-negative integer");
    send_json(res, to_json(service_.accept_iteration(req.matches[1], body.at("iteration").get<std::size_t>())));
  }));

  srv.Get(R"(/sessions/([A-Za-z0-9]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string format = req.has_param("format") ? req.get_param_value("format") : "svg";
    const ExportArtifact artifact = service_.export_session(req.matches[1], export_format_from_string(format));
    res.set_header("Content-Disposition", "attachment; filename=\"" + std::string(req.matches[1]) + "." + format + "\"");
    res.set_content(artifact.content, artifact.media_type.c_str());
  }));
}

HttpApi::~HttpApi() = default;

bool HttpApi::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpApi::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpApi::listen_after_bind() { return server_->listen_after_bind(); }

void HttpApi::stop() { server_->stop(); }

void HttpApi::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace rf
