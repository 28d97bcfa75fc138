#include <sys/socket.h>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fstream>
#include <iterator>
#include <list>
#include <map>
#include <thread>

#include "pdm/bench.hpp"
#include "pdm/error.hpp"
#include "pdm/service.hpp"

namespace pdm {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

http::status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::no_session:
      return http::status::conflict;
    case ErrorCode::invariant:
      return http::status::internal_server_error;
    default:
      return http::status::bad_request;
  }
}

json error_body(ErrorCode code, const std::string& message) {
  return {{"error", {{"code", to_string(code)}, {"message", message}}}};
}

Response make_response(const Request& req, http::status status, std::string body, const std::string& type) {
  Response res{status, req.version()};
  res.set(http::field::server, "pdmvr");
  res.set(http::field::content_type, type);
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response json_response(const Request& req, http::status status, const json& body) {
  return make_response(req, status, body.dump(), "application/json");
}

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::map<std::string, std::string> parse_query(std::string_view target) {
  std::map<std::string, std::string> out;
  const auto q = target.find('?');
  if (q == std::string_view::npos) return out;
  std::string_view rest = target.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const std::string_view pair = rest.substr(0, amp);
    const auto eq = pair.find('=');
    if (!pair.empty()) {
      out[url_decode(pair.substr(0, eq))] = eq == std::string_view::npos ? "" : url_decode(pair.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return out;
}

FrameRequest frame_request_from_query(const std::map<std::string, std::string>& q) {
  json j = json::object();
  try {
    for (const auto& [key, value] : q) {
      if (key == "angle" || key == "step") {
        std::size_t used = 0;
        j[key] = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(key);
      } else if (key == "w" || key == "h") {
        std::size_t used = 0;
        j[key] = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(key);
      } else if (key == "ess") {
        j[key] = value;
      } else if (key == "ert") {
        j[key] = !(value == "0" || value == "false");
      }
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::parse, "invalid frame query");
  }
  return parse_frame_request(j);
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed JSON: ") + e.what());
  }
}

std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

json frame_header(const FrameResponse& f) {
  return {{"type", "frame"},
          {"frame_id", f.frame_id},
          {"tf_version", f.tf_version},
          {"w", f.image.width},
          {"h", f.image.height},
          {"format", "png"},
          {"render_stats", stats_to_json(f.stats)},
          {"update", {{"select_ms", f.select_ms}, {"combine_ms", f.combine_ms}}}};
}

}  // namespace

struct Connection {
  int fd = -1;
  bool done = false;
  std::thread thread;
};

struct HttpServer::Impl {
  RenderService& service;
  std::string host;
  std::uint16_t requested_port;
  std::optional<std::filesystem::path> static_dir;

  asio::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::uint16_t bound_port = 0;
  std::thread accept_thread;
  std::mutex conn_mu;
  std::list<Connection> connections;
  std::atomic<bool> running{false};

  Impl(RenderService& s, std::string h, std::uint16_t p, std::optional<std::filesystem::path> dir)
      : service(s), host(std::move(h)), requested_port(p), static_dir(std::move(dir)) {}

  void start() {
    beast::error_code ec;
    const auto address = asio::ip::make_address(host, ec);
    if (ec) throw Error(ErrorCode::invalid_argument, "invalid host address: " + host);
    const tcp::endpoint endpoint{address, requested_port};
    acceptor.emplace(ioc);
    acceptor->open(endpoint.protocol(), ec);
    if (!ec) acceptor->set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor->bind(endpoint, ec);
    if (!ec) acceptor->listen(asio::socket_base::max_listen_connections, ec);
    if (ec) {
      acceptor.reset();
      throw Error(ErrorCode::io, "cannot listen on " + host + ":" + std::to_string(requested_port) + ": " +
                                     ec.message());
    }
    bound_port = acceptor->local_endpoint().port();
    running = true;
    accept_thread = std::thread([this] { accept_loop(); });
  }

  void stop() {
    if (!running.exchange(false)) return;
    ::shutdown(acceptor->native_handle(), SHUT_RDWR);
    accept_thread.join();
    std::list<Connection> pending;
    {
      std::lock_guard lock(conn_mu);
      for (auto& c : connections) {
        if (c.fd >= 0) ::shutdown(c.fd, SHUT_RDWR);
      }
      pending.swap(connections);
    }
    for (auto& c : pending) c.thread.join();
    beast::error_code ec;
    acceptor->close(ec);
  }

  void accept_loop() {
    while (running) {
      beast::error_code ec;
      tcp::socket socket(ioc);
      acceptor->accept(socket, ec);
      if (ec || !running) break;
      std::lock_guard lock(conn_mu);
      reap_locked();
      auto& slot = connections.emplace_back();
      slot.thread = std::thread([this, &slot, s = std::move(socket)]() mutable { serve(slot, std::move(s)); });
    }
  }

  void reap_locked() {
    for (auto it = connections.begin(); it != connections.end();) {
      if (it->done) {
        it->thread.join();
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }

  void serve(Connection& slot, tcp::socket socket) {
    {
      std::lock_guard lock(conn_mu);
      slot.fd = socket.native_handle();
      if (!running) ::shutdown(socket.native_handle(), SHUT_RDWR);
    }
    try {
      session(socket);
    } catch (const std::exception&) {
    }
    std::lock_guard lock(conn_mu);
    slot.fd = -1;
    beast::error_code ec;
    socket.close(ec);
    slot.done = true;
  }

  void session(tcp::socket& socket) {
    beast::flat_buffer buffer;
    for (;;) {
      Request req;
      beast::error_code ec;
      http::read(socket, buffer, req, ec);
      if (ec) return;
      if (websocket::is_upgrade(req)) {
        if (req.target() == "/api/stream") {
          stream(socket, req);
        } else {
          auto res = json_response(req, http::status::not_found, error_body(ErrorCode::invalid_argument, "no such socket"));
          http::write(socket, res, ec);
        }
        return;
      }
      Response res = handle(req);
      http::write(socket, res, ec);
      if (ec || !res.keep_alive()) break;
    }
    beast::error_code ec;
    socket.shutdown(tcp::socket::shutdown_send, ec);
  }

  Response handle(const Request& req) {
    const std::string_view target(req.target().data(), req.target().size());
    const std::string_view path = target.substr(0, target.find('?'));
    try {
      if (path == "/api/info" && req.method() == http::verb::get) {
        return json_response(req, http::status::ok, service.info());
      }
      if (path == "/api/tf" && req.method() == http::verb::post) {
        return json_response(req, http::status::ok, service.post_tf(parse_body(req.body())));
      }
      if (path == "/api/volume" && req.method() == http::verb::post) {
        return json_response(req, http::status::ok, service.load_volume(parse_body(req.body())));
      }
      if (path == "/api/frame" && req.method() == http::verb::get) {
        const FrameResponse f = service.render_frame(frame_request_from_query(parse_query(target)));
        Response res = make_response(req, http::status::ok, std::string(f.png.begin(), f.png.end()), "image/png");
        res.set("X-Render-Stats", stats_to_json(f.stats).dump());
        res.set("X-Frame-Id", std::to_string(f.frame_id));
        res.set("X-Tf-Version", std::to_string(f.tf_version));
        return res;
      }
      if (path.rfind("/api/", 0) == 0) {
        return json_response(req, http::status::not_found,
                             error_body(ErrorCode::invalid_argument, "unknown endpoint " + std::string(path)));
      }
      if (req.method() == http::verb::get) return serve_static(req, std::string(path));
      return json_response(req, http::status::method_not_allowed,
                           error_body(ErrorCode::invalid_argument, "method not allowed"));
    } catch (const Error& e) {
      return json_response(req, status_for(e.code()), error_body(e.code(), e.what()));
    } catch (const std::exception& e) {
      return json_response(req, http::status::internal_server_error, error_body(ErrorCode::invariant, e.what()));
    }
  }

  Response serve_static(const Request& req, std::string path) {
    const auto not_found = [&] {
      return json_response(req, http::status::not_found, error_body(ErrorCode::io, "not found"));
    };
    if (!static_dir || path.find("..") != std::string::npos) return not_found();
    if (path.empty() || path.back() == '/') path += "index.html";
    const std::filesystem::path file = *static_dir / std::filesystem::path(path).relative_path();
    std::ifstream in(file, std::ios::binary);
    if (!in) return not_found();
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return make_response(req, http::status::ok, std::move(body), content_type_for(file));
  }

  void stream(tcp::socket& socket, const Request& req) {
    websocket::stream<tcp::socket&> ws(socket);
    ws.accept(req);
    beast::flat_buffer buffer;
    for (;;) {
      beast::error_code ec;
      buffer.clear();
      ws.read(buffer, ec);
      if (ec) return;
      json reply;
      std::optional<FrameResponse> frame;
      try {
        if (!ws.got_text()) throw Error(ErrorCode::parse, "frame requests must be text messages");
        frame = service.render_frame(parse_frame_request(parse_body(beast::buffers_to_string(buffer.data()))));
        reply = frame_header(*frame);
      } catch (const Error& e) {
        reply = error_body(e.code(), e.what());
        reply["type"] = "error";
      } catch (const std::exception& e) {
        reply = error_body(ErrorCode::invariant, e.what());
        reply["type"] = "error";
      }
      ws.text(true);
      ws.write(asio::buffer(reply.dump()), ec);
      if (ec) return;
      if (frame) {
        ws.binary(true);
        ws.write(asio::buffer(frame->png), ec);
        if (ec) return;
      }
    }
  }
};

HttpServer::HttpServer(RenderService& service, std::string host, std::uint16_t port,
                       std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service, std::move(host), port, std::move(static_dir))) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() { impl_->start(); }
void HttpServer::stop() { impl_->stop(); }
std::uint16_t HttpServer::port() const noexcept { return impl_->bound_port; }

}  // namespace pdm
