#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "mtie/chat.hpp"
#include "mtie/error.hpp"

namespace mtie {

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(std::string origin, std::string path) : origin_(std::move(origin)), path_(std::move(path)) {}

  HttpResponse post(const std::string& body, const std::map<std::string, std::string>& headers,
                    double timeout_s) override {
    httplib::Client client(origin_);
    auto secs = static_cast<time_t>(timeout_s);
    auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") content_type = v;
      else h.emplace(k, v);
    }
    auto res = client.Post(path_, h, body, content_type);
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
  }

 private:
  std::string origin_;
  std::string path_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigError, "endpoint needs a scheme: " + endpoint);
  auto scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error(ErrorCode::ConfigError, "unsupported scheme: " + scheme);
  auto path_start = endpoint.find('/', scheme_end + 3);
  std::string origin = path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
  return std::make_shared<HttplibTransport>(origin, path);
}

}  // namespace mtie
