#include <httplib.h>

#include <regex>

#include "flowfill/nodes.hpp"

namespace flowfill {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string target;  // /path?query
};

SplitUrl split_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/?#]+)([^#]*))", std::regex::icase);
    std::smatch m;
    if (!std::regex_search(url, m, re)) throw NodeError("InvalidUrl", "not an absolute http(s) URL: " + url);
    SplitUrl out{m[1].str(), m[2].str()};
    if (out.target.empty() || out.target.front() != '/') out.target.insert(out.target.begin(), '/');
    return out;
}

class DefaultHttpClient final : public HttpClient {
public:
    HttpReply send(const HttpCall& call) override {
        SplitUrl url = split_url(call.url);
        httplib::Client client(url.origin);
        auto seconds = std::chrono::duration_cast<std::chrono::seconds>(call.timeout);
        auto micros = std::chrono::duration_cast<std::chrono::microseconds>(call.timeout - seconds);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());
        client.set_follow_location(true);

        httplib::Request req;
        req.method = call.method;
        req.path = url.target;
        for (const auto& [k, v] : call.headers) req.headers.emplace(k, v);
        if (call.body) {
            req.body = *call.body;
            if (!req.has_header("Content-Type")) req.headers.emplace("Content-Type", call.content_type);
        }

        std::string body;
        bool too_large = false;
        req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
            if (body.size() + len > call.max_body_bytes) {
                too_large = true;
                return false;
            }
            body.append(data, len);
            return true;
        };

        auto started = std::chrono::steady_clock::now();
        httplib::Result res = client.send(req);
        auto elapsed = std::chrono::steady_clock::now() - started;

        if (too_large) {
            throw NodeError("BodyTooLarge", "response body exceeds " + std::to_string(call.max_body_bytes) + " bytes");
        }
        if (!res) {
            httplib::Error err = res.error();
            bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                              elapsed >= call.timeout * 9 / 10);
            std::string what = call.method + " " + call.url + ": " + httplib::to_string(err);
            if (timed_out) throw NodeError("Timeout", what);
            throw NodeError("ConnectionFailed", what);
        }
        return {res->status, std::move(body), res->get_header_value("Content-Type")};
    }
};

}  // namespace

std::shared_ptr<HttpClient> make_default_http_client() {
    return std::make_shared<DefaultHttpClient>();
}

}  // namespace flowfill
