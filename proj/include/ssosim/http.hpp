#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Message-level HTTP model for the in-process single sign-on sandbox.
// There are no sockets here: requests and responses are plain values that
// simulated browsers and servers exchange through a router.

namespace ssosim {

enum class Scheme { http, https };

inline std::string_view to_string(Scheme s) { return s == Scheme::http ? "http" : "https"; }

inline int default_port(Scheme s) { return s == Scheme::http ? 80 : 443; }

class UriParseError : public std::runtime_error {
public:
    UriParseError(std::string component, const std::string& detail)
        : std::runtime_error("cannot parse " + component + ": " + detail),
          component_(std::move(component)) {}

    // Which part of the URL was malformed: "scheme", "host" or "port".
    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

namespace detail {

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
    }
    return true;
}

inline bool is_hex_digit(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

inline int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return c - 'A' + 10;
}

} // namespace detail

using Param = std::pair<std::string, std::string>;
using ParamList = std::vector<Param>;

inline std::string url_encode(std::string_view value) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(value.size());
    for (unsigned char c : value) {
        bool unreserved = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                          (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' || c == '~';
        if (unreserved) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xf]);
        }
    }
    return out;
}

// Lenient: a '%' not followed by two hex digits is kept literally, so hostile
// strings still decode to something instead of failing.
inline std::string url_decode(std::string_view value) {
    std::string out;
    out.reserve(value.size());
    for (std::size_t i = 0; i < value.size(); ++i) {
        char c = value[i];
        if (c == '%' && i + 2 < value.size() &&
            detail::is_hex_digit(value[i + 1]) && detail::is_hex_digit(value[i + 2])) {
            out.push_back(static_cast<char>(detail::hex_value(value[i + 1]) * 16 +
                                            detail::hex_value(value[i + 2])));
            i += 2;
        } else if (c == '+') {
            out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

inline std::string encode_form(const ParamList& params) {
    std::string out;
    for (const auto& [name, value] : params) {
        if (!out.empty()) out.push_back('&');
        out += url_encode(name);
        out.push_back('=');
        out += url_encode(value);
    }
    return out;
}

// Order and duplicates are preserved: "a=1&a=2" stays two pairs.
inline ParamList parse_form(std::string_view text) {
    ParamList out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t amp = text.find('&', pos);
        std::string_view token = text.substr(pos, amp == std::string_view::npos ? std::string_view::npos : amp - pos);
        if (!token.empty()) {
            std::size_t eq = token.find('=');
            if (eq == std::string_view::npos) {
                out.emplace_back(url_decode(token), "");
            } else {
                out.emplace_back(url_decode(token.substr(0, eq)), url_decode(token.substr(eq + 1)));
            }
        }
        if (amp == std::string_view::npos) break;
        pos = amp + 1;
    }
    return out;
}

inline std::optional<std::string> find_param(const ParamList& params, std::string_view name) {
    for (const auto& [n, v] : params) {
        if (n == name) return v;
    }
    return std::nullopt;
}

// scheme + host + effective port; the unit the CSRF guard reasons about.
struct Origin {
    Scheme scheme{Scheme::https};
    std::string host;
    int port{443};

    bool operator==(const Origin&) const = default;

    std::string to_string() const {
        std::string out{ssosim::to_string(scheme)};
        out += "://";
        out += host;
        if (port != default_port(scheme)) {
            out += ':';
            out += std::to_string(port);
        }
        return out;
    }
};

struct Uri {
    Scheme scheme{Scheme::https};
    std::string host;
    int port{443};
    std::string path{"/"};
    ParamList query;
    std::optional<std::string> fragment;  // client-side only; never serialized into a request

    bool operator==(const Uri&) const = default;

    std::optional<std::string> query_param(std::string_view name) const {
        return find_param(query, name);
    }

    // "path?query", what goes on a request line. The fragment is deliberately
    // unreachable from here.
    std::string request_target() const {
        std::string out = path;
        if (!query.empty()) {
            out.push_back('?');
            out += encode_form(query);
        }
        return out;
    }

    std::string serialize() const {
        std::string out{ssosim::to_string(scheme)};
        out += "://";
        out += host;
        if (port != default_port(scheme)) {
            out += ':';
            out += std::to_string(port);
        }
        out += request_target();
        if (fragment) {
            out.push_back('#');
            out += *fragment;
        }
        return out;
    }
};

inline Uri parse_uri(std::string_view text) {
    const std::string original(text);
    Uri u;

    std::size_t scheme_end = text.find("://");
    if (scheme_end == std::string_view::npos) {
        throw UriParseError("scheme", "missing \"://\" in \"" + original + "\"");
    }
    std::string scheme = detail::to_lower(text.substr(0, scheme_end));
    if (scheme == "http") {
        u.scheme = Scheme::http;
    } else if (scheme == "https") {
        u.scheme = Scheme::https;
    } else {
        throw UriParseError("scheme", "unsupported scheme \"" + scheme + "\"");
    }
    text.remove_prefix(scheme_end + 3);

    std::size_t auth_end = text.find_first_of("/?#");
    std::string_view authority = text.substr(0, auth_end);
    text = auth_end == std::string_view::npos ? std::string_view{} : text.substr(auth_end);

    std::string_view host = authority;
    u.port = default_port(u.scheme);
    if (std::size_t colon = authority.rfind(':'); colon != std::string_view::npos) {
        host = authority.substr(0, colon);
        std::string_view port_text = authority.substr(colon + 1);
        if (port_text.empty()) throw UriParseError("port", "empty port in \"" + original + "\"");
        int port = 0;
        for (char c : port_text) {
            if (c < '0' || c > '9') throw UriParseError("port", "non-digit port in \"" + original + "\"");
            port = port * 10 + (c - '0');
            if (port > 65535) throw UriParseError("port", "port out of range in \"" + original + "\"");
        }
        if (port == 0) throw UriParseError("port", "port 0 in \"" + original + "\"");
        u.port = port;
    }
    if (host.empty()) throw UriParseError("host", "empty host in \"" + original + "\"");
    for (char c : host) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '-' || c == '.' || c == '_';
        if (!ok) throw UriParseError("host", "bad character in host of \"" + original + "\"");
    }
    u.host = detail::to_lower(host);

    if (!text.empty() && text.front() == '/') {
        std::size_t path_end = text.find_first_of("?#");
        u.path = std::string(text.substr(0, path_end));
        text = path_end == std::string_view::npos ? std::string_view{} : text.substr(path_end);
    } else {
        u.path = "/";
    }

    if (!text.empty() && text.front() == '?') {
        std::size_t frag = text.find('#');
        std::string_view q = text.substr(1, frag == std::string_view::npos ? std::string_view::npos : frag - 1);
        u.query = parse_form(q);
        text = frag == std::string_view::npos ? std::string_view{} : text.substr(frag);
    }

    // Kept raw, including an empty string for a bare "#".
    if (!text.empty() && text.front() == '#') {
        u.fragment = std::string(text.substr(1));
    }

    return u;
}

inline Origin origin_of(const Uri& u) { return Origin{u.scheme, u.host, u.port}; }

inline Uri strip_fragment_for_request(Uri u) {
    u.fragment.reset();
    return u;
}

inline Uri origin_uri(const Origin& o) {
    Uri u;
    u.scheme = o.scheme;
    u.host = o.host;
    u.port = o.port;
    u.path = "/";
    return u;
}

inline Uri with_path(const Origin& o, std::string path) {
    Uri u = origin_uri(o);
    u.path = std::move(path);
    return u;
}

// "a=b; c=d" as sent in a Cookie header.
inline ParamList parse_cookie_header(std::string_view text) {
    ParamList out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t semi = text.find(';', pos);
        std::string_view token = text.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos);
        while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
        while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
        if (!token.empty()) {
            std::size_t eq = token.find('=');
            if (eq == std::string_view::npos) {
                out.emplace_back(std::string(token), "");
            } else {
                out.emplace_back(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
            }
        }
        if (semi == std::string_view::npos) break;
        pos = semi + 1;
    }
    return out;
}

enum class Method { GET, POST };

inline std::string_view to_string(Method m) { return m == Method::GET ? "GET" : "POST"; }

inline std::string_view status_reason(int status) {
    switch (status) {
        case 200: return "OK";
        case 302: return "Found";
        case 400: return "Bad Request";
        case 401: return "Unauthorized";
        case 403: return "Forbidden";
        case 404: return "Not Found";
        case 502: return "Bad Gateway";
        default: return "Unknown";
    }
}

struct HttpRequest {
    Method method{Method::GET};
    Uri uri;                       // fragment always stripped at construction
    std::vector<Param> headers;    // order preserved; Host is always first
    std::optional<ParamList> body; // form-encoded pairs

    static HttpRequest make(Method m, const Uri& target) {
        HttpRequest r;
        r.method = m;
        r.uri = strip_fragment_for_request(target);
        std::string host = r.uri.host;
        if (r.uri.port != default_port(r.uri.scheme)) {
            host += ':';
            host += std::to_string(r.uri.port);
        }
        r.headers.emplace_back("Host", host);
        return r;
    }

    std::optional<std::string> header(std::string_view name) const {
        for (const auto& [n, v] : headers) {
            if (detail::iequals(n, name)) return v;
        }
        return std::nullopt;
    }

    void set_header(std::string name, std::string value) {
        for (auto& [n, v] : headers) {
            if (detail::iequals(n, name)) {
                v = std::move(value);
                return;
            }
        }
        headers.emplace_back(std::move(name), std::move(value));
    }

    std::optional<std::string> cookie(std::string_view name) const {
        auto h = header("Cookie");
        if (!h) return std::nullopt;
        return find_param(parse_cookie_header(*h), name);
    }

    std::optional<std::string> form_param(std::string_view name) const {
        if (!body) return std::nullopt;
        return find_param(*body, name);
    }

    // Query first, then form body; how the simulated endpoints read inputs.
    std::optional<std::string> param(std::string_view name) const {
        if (auto q = uri.query_param(name)) return q;
        return form_param(name);
    }

    // Wire-style rendering with real values (no elision).
    std::string render() const {
        std::string out{to_string(method)};
        out.push_back(' ');
        out += uri.request_target();
        out.push_back('\n');
        for (const auto& [n, v] : headers) {
            out += n;
            out += ": ";
            out += v;
            out.push_back('\n');
        }
        if (body) {
            out.push_back('\n');
            out += encode_form(*body);
            out.push_back('\n');
        }
        return out;
    }
};

struct HttpResponse {
    int status{200};
    std::vector<Param> headers;
    std::string body;

    static HttpResponse redirect(const Uri& location) {
        HttpResponse r;
        r.status = 302;
        // Fragments survive in Location: that is how the implicit grant
        // delivers a token to the browser without it touching the wire again.
        r.headers.emplace_back("Location", location.serialize());
        return r;
    }

    static HttpResponse html(int status, std::string body) {
        HttpResponse r;
        r.status = status;
        r.headers.emplace_back("Content-Type", "text/html");
        r.body = std::move(body);
        return r;
    }

    static HttpResponse json(int status, std::string body) {
        HttpResponse r;
        r.status = status;
        r.headers.emplace_back("Content-Type", "application/json");
        r.body = std::move(body);
        return r;
    }

    std::optional<std::string> header(std::string_view name) const {
        for (const auto& [n, v] : headers) {
            if (detail::iequals(n, name)) return v;
        }
        return std::nullopt;
    }

    void add_header(std::string name, std::string value) {
        headers.emplace_back(std::move(name), std::move(value));
    }

    std::optional<Uri> location() const {
        auto l = header("Location");
        if (!l) return std::nullopt;
        return parse_uri(*l);
    }

    std::vector<std::string> set_cookies() const {
        std::vector<std::string> out;
        for (const auto& [n, v] : headers) {
            if (detail::iequals(n, "Set-Cookie")) out.push_back(v);
        }
        return out;
    }

    std::string render() const {
        std::string out = "HTTP/1.1 " + std::to_string(status) + " ";
        out += status_reason(status);
        out.push_back('\n');
        for (const auto& [n, v] : headers) {
            out += n;
            out += ": ";
            out += v;
            out.push_back('\n');
        }
        if (!body.empty()) {
            out.push_back('\n');
            out += body;
            out.push_back('\n');
        }
        return out;
    }
};

} // namespace ssosim
