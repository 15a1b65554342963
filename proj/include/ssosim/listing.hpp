#pragma once

#include <string>
#include <string_view>

#include "ssosim/browser.hpp"
#include "ssosim/http.hpp"

// Renders exchanges the way protocol write-ups print them: request line,
// headers one per line, then the response. Opaque values (codes, tokens,
// state, cookies, passwords) are elided as "***" so renders are stable
// across seeds and safe to publish.

namespace ssosim {

inline bool sensitive_param(std::string_view name) {
    return name == "code" || name == "access_token" || name == "state" ||
           name == "client_secret" || name == "password" || name == "refresh_token";
}

namespace detail {

inline std::string join_params_elided(const ParamList& params, bool encode_values) {
    std::string out;
    for (const auto& [name, value] : params) {
        if (!out.empty()) out.push_back('&');
        out += name;
        out.push_back('=');
        if (sensitive_param(name)) {
            out += "***";
        } else {
            out += encode_values ? url_encode(value) : value;
        }
    }
    return out;
}

inline std::string render_target_elided(const Uri& uri) {
    std::string out = uri.path;
    if (!uri.query.empty()) {
        out.push_back('?');
        out += join_params_elided(uri.query, true);
    }
    return out;
}

inline std::string render_uri_elided(const Uri& uri) {
    std::string out{to_string(uri.scheme)};
    out += "://";
    out += uri.host;
    if (uri.port != default_port(uri.scheme)) {
        out += ':';
        out += std::to_string(uri.port);
    }
    out += render_target_elided(uri);
    if (uri.fragment) {
        out.push_back('#');
        out += join_params_elided(parse_form(*uri.fragment), false);
    }
    return out;
}

inline std::string elide_cookie_pairs(std::string_view header_value) {
    std::string out;
    for (const auto& [name, value] : parse_cookie_header(header_value)) {
        if (!out.empty()) out += "; ";
        out += name;
        out += "=***";
    }
    return out.empty() ? "***" : out;
}

inline std::string render_header_elided(const std::string& name, const std::string& value) {
    if (iequals(name, "Cookie") || iequals(name, "Set-Cookie")) {
        return name + ": " + elide_cookie_pairs(value);
    }
    if (iequals(name, "Location")) {
        try {
            return name + ": " + render_uri_elided(parse_uri(value));
        } catch (const UriParseError&) {
            return name + ": " + value;
        }
    }
    return name + ": " + value;
}

} // namespace detail

inline std::string render_listing(const HttpExchange& exchange) {
    std::string out{to_string(exchange.request.method)};
    out.push_back(' ');
    out += detail::render_target_elided(exchange.request.uri);
    out.push_back('\n');
    for (const auto& [name, value] : exchange.request.headers) {
        out += detail::render_header_elided(name, value);
        out.push_back('\n');
    }
    if (exchange.request.body) {
        out.push_back('\n');
        out += detail::join_params_elided(*exchange.request.body, false);
        out.push_back('\n');
    }

    out.push_back('\n');
    out += "HTTP/1.1 " + std::to_string(exchange.response.status) + " ";
    out += status_reason(exchange.response.status);
    out.push_back('\n');
    for (const auto& [name, value] : exchange.response.headers) {
        out += detail::render_header_elided(name, value);
        out.push_back('\n');
    }
    if (!exchange.response.body.empty()) {
        out.push_back('\n');
        out += exchange.response.body;
        out.push_back('\n');
    }
    return out;
}

inline std::string render_trace(const NavigationTrace& trace) {
    std::string out;
    for (const HttpExchange& exchange : trace.exchanges) {
        if (!out.empty()) out += "\n";
        out += render_listing(exchange);
    }
    return out;
}

// The Referer line of a rendered exchange, if any; convenient for checking
// renders against published captures.
inline std::optional<std::string> referer_line(const HttpExchange& exchange) {
    auto value = exchange.request.header("Referer");
    if (!value) return std::nullopt;
    return "Referer: " + *value;
}

} // namespace ssosim
