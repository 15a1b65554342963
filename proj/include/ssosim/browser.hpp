#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssosim/document.hpp"
#include "ssosim/http.hpp"
#include "ssosim/router.hpp"

// Deterministic browser simulator. Models exactly the behaviours the CSRF
// analysis depends on: Referer emission, redirect following, per-host cookie
// storage, fragment retention across redirects, and the same-origin policy
// for XMLHttpRequest.

namespace ssosim {

class BrowserError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RedirectLoopError : public BrowserError {
public:
    using BrowserError::BrowserError;
};

class XhrBlockedError : public BrowserError {
public:
    using BrowserError::BrowserError;
};

class ExtractorError : public BrowserError {
public:
    using BrowserError::BrowserError;
};

// Exact-host cookie storage. No domain attributes, no path scoping: a cookie
// set by aidp.com is attached to requests to aidp.com and nothing else.
class CookieJar {
public:
    void set_from(const std::string& host, std::string_view set_cookie_value) {
        std::string_view pair = set_cookie_value.substr(0, set_cookie_value.find(';'));
        std::size_t eq = pair.find('=');
        if (eq == std::string_view::npos) return;
        store_[host][std::string(pair.substr(0, eq))] = std::string(pair.substr(eq + 1));
    }

    std::optional<std::string> header_for(const std::string& host) const {
        auto it = store_.find(host);
        if (it == store_.end() || it->second.empty()) return std::nullopt;
        std::string out;
        for (const auto& [name, value] : it->second) {
            if (!out.empty()) out += "; ";
            out += name;
            out += '=';
            out += value;
        }
        return out;
    }

    std::optional<std::string> get(const std::string& host, const std::string& name) const {
        auto it = store_.find(host);
        if (it == store_.end()) return std::nullopt;
        auto jt = it->second.find(name);
        if (jt == it->second.end()) return std::nullopt;
        return jt->second;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> store_;
};

struct HttpExchange {
    HttpRequest request;
    HttpResponse response;
};

struct NavigationTrace {
    std::vector<HttpExchange> exchanges;
    Document final_document;
    bool aborted{false};  // user closed the window before a redirect was followed

    const HttpExchange& last() const { return exchanges.back(); }

    // Where the unfollowed redirect pointed; how an attacker reads a code or
    // token out of their own aborted login.
    std::optional<Uri> aborted_location() const {
        if (!aborted || exchanges.empty()) return std::nullopt;
        return exchanges.back().response.location();
    }
};

struct NavigationOptions {
    int max_redirects{10};
    // Stop before following a redirect into this host.
    std::optional<std::string> abort_before_host;
};

class Browser {
public:
    explicit Browser(std::string name = "browser") : name_(std::move(name)) {}

    const std::string& name() const { return name_; }
    CookieJar& jar() { return jar_; }
    const CookieJar& jar() const { return jar_; }

    // Every exchange this browser ever made, for invariant audits.
    const std::vector<HttpExchange>& history() const { return history_; }

    // Hosts this browser rendered a document from. A Referer can only ever
    // name one of these.
    const std::set<std::string>& rendered_hosts() const { return rendered_hosts_; }

    // What goes in the Referer header for a request to `target` initiated by
    // the page at `initiator`:
    //   https page -> http target   nothing (never downgrade a secure URL)
    //   same origin                 the full URL, fragment removed
    //   cross origin                scheme://host[:port]/ only
    static std::optional<Uri> apply_referer_policy(const Uri& initiator, const Uri& target) {
        if (initiator.scheme == Scheme::https && target.scheme == Scheme::http) {
            return std::nullopt;
        }
        if (origin_of(initiator) == origin_of(target)) {
            return strip_fragment_for_request(initiator);
        }
        return origin_uri(origin_of(initiator));
    }

    // Address-bar navigation: no initiating document, so no Referer.
    NavigationTrace visit(const Uri& target, const RequestRouter& router,
                          const NavigationOptions& options = {}) {
        return run(std::nullopt, Method::GET, target, std::nullopt, router, options);
    }

    // User acts on a rendered document (follows a link, submits a form, the
    // page loads an image).
    NavigationTrace navigate(const Document& from, const Action& action,
                             const RequestRouter& router, const NavigationOptions& options = {}) {
        switch (action.kind) {
            case ActionKind::submit_form:
                return run(from.url, Method::POST, action.target, action.form_fields, router, options);
            case ActionKind::xhr: {
                NavigationTrace t;
                t.exchanges.push_back(xhr(from, action.target, action.custom_headers, action.form_fields, router));
                t.final_document = from;
                return t;
            }
            case ActionKind::run_extractor:
                return run_extractor(from, router);
            case ActionKind::click_link:
            case ActionKind::load_image:
            default:
                return run(from.url, Method::GET, action.target, std::nullopt, router, options);
        }
    }

    // Same-origin XMLHttpRequest. Scripts cannot read cross-origin responses,
    // so the simulator refuses the call outright.
    HttpExchange xhr(const Document& from, const Uri& target, std::vector<Param> custom_headers,
                     ParamList body, const RequestRouter& router) {
        return xhr_impl(from, target, std::move(custom_headers), std::move(body), router).first;
    }

    // Runs the token-extractor script on a page delivered by the implicit
    // grant: reads the retained fragment and posts its fields back to the
    // page's own origin.
    NavigationTrace run_extractor(const Document& page, const RequestRouter& router) {
        if (page.kind != DocumentKind::extractor_page) {
            throw ExtractorError("document at " + page.url.serialize() + " is not an extractor page");
        }
        if (!page.url.fragment || page.url.fragment->empty()) {
            throw ExtractorError("extractor page has no fragment to read");
        }
        const Action* action = page.find_action(ActionKind::run_extractor);
        if (!action) {
            throw ExtractorError("extractor page offers no extractor action");
        }
        ParamList payload = action->form_fields;
        for (auto& [name, value] : parse_form(*page.url.fragment)) {
            payload.emplace_back(std::move(name), std::move(value));
        }
        auto [exchange, reply_page] = xhr_impl(page, action->target, action->custom_headers,
                                               std::move(payload), router);
        NavigationTrace t;
        t.exchanges.push_back(std::move(exchange));
        t.final_document = reply_page ? *reply_page : page;
        return t;
    }

private:
    NavigationTrace run(const std::optional<Uri>& initiator, Method method, const Uri& target,
                        std::optional<ParamList> body, const RequestRouter& router,
                        const NavigationOptions& options) {
        retained_fragment_.reset();
        if (target.fragment) retained_fragment_ = target.fragment;

        NavigationTrace trace;
        Uri current = strip_fragment_for_request(target);
        Method m = method;

        for (int hop = 0;; ++hop) {
            if (hop > options.max_redirects) {
                throw RedirectLoopError("redirect limit exceeded near " + current.serialize());
            }
            HttpRequest request = HttpRequest::make(m, current);
            if (initiator) {
                if (auto referer = apply_referer_policy(*initiator, current)) {
                    request.set_header("Referer", referer->serialize());
                }
            }
            if (auto cookies = jar_.header_for(current.host)) {
                request.set_header("Cookie", *cookies);
            }
            if (body) request.body = *body;

            auto [exchange, page] = send(std::move(request), router);
            trace.exchanges.push_back(exchange);

            if (exchange.response.status == 302) {
                auto location = exchange.response.location();
                if (!location) {
                    throw BrowserError("redirect without Location from " + current.serialize());
                }
                if (location->fragment) retained_fragment_ = location->fragment;
                Uri next = strip_fragment_for_request(*location);
                if (options.abort_before_host && next.host == *options.abort_before_host) {
                    trace.aborted = true;
                    trace.final_document = Document{current, DocumentKind::plain, {}};
                    return trace;
                }
                current = next;
                m = Method::GET;  // redirects are followed with GET
                body.reset();
                continue;
            }

            Document doc = page ? *page
                                : Document{current,
                                           exchange.response.status >= 400 ? DocumentKind::error_page
                                                                           : DocumentKind::plain,
                                           {}};
            doc.url = current;
            // The retained fragment becomes visible to page script; only the
            // extractor page cares.
            if (doc.kind == DocumentKind::extractor_page && retained_fragment_) {
                doc.url.fragment = retained_fragment_;
            }
            rendered_hosts_.insert(doc.url.host);
            trace.final_document = std::move(doc);
            return trace;
        }
    }

    std::pair<HttpExchange, std::optional<Document>> xhr_impl(const Document& from, const Uri& target,
                                                              std::vector<Param> custom_headers,
                                                              ParamList body,
                                                              const RequestRouter& router) {
        if (!(origin_of(from.url) == origin_of(target))) {
            throw XhrBlockedError("cross-origin XMLHttpRequest from " + origin_of(from.url).to_string() +
                                  " to " + origin_of(target).to_string() + " blocked");
        }
        HttpRequest request = HttpRequest::make(body.empty() ? Method::GET : Method::POST,
                                                strip_fragment_for_request(target));
        if (auto referer = apply_referer_policy(from.url, target)) {
            request.set_header("Referer", referer->serialize());
        }
        if (auto cookies = jar_.header_for(target.host)) {
            request.set_header("Cookie", *cookies);
        }
        for (auto& [name, value] : custom_headers) {
            request.set_header(std::move(name), std::move(value));
        }
        if (!body.empty()) request.body = std::move(body);
        return send(std::move(request), router);
    }

    std::pair<HttpExchange, std::optional<Document>> send(HttpRequest request,
                                                          const RequestRouter& router) {
        ServerReply reply = router.dispatch(request);
        for (const std::string& sc : reply.response.set_cookies()) {
            jar_.set_from(request.uri.host, sc);
        }
        HttpExchange exchange{std::move(request), reply.response};
        history_.push_back(exchange);
        return {std::move(exchange), std::move(reply.page)};
    }

    std::string name_;
    CookieJar jar_;
    std::vector<HttpExchange> history_;
    std::set<std::string> rendered_hosts_;
    std::optional<std::string> retained_fragment_;
};

} // namespace ssosim
