#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssosim/document.hpp"
#include "ssosim/http.hpp"
#include "ssosim/rng.hpp"
#include "ssosim/router.hpp"

// Mock identity provider: authorization endpoint, login, consent or
// auto-grant, code and implicit grants, token redemption and userinfo.
// Grants live in memory and are fully inspectable, so tests can check
// single-use and binding properties directly.

namespace ssosim {

class RegistrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct UserAccount {
    std::string password;
    std::map<std::string, std::string> attributes;
};

struct ClientRegistration {
    std::string client_id;  // empty: the IdP assigns one
    std::optional<std::string> client_secret;
    Uri redirect_uri;
    std::optional<Origin> origin;  // script origin, for client-library integrations
};

enum class GrantKind { code, access_token };

struct AuthorizationGrant {
    std::string value;
    GrantKind kind{GrantKind::code};
    std::string client_id;
    Uri redirect_uri;
    std::string subject;
    std::string scope;
    std::uint64_t issued_at{0};  // logical clock tick
    bool consumed{false};
    bool via_consent{false};     // false: issued by auto-grant
    std::string session_id;      // IdP session that produced it
};

struct IdPConfig {
    std::string id{"idp"};
    std::string display_name{"IdP"};
    Origin issuer{Scheme::https, "idp.example", 443};
    bool auto_grant{false};
    bool require_https_redirect_uri{false};
    std::uint64_t code_lifetime_ticks{600};
    std::map<std::string, UserAccount> users;
    std::string authorize_path{"/authorize"};
    std::string login_path{"/login"};
    std::string token_path{"/token"};
    std::string userinfo_path{"/userinfo"};
};

class IdentityProvider {
public:
    static constexpr std::string_view kSessionCookie = "sid";

    IdentityProvider(IdPConfig config, TokenGenerator rng)
        : cfg_(std::move(config)), rng_(std::move(rng)) {}

    const IdPConfig& config() const { return cfg_; }

    Uri endpoint(const std::string& path) const { return with_path(cfg_.issuer, path); }
    Uri authorize_endpoint() const { return endpoint(cfg_.authorize_path); }
    Uri login_endpoint() const { return endpoint(cfg_.login_path); }
    Uri token_endpoint() const { return endpoint(cfg_.token_path); }
    Uri userinfo_endpoint() const { return endpoint(cfg_.userinfo_path); }

    std::string register_client(ClientRegistration reg) {
        std::lock_guard lock(m_);
        if (cfg_.require_https_redirect_uri && reg.redirect_uri.scheme != Scheme::https) {
            throw RegistrationError(cfg_.display_name + " requires an https redirect_uri; got " +
                                    reg.redirect_uri.serialize());
        }
        if (reg.redirect_uri.fragment) {
            throw RegistrationError("redirect_uri must not carry a fragment");
        }
        if (reg.client_id.empty()) reg.client_id = rng_.next_token("client-");
        if (clients_.count(reg.client_id)) {
            throw RegistrationError("duplicate client_id \"" + reg.client_id + "\"");
        }
        std::string id = reg.client_id;
        clients_.emplace(id, std::move(reg));
        return id;
    }

    // Let scenario scripts plant arbitrary content on the IdP's domain
    // (user-generated pages: comments, posts).
    void host_page(std::string path, Document page, std::string body = "") {
        std::lock_guard lock(m_);
        extra_pages_[std::move(path)] = {std::move(page), std::move(body)};
    }

    void mount(RequestRouter& router) {
        router.mount(cfg_.issuer.host, [this](const HttpRequest& req) { return handle(req); });
    }

    ServerReply handle(const HttpRequest& req) {
        std::lock_guard lock(m_);
        ++clock_;
        const std::string& path = req.uri.path;
        if (path == cfg_.token_path) return do_token(req);
        if (path == cfg_.userinfo_path) return do_userinfo(req);
        if (auto it = extra_pages_.find(path); it != extra_pages_.end()) {
            return ServerReply{HttpResponse::html(200, it->second.second), it->second.first};
        }
        if (path == cfg_.authorize_path || path == cfg_.login_path) {
            auto [session, is_new] = ensure_session(req);
            ServerReply reply = path == cfg_.authorize_path ? do_authorize(req, *session)
                                                            : do_login(req, *session);
            if (is_new) {
                reply.response.add_header("Set-Cookie",
                                          std::string(kSessionCookie) + "=" + session->id);
            }
            return reply;
        }
        return error_reply(req, 404, "no such page on " + cfg_.display_name);
    }

    // --- introspection for tests and invariant audits ---

    std::vector<AuthorizationGrant> grants() const {
        std::lock_guard lock(m_);
        std::vector<AuthorizationGrant> out;
        out.reserve(grants_.size());
        for (const auto& [value, grant] : grants_) out.push_back(grant);
        return out;
    }

    int redemption_count(const std::string& code) const {
        std::lock_guard lock(m_);
        auto it = redemptions_.find(code);
        return it == redemptions_.end() ? 0 : it->second;
    }

    std::optional<std::string> token_subject(const std::string& token) const {
        std::lock_guard lock(m_);
        auto it = tokens_.find(token);
        if (it == tokens_.end()) return std::nullopt;
        return it->second.subject;
    }

    std::optional<std::string> token_source_grant(const std::string& token) const {
        std::lock_guard lock(m_);
        auto it = tokens_.find(token);
        if (it == tokens_.end()) return std::nullopt;
        return it->second.grant_value;
    }

    std::vector<std::string> issued_tokens() const {
        std::lock_guard lock(m_);
        std::vector<std::string> out;
        out.reserve(tokens_.size());
        for (const auto& [token, record] : tokens_) out.push_back(token);
        return out;
    }

    bool has_client(const std::string& client_id) const {
        std::lock_guard lock(m_);
        return clients_.count(client_id) > 0;
    }

    std::optional<ClientRegistration> registration(const std::string& client_id) const {
        std::lock_guard lock(m_);
        auto it = clients_.find(client_id);
        if (it == clients_.end()) return std::nullopt;
        return it->second;
    }

    std::uint64_t clock() const {
        std::lock_guard lock(m_);
        return clock_;
    }

private:
    struct IdPSession {
        std::string id;
        std::optional<std::string> username;
        std::optional<Uri> pending_authorize;
    };

    struct TokenRecord {
        std::string grant_value;  // the grant this token traces to
        std::string subject;
    };

    std::pair<IdPSession*, bool> ensure_session(const HttpRequest& req) {
        if (auto sid = req.cookie(kSessionCookie)) {
            auto it = sessions_.find(*sid);
            if (it != sessions_.end()) return {&it->second, false};
        }
        std::string id = rng_.next_token("sid");
        auto [it, inserted] = sessions_.emplace(id, IdPSession{id, std::nullopt, std::nullopt});
        return {&it->second, true};
    }

    ServerReply error_reply(const HttpRequest& req, int status, const std::string& message) {
        std::string body = "<html> <body> <h1>" + message + "</h1> </body> </html>";
        return ServerReply{HttpResponse::html(status, body),
                           Document{req.uri, DocumentKind::error_page, {}}};
    }

    ServerReply login_form_reply(const Uri& page_url) {
        Document doc{page_url, DocumentKind::idp_login_form, {}};
        Action submit;
        submit.kind = ActionKind::submit_form;
        submit.target = login_endpoint();
        submit.label = "login";
        doc.actions.push_back(std::move(submit));
        std::string body =
            "<html> <body> <h1>Sign in to " + cfg_.display_name + "</h1> </body> </html>";
        return ServerReply{HttpResponse::html(200, body), std::move(doc)};
    }

    // The authorization request, reconstructed as a GET URI so it can be
    // resumed after login.
    Uri authorize_request_uri(const HttpRequest& req) const {
        Uri target = with_path(cfg_.issuer, cfg_.authorize_path);
        for (const char* name : {"client_id", "response_type", "redirect_uri", "scope", "state"}) {
            if (auto value = req.param(name)) target.query.emplace_back(name, *value);
        }
        return target;
    }

    ServerReply do_authorize(const HttpRequest& req, IdPSession& session) {
        auto client_id = req.param("client_id");
        if (!client_id) return error_reply(req, 400, "missing client_id");
        auto client_it = clients_.find(*client_id);
        if (client_it == clients_.end()) {
            return error_reply(req, 400, "unknown client \"" + *client_id + "\"");
        }
        auto redirect_param = req.param("redirect_uri");
        if (!redirect_param) return error_reply(req, 400, "missing redirect_uri");
        Uri redirect;
        try {
            redirect = parse_uri(*redirect_param);
        } catch (const UriParseError&) {
            return error_reply(req, 400, "unparseable redirect_uri");
        }
        // A mismatched redirect_uri must not be redirected to: that would hand
        // the grant to whoever chose the value.
        if (!(redirect == client_it->second.redirect_uri)) {
            return error_reply(req, 400, "redirect_uri does not match the registered value");
        }

        auto state = req.param("state");
        auto response_type = req.param("response_type").value_or("");
        if (response_type != "code" && response_type != "token") {
            Uri err = redirect;
            err.query.emplace_back("error", "unsupported_response_type");
            if (state) err.query.emplace_back("state", *state);
            return ServerReply{HttpResponse::redirect(err), std::nullopt};
        }

        if (!session.username) {
            session.pending_authorize = authorize_request_uri(req);
            return login_form_reply(req.uri);
        }

        bool granted = cfg_.auto_grant || req.param("consent") == std::optional<std::string>("granted");
        if (!granted) {
            Document doc{req.uri, DocumentKind::idp_consent_page, {}};
            Action grant;
            grant.kind = ActionKind::submit_form;
            grant.target = authorize_endpoint();
            grant.form_fields = req.uri.query;
            grant.form_fields.emplace_back("consent", "granted");
            grant.label = "grant";
            doc.actions.push_back(std::move(grant));
            std::string body = "<html> <body> <h1>Grant " + *client_id + " access to your " +
                               cfg_.display_name + " account?</h1> </body> </html>";
            return ServerReply{HttpResponse::html(200, body), std::move(doc)};
        }

        GrantKind kind = response_type == "code" ? GrantKind::code : GrantKind::access_token;
        AuthorizationGrant grant;
        grant.value = rng_.next_token(kind == GrantKind::code ? "c" : "t");
        grant.kind = kind;
        grant.client_id = *client_id;
        grant.redirect_uri = redirect;
        grant.subject = *session.username;
        grant.scope = req.param("scope").value_or("");
        grant.issued_at = clock_;
        grant.via_consent = !cfg_.auto_grant;
        grant.session_id = session.id;
        grants_.emplace(grant.value, grant);

        Uri callback = redirect;
        if (kind == GrantKind::code) {
            callback.query.emplace_back("code", grant.value);
            if (state) callback.query.emplace_back("state", *state);
        } else {
            tokens_.emplace(grant.value, TokenRecord{grant.value, grant.subject});
            ParamList fragment{{"access_token", grant.value}, {"token_type", "bearer"}};
            if (state) fragment.emplace_back("state", *state);
            callback.fragment = encode_form(fragment);
        }
        return ServerReply{HttpResponse::redirect(callback), std::nullopt};
    }

    ServerReply do_login(const HttpRequest& req, IdPSession& session) {
        if (req.method != Method::POST) return login_form_reply(req.uri);
        auto username = req.form_param("username");
        auto password = req.form_param("password");
        if (!username || !password) return error_reply(req, 400, "missing credentials");
        auto user_it = cfg_.users.find(*username);
        if (user_it == cfg_.users.end()) {
            return error_reply(req, 401, "authentication failed");
        }
        if (user_it->second.password != *password) {
            return login_form_reply(req.uri);  // wrong password: try again
        }
        session.username = *username;
        if (session.pending_authorize) {
            Uri resume = *session.pending_authorize;
            session.pending_authorize.reset();
            return ServerReply{HttpResponse::redirect(resume), std::nullopt};
        }
        std::string body = "<html> <body> <h1>Signed in to " + cfg_.display_name + " as " +
                           *username + "</h1> </body> </html>";
        return ServerReply{HttpResponse::html(200, body),
                           Document{req.uri, DocumentKind::plain, {}}};
    }

    ServerReply json_error(int status, const std::string& code) {
        nlohmann::json body{{"error", code}};
        return ServerReply{HttpResponse::json(status, body.dump()), std::nullopt};
    }

    ServerReply do_token(const HttpRequest& req) {
        if (req.method != Method::POST) return json_error(400, "invalid_request");
        if (req.form_param("grant_type") != std::optional<std::string>("authorization_code")) {
            return json_error(400, "unsupported_grant_type");
        }
        auto client_id = req.form_param("client_id");
        if (!client_id) return json_error(401, "invalid_client");
        auto client_it = clients_.find(*client_id);
        if (client_it == clients_.end()) return json_error(401, "invalid_client");
        if (client_it->second.client_secret &&
            req.form_param("client_secret") != client_it->second.client_secret) {
            return json_error(401, "invalid_client");
        }
        auto code = req.form_param("code");
        if (!code) return json_error(400, "invalid_grant");
        auto grant_it = grants_.find(*code);
        if (grant_it == grants_.end()) return json_error(400, "invalid_grant");
        AuthorizationGrant& grant = grant_it->second;
        if (grant.kind != GrantKind::code) return json_error(400, "invalid_grant");
        if (grant.consumed) return json_error(400, "invalid_grant");
        if (clock_ - grant.issued_at > cfg_.code_lifetime_ticks) return json_error(400, "invalid_grant");
        if (grant.client_id != *client_id) return json_error(400, "invalid_grant");
        auto redirect_param = req.form_param("redirect_uri");
        if (!redirect_param) return json_error(400, "invalid_grant");
        Uri redirect;
        try {
            redirect = parse_uri(*redirect_param);
        } catch (const UriParseError&) {
            return json_error(400, "invalid_grant");
        }
        if (!(redirect == grant.redirect_uri)) return json_error(400, "invalid_grant");

        grant.consumed = true;  // single use
        ++redemptions_[*code];
        std::string token = rng_.next_token("t");
        tokens_.emplace(token, TokenRecord{grant.value, grant.subject});
        nlohmann::json body{{"access_token", token}, {"token_type", "bearer"}, {"expires_in", 3600}};
        return ServerReply{HttpResponse::json(200, body.dump()), std::nullopt};
    }

    ServerReply do_userinfo(const HttpRequest& req) {
        auto token = req.param("access_token");
        if (!token) return json_error(401, "invalid_token");
        auto it = tokens_.find(*token);
        if (it == tokens_.end()) return json_error(401, "invalid_token");
        nlohmann::json body{{"sub", it->second.subject}};
        if (auto user_it = cfg_.users.find(it->second.subject); user_it != cfg_.users.end()) {
            for (const auto& [name, value] : user_it->second.attributes) body[name] = value;
        }
        return ServerReply{HttpResponse::json(200, body.dump()), std::nullopt};
    }

    mutable std::mutex m_;
    IdPConfig cfg_;
    TokenGenerator rng_;
    std::uint64_t clock_{0};
    std::map<std::string, ClientRegistration> clients_;
    std::map<std::string, IdPSession> sessions_;
    std::map<std::string, AuthorizationGrant> grants_;
    std::map<std::string, TokenRecord> tokens_;
    std::map<std::string, int> redemptions_;
    std::map<std::string, std::pair<Document, std::string>> extra_pages_;
};

} // namespace ssosim
