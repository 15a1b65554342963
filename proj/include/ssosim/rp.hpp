#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssosim/csrf_guard.hpp"
#include "ssosim/document.hpp"
#include "ssosim/http.hpp"
#include "ssosim/rng.hpp"
#include "ssosim/router.hpp"

// Relying party: the site users actually sign in to. Hosts the sign-in
// links, the per-IdP and shared callback endpoints, the extractor page for
// the implicit grant, and the token-delivery endpoint used by extractor
// pages and client-library integrations. Every defence is a switch, so the
// same site can be run protected or deliberately vulnerable.

namespace ssosim {

// How a callback request is matched to the IdP it belongs to: a path per
// IdP, or one shared path disambiguated by the session's pending login.
enum class IdPResolution { per_idp_callback, shared_callback };

struct IdPBinding {
    std::string idp_id;
    std::string display_name;
    Origin idp_origin;
    Flow flow{Flow::code};
    IdPResolution resolution{IdPResolution::per_idp_callback};
    std::string callback_path;
    std::string client_id;
    std::optional<std::string> client_secret;
    Uri redirect_uri;  // as registered at the IdP
    Uri authorize_endpoint;
    Uri token_endpoint;
    Uri userinfo_endpoint;
    std::string scope{"profile"};
};

struct DefenceConfig {
    bool referer_guard{true};
    bool state_check{false};
    bool custom_header_check{false};
    AbsentRefererMode absent_referer_mode{AbsentRefererMode::fail_closed};
};

struct BoundSubject {
    std::string idp_id;
    std::string subject;
    std::map<std::string, std::string> attributes;
};

struct RpSession {
    std::string session_id;
    std::optional<std::string> pending_idp;    // sign-in intention
    std::optional<std::string> pending_state;  // single use
    std::optional<BoundSubject> logged_in_subject;
};

enum class CallbackOutcome {
    accepted,
    accepted_flagged,       // let through on an indeterminate Referer, flag-only mode
    rejected_referer,
    rejected_state,
    rejected_no_intention,  // no pending sign-in to attach the response to
    rejected_custom_header,
    upstream_error,
};

inline std::string_view to_string(CallbackOutcome o) {
    switch (o) {
        case CallbackOutcome::accepted: return "accepted";
        case CallbackOutcome::accepted_flagged: return "accepted-flagged";
        case CallbackOutcome::rejected_referer: return "rejected-referer";
        case CallbackOutcome::rejected_state: return "rejected-state";
        case CallbackOutcome::rejected_no_intention: return "rejected-no-intention";
        case CallbackOutcome::rejected_custom_header: return "rejected-custom-header";
        default: return "upstream-error";
    }
}

// One entry per completion attempt at a callback or delivery endpoint.
struct CallbackAudit {
    std::uint64_t seq{0};
    std::string endpoint;
    std::string idp_id;  // empty when no binding could be resolved
    CallbackOutcome outcome{CallbackOutcome::upstream_error};
    std::optional<RefererVerdict> referer;  // present when the guard ran
    std::optional<bool> state_ok;           // present when the state check ran
    std::string detail;
};

class RelyingParty {
public:
    static constexpr std::string_view kSessionCookie = "Jsession";
    static constexpr std::string_view kDeliveryPath = "/token-delivery";

    RelyingParty(Origin origin, DefenceConfig defences, RequestRouter& backchannel,
                 TokenGenerator rng)
        : origin_(std::move(origin)), defences_(defences), backchannel_(&backchannel),
          rng_(std::move(rng)) {}

    const Origin& origin() const { return origin_; }

    DefenceConfig defences() const {
        std::lock_guard lock(m_);
        return defences_;
    }

    void set_defences(DefenceConfig d) {
        std::lock_guard lock(m_);
        defences_ = d;
    }

    void add_binding(IdPBinding binding) {
        std::lock_guard lock(m_);
        bindings_.push_back(std::move(binding));
    }

    Uri home_uri() const { return origin_uri(origin_); }

    void mount(RequestRouter& router) {
        router.mount(origin_.host, [this](const HttpRequest& req) { return handle(req); });
    }

    ServerReply handle(const HttpRequest& req) {
        std::lock_guard lock(m_);
        auto [session, is_new] = ensure_session(req);
        ServerReply reply = route(req, *session);
        if (is_new) {
            reply.response.add_header("Set-Cookie",
                                      std::string(kSessionCookie) + "=" + session->session_id);
        }
        return reply;
    }

    // --- introspection for tests and reports ---

    std::vector<CallbackAudit> audits() const {
        std::lock_guard lock(m_);
        return audits_;
    }

    std::size_t audit_count() const {
        std::lock_guard lock(m_);
        return audits_.size();
    }

    std::optional<RpSession> session(const std::string& session_id) const {
        std::lock_guard lock(m_);
        auto it = sessions_.find(session_id);
        if (it == sessions_.end()) return std::nullopt;
        return it->second;
    }

    // Access tokens this RP successfully obtained, via either grant type.
    int tokens_obtained() const {
        std::lock_guard lock(m_);
        return tokens_obtained_;
    }

    std::vector<IdPBinding> bindings() const {
        std::lock_guard lock(m_);
        return bindings_;
    }

private:
    std::pair<RpSession*, bool> ensure_session(const HttpRequest& req) {
        if (auto sid = req.cookie(kSessionCookie)) {
            auto it = sessions_.find(*sid);
            if (it != sessions_.end()) return {&it->second, false};
        }
        std::string id = rng_.next_token("s");
        auto [it, inserted] = sessions_.emplace(id, RpSession{id, std::nullopt, std::nullopt, std::nullopt});
        return {&it->second, true};
    }

    ServerReply route(const HttpRequest& req, RpSession& session) {
        const std::string& path = req.uri.path;
        if (path == "/") return serve_home(req, session);
        if (path.starts_with("/signin/")) return begin_login(req, session, path.substr(8));
        if (path == kDeliveryPath) return handle_token_delivery(req, session);
        for (const IdPBinding& b : bindings_) {
            if (b.callback_path == path) return handle_callback(req, session);
        }
        return error_reply(req, 404, "no such page");
    }

    ServerReply serve_home(const HttpRequest& req, RpSession& session) {
        Document doc{req.uri, DocumentKind::rp_page, {}};
        std::string body = "<html> <body> <h1>Welcome";
        if (session.logged_in_subject) {
            body += " back, " + session.logged_in_subject->subject;
        }
        body += "</h1>";
        for (const IdPBinding& b : bindings_) {
            Action signin;
            signin.kind = ActionKind::click_link;
            signin.target = with_path(origin_, "/signin/" + b.idp_id);
            signin.label = "signin-" + b.idp_id;
            doc.actions.push_back(std::move(signin));
            body += " <a href=\"/signin/" + b.idp_id + "\">Sign in with " + b.display_name + "</a>";
        }
        body += " </body> </html>";
        return ServerReply{HttpResponse::html(200, body), std::move(doc)};
    }

    ServerReply begin_login(const HttpRequest& req, RpSession& session, const std::string& idp_id) {
        const IdPBinding* binding = binding_for(idp_id);
        if (!binding) return error_reply(req, 404, "unknown identity provider \"" + idp_id + "\"");
        session.pending_idp = binding->idp_id;
        Uri authorize = binding->authorize_endpoint;
        authorize.query.emplace_back("client_id", binding->client_id);
        authorize.query.emplace_back("response_type",
                                     binding->flow == Flow::implicit ? "token" : "code");
        authorize.query.emplace_back("redirect_uri", binding->redirect_uri.serialize());
        authorize.query.emplace_back("scope", binding->scope);
        if (defences_.state_check) {
            session.pending_state = rng_.next_token("st");
            authorize.query.emplace_back("state", *session.pending_state);
        }
        return ServerReply{HttpResponse::redirect(authorize), std::nullopt};
    }

    const IdPBinding* binding_for(const std::string& idp_id) const {
        for (const IdPBinding& b : bindings_) {
            if (b.idp_id == idp_id) return &b;
        }
        return nullptr;
    }

    // Match a callback request to its IdP. Per-IdP paths identify the IdP by
    // construction; a shared path can only be attributed through the
    // session's pending sign-in intention.
    const IdPBinding* resolve_idp(const HttpRequest& req, const RpSession& session) const {
        const std::string& path = req.uri.path;
        const IdPBinding* shared_at_path = nullptr;
        for (const IdPBinding& b : bindings_) {
            if (b.callback_path != path) continue;
            if (b.resolution == IdPResolution::per_idp_callback) return &b;
            shared_at_path = &b;
        }
        if (shared_at_path && session.pending_idp) {
            for (const IdPBinding& b : bindings_) {
                if (b.idp_id == *session.pending_idp &&
                    b.resolution == IdPResolution::shared_callback && b.callback_path == path) {
                    return &b;
                }
            }
        }
        return nullptr;
    }

    ServerReply handle_callback(const HttpRequest& req, RpSession& session) {
        CallbackAudit audit;
        audit.seq = next_audit_seq_++;
        audit.endpoint = req.uri.path;

        const IdPBinding* binding = resolve_idp(req, session);
        if (!binding) {
            audit.outcome = CallbackOutcome::rejected_no_intention;
            audit.detail = "no pending sign-in for this session";
            audits_.push_back(audit);
            return error_reply(req, 400,
                               "No sign-in attempt is pending for this session: request discarded.");
        }
        audit.idp_id = binding->idp_id;

        bool flagged = false;
        if (defences_.referer_guard) {
            RefererPolicy policy;
            policy.idp_origin = binding->idp_origin;
            policy.rp_origin = origin_of(req.uri);
            policy.absent_mode = defences_.absent_referer_mode;
            RefererVerdict verdict = evaluate(req.header("Referer"), policy);
            audit.referer = verdict;
            GuardOutcome outcome = apply_absent_mode(verdict, defences_.absent_referer_mode);
            if (!outcome.allowed) {
                audit.outcome = CallbackOutcome::rejected_referer;
                audit.detail = std::string(to_string(verdict.decision));
                audits_.push_back(audit);
                return csrf_detected_reply(req, *binding);
            }
            flagged = outcome.flagged;
        }

        if (defences_.state_check) {
            bool ok = evaluate_state(req.param("state"), session.pending_state);
            audit.state_ok = ok;
            if (!ok) {
                audit.outcome = CallbackOutcome::rejected_state;
                audits_.push_back(audit);
                return error_reply(req, 400, "State validation failed: request discarded.");
            }
            session.pending_state.reset();  // single use
        }

        if (binding->flow == Flow::implicit) {
            audit.outcome = flagged ? CallbackOutcome::accepted_flagged : CallbackOutcome::accepted;
            audits_.push_back(audit);
            return extractor_reply(req, *binding);
        }

        auto code = req.param("code");
        if (!code) {
            audit.outcome = CallbackOutcome::upstream_error;
            audit.detail = "callback carried no code";
            audits_.push_back(audit);
            return error_reply(req, 400, "Malformed callback: no authorization code.");
        }
        return complete_code_login(req, session, *binding, *code, flagged, audit);
    }

    // Extractor pages and client libraries post the result of a login here.
    // The request is same-origin by construction, so the guard expects the
    // RP's own origin and nothing else.
    ServerReply handle_token_delivery(const HttpRequest& req, RpSession& session) {
        CallbackAudit audit;
        audit.seq = next_audit_seq_++;
        audit.endpoint = req.uri.path;

        if (req.method != Method::POST) {
            return error_reply(req, 400, "token delivery must be a POST");
        }

        const IdPBinding* binding = nullptr;
        if (auto idp_id = req.param("idp")) {
            const IdPBinding* candidate = binding_for(*idp_id);
            if (candidate && candidate->flow != Flow::code) binding = candidate;
        }
        if (!binding && session.pending_idp) {
            const IdPBinding* candidate = binding_for(*session.pending_idp);
            if (candidate && candidate->flow != Flow::code) binding = candidate;
        }
        if (!binding) {
            audit.outcome = CallbackOutcome::rejected_no_intention;
            audit.detail = "delivery names no known sign-in";
            audits_.push_back(audit);
            return error_reply(req, 400,
                               "No sign-in attempt is pending for this session: request discarded.");
        }
        audit.idp_id = binding->idp_id;

        bool flagged = false;
        if (defences_.referer_guard) {
            RefererPolicy policy;
            policy.idp_origin = origin_of(req.uri);  // delivery is RP-to-RP traffic
            policy.rp_origin = origin_of(req.uri);
            policy.absent_mode = defences_.absent_referer_mode;
            RefererVerdict verdict = evaluate(req.header("Referer"), policy);
            audit.referer = verdict;
            GuardOutcome outcome = apply_absent_mode(verdict, defences_.absent_referer_mode);
            if (!outcome.allowed) {
                audit.outcome = CallbackOutcome::rejected_referer;
                audit.detail = std::string(to_string(verdict.decision));
                audits_.push_back(audit);
                return csrf_detected_reply(req, *binding);
            }
            flagged = outcome.flagged;
        }

        if (defences_.custom_header_check &&
            req.header("X-Requested-With") != std::optional<std::string>("XMLHttpRequest")) {
            audit.outcome = CallbackOutcome::rejected_custom_header;
            audits_.push_back(audit);
            return error_reply(req, 400, "Missing X-Requested-With header: request discarded.");
        }

        if (defences_.state_check) {
            bool ok = evaluate_state(req.param("state"), session.pending_state);
            audit.state_ok = ok;
            if (!ok) {
                audit.outcome = CallbackOutcome::rejected_state;
                audits_.push_back(audit);
                return error_reply(req, 400, "State validation failed: request discarded.");
            }
            session.pending_state.reset();
        }

        if (auto token = req.param("access_token")) {
            return complete_token_login(req, session, *binding, *token, flagged, audit);
        }
        if (auto code = req.param("code")) {
            return complete_code_login(req, session, *binding, *code, flagged, audit);
        }
        audit.outcome = CallbackOutcome::upstream_error;
        audit.detail = "delivery carried neither token nor code";
        audits_.push_back(audit);
        return error_reply(req, 400, "Malformed delivery: no token or code.");
    }

    ServerReply complete_code_login(const HttpRequest& req, RpSession& session,
                                    const IdPBinding& binding, const std::string& code,
                                    bool flagged, CallbackAudit audit) {
        auto token = exchange_code(binding, code);
        if (!token) {
            audit.outcome = CallbackOutcome::upstream_error;
            audit.detail = "code exchange failed";
            audits_.push_back(audit);
            return error_reply(req, 502, "Token exchange with " + binding.display_name + " failed.");
        }
        return complete_token_login(req, session, binding, *token, flagged, std::move(audit));
    }

    ServerReply complete_token_login(const HttpRequest& req, RpSession& session,
                                     const IdPBinding& binding, const std::string& token,
                                     bool flagged, CallbackAudit audit) {
        auto profile = fetch_userinfo(binding, token);
        if (!profile) {
            audit.outcome = CallbackOutcome::upstream_error;
            audit.detail = "userinfo lookup failed";
            audits_.push_back(audit);
            return error_reply(req, 502, "Profile lookup at " + binding.display_name + " failed.");
        }
        ++tokens_obtained_;
        session.logged_in_subject = BoundSubject{binding.idp_id, profile->first, profile->second};
        session.pending_idp.reset();
        audit.outcome = flagged ? CallbackOutcome::accepted_flagged : CallbackOutcome::accepted;
        audits_.push_back(audit);
        std::string body = "<html> <body> <h1>Signed in via " + binding.display_name + " as " +
                           profile->first + ".</h1> </body> </html>";
        return ServerReply{HttpResponse::html(200, body),
                           Document{req.uri, DocumentKind::plain, {}}};
    }

    // Back-channel call to the IdP's token endpoint. Server-to-server: no
    // cookies, no Referer, not visible to any browser.
    std::optional<std::string> exchange_code(const IdPBinding& binding, const std::string& code) {
        HttpRequest req = HttpRequest::make(Method::POST, binding.token_endpoint);
        ParamList body{{"grant_type", "authorization_code"},
                       {"client_id", binding.client_id},
                       {"code", code},
                       {"redirect_uri", binding.redirect_uri.serialize()}};
        if (binding.client_secret) body.emplace_back("client_secret", *binding.client_secret);
        req.body = std::move(body);
        ServerReply reply = backchannel_->dispatch(req);
        if (reply.response.status != 200) return std::nullopt;
        auto parsed = nlohmann::json::parse(reply.response.body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("access_token")) return std::nullopt;
        return parsed["access_token"].get<std::string>();
    }

    std::optional<std::pair<std::string, std::map<std::string, std::string>>> fetch_userinfo(
        const IdPBinding& binding, const std::string& token) {
        Uri target = binding.userinfo_endpoint;
        target.query.emplace_back("access_token", token);
        HttpRequest req = HttpRequest::make(Method::GET, target);
        ServerReply reply = backchannel_->dispatch(req);
        if (reply.response.status != 200) return std::nullopt;
        auto parsed = nlohmann::json::parse(reply.response.body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("sub")) return std::nullopt;
        std::map<std::string, std::string> attributes;
        for (const auto& [key, value] : parsed.items()) {
            if (key != "sub" && value.is_string()) attributes[key] = value.get<std::string>();
        }
        return std::make_pair(parsed["sub"].get<std::string>(), std::move(attributes));
    }

    ServerReply extractor_reply(const HttpRequest& req, const IdPBinding& binding) {
        Document doc{req.uri, DocumentKind::extractor_page, {}};
        Action extract;
        extract.kind = ActionKind::run_extractor;
        extract.target = with_path(origin_, std::string(kDeliveryPath));
        extract.form_fields.emplace_back("idp", binding.idp_id);
        extract.custom_headers.emplace_back("X-Requested-With", "XMLHttpRequest");
        extract.label = "extract";
        doc.actions.push_back(std::move(extract));
        std::string body =
            "<html>\n<body>\n<h1>This HTML can be used to extract the access_token!</h1>\n"
            "......\n</body>\n</html>";
        return ServerReply{HttpResponse::html(200, body), std::move(doc)};
    }

    ServerReply csrf_detected_reply(const HttpRequest& req, const IdPBinding& binding) {
        std::string body = "<html> <body> <h1>A CSRF attack is detected on the " +
                           binding.display_name +
                           " signin endpoint!</h1> </body> </html>";
        return ServerReply{HttpResponse::html(400, body),
                           Document{req.uri, DocumentKind::error_page, {}}};
    }

    ServerReply error_reply(const HttpRequest& req, int status, const std::string& message) {
        std::string body = "<html> <body> <h1>" + message + "</h1> </body> </html>";
        return ServerReply{HttpResponse::html(status, body),
                           Document{req.uri, DocumentKind::error_page, {}}};
    }

    mutable std::mutex m_;
    Origin origin_;
    DefenceConfig defences_;
    RequestRouter* backchannel_;
    TokenGenerator rng_;
    std::vector<IdPBinding> bindings_;
    std::map<std::string, RpSession> sessions_;
    std::vector<CallbackAudit> audits_;
    std::uint64_t next_audit_seq_{0};
    int tokens_obtained_{0};
};

} // namespace ssosim
