#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssosim/browser.hpp"
#include "ssosim/http.hpp"
#include "ssosim/idp.hpp"
#include "ssosim/rng.hpp"
#include "ssosim/router.hpp"
#include "ssosim/rp.hpp"

// A world is one self-contained deployment: a relying party, its identity
// providers, an attacker-controlled site, and two browsers (victim and
// attacker). Everything is wired through a single router and seeded from a
// single value, so a world replays identically.

namespace ssosim {

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IdPTemplate {
    std::string id;
    std::string display_name;
    Origin origin;
    bool auto_grant{false};
    bool require_https_redirect_uri{false};
    std::map<std::string, UserAccount> users;
};

struct WorldTemplate {
    Origin rp_origin{Scheme::https, "rp.com", 443};
    Origin attacker_origin{Scheme::https, "attacker.com", 443};
    std::string victim_username{"victim"};
    std::string attacker_username{"attacker"};
    std::vector<IdPTemplate> idps;
};

inline WorldTemplate default_world_template() {
    WorldTemplate t;
    std::map<std::string, UserAccount> users{
        {"victim", {"victim-pass", {{"email", "victim@example.com"}, {"name", "Vera Victim"}}}},
        {"attacker", {"attacker-pass", {{"email", "mal@example.com"}, {"name", "Mal Actor"}}}},
    };
    t.idps.push_back(IdPTemplate{"aidp", "AIdP", Origin{Scheme::https, "aidp.com", 443},
                                 false, false, users});
    t.idps.push_back(IdPTemplate{"bidp", "BIdP", Origin{Scheme::https, "bidp.com", 443},
                                 false, false, users});
    return t;
}

inline Origin parse_origin(const std::string& text) {
    Uri u = parse_uri(text);
    if (u.path != "/" || !u.query.empty() || u.fragment) {
        throw HarnessError("origin \"" + text + "\" must not carry a path, query or fragment");
    }
    return origin_of(u);
}

// World template file: origins, identity providers and their user accounts.
inline WorldTemplate load_world_template(const nlohmann::json& j) {
    if (!j.is_object()) throw HarnessError("world template must be a JSON object");
    WorldTemplate t;
    if (j.contains("rp_origin")) t.rp_origin = parse_origin(j.at("rp_origin").get<std::string>());
    if (j.contains("attacker_origin")) {
        t.attacker_origin = parse_origin(j.at("attacker_origin").get<std::string>());
    }
    if (j.contains("victim_username")) t.victim_username = j.at("victim_username").get<std::string>();
    if (j.contains("attacker_username")) {
        t.attacker_username = j.at("attacker_username").get<std::string>();
    }
    if (!j.contains("idps") || !j.at("idps").is_array() || j.at("idps").empty()) {
        throw HarnessError("world template needs a non-empty \"idps\" array");
    }
    t.idps.clear();
    for (const auto& ij : j.at("idps")) {
        IdPTemplate idp;
        idp.id = ij.at("id").get<std::string>();
        idp.display_name = ij.value("display_name", idp.id);
        idp.origin = parse_origin(ij.at("origin").get<std::string>());
        idp.auto_grant = ij.value("auto_grant", false);
        idp.require_https_redirect_uri = ij.value("require_https_redirect_uri", false);
        if (ij.contains("users")) {
            for (const auto& uj : ij.at("users")) {
                UserAccount account;
                account.password = uj.at("password").get<std::string>();
                if (uj.contains("attributes")) {
                    for (const auto& [name, value] : uj.at("attributes").items()) {
                        account.attributes[name] = value.get<std::string>();
                    }
                }
                idp.users[uj.at("username").get<std::string>()] = std::move(account);
            }
        }
        t.idps.push_back(std::move(idp));
    }
    for (const IdPTemplate& idp : t.idps) {
        if (!idp.users.count(t.victim_username) || !idp.users.count(t.attacker_username)) {
            throw HarnessError("IdP \"" + idp.id + "\" must have accounts for both \"" +
                               t.victim_username + "\" and \"" + t.attacker_username + "\"");
        }
    }
    return t;
}

inline WorldTemplate load_world_template_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw HarnessError("cannot open world file " + file.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw HarnessError("world file " + file.string() + " is not valid JSON: " + e.what());
    }
    try {
        return load_world_template(doc);
    } catch (const nlohmann::json::exception& e) {
        throw HarnessError("world file " + file.string() + ": " + e.what());
    }
}

// Which callback endpoints the RP registers with which IdP, and how.
struct BindingPlan {
    std::string idp_id;
    Flow flow{Flow::code};
    IdPResolution resolution{IdPResolution::per_idp_callback};
    std::string callback_path;
};

struct WorldSpec {
    WorldTemplate base;
    std::vector<BindingPlan> bindings;
    DefenceConfig defences;
    std::uint64_t seed{0};
};

// Attacker-controlled web server: serves whatever pages a script plants.
class StaticSite {
public:
    explicit StaticSite(Origin origin) : origin_(std::move(origin)) {}

    const Origin& origin() const { return origin_; }

    void host_page(std::string path, Document page, std::string body = "") {
        std::lock_guard lock(m_);
        pages_[std::move(path)] = {std::move(page), std::move(body)};
    }

    ServerReply handle(const HttpRequest& req) {
        std::lock_guard lock(m_);
        auto it = pages_.find(req.uri.path);
        if (it == pages_.end()) {
            return ServerReply{HttpResponse::html(404, "<html> <body> nothing here </body> </html>"),
                               Document{req.uri, DocumentKind::error_page, {}}};
        }
        return ServerReply{HttpResponse::html(200, it->second.second), it->second.first};
    }

    void mount(RequestRouter& router) {
        router.mount(origin_.host, [this](const HttpRequest& req) { return handle(req); });
    }

private:
    std::mutex m_;
    Origin origin_;
    std::map<std::string, std::pair<Document, std::string>> pages_;
};

class World {
public:
    explicit World(WorldSpec spec) : spec_(std::move(spec)), attacker_site_(spec_.base.attacker_origin) {
        TokenGenerator root(spec_.seed);

        for (const IdPTemplate& it : spec_.base.idps) {
            IdPConfig cfg;
            cfg.id = it.id;
            cfg.display_name = it.display_name;
            cfg.issuer = it.origin;
            cfg.auto_grant = it.auto_grant;
            cfg.require_https_redirect_uri = it.require_https_redirect_uri;
            cfg.users = it.users;
            auto idp = std::make_unique<IdentityProvider>(std::move(cfg), root.fork());
            idp->mount(router_);
            idps_.push_back(std::move(idp));
        }

        rp_ = std::make_unique<RelyingParty>(spec_.base.rp_origin, spec_.defences, router_,
                                             root.fork());
        rp_->mount(router_);

        for (const BindingPlan& plan : spec_.bindings) {
            IdentityProvider& provider = idp(plan.idp_id);
            ClientRegistration reg;
            reg.client_id = "rp-" + plan.idp_id;
            reg.redirect_uri = plan.flow == Flow::client_library
                                   ? origin_uri(spec_.base.rp_origin)
                                   : with_path(spec_.base.rp_origin, plan.callback_path);
            if (plan.flow == Flow::client_library) {
                reg.origin = spec_.base.rp_origin;  // script origin, no secret: public client
            } else {
                reg.client_secret = root.next_token("k");
            }
            provider.register_client(reg);

            IdPBinding binding;
            binding.idp_id = plan.idp_id;
            binding.display_name = provider.config().display_name;
            binding.idp_origin = provider.config().issuer;
            binding.flow = plan.flow;
            binding.resolution = plan.resolution;
            binding.callback_path = plan.callback_path;
            binding.client_id = reg.client_id;
            binding.client_secret = reg.client_secret;
            binding.redirect_uri = reg.redirect_uri;
            binding.authorize_endpoint = provider.authorize_endpoint();
            binding.token_endpoint = provider.token_endpoint();
            binding.userinfo_endpoint = provider.userinfo_endpoint();
            rp_->add_binding(std::move(binding));
        }

        attacker_site_.mount(router_);
    }

    World(const World&) = delete;
    World& operator=(const World&) = delete;

    const WorldSpec& spec() const { return spec_; }
    const WorldTemplate& tmpl() const { return spec_.base; }

    RequestRouter& router() { return router_; }
    RelyingParty& rp() { return *rp_; }
    StaticSite& attacker_site() { return attacker_site_; }
    Browser& victim() { return victim_; }
    Browser& attacker_browser() { return attacker_browser_; }

    IdentityProvider& idp(const std::string& id) {
        for (auto& p : idps_) {
            if (p->config().id == id) return *p;
        }
        throw HarnessError("world has no IdP \"" + id + "\"");
    }

    const std::vector<std::unique_ptr<IdentityProvider>>& idps() const { return idps_; }

    std::string password_of(const std::string& idp_id, const std::string& username) {
        const IdPConfig& cfg = idp(idp_id).config();
        auto it = cfg.users.find(username);
        if (it == cfg.users.end()) {
            throw HarnessError("IdP \"" + idp_id + "\" has no user \"" + username + "\"");
        }
        return it->second.password;
    }

    // The RP session the victim's browser currently holds, if any.
    std::optional<RpSession> victim_session() const {
        auto sid = victim_.jar().get(spec_.base.rp_origin.host,
                                     std::string(RelyingParty::kSessionCookie));
        if (!sid) return std::nullopt;
        return rp_->session(*sid);
    }

    std::optional<std::string> victim_bound_subject() const {
        auto session = victim_session();
        if (!session || !session->logged_in_subject) return std::nullopt;
        return session->logged_in_subject->subject;
    }

private:
    WorldSpec spec_;
    RequestRouter router_;
    std::vector<std::unique_ptr<IdentityProvider>> idps_;
    std::unique_ptr<RelyingParty> rp_;
    StaticSite attacker_site_;
    Browser victim_{"victim"};
    Browser attacker_browser_{"attacker"};
};

} // namespace ssosim
