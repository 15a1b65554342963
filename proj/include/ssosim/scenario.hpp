#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssosim/listing.hpp"
#include "ssosim/report.hpp"
#include "ssosim/world.hpp"

// Scenario harness: scripted runs of legitimate sign-ins and attacks against
// a fresh world, compared against expected verdicts. Each scenario owns its
// world, so scenarios are independent and can run in parallel.

namespace ssosim {

// Collects what happened while a script drives its world: narrative steps,
// the exchanges inside each step, and which RP verdicts fired during it.
class ScenarioRecorder {
public:
    explicit ScenarioRecorder(World& world) : world_(&world) {}

    void step(std::string actor, std::string description) {
        close_step();
        current_ = StepRecord{};
        current_.index = static_cast<int>(steps_.size());
        current_.actor = std::move(actor);
        current_.description = std::move(description);
        open_ = true;
    }

    void record(const NavigationTrace& trace) {
        require_open();
        for (const HttpExchange& exchange : trace.exchanges) current_.exchanges.push_back(exchange);
        current_.final_document_kind = std::string(to_string(trace.final_document.kind));
        current_.aborted = current_.aborted || trace.aborted;
    }

    void record(const HttpExchange& exchange) {
        require_open();
        current_.exchanges.push_back(exchange);
    }

    // Script-level check, reported alongside the harness assertions.
    void expect(std::string name, bool ok, std::string detail = "") {
        checks_.push_back(AssertionResult{std::move(name), ok, std::move(detail)});
    }

    void close_step() {
        if (!open_) return;
        std::vector<CallbackAudit> audits = world_->rp().audits();
        for (std::size_t i = consumed_audits_; i < audits.size(); ++i) {
            verdicts_.push_back(VerdictRecord{current_.description, audits[i]});
        }
        consumed_audits_ = audits.size();
        steps_.push_back(std::move(current_));
        open_ = false;
    }

    const std::vector<StepRecord>& steps() const { return steps_; }
    const std::vector<VerdictRecord>& verdicts() const { return verdicts_; }
    const std::vector<AssertionResult>& checks() const { return checks_; }

private:
    void require_open() {
        if (!open_) throw HarnessError("scenario script recorded outside a step");
    }

    World* world_;
    StepRecord current_{};
    bool open_{false};
    std::size_t consumed_audits_{0};
    std::vector<StepRecord> steps_;
    std::vector<VerdictRecord> verdicts_;
    std::vector<AssertionResult> checks_;
};

struct Scenario {
    std::string id;
    std::string description;
    WorldSpec world;
    std::function<void(World&, ScenarioRecorder&)> script;
    ExpectedOutcome expected;
};

struct ScenarioRun {
    std::unique_ptr<World> world;  // kept alive for invariant audits
    ScenarioReport report;
};

inline ScenarioRun run_scenario_full(const Scenario& scenario) {
    ScenarioRun run;
    run.world = std::make_unique<World>(scenario.world);
    ScenarioRecorder recorder(*run.world);

    std::optional<std::string> script_error;
    try {
        scenario.script(*run.world, recorder);
    } catch (const std::exception& e) {
        script_error = e.what();
    }
    recorder.close_step();

    ScenarioReport& report = run.report;
    report.scenario_id = scenario.id;
    report.description = scenario.description;
    report.seed = scenario.world.seed;
    report.defences = scenario.world.defences;
    report.steps = recorder.steps();
    report.verdicts = recorder.verdicts();
    report.victim_bound_subject = run.world->victim_bound_subject();
    report.attack_succeeded =
        report.victim_bound_subject == std::optional(scenario.world.base.attacker_username);

    auto& checks = report.assertions;
    checks.push_back(AssertionResult{"script completed", !script_error,
                                     script_error ? *script_error : ""});

    const ExpectedOutcome& expected = scenario.expected;
    checks.push_back(AssertionResult{
        "verdict count",
        report.verdicts.size() == expected.final_verdicts.size(),
        "expected " + std::to_string(expected.final_verdicts.size()) + ", recorded " +
            std::to_string(report.verdicts.size())});
    for (std::size_t i = 0; i < expected.final_verdicts.size() && i < report.verdicts.size(); ++i) {
        const ExpectedVerdict& want = expected.final_verdicts[i];
        const VerdictRecord& got = report.verdicts[i];
        bool ok = got.step == want.step && got.audit.outcome == want.outcome;
        if (want.decision) {
            ok = ok && got.audit.referer && got.audit.referer->decision == *want.decision;
        }
        std::string detail = "got " + std::string(to_string(got.audit.outcome));
        if (got.audit.referer) {
            detail += "/" + std::string(to_string(got.audit.referer->decision));
        }
        detail += " during \"" + got.step + "\"";
        checks.push_back(AssertionResult{
            "verdict " + std::to_string(i) + " is " + std::string(to_string(want.outcome)) +
                (want.decision ? "/" + std::string(to_string(*want.decision)) : "") +
                " during \"" + want.step + "\"",
            ok, detail});
    }

    std::string bound = report.victim_bound_subject.value_or("(nobody)");
    std::string expected_bound = expected.victim_bound_subject.value_or("(nobody)");
    checks.push_back(AssertionResult{"victim session bound to " + expected_bound,
                                     report.victim_bound_subject == expected.victim_bound_subject,
                                     "bound to " + bound});
    checks.push_back(AssertionResult{
        std::string("attack ") + (expected.attack_succeeded ? "succeeds" : "fails"),
        report.attack_succeeded == expected.attack_succeeded,
        report.attack_succeeded ? "attack succeeded" : "attack failed"});
    for (const AssertionResult& check : recorder.checks()) checks.push_back(check);

    report.passed = true;
    for (const AssertionResult& check : checks) report.passed = report.passed && check.passed;

    for (const StepRecord& step : report.steps) {
        report.listings += "### step " + std::to_string(step.index) + " [" + step.actor + "] " +
                           step.description + "\n";
        for (const HttpExchange& exchange : step.exchanges) {
            report.listings += render_listing(exchange);
            report.listings += "\n";
        }
    }
    return run;
}

inline ScenarioReport run_scenario(const Scenario& scenario) {
    return run_scenario_full(scenario).report;
}

// Last exchange whose request hit `path`, across all steps. Scenario traces
// are small; a linear scan is fine.
inline const HttpExchange* find_last_exchange(const std::vector<StepRecord>& steps,
                                              std::string_view path) {
    const HttpExchange* found = nullptr;
    for (const StepRecord& step : steps) {
        for (const HttpExchange& exchange : step.exchanges) {
            if (exchange.request.uri.path == path) found = &exchange;
        }
    }
    return found;
}

struct DefenceOverrides {
    std::optional<bool> referer_guard;
    std::optional<bool> state_check;
    std::optional<bool> custom_header_check;
    std::optional<AbsentRefererMode> absent_mode;

    bool any() const {
        return referer_guard || state_check || custom_header_check || absent_mode;
    }

    void apply(DefenceConfig& d) const {
        if (referer_guard) d.referer_guard = *referer_guard;
        if (state_check) d.state_check = *state_check;
        if (custom_header_check) d.custom_header_check = *custom_header_check;
        if (absent_mode) d.absent_referer_mode = *absent_mode;
    }

    std::string describe() const {
        if (!any()) return "(none)";
        std::string out;
        auto flag = [&out](const char* name, const std::optional<bool>& v) {
            if (!v) return;
            if (!out.empty()) out += ' ';
            out += name;
            out += *v ? "=on" : "=off";
        };
        flag("referer-guard", referer_guard);
        flag("state", state_check);
        flag("custom-header", custom_header_check);
        if (absent_mode) {
            if (!out.empty()) out += ' ';
            out += "absent-mode=";
            out += to_string(*absent_mode);
        }
        return out;
    }
};

inline void apply_overrides(Scenario& scenario, const DefenceOverrides& overrides) {
    overrides.apply(scenario.world.defences);
}

namespace scenario_detail {

inline constexpr const char* kClickStep = "victim clicks the RP sign-in link";
inline constexpr const char* kCredsStep = "victim submits credentials at the IdP";
inline constexpr const char* kGrantStep = "victim grants access on the IdP consent page";
inline constexpr const char* kLureVisitStep = "victim browses to the attacker's page";
inline constexpr const char* kImgLureStep = "victim's browser loads the attacker's disguised image";
inline constexpr const char* kLinkLureStep = "victim follows the attacker's disguised link";
inline constexpr const char* kExtractStep = "the extractor script posts the fragment to the RP";
inline constexpr const char* kPopupStep =
    "the client library opens the sign-in popup and captures the code";
inline constexpr const char* kDeliverStep = "the client library posts the code to the RP";
inline constexpr const char* kCommentStep = "victim reads a comment page on the IdP";
inline constexpr const char* kCommentLureStep = "victim clicks the forged callback link in the comment";
inline constexpr const char* kSharedLureStep = "victim follows the forged link to the shared callback";
inline constexpr const char* kProbeStep =
    "the RP operator tries to register an http callback at a strict IdP";

inline const IdPTemplate& primary_idp(const WorldTemplate& t) { return t.idps.front(); }

inline std::string callback_path_for(const IdPTemplate& t) {
    return "/" + t.display_name + "-callback";
}

inline DefenceConfig guard_only() {
    DefenceConfig d;
    d.referer_guard = true;
    d.state_check = false;
    d.custom_header_check = false;
    return d;
}

inline DefenceConfig no_defences() {
    DefenceConfig d;
    d.referer_guard = false;
    d.state_check = false;
    d.custom_header_check = false;
    return d;
}

inline DefenceConfig state_only() {
    DefenceConfig d;
    d.referer_guard = false;
    d.state_check = true;
    d.custom_header_check = false;
    return d;
}

inline DefenceConfig guard_plus_header() {
    DefenceConfig d = guard_only();
    d.custom_header_check = true;
    return d;
}

inline WorldSpec make_world(WorldTemplate base, std::uint64_t seed, DefenceConfig defences,
                            std::vector<BindingPlan> plans) {
    WorldSpec s;
    s.base = std::move(base);
    s.seed = seed;
    s.defences = defences;
    s.bindings = std::move(plans);
    return s;
}

// Per-IdP code-grant world: every IdP in the template gets its own callback.
inline std::vector<BindingPlan> per_idp_code_plans(const WorldTemplate& t) {
    std::vector<BindingPlan> plans;
    for (const IdPTemplate& idp : t.idps) {
        plans.push_back(BindingPlan{idp.id, Flow::code, IdPResolution::per_idp_callback,
                                    callback_path_for(idp)});
    }
    return plans;
}

inline std::vector<BindingPlan> shared_code_plans(const WorldTemplate& t) {
    std::vector<BindingPlan> plans;
    for (const IdPTemplate& idp : t.idps) {
        plans.push_back(BindingPlan{idp.id, Flow::code, IdPResolution::shared_callback,
                                    "/oauth2-callback"});
    }
    return plans;
}

inline Document idp_login(World& w, Browser& browser, const std::string& actor,
                          const std::string& idp_id, const std::string& username,
                          ScenarioRecorder& rec) {
    rec.step(actor, actor + " signs in at the IdP directly");
    IdentityProvider& idp = w.idp(idp_id);
    NavigationTrace t1 = browser.visit(idp.login_endpoint(), w.router());
    rec.record(t1);
    const Action* login = t1.final_document.find_action("login");
    if (!login) throw HarnessError(actor + " found no login form at " + idp_id);
    Action filled = *login;
    filled.form_fields = {{"username", username}, {"password", w.password_of(idp_id, username)}};
    NavigationTrace t2 = browser.navigate(t1.final_document, filled, w.router());
    rec.record(t2);
    if (t2.final_document.kind != DocumentKind::plain) {
        throw HarnessError(actor + " failed to sign in at " + idp_id);
    }
    return t2.final_document;
}

inline Document open_rp_home(World& w, Browser& browser, const std::string& actor,
                             ScenarioRecorder& rec) {
    rec.step(actor, actor + " opens the RP home page");
    NavigationTrace t = browser.visit(w.rp().home_uri(), w.router());
    rec.record(t);
    if (t.final_document.kind != DocumentKind::rp_page) {
        throw HarnessError("the RP home page did not render");
    }
    return t.final_document;
}

inline NavigationTrace click_signin(World& w, Browser& browser, const Document& home,
                                    const std::string& idp_id, const std::string& actor,
                                    const std::string& step_desc, ScenarioRecorder& rec,
                                    const NavigationOptions& options = {}) {
    rec.step(actor, step_desc);
    const Action* signin = home.find_action("signin-" + idp_id);
    if (!signin) throw HarnessError("the RP home page offers no sign-in link for " + idp_id);
    NavigationTrace t = browser.navigate(home, *signin, w.router(), options);
    rec.record(t);
    return t;
}

inline NavigationTrace submit_credentials(World& w, Browser& browser, const Document& login_form,
                                          const std::string& idp_id, const std::string& username,
                                          const std::string& actor, const std::string& step_desc,
                                          ScenarioRecorder& rec,
                                          const NavigationOptions& options = {}) {
    rec.step(actor, step_desc);
    const Action* login = login_form.find_action("login");
    if (!login) throw HarnessError("expected a login form, got another page");
    Action filled = *login;
    filled.form_fields = {{"username", username}, {"password", w.password_of(idp_id, username)}};
    NavigationTrace t = browser.navigate(login_form, filled, w.router(), options);
    rec.record(t);
    return t;
}

inline NavigationTrace grant_consent(World& w, Browser& browser, const Document& consent,
                                     const std::string& actor, const std::string& step_desc,
                                     ScenarioRecorder& rec, const NavigationOptions& options = {}) {
    rec.step(actor, step_desc);
    const Action* grant = consent.find_action("grant");
    if (!grant) throw HarnessError("expected a consent page, got another page");
    NavigationTrace t = browser.navigate(consent, *grant, w.router(), options);
    rec.record(t);
    return t;
}

// The attacker runs their own sign-in against the primary IdP and closes the
// window before the browser follows the redirect back to the RP. The
// location of that unfollowed redirect is a fresh, unconsumed grant bound to
// the attacker's account.
inline Uri steal_authorization_response(World& w, ScenarioRecorder& rec) {
    const std::string idp_id = primary_idp(w.tmpl()).id;
    Browser& attacker = w.attacker_browser();
    idp_login(w, attacker, "attacker", idp_id, w.tmpl().attacker_username, rec);
    Document home = open_rp_home(w, attacker, "attacker", rec);
    NavigationOptions abort;
    abort.abort_before_host = w.tmpl().rp_origin.host;
    NavigationTrace t = click_signin(w, attacker, home, idp_id, "attacker",
                                     "attacker starts a sign-in and aborts before the callback",
                                     rec, abort);
    if (!t.aborted) {
        if (t.final_document.kind != DocumentKind::idp_consent_page) {
            throw HarnessError("the attacker's flow reached neither consent nor the callback");
        }
        t = grant_consent(w, attacker, t.final_document, "attacker",
                          "attacker grants consent and aborts before the callback", rec, abort);
    }
    auto location = t.aborted_location();
    if (!location) throw HarnessError("the attacker captured no authorization response");
    return *location;
}

// Plant a page on the attacker's site whose only purpose is to make the
// victim's browser issue a GET for `forged` (a link or a fake image).
inline NavigationTrace victim_takes_lure(World& w, ActionKind vector, const Uri& forged,
                                         const std::string& act_desc, ScenarioRecorder& rec) {
    Uri lure_url = with_path(w.tmpl().attacker_origin, "/lure");
    Document page{lure_url, DocumentKind::attacker_page, {}};
    Action action;
    action.kind = vector;
    action.target = forged;
    action.label = "lure";
    page.actions.push_back(std::move(action));
    w.attacker_site().host_page("/lure", page,
                                "<html> <body> totally harmless page </body> </html>");

    rec.step("victim", kLureVisitStep);
    NavigationTrace t1 = w.victim().visit(lure_url, w.router());
    rec.record(t1);
    const Action* lure = t1.final_document.find_action("lure");
    if (!lure) throw HarnessError("the attacker page lost its lure");
    rec.step("victim", act_desc);
    NavigationTrace t2 = w.victim().navigate(t1.final_document, *lure, w.router());
    rec.record(t2);
    return t2;
}

inline Scenario make_s1(const WorldTemplate& base, std::uint64_t seed) {
    Scenario s;
    s.id = "S1";
    s.description = "code-grant sign-in through the IdP consent page, guard on";
    WorldTemplate t = base;
    t.idps[0].auto_grant = false;
    s.world = make_world(t, seed, guard_only(), per_idp_code_plans(t));
    s.script = [](World& w, ScenarioRecorder& rec) {
        const std::string idp_id = primary_idp(w.tmpl()).id;
        Browser& victim = w.victim();
        Document home = open_rp_home(w, victim, "victim", rec);
        NavigationTrace t1 = click_signin(w, victim, home, idp_id, "victim", kClickStep, rec);
        if (t1.final_document.kind != DocumentKind::idp_login_form) {
            throw HarnessError("expected the IdP login form");
        }
        NavigationTrace t2 = submit_credentials(w, victim, t1.final_document, idp_id,
                                                w.tmpl().victim_username, "victim", kCredsStep, rec);
        if (t2.final_document.kind != DocumentKind::idp_consent_page) {
            throw HarnessError("expected the IdP consent page");
        }
        NavigationTrace t3 = grant_consent(w, victim, t2.final_document, "victim", kGrantStep, rec);
        rec.expect("signed-in page rendered", t3.final_document.kind == DocumentKind::plain,
                   std::string(to_string(t3.final_document.kind)));
    };
    s.expected.final_verdicts = {
        {kGrantStep, CallbackOutcome::accepted, RefererDecision::accept}};
    s.expected.victim_bound_subject = base.victim_username;
    s.expected.attack_succeeded = false;
    return s;
}

inline Scenario make_s2(const WorldTemplate& base, std::uint64_t seed) {
    Scenario s;
    s.id = "S2";
    s.description = "code-grant sign-in, IdP auto-grants an already authenticated user";
    WorldTemplate t = base;
    t.idps[0].auto_grant = true;
    s.world = make_world(t, seed, guard_only(), per_idp_code_plans(t));
    s.script = [](World& w, ScenarioRecorder& rec) {
        const std::string idp_id = primary_idp(w.tmpl()).id;
        Browser& victim = w.victim();
        idp_login(w, victim, "victim", idp_id, w.tmpl().victim_username, rec);
        Document home = open_rp_home(w, victim, "victim", rec);
        NavigationTrace t = click_signin(w, victim, home, idp_id, "victim", kClickStep, rec);
        rec.expect("signed-in page rendered", t.final_document.kind == DocumentKind::plain,
                   std::string(to_string(t.final_document.kind)));
    };
    s.expected.final_verdicts = {
        {kClickStep, CallbackOutcome::accepted, RefererDecision::accept}};
    s.expected.victim_bound_subject = base.victim_username;
    s.expected.attack_succeeded = false;
    return s;
}

inline Scenario make_s3(const WorldTemplate& base, std::uint64_t seed, bool defended) {
    Scenario s;
    s.id = defended ? "S3" : "S3u";
    s.description = defended
                        ? "forged code callback served from an attacker page, guard on"
                        : "forged code callback served from an attacker page, all defences off";
    WorldTemplate t = base;
    t.idps[0].auto_grant = false;
    s.world = make_world(t, seed, defended ? guard_only() : no_defences(), per_idp_code_plans(t));
    s.script = [defended](World& w, ScenarioRecorder& rec) {
        Uri forged = steal_authorization_response(w, rec);
        open_rp_home(w, w.victim(), "victim", rec);
        NavigationTrace t = victim_takes_lure(w, ActionKind::load_image, forged, kImgLureStep, rec);
        if (defended) {
            rec.expect("forged request answered with an error page",
                       t.final_document.kind == DocumentKind::error_page,
                       std::string(to_string(t.final_document.kind)));
        } else {
            rec.expect("forged request completed a login",
                       t.final_document.kind == DocumentKind::plain,
                       std::string(to_string(t.final_document.kind)));
        }
    };
    if (defended) {
        s.expected.final_verdicts = {
            {kImgLureStep, CallbackOutcome::rejected_referer, RefererDecision::reject_foreign}};
        s.expected.victim_bound_subject = std::nullopt;
        s.expected.attack_succeeded = false;
    } else {
        s.expected.final_verdicts = {{kImgLureStep, CallbackOutcome::accepted, std::nullopt}};
        s.expected.victim_bound_subject = base.attacker_username;
        s.expected.attack_succeeded = true;
    }
    return s;
}

inline Scenario make_s4(const WorldTemplate& base, std::uint64_t seed) {
    Scenario s;
    s.id = "S4";
    s.description = "implicit-grant sign-in through the extractor page, guard on";
    WorldTemplate t = base;
    t.idps[0].auto_grant = false;
    std::vector<BindingPlan> plans{BindingPlan{t.idps[0].id, Flow::implicit,
                                               IdPResolution::per_idp_callback,
                                               callback_path_for(t.idps[0])}};
    s.world = make_world(t, seed, guard_only(), std::move(plans));
    s.script = [](World& w, ScenarioRecorder& rec) {
        const std::string idp_id = primary_idp(w.tmpl()).id;
        Browser& victim = w.victim();
        idp_login(w, victim, "victim", idp_id, w.tmpl().victim_username, rec);
        Document home = open_rp_home(w, victim, "victim", rec);
        NavigationTrace t1 = click_signin(w, victim, home, idp_id, "victim", kClickStep, rec);
        if (t1.final_document.kind != DocumentKind::idp_consent_page) {
            throw HarnessError("expected the IdP consent page");
        }
        NavigationTrace t2 = grant_consent(w, victim, t1.final_document, "victim", kGrantStep, rec);
        rec.expect("extractor page rendered with the fragment",
                   t2.final_document.kind == DocumentKind::extractor_page &&
                       t2.final_document.url.fragment.has_value(),
                   std::string(to_string(t2.final_document.kind)));
        rec.step("victim", kExtractStep);
        NavigationTrace t3 = victim.run_extractor(t2.final_document, w.router());
        rec.record(t3);
        rec.expect("delivery reply is the signed-in page",
                   t3.final_document.kind == DocumentKind::plain,
                   std::string(to_string(t3.final_document.kind)));
    };
    s.expected.final_verdicts = {
        {kGrantStep, CallbackOutcome::accepted, RefererDecision::accept},
        {kExtractStep, CallbackOutcome::accepted, RefererDecision::accept}};
    s.expected.victim_bound_subject = base.victim_username;
    s.expected.attack_succeeded = false;
    return s;
}

inline Scenario make_s5(const WorldTemplate& base, std::uint64_t seed, bool defended) {
    Scenario s;
    s.id = defended ? "S5" : "S5u";
    s.description = defended
                        ? "forged implicit callback with a crafted fragment, guard on"
                        : "forged implicit callback with a crafted fragment, all defences off";
    WorldTemplate t = base;
    t.idps[0].auto_grant = false;
    std::vector<BindingPlan> plans{BindingPlan{t.idps[0].id, Flow::implicit,
                                               IdPResolution::per_idp_callback,
                                               callback_path_for(t.idps[0])}};
    s.world = make_world(t, seed, defended ? guard_only() : no_defences(), std::move(plans));
    s.script = [defended](World& w, ScenarioRecorder& rec) {
        Uri forged = steal_authorization_response(w, rec);
        if (!forged.fragment) throw HarnessError("the stolen response carried no fragment");
        open_rp_home(w, w.victim(), "victim", rec);
        NavigationTrace t = victim_takes_lure(w, ActionKind::click_link, forged, kLinkLureStep, rec);
        if (defended) {
            const std::string display = primary_idp(w.tmpl()).display_name;
            rec.expect("detection page shown",
                       t.last().response.body.find("A CSRF attack is detected on the " + display +
                                                   " signin endpoint!") != std::string::npos,
                       t.last().response.body);
        } else {
            if (t.final_document.kind != DocumentKind::extractor_page) {
                throw HarnessError("expected the extractor page");
            }
            rec.step("victim", kExtractStep);
            NavigationTrace t2 = w.victim().run_extractor(t.final_document, w.router());
            rec.record(t2);
            rec.expect("delivery reply is the signed-in page",
                       t2.final_document.kind == DocumentKind::plain,
                       std::string(to_string(t2.final_document.kind)));
        }
    };
    if (defended) {
        s.expected.final_verdicts = {
            {kLinkLureStep, CallbackOutcome::rejected_referer, RefererDecision::reject_foreign}};
        s.expected.victim_bound_subject = std::nullopt;
        s.expected.attack_succeeded = false;
    } else {
        s.expected.final_verdicts = {
            {kLinkLureStep, CallbackOutcome::accepted, std::nullopt},
            {kExtractStep, CallbackOutcome::accepted, std::nullopt}};
        s.expected.victim_bound_subject = base.attacker_username;
        s.expected.attack_succeeded = true;
    }
    return s;
}

inline Scenario make_s6(const WorldTemplate& base, std::uint64_t seed) {
    Scenario s;
    s.id = "S6";
    s.description = "shared callback with intention tracking; forged link planted on the IdP";
    WorldTemplate t = base;
    t.idps[0].auto_grant = false;
    s.world = make_world(t, seed, guard_only(), shared_code_plans(t));
    s.script = [](World& w, ScenarioRecorder& rec) {
        const std::string idp_id = primary_idp(w.tmpl()).id;
        Browser& victim = w.victim();
        idp_login(w, victim, "victim", idp_id, w.tmpl().victim_username, rec);
        Document home = open_rp_home(w, victim, "victim", rec);
        NavigationTrace t1 = click_signin(w, victim, home, idp_id, "victim", kClickStep, rec);
        if (t1.final_document.kind != DocumentKind::idp_consent_page) {
            throw HarnessError("expected the IdP consent page");
        }
        NavigationTrace t2 = grant_consent(w, victim, t1.final_document, "victim", kGrantStep, rec);
        rec.expect("legitimate shared-callback login completed",
                   t2.final_document.kind == DocumentKind::plain,
                   std::string(to_string(t2.final_document.kind)));

        Uri forged = steal_authorization_response(w, rec);
        // The forged link rides on the IdP's own domain, planted as
        // user-generated content, so its Referer passes any origin check.
        Uri comment_url = with_path(primary_idp(w.tmpl()).origin, "/posts/1729");
        Document comment{comment_url, DocumentKind::plain, {}};
        Action lure;
        lure.kind = ActionKind::click_link;
        lure.target = forged;
        lure.label = "lure";
        comment.actions.push_back(std::move(lure));
        w.idp(idp_id).host_page("/posts/1729", comment,
                                "<html> <body> great post, check this out </body> </html>");

        rec.step("victim", kCommentStep);
        NavigationTrace t3 = victim.visit(comment_url, w.router());
        rec.record(t3);
        const Action* planted = t3.final_document.find_action("lure");
        if (!planted) throw HarnessError("the planted comment lost its link");
        rec.step("victim", kCommentLureStep);
        NavigationTrace t4 = victim.navigate(t3.final_document, *planted, w.router());
        rec.record(t4);
        rec.expect("forged link answered with an error page",
                   t4.final_document.kind == DocumentKind::error_page,
                   std::string(to_string(t4.final_document.kind)));
    };
    s.expected.final_verdicts = {
        {kGrantStep, CallbackOutcome::accepted, RefererDecision::accept},
        {kCommentLureStep, CallbackOutcome::rejected_no_intention, std::nullopt}};
    s.expected.victim_bound_subject = base.victim_username;  // the legitimate login survives
    s.expected.attack_succeeded = false;
    return s;
}

inline Scenario make_s7(const WorldTemplate& base, std::uint64_t seed) {
    Scenario s;
    s.id = "S7";
    s.description = "client-library sign-in: popup capture plus same-origin XHR delivery";
    WorldTemplate t = base;
    t.idps[0].auto_grant = true;  // library UX assumes no interactive consent
    std::vector<BindingPlan> plans{BindingPlan{t.idps[0].id, Flow::client_library,
                                               IdPResolution::per_idp_callback,
                                               std::string(RelyingParty::kDeliveryPath)}};
    s.world = make_world(t, seed, guard_plus_header(), std::move(plans));
    s.script = [](World& w, ScenarioRecorder& rec) {
        const std::string idp_id = primary_idp(w.tmpl()).id;
        Browser& victim = w.victim();
        idp_login(w, victim, "victim", idp_id, w.tmpl().victim_username, rec);
        Document home = open_rp_home(w, victim, "victim", rec);

        rec.step("victim", kPopupStep);
        const Action* signin = home.find_action("signin-" + idp_id);
        if (!signin) throw HarnessError("the RP home page offers no sign-in link for " + idp_id);
        NavigationOptions popup;
        popup.abort_before_host = w.tmpl().rp_origin.host;
        NavigationTrace t1 = victim.navigate(home, *signin, w.router(), popup);
        rec.record(t1);
        if (!t1.aborted) throw HarnessError("the library popup was not intercepted");
        Uri captured = *t1.aborted_location();
        auto code = captured.query_param("code");
        if (!code) throw HarnessError("the captured redirect carried no code");

        rec.step("victim", kDeliverStep);
        ParamList payload{{"idp", idp_id}, {"code", *code}};
        if (auto state = captured.query_param("state")) payload.push_back({"state", *state});
        HttpExchange delivery = victim.xhr(home, with_path(w.tmpl().rp_origin,
                                                           std::string(RelyingParty::kDeliveryPath)),
                                           {{"X-Requested-With", "XMLHttpRequest"}}, payload,
                                           w.router());
        rec.record(delivery);
        rec.expect("delivery accepted", delivery.response.status == 200,
                   "status " + std::to_string(delivery.response.status));
    };
    s.expected.final_verdicts = {
        {kDeliverStep, CallbackOutcome::accepted, RefererDecision::accept}};
    s.expected.victim_bound_subject = base.victim_username;
    s.expected.attack_succeeded = false;
    return s;
}

inline Scenario make_s8(const WorldTemplate& base, std::uint64_t seed, AbsentRefererMode mode,
                        const std::string& id, const std::string& description) {
    Scenario s;
    s.id = id;
    s.description = description;
    WorldTemplate t = base;
    t.rp_origin = Origin{Scheme::http, base.rp_origin.host, 80};  // plain-http RP
    t.idps[0].auto_grant = false;
    t.idps[0].require_https_redirect_uri = false;
    DefenceConfig defences = guard_only();
    defences.absent_referer_mode = mode;
    s.world = make_world(t, seed, defences, per_idp_code_plans(t));
    s.script = [mode](World& w, ScenarioRecorder& rec) {
        const IdPTemplate& idp = primary_idp(w.tmpl());
        Browser& victim = w.victim();
        idp_login(w, victim, "victim", idp.id, w.tmpl().victim_username, rec);
        Document home = open_rp_home(w, victim, "victim", rec);
        NavigationTrace t1 = click_signin(w, victim, home, idp.id, "victim", kClickStep, rec);
        if (t1.final_document.kind != DocumentKind::idp_consent_page) {
            throw HarnessError("expected the IdP consent page");
        }
        NavigationTrace t2 = grant_consent(w, victim, t1.final_document, "victim", kGrantStep, rec);

        const std::string callback_path = callback_path_for(idp);
        const HttpExchange* callback = nullptr;
        for (const HttpExchange& exchange : t2.exchanges) {
            if (exchange.request.uri.path == callback_path) callback = &exchange;
        }
        rec.expect("callback arrived with no Referer",
                   callback && !callback->request.header("Referer"),
                   callback ? callback->request.render() : "callback never reached");
        if (mode == AbsentRefererMode::fail_closed) {
            rec.expect("login rejected", t2.final_document.kind == DocumentKind::error_page,
                       std::string(to_string(t2.final_document.kind)));
        } else {
            rec.expect("login completed", t2.final_document.kind == DocumentKind::plain,
                       std::string(to_string(t2.final_document.kind)));
        }

        rec.step("operator", kProbeStep);
        IdPConfig strict;
        strict.id = "strict";
        strict.display_name = "StrictIdP";
        strict.issuer = Origin{Scheme::https, "strict-idp.example", 443};
        strict.require_https_redirect_uri = true;
        IdentityProvider probe(strict, TokenGenerator(1));
        bool refused = false;
        std::string message;
        try {
            ClientRegistration reg;
            reg.client_id = "probe";
            reg.redirect_uri = with_path(w.tmpl().rp_origin, callback_path);
            probe.register_client(reg);
        } catch (const RegistrationError& e) {
            refused = true;
            message = e.what();
        }
        rec.expect("http redirect_uri refused where https is required", refused, message);
    };
    switch (mode) {
        case AbsentRefererMode::fail_closed:
            s.expected.final_verdicts = {{kGrantStep, CallbackOutcome::rejected_referer,
                                          RefererDecision::indeterminate_absent}};
            s.expected.victim_bound_subject = std::nullopt;
            break;
        case AbsentRefererMode::fail_open:
            s.expected.final_verdicts = {{kGrantStep, CallbackOutcome::accepted,
                                          RefererDecision::indeterminate_absent}};
            s.expected.victim_bound_subject = base.victim_username;
            break;
        case AbsentRefererMode::flag_only:
            s.expected.final_verdicts = {{kGrantStep, CallbackOutcome::accepted_flagged,
                                          RefererDecision::indeterminate_absent}};
            s.expected.victim_bound_subject = base.victim_username;
            break;
    }
    s.expected.attack_succeeded = false;
    return s;
}

inline Scenario make_s9(const WorldTemplate& base, std::uint64_t seed) {
    Scenario s;
    s.id = "S9";
    s.description = "forged code callback against the state check alone";
    WorldTemplate t = base;
    t.idps[0].auto_grant = false;
    s.world = make_world(t, seed, state_only(), per_idp_code_plans(t));
    s.script = [](World& w, ScenarioRecorder& rec) {
        Uri forged = steal_authorization_response(w, rec);
        rec.expect("stolen response carries the attacker's state",
                   forged.query_param("state").has_value());
        open_rp_home(w, w.victim(), "victim", rec);
        NavigationTrace t = victim_takes_lure(w, ActionKind::load_image, forged, kImgLureStep, rec);
        rec.expect("forged request answered with an error page",
                   t.final_document.kind == DocumentKind::error_page,
                   std::string(to_string(t.final_document.kind)));
    };
    s.expected.final_verdicts = {{kImgLureStep, CallbackOutcome::rejected_state, std::nullopt}};
    s.expected.victim_bound_subject = std::nullopt;
    s.expected.attack_succeeded = false;
    return s;
}

inline Scenario make_s10(const WorldTemplate& base, std::uint64_t seed) {
    Scenario s;
    s.id = "S10";
    s.description = "forged shared callback against a session with no pending sign-in";
    WorldTemplate t = base;
    t.idps[0].auto_grant = false;
    s.world = make_world(t, seed, guard_only(), shared_code_plans(t));
    s.script = [](World& w, ScenarioRecorder& rec) {
        Uri forged = steal_authorization_response(w, rec);
        open_rp_home(w, w.victim(), "victim", rec);
        NavigationTrace t = victim_takes_lure(w, ActionKind::click_link, forged, kSharedLureStep, rec);
        rec.expect("cold shared callback answered with an error page",
                   t.final_document.kind == DocumentKind::error_page,
                   std::string(to_string(t.final_document.kind)));
    };
    s.expected.final_verdicts = {
        {kSharedLureStep, CallbackOutcome::rejected_no_intention, std::nullopt}};
    s.expected.victim_bound_subject = std::nullopt;
    s.expected.attack_succeeded = false;
    return s;
}

} // namespace scenario_detail

inline std::vector<Scenario> builtin_catalog(const WorldTemplate& base = default_world_template(),
                                             std::uint64_t seed = 0) {
    using namespace scenario_detail;
    if (base.idps.empty()) throw HarnessError("the world template has no identity providers");
    std::vector<Scenario> catalog;
    catalog.push_back(make_s1(base, seed));
    catalog.push_back(make_s2(base, seed));
    catalog.push_back(make_s3(base, seed, true));
    catalog.push_back(make_s3(base, seed, false));
    catalog.push_back(make_s4(base, seed));
    catalog.push_back(make_s5(base, seed, true));
    catalog.push_back(make_s5(base, seed, false));
    catalog.push_back(make_s6(base, seed));
    catalog.push_back(make_s7(base, seed));
    catalog.push_back(make_s8(base, seed, AbsentRefererMode::fail_closed, "S8",
                              "plain-http RP loses the Referer; absent handling fail-closed"));
    catalog.push_back(make_s8(base, seed, AbsentRefererMode::fail_open, "S8b",
                              "plain-http RP loses the Referer; absent handling fail-open"));
    catalog.push_back(make_s8(base, seed, AbsentRefererMode::flag_only, "S8c",
                              "plain-http RP loses the Referer; absent handling flag-only"));
    catalog.push_back(make_s9(base, seed));
    catalog.push_back(make_s10(base, seed));
    return catalog;
}

inline const Scenario* find_scenario(const std::vector<Scenario>& catalog, std::string_view id) {
    for (const Scenario& s : catalog) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

} // namespace ssosim
