#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "ssosim/browser.hpp"
#include "ssosim/idp.hpp"
#include "ssosim/rng.hpp"
#include "ssosim/router.hpp"

using namespace ssosim;

namespace {

IdPConfig base_config(bool auto_grant = false) {
    IdPConfig cfg;
    cfg.id = "aidp";
    cfg.display_name = "AIdP";
    cfg.issuer = Origin{Scheme::https, "aidp.com", 443};
    cfg.auto_grant = auto_grant;
    cfg.users = {
        {"victim", {"victim-pass", {{"email", "victim@example.com"}}}},
        {"attacker", {"attacker-pass", {}}},
    };
    return cfg;
}

ClientRegistration rp_client() {
    ClientRegistration reg;
    reg.client_id = "rp-1";
    reg.client_secret = "sekrit";
    reg.redirect_uri = parse_uri("https://rp.com/cb");
    return reg;
}

Uri authorize_uri(const IdentityProvider& idp, const std::string& response_type,
                  std::optional<std::string> state = std::nullopt) {
    Uri u = idp.authorize_endpoint();
    u.query = {{"client_id", "rp-1"},
               {"response_type", response_type},
               {"redirect_uri", "https://rp.com/cb"},
               {"scope", "profile"}};
    if (state) u.query.push_back({"state", *state});
    return u;
}

// Drives login + consent up to the redirect into rp.com, which stays
// unmounted; the aborted trace exposes the authorization response.
NavigationTrace drive_authorize(Browser& browser, RequestRouter& router, const Uri& authorize,
                                const std::string& username, const std::string& password) {
    NavigationOptions stop;
    stop.abort_before_host = "rp.com";
    NavigationTrace t = browser.visit(authorize, router, stop);
    if (t.final_document.kind == DocumentKind::idp_login_form) {
        Action login = *t.final_document.find_action("login");
        login.form_fields = {{"username", username}, {"password", password}};
        t = browser.navigate(t.final_document, login, router, stop);
    }
    if (t.final_document.kind == DocumentKind::idp_consent_page) {
        Action grant = *t.final_document.find_action("grant");
        t = browser.navigate(t.final_document, grant, router, stop);
    }
    return t;
}

HttpRequest token_request(const IdentityProvider& idp, ParamList body) {
    HttpRequest r = HttpRequest::make(Method::POST, idp.token_endpoint());
    r.body = std::move(body);
    return r;
}

ParamList redemption_body(const std::string& code) {
    return {{"grant_type", "authorization_code"},
            {"client_id", "rp-1"},
            {"client_secret", "sekrit"},
            {"code", code},
            {"redirect_uri", "https://rp.com/cb"}};
}

} // namespace

TEST(Registration, AssignsRefusesAndRecalls) {
    IdentityProvider idp(base_config(), TokenGenerator(42));

    ClientRegistration anonymous;
    anonymous.redirect_uri = parse_uri("https://rp.com/cb");
    std::string assigned = idp.register_client(anonymous);
    EXPECT_EQ(assigned.rfind("client-", 0), 0u);  // IdP-assigned id
    EXPECT_TRUE(idp.has_client(assigned));

    EXPECT_EQ(idp.register_client(rp_client()), "rp-1");
    EXPECT_THROW(idp.register_client(rp_client()), RegistrationError);  // duplicate

    ClientRegistration fragmented = rp_client();
    fragmented.client_id = "rp-frag";
    fragmented.redirect_uri = parse_uri("https://rp.com/cb#frag");
    EXPECT_THROW(idp.register_client(fragmented), RegistrationError);

    auto recalled = idp.registration("rp-1");
    ASSERT_TRUE(recalled.has_value());
    EXPECT_EQ(recalled->redirect_uri.serialize(), "https://rp.com/cb");
}

TEST(Registration, HttpsRequirementRefusesPlainHttp) {
    IdPConfig cfg = base_config();
    cfg.require_https_redirect_uri = true;
    IdentityProvider strict(cfg, TokenGenerator(1));

    ClientRegistration plain = rp_client();
    plain.redirect_uri = parse_uri("http://rp.com/cb");
    EXPECT_THROW(strict.register_client(plain), RegistrationError);
    EXPECT_EQ(strict.register_client(rp_client()), "rp-1");  // https is fine

    IdentityProvider lax(base_config(), TokenGenerator(2));
    ClientRegistration plain2 = rp_client();
    plain2.redirect_uri = parse_uri("http://rp.com/cb");
    EXPECT_EQ(lax.register_client(plain2), "rp-1");
}

TEST(Authorize, LoginThenConsentThenCodeRedirect) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    NavigationTrace t = drive_authorize(browser, router,
                                        authorize_uri(idp, "code", "st-1"),
                                        "victim", "victim-pass");
    ASSERT_TRUE(t.aborted);
    Uri callback = *t.aborted_location();
    EXPECT_EQ(callback.host, "rp.com");
    EXPECT_EQ(callback.path, "/cb");
    auto code = callback.query_param("code");
    ASSERT_TRUE(code.has_value());
    EXPECT_EQ(code->rfind("c", 0), 0u);
    EXPECT_EQ(callback.query_param("state"), "st-1");
    EXPECT_FALSE(callback.fragment.has_value());

    auto grants = idp.grants();
    ASSERT_EQ(grants.size(), 1u);
    EXPECT_EQ(grants[0].value, *code);
    EXPECT_EQ(grants[0].subject, "victim");
    EXPECT_EQ(grants[0].client_id, "rp-1");
    EXPECT_TRUE(grants[0].via_consent);
    EXPECT_FALSE(grants[0].consumed);
}

TEST(Authorize, WrongPasswordReturnsFormRightPasswordResumes) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    NavigationTrace t = browser.visit(authorize_uri(idp, "code"), router);
    ASSERT_EQ(t.final_document.kind, DocumentKind::idp_login_form);

    Action bad = *t.final_document.find_action("login");
    bad.form_fields = {{"username", "victim"}, {"password", "wrong"}};
    NavigationTrace again = browser.navigate(t.final_document, bad, router);
    EXPECT_EQ(again.final_document.kind, DocumentKind::idp_login_form);

    Action good = *again.final_document.find_action("login");
    good.form_fields = {{"username", "victim"}, {"password", "victim-pass"}};
    NavigationOptions stop;
    stop.abort_before_host = "rp.com";
    NavigationTrace resumed = browser.navigate(again.final_document, good, router, stop);
    // The saved authorization request resumes and reaches the consent page.
    EXPECT_EQ(resumed.final_document.kind, DocumentKind::idp_consent_page);

    Action unknown = *again.final_document.find_action("login");
    unknown.form_fields = {{"username", "nobody"}, {"password", "x"}};
    NavigationTrace rejected = browser.navigate(again.final_document, unknown, router);
    EXPECT_EQ(rejected.final_document.kind, DocumentKind::error_page);
    EXPECT_EQ(rejected.last().response.status, 401);
}

TEST(Authorize, DirectLoginWithoutAuthorizeGrantsNothing) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    NavigationTrace t = browser.visit(idp.login_endpoint(), router);
    ASSERT_EQ(t.final_document.kind, DocumentKind::idp_login_form);
    Action login = *t.final_document.find_action("login");
    login.form_fields = {{"username", "victim"}, {"password", "victim-pass"}};
    NavigationTrace done = browser.navigate(t.final_document, login, router);
    EXPECT_EQ(done.final_document.kind, DocumentKind::plain);
    EXPECT_TRUE(idp.grants().empty());
}

TEST(Authorize, AutoGrantSkipsConsentForAuthenticatedUser) {
    RequestRouter router;
    IdentityProvider idp(base_config(/*auto_grant=*/true), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    // Authenticate first, then hit authorize: no consent page appears.
    NavigationTrace form = browser.visit(idp.login_endpoint(), router);
    Action login = *form.final_document.find_action("login");
    login.form_fields = {{"username", "victim"}, {"password", "victim-pass"}};
    browser.navigate(form.final_document, login, router);

    NavigationOptions stop;
    stop.abort_before_host = "rp.com";
    NavigationTrace t = browser.visit(authorize_uri(idp, "code"), router, stop);
    ASSERT_TRUE(t.aborted);
    ASSERT_EQ(t.exchanges.size(), 1u);  // one request: straight to the redirect
    EXPECT_TRUE(t.aborted_location()->query_param("code").has_value());
    ASSERT_EQ(idp.grants().size(), 1u);
    EXPECT_FALSE(idp.grants()[0].via_consent);
}

TEST(Authorize, ImplicitGrantDeliversTokenInFragment) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    NavigationTrace t = drive_authorize(browser, router,
                                        authorize_uri(idp, "token", "st-2"),
                                        "victim", "victim-pass");
    ASSERT_TRUE(t.aborted);
    Uri callback = *t.aborted_location();
    EXPECT_FALSE(callback.query_param("access_token").has_value());
    ASSERT_TRUE(callback.fragment.has_value());
    ParamList fragment = parse_form(*callback.fragment);
    auto token = find_param(fragment, "access_token");
    ASSERT_TRUE(token.has_value());
    EXPECT_EQ(find_param(fragment, "token_type"), "bearer");
    EXPECT_EQ(find_param(fragment, "state"), "st-2");

    // The token works immediately; nothing was redeemed at the token endpoint.
    EXPECT_EQ(idp.token_subject(*token), "victim");
    EXPECT_EQ(idp.redemption_count(*token), 0);
    ASSERT_EQ(idp.grants().size(), 1u);
    EXPECT_EQ(idp.grants()[0].kind, GrantKind::access_token);
}

TEST(Authorize, TerminalErrorsNeverRedirect) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    Uri unknown_client = authorize_uri(idp, "code");
    unknown_client.query[0].second = "who-is-this";
    NavigationTrace t1 = browser.visit(unknown_client, router);
    EXPECT_EQ(t1.last().response.status, 400);
    EXPECT_FALSE(t1.last().response.header("Location").has_value());
    EXPECT_EQ(t1.final_document.kind, DocumentKind::error_page);

    Uri bad_redirect = authorize_uri(idp, "code");
    bad_redirect.query[2].second = "https://attacker.com/cb";
    NavigationTrace t2 = browser.visit(bad_redirect, router);
    EXPECT_EQ(t2.last().response.status, 400);
    EXPECT_FALSE(t2.last().response.header("Location").has_value());

    Uri missing_redirect = idp.authorize_endpoint();
    missing_redirect.query = {{"client_id", "rp-1"}, {"response_type", "code"}};
    EXPECT_EQ(browser.visit(missing_redirect, router).last().response.status, 400);
}

TEST(Authorize, UnsupportedResponseTypeRedirectsWithErrorAndState) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    NavigationOptions stop;
    stop.abort_before_host = "rp.com";
    NavigationTrace t = browser.visit(authorize_uri(idp, "id_token", "st-3"), router, stop);
    ASSERT_TRUE(t.aborted);
    Uri callback = *t.aborted_location();
    EXPECT_EQ(callback.query_param("error"), "unsupported_response_type");
    EXPECT_EQ(callback.query_param("state"), "st-3");
    EXPECT_FALSE(callback.query_param("code").has_value());
    EXPECT_TRUE(idp.grants().empty());
}

TEST(TokenEndpoint, RedeemsOnceAndBindsSubject) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    NavigationTrace t = drive_authorize(browser, router, authorize_uri(idp, "code"),
                                        "victim", "victim-pass");
    std::string code = *t.aborted_location()->query_param("code");

    ServerReply reply = idp.handle(token_request(idp, redemption_body(code)));
    ASSERT_EQ(reply.response.status, 200);
    nlohmann::json body = nlohmann::json::parse(reply.response.body);
    EXPECT_EQ(body.at("token_type"), "bearer");
    EXPECT_EQ(body.at("expires_in"), 3600);
    std::string token = body.at("access_token");
    EXPECT_EQ(idp.token_subject(token), "victim");
    EXPECT_EQ(idp.token_source_grant(token), code);
    EXPECT_EQ(idp.redemption_count(code), 1);

    // Single use: the second redemption fails and mints nothing.
    ServerReply replay = idp.handle(token_request(idp, redemption_body(code)));
    EXPECT_EQ(replay.response.status, 400);
    EXPECT_EQ(nlohmann::json::parse(replay.response.body).at("error"), "invalid_grant");
    EXPECT_EQ(idp.redemption_count(code), 1);
    EXPECT_EQ(idp.issued_tokens().size(), 1u);
}

TEST(TokenEndpoint, RejectsBadClientsCodesAndRedirects) {
    RequestRouter router;
    IdPConfig cfg = base_config();
    IdentityProvider idp(cfg, TokenGenerator(7));
    idp.register_client(rp_client());
    ClientRegistration other;
    other.client_id = "rp-2";
    other.client_secret = "other-secret";
    other.redirect_uri = parse_uri("https://other.com/cb");
    idp.register_client(other);
    idp.mount(router);

    Browser browser;
    NavigationTrace t = drive_authorize(browser, router, authorize_uri(idp, "code"),
                                        "victim", "victim-pass");
    std::string code = *t.aborted_location()->query_param("code");

    auto expect_error = [&](ParamList body, int status, const std::string& error) {
        ServerReply r = idp.handle(token_request(idp, std::move(body)));
        EXPECT_EQ(r.response.status, status);
        EXPECT_EQ(nlohmann::json::parse(r.response.body).at("error"), error);
    };

    ParamList wrong_secret = redemption_body(code);
    wrong_secret[2].second = "guess";
    expect_error(wrong_secret, 401, "invalid_client");

    ParamList unknown_client = redemption_body(code);
    unknown_client[1].second = "rp-404";
    expect_error(unknown_client, 401, "invalid_client");

    // rp-2 presents a code issued to rp-1: cross-client theft.
    ParamList cross = redemption_body(code);
    cross[1].second = "rp-2";
    cross[2].second = "other-secret";
    expect_error(cross, 400, "invalid_grant");

    ParamList wrong_redirect = redemption_body(code);
    wrong_redirect[4].second = "https://rp.com/other";
    expect_error(wrong_redirect, 400, "invalid_grant");

    ParamList unparseable_redirect = redemption_body(code);
    unparseable_redirect[4].second = "not a url";
    expect_error(unparseable_redirect, 400, "invalid_grant");

    ParamList bogus_code = redemption_body("c0000");
    expect_error(bogus_code, 400, "invalid_grant");

    ParamList bad_type = redemption_body(code);
    bad_type[0].second = "password";
    expect_error(bad_type, 400, "unsupported_grant_type");

    HttpRequest get = HttpRequest::make(Method::GET, idp.token_endpoint());
    EXPECT_EQ(idp.handle(get).response.status, 400);

    // All of the above left the code intact; the honest redemption still works.
    EXPECT_EQ(idp.redemption_count(code), 0);
    EXPECT_EQ(idp.handle(token_request(idp, redemption_body(code))).response.status, 200);
}

TEST(TokenEndpoint, ImplicitGrantValueCannotBeRedeemed) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    NavigationTrace t = drive_authorize(browser, router, authorize_uri(idp, "token"),
                                        "victim", "victim-pass");
    ParamList fragment = parse_form(*t.aborted_location()->fragment);
    std::string token_value = *find_param(fragment, "access_token");

    ServerReply r = idp.handle(token_request(idp, redemption_body(token_value)));
    EXPECT_EQ(r.response.status, 400);
    EXPECT_EQ(nlohmann::json::parse(r.response.body).at("error"), "invalid_grant");
}

TEST(TokenEndpoint, ExpiredCodeIsRefused) {
    RequestRouter router;
    IdPConfig cfg = base_config();
    cfg.code_lifetime_ticks = 2;
    IdentityProvider idp(cfg, TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    NavigationTrace t = drive_authorize(browser, router, authorize_uri(idp, "code"),
                                        "victim", "victim-pass");
    std::string code = *t.aborted_location()->query_param("code");

    // Burn logical time: every handled request ticks the clock once.
    for (int i = 0; i < 3; ++i) {
        idp.handle(HttpRequest::make(Method::GET, idp.endpoint("/nothing-here")));
    }
    ServerReply r = idp.handle(token_request(idp, redemption_body(code)));
    EXPECT_EQ(r.response.status, 400);
    EXPECT_EQ(idp.redemption_count(code), 0);
}

TEST(Userinfo, ReturnsSubjectAndAttributesForLiveTokens) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    Browser browser;
    NavigationTrace t = drive_authorize(browser, router, authorize_uri(idp, "code"),
                                        "victim", "victim-pass");
    std::string code = *t.aborted_location()->query_param("code");
    nlohmann::json minted =
        nlohmann::json::parse(idp.handle(token_request(idp, redemption_body(code))).response.body);
    std::string token = minted.at("access_token");

    Uri query = idp.userinfo_endpoint();
    query.query = {{"access_token", token}};
    ServerReply byQuery = idp.handle(HttpRequest::make(Method::GET, query));
    ASSERT_EQ(byQuery.response.status, 200);
    nlohmann::json info = nlohmann::json::parse(byQuery.response.body);
    EXPECT_EQ(info.at("sub"), "victim");
    EXPECT_EQ(info.at("email"), "victim@example.com");

    HttpRequest byBody = HttpRequest::make(Method::POST, idp.userinfo_endpoint());
    byBody.body = ParamList{{"access_token", token}};
    EXPECT_EQ(idp.handle(byBody).response.status, 200);

    Uri bad = idp.userinfo_endpoint();
    bad.query = {{"access_token", "t-forged"}};
    ServerReply rejected = idp.handle(HttpRequest::make(Method::GET, bad));
    EXPECT_EQ(rejected.response.status, 401);
    EXPECT_EQ(nlohmann::json::parse(rejected.response.body).at("error"), "invalid_token");
}

TEST(HostedPages, ServeUserContentAndUnknownPathsAre404) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.mount(router);

    Document comment{parse_uri("https://aidp.com/posts/1"), DocumentKind::plain, {}};
    idp.host_page("/posts/1", comment, "<html>a post</html>");

    Browser browser;
    NavigationTrace hosted = browser.visit(parse_uri("https://aidp.com/posts/1"), router);
    EXPECT_EQ(hosted.last().response.status, 200);
    EXPECT_EQ(hosted.last().response.body, "<html>a post</html>");

    NavigationTrace missing = browser.visit(parse_uri("https://aidp.com/nope"), router);
    EXPECT_EQ(missing.last().response.status, 404);
    EXPECT_EQ(missing.final_document.kind, DocumentKind::error_page);
}

TEST(Sessions, CookielessRequestsGetFreshSessions) {
    RequestRouter router;
    IdentityProvider idp(base_config(), TokenGenerator(7));
    idp.register_client(rp_client());
    idp.mount(router);

    // Two browsers each get their own sid cookie and separate login state.
    Browser first, second;
    NavigationTrace t1 = first.visit(authorize_uri(idp, "code"), router);
    NavigationTrace t2 = second.visit(authorize_uri(idp, "code"), router);
    auto sid1 = first.jar().get("aidp.com", "sid");
    auto sid2 = second.jar().get("aidp.com", "sid");
    ASSERT_TRUE(sid1.has_value());
    ASSERT_TRUE(sid2.has_value());
    EXPECT_NE(*sid1, *sid2);

    Action login = *t1.final_document.find_action("login");
    login.form_fields = {{"username", "victim"}, {"password", "victim-pass"}};
    NavigationOptions stop;
    stop.abort_before_host = "rp.com";
    first.navigate(t1.final_document, login, router, stop);

    // The second browser is still unauthenticated: authorize shows the form.
    NavigationTrace again = second.visit(authorize_uri(idp, "code"), router);
    EXPECT_EQ(again.final_document.kind, DocumentKind::idp_login_form);
}
