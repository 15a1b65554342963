#include <gtest/gtest.h>

#include "ssosim/http.hpp"

using namespace ssosim;

TEST(UrlCodec, EncodesReservedBytes) {
    EXPECT_EQ(url_encode("abcXYZ019-._~"), "abcXYZ019-._~");
    EXPECT_EQ(url_encode("a b"), "a%20b");
    EXPECT_EQ(url_encode("https://rp.com/cb"), "https%3A%2F%2Frp.com%2Fcb");
    EXPECT_EQ(url_encode("#&=?"), "%23%26%3D%3F");
}

TEST(UrlCodec, DecodeRoundTrip) {
    const std::string samples[] = {"", "plain", "a b+c", "100%", "%zz", "x=y&z=#frag",
                                   "\x01\x7f bytes", "%41"};
    for (const std::string& s : samples) {
        EXPECT_EQ(url_decode(url_encode(s)), s) << s;
    }
}

TEST(UrlCodec, DecodeIsLenient) {
    EXPECT_EQ(url_decode("%41"), "A");
    EXPECT_EQ(url_decode("%4"), "%4");    // truncated escape kept literally
    EXPECT_EQ(url_decode("%"), "%");
    EXPECT_EQ(url_decode("%zz"), "%zz");  // bad hex kept literally
    EXPECT_EQ(url_decode("a+b"), "a b");
}

TEST(FormCodec, PreservesOrderAndDuplicates) {
    ParamList p{{"b", "2"}, {"a", "1"}, {"a", "3"}, {"empty", ""}};
    std::string encoded = encode_form(p);
    EXPECT_EQ(encoded, "b=2&a=1&a=3&empty=");
    EXPECT_EQ(parse_form(encoded), p);
    EXPECT_EQ(find_param(p, "a"), "1");  // first wins
    EXPECT_EQ(find_param(p, "missing"), std::nullopt);
}

TEST(FormCodec, ParsesBareNamesAndEmptyTokens) {
    ParamList p = parse_form("lone&&x=1");
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[0], Param("lone", ""));
    EXPECT_EQ(p[1], Param("x", "1"));
}

TEST(OriginFormat, OmitsDefaultPort) {
    EXPECT_EQ((Origin{Scheme::https, "rp.com", 443}).to_string(), "https://rp.com");
    EXPECT_EQ((Origin{Scheme::http, "rp.com", 80}).to_string(), "http://rp.com");
    EXPECT_EQ((Origin{Scheme::https, "rp.com", 8443}).to_string(), "https://rp.com:8443");
    EXPECT_EQ((Origin{Scheme::http, "rp.com", 443}).to_string(), "http://rp.com:443");
}

TEST(UriParse, FullRoundTrip) {
    Uri u = parse_uri("https://AIdP.com/authorize?client_id=rp&scope=a%20b#access_token=t");
    EXPECT_EQ(u.scheme, Scheme::https);
    EXPECT_EQ(u.host, "aidp.com");  // host is lowercased
    EXPECT_EQ(u.port, 443);
    EXPECT_EQ(u.path, "/authorize");
    EXPECT_EQ(u.query_param("client_id"), "rp");
    EXPECT_EQ(u.query_param("scope"), "a b");
    EXPECT_EQ(u.fragment, "access_token=t");
    EXPECT_EQ(u.serialize(), "https://aidp.com/authorize?client_id=rp&scope=a%20b#access_token=t");
}

TEST(UriParse, DefaultsAndExplicitPort) {
    EXPECT_EQ(parse_uri("http://x.com").path, "/");
    EXPECT_EQ(parse_uri("http://x.com").port, 80);
    EXPECT_EQ(parse_uri("https://x.com:8443/p").port, 8443);
    EXPECT_EQ(parse_uri("HTTPS://x.com/").scheme, Scheme::https);
    EXPECT_FALSE(parse_uri("https://x.com/p?q=1").fragment.has_value());
    EXPECT_EQ(parse_uri("https://x.com/p#").fragment, "");  // bare '#' kept as empty fragment
}

TEST(UriParse, RejectsMalformedInput) {
    auto component_of = [](const std::string& text) -> std::string {
        try {
            parse_uri(text);
        } catch (const UriParseError& e) {
            return e.component();
        }
        return "(parsed)";
    };
    EXPECT_EQ(component_of("no-scheme.com/path"), "scheme");
    EXPECT_EQ(component_of("ftp://x.com/"), "scheme");
    EXPECT_EQ(component_of("https:///path"), "host");
    EXPECT_EQ(component_of("https://aidp.com@attacker.com/"), "host");
    EXPECT_EQ(component_of("https://bad host/"), "host");
    EXPECT_EQ(component_of("https://x.com:/"), "port");
    EXPECT_EQ(component_of("https://x.com:0/"), "port");
    EXPECT_EQ(component_of("https://x.com:99999/"), "port");
    EXPECT_EQ(component_of("https://x.com:8z/"), "port");
}

TEST(UriHelpers, OriginAndPathBuilders) {
    Uri u = parse_uri("https://x.com:444/deep?q=1#f");
    EXPECT_EQ(origin_of(u), (Origin{Scheme::https, "x.com", 444}));
    EXPECT_FALSE(strip_fragment_for_request(u).fragment.has_value());
    EXPECT_EQ(origin_uri(origin_of(u)).serialize(), "https://x.com:444/");
    EXPECT_EQ(with_path(Origin{Scheme::https, "x.com", 443}, "/cb").serialize(),
              "https://x.com/cb");
}

TEST(CookieHeader, ParsesPairs) {
    ParamList p = parse_cookie_header("a=1; b=2;  c ; d=x=y");
    ASSERT_EQ(p.size(), 4u);
    EXPECT_EQ(p[0], Param("a", "1"));
    EXPECT_EQ(p[1], Param("b", "2"));
    EXPECT_EQ(p[2], Param("c", ""));
    EXPECT_EQ(p[3], Param("d", "x=y"));
}

TEST(Request, MakeStripsFragmentAndLeadsWithHost) {
    Uri target = parse_uri("https://rp.com/cb?code=abc#access_token=tok");
    HttpRequest r = HttpRequest::make(Method::GET, target);
    EXPECT_FALSE(r.uri.fragment.has_value());
    ASSERT_FALSE(r.headers.empty());
    EXPECT_EQ(r.headers.front().first, "Host");
    EXPECT_EQ(r.headers.front().second, "rp.com");
    EXPECT_EQ(r.render().find('#'), std::string::npos);

    HttpRequest odd = HttpRequest::make(Method::GET, parse_uri("https://rp.com:8443/"));
    EXPECT_EQ(odd.header("Host"), "rp.com:8443");
}

TEST(Request, ParamPrefersQueryOverBody) {
    HttpRequest r = HttpRequest::make(Method::POST, parse_uri("https://rp.com/cb?code=fromquery"));
    r.body = ParamList{{"code", "frombody"}, {"only", "body"}};
    EXPECT_EQ(r.param("code"), "fromquery");
    EXPECT_EQ(r.param("only"), "body");
    EXPECT_EQ(r.form_param("code"), "frombody");
    EXPECT_EQ(r.param("absent"), std::nullopt);
}

TEST(Request, HeaderLookupIsCaseInsensitiveAndSetReplaces) {
    HttpRequest r = HttpRequest::make(Method::GET, parse_uri("https://rp.com/"));
    r.set_header("Referer", "https://a.com/");
    EXPECT_EQ(r.header("referer"), "https://a.com/");
    r.set_header("referer", "https://b.com/");
    EXPECT_EQ(r.header("Referer"), "https://b.com/");
    int count = 0;
    for (const auto& [n, v] : r.headers) {
        if (detail::iequals(n, "Referer")) ++count;
    }
    EXPECT_EQ(count, 1);
}

TEST(Request, CookieAccessor) {
    HttpRequest r = HttpRequest::make(Method::GET, parse_uri("https://rp.com/"));
    r.set_header("Cookie", "Jsession=s1; other=x");
    EXPECT_EQ(r.cookie("Jsession"), "s1");
    EXPECT_EQ(r.cookie("missing"), std::nullopt);
}

TEST(Request, WireRendering) {
    HttpRequest r = HttpRequest::make(Method::POST, parse_uri("https://aidp.com/login"));
    r.set_header("Referer", "https://aidp.com/authorize");
    r.body = ParamList{{"username", "victim"}, {"password", "p w"}};
    EXPECT_EQ(r.render(),
              "POST /login\n"
              "Host: aidp.com\n"
              "Referer: https://aidp.com/authorize\n"
              "\n"
              "username=victim&password=p%20w\n");
}

TEST(Response, RedirectKeepsFragmentInLocation) {
    Uri target = parse_uri("https://rp.com/cb#access_token=tok&token_type=bearer");
    HttpResponse r = HttpResponse::redirect(target);
    EXPECT_EQ(r.status, 302);
    EXPECT_EQ(r.header("Location"), "https://rp.com/cb#access_token=tok&token_type=bearer");
    ASSERT_TRUE(r.location().has_value());
    EXPECT_EQ(r.location()->fragment, "access_token=tok&token_type=bearer");
}

TEST(Response, BuildersAndRendering) {
    HttpResponse ok = HttpResponse::html(200, "<html></html>");
    EXPECT_EQ(ok.header("Content-Type"), "text/html");
    EXPECT_EQ(ok.render(), "HTTP/1.1 200 OK\nContent-Type: text/html\n\n<html></html>\n");

    HttpResponse j = HttpResponse::json(401, "{}");
    EXPECT_EQ(j.header("Content-Type"), "application/json");
    EXPECT_EQ(j.render(), "HTTP/1.1 401 Unauthorized\nContent-Type: application/json\n\n{}\n");

    HttpResponse plain;
    plain.add_header("Set-Cookie", "a=1");
    plain.add_header("Set-Cookie", "b=2");
    EXPECT_EQ(plain.set_cookies(), (std::vector<std::string>{"a=1", "b=2"}));
    EXPECT_EQ(plain.location(), std::nullopt);
}

TEST(Response, StatusReasons) {
    EXPECT_EQ(status_reason(200), "OK");
    EXPECT_EQ(status_reason(302), "Found");
    EXPECT_EQ(status_reason(400), "Bad Request");
    EXPECT_EQ(status_reason(502), "Bad Gateway");
    EXPECT_EQ(status_reason(599), "Unknown");
}
