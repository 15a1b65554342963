#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "ssosim/http.hpp"

// Referer-based CSRF protection for single sign-on callback endpoints.
// The rule: a request completing a login must come from a page on the relying
// party itself or on the identity provider it names. Anything else is a
// cross-site forgery and is discarded.

namespace ssosim {

// Which variant of the protocol a callback serves. Determines who may
// legitimately originate the request that reaches it.
enum class Flow { code, implicit, client_library };

inline std::string_view to_string(Flow f) {
    switch (f) {
        case Flow::code: return "code";
        case Flow::implicit: return "implicit";
        default: return "client_library";
    }
}

// What to do when the Referer header is missing or unreadable. Browsers on a
// plain-http page, and some privacy settings, send no Referer at all, so an
// absent header is genuinely ambiguous.
enum class AbsentRefererMode { fail_closed, fail_open, flag_only };

inline std::string_view to_string(AbsentRefererMode m) {
    switch (m) {
        case AbsentRefererMode::fail_closed: return "fail-closed";
        case AbsentRefererMode::fail_open: return "fail-open";
        default: return "flag-only";
    }
}

enum class RefererDecision { accept, reject_foreign, indeterminate_absent, indeterminate_malformed };

inline std::string_view to_string(RefererDecision d) {
    switch (d) {
        case RefererDecision::accept: return "accept";
        case RefererDecision::reject_foreign: return "reject-foreign";
        case RefererDecision::indeterminate_absent: return "indeterminate-absent";
        default: return "indeterminate-malformed";
    }
}

struct RefererPolicy {
    Origin idp_origin;
    Origin rp_origin;
    AbsentRefererMode absent_mode{AbsentRefererMode::fail_closed};
    // true: full origin comparison (scheme, host, port).
    // false: hosts only, the loosest reading of "the domain matches".
    bool compare_scheme{true};

    std::vector<Origin> expected() const {
        std::vector<Origin> out{idp_origin};
        if (!(rp_origin == idp_origin)) out.push_back(rp_origin);
        return out;
    }
};

inline bool origins_match(const Origin& a, const Origin& b, bool compare_scheme) {
    if (compare_scheme) return a == b;
    return a.host == b.host;
}

struct RefererVerdict {
    RefererDecision decision{RefererDecision::indeterminate_absent};
    std::optional<Origin> observed;   // parsed from the header when possible
    std::vector<Origin> expected;     // what the policy would have accepted

    bool is_accept() const { return decision == RefererDecision::accept; }
};

// Total over arbitrary header bytes: hostile input can only push the verdict
// toward reject or indeterminate, never crash the check.
inline RefererVerdict evaluate(const std::optional<std::string>& referer_header,
                               const RefererPolicy& policy) {
    RefererVerdict v;
    v.expected = policy.expected();
    if (!referer_header) {
        v.decision = RefererDecision::indeterminate_absent;
        return v;
    }
    Uri parsed;
    try {
        parsed = parse_uri(*referer_header);
    } catch (const UriParseError&) {
        v.decision = RefererDecision::indeterminate_malformed;
        return v;
    }
    v.observed = origin_of(parsed);
    for (const Origin& ok : v.expected) {
        if (origins_match(*v.observed, ok, policy.compare_scheme)) {
            v.decision = RefererDecision::accept;
            return v;
        }
    }
    v.decision = RefererDecision::reject_foreign;
    return v;
}

struct GuardOutcome {
    bool allowed{false};
    bool flagged{false};  // allowed despite an indeterminate verdict
};

inline GuardOutcome apply_absent_mode(const RefererVerdict& v, AbsentRefererMode mode) {
    switch (v.decision) {
        case RefererDecision::accept:
            return {true, false};
        case RefererDecision::reject_foreign:
            return {false, false};
        case RefererDecision::indeterminate_absent:
        case RefererDecision::indeterminate_malformed:
            switch (mode) {
                case AbsentRefererMode::fail_closed: return {false, false};
                case AbsentRefererMode::fail_open: return {true, false};
                default: return {true, true};
            }
    }
    return {false, false};
}

// Which origins a legitimate completion request can come from, per flow:
//   code           consent page on the IdP, or the RP's own pages (auto-grant)
//   implicit       same as code; the fragment hop does not change the source page
//   client_library the RP page itself posts the result, so only the RP
inline std::vector<Origin> expected_origins(Flow flow, const Origin& idp_origin,
                                            const Origin& rp_origin) {
    if (flow == Flow::client_library) return {rp_origin};
    std::vector<Origin> out{idp_origin};
    if (!(rp_origin == idp_origin)) out.push_back(rp_origin);
    return out;
}

// Constant-time comparison; the state value is a secret.
inline bool evaluate_state(const std::optional<std::string>& presented,
                           const std::optional<std::string>& pending) {
    if (!presented || !pending) return false;
    const std::string& a = *presented;
    const std::string& b = *pending;
    unsigned char diff = a.size() == b.size() ? 0 : 1;
    std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        unsigned char ca = i < a.size() ? static_cast<unsigned char>(a[i]) : 0;
        unsigned char cb = i < b.size() ? static_cast<unsigned char>(b[i]) : 0;
        diff = static_cast<unsigned char>(diff | (ca ^ cb));
    }
    return diff == 0;
}

} // namespace ssosim
