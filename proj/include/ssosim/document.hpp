#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssosim/http.hpp"

// Structured stand-in for a rendered HTML page: what kind of page it is and
// which user-triggerable actions it offers. Scripts drive browsers by picking
// actions off documents instead of scraping markup.

namespace ssosim {

enum class DocumentKind {
    plain,
    rp_page,
    idp_login_form,
    idp_consent_page,
    extractor_page,   // RP page whose script reads the fragment and posts it home
    attacker_page,
    error_page,
};

inline std::string_view to_string(DocumentKind k) {
    switch (k) {
        case DocumentKind::plain: return "plain";
        case DocumentKind::rp_page: return "rp_page";
        case DocumentKind::idp_login_form: return "idp_login_form";
        case DocumentKind::idp_consent_page: return "idp_consent_page";
        case DocumentKind::extractor_page: return "extractor_page";
        case DocumentKind::attacker_page: return "attacker_page";
        default: return "error_page";
    }
}

enum class ActionKind { click_link, submit_form, load_image, run_extractor, xhr };

inline std::string_view to_string(ActionKind k) {
    switch (k) {
        case ActionKind::click_link: return "click_link";
        case ActionKind::submit_form: return "submit_form";
        case ActionKind::load_image: return "load_image";
        case ActionKind::run_extractor: return "run_extractor";
        default: return "xhr";
    }
}

struct Action {
    ActionKind kind{ActionKind::click_link};
    Uri target;
    ParamList form_fields;               // submit_form and xhr payloads
    std::vector<Param> custom_headers;   // xhr only; navigations cannot set headers
    std::string label;
};

struct Document {
    Uri url;
    DocumentKind kind{DocumentKind::plain};
    std::vector<Action> actions;

    const Action* find_action(ActionKind k) const {
        for (const Action& a : actions) {
            if (a.kind == k) return &a;
        }
        return nullptr;
    }

    const Action* find_action(std::string_view label) const {
        for (const Action& a : actions) {
            if (a.label == label) return &a;
        }
        return nullptr;
    }
};

} // namespace ssosim
