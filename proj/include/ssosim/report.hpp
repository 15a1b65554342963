#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssosim/csrf_guard.hpp"
#include "ssosim/rp.hpp"

// Scenario reports: what ran, which verdicts the RP recorded, which
// assertions held. Serializable as JSON for machines and as text for humans.

namespace ssosim {

struct ExpectedVerdict {
    std::string step;  // description of the step the verdict must occur in
    CallbackOutcome outcome{CallbackOutcome::accepted};
    std::optional<RefererDecision> decision;  // checked when the guard ran
};

struct ExpectedOutcome {
    std::vector<ExpectedVerdict> final_verdicts;
    std::optional<std::string> victim_bound_subject;
    bool attack_succeeded{false};
};

struct StepRecord {
    int index{0};
    std::string actor;
    std::string description;
    std::vector<HttpExchange> exchanges;
    std::string final_document_kind;
    bool aborted{false};
};

struct AssertionResult {
    std::string name;
    bool passed{false};
    std::string detail;
};

struct VerdictRecord {
    std::string step;  // description of the step during which the audit fired
    CallbackAudit audit;
};

inline nlohmann::json to_json(const Origin& o) { return o.to_string(); }

inline nlohmann::json to_json(const RefererVerdict& v) {
    nlohmann::json expected = nlohmann::json::array();
    for (const Origin& o : v.expected) expected.push_back(o.to_string());
    return nlohmann::json{
        {"decision", std::string(to_string(v.decision))},
        {"observed", v.observed ? nlohmann::json(v.observed->to_string()) : nlohmann::json()},
        {"expected", std::move(expected)},
    };
}

inline nlohmann::json to_json(const CallbackAudit& a) {
    return nlohmann::json{
        {"seq", a.seq},
        {"endpoint", a.endpoint},
        {"idp", a.idp_id},
        {"outcome", std::string(to_string(a.outcome))},
        {"referer", a.referer ? to_json(*a.referer) : nlohmann::json()},
        {"state_ok", a.state_ok ? nlohmann::json(*a.state_ok) : nlohmann::json()},
        {"detail", a.detail},
    };
}

inline nlohmann::json to_json(const DefenceConfig& d) {
    return nlohmann::json{
        {"referer_guard", d.referer_guard},
        {"state_check", d.state_check},
        {"custom_header_check", d.custom_header_check},
        {"absent_referer_mode", std::string(to_string(d.absent_referer_mode))},
    };
}

struct ScenarioReport {
    std::string scenario_id;
    std::string description;
    std::uint64_t seed{0};
    DefenceConfig defences;
    bool passed{false};
    bool attack_succeeded{false};
    std::optional<std::string> victim_bound_subject;
    std::vector<VerdictRecord> verdicts;
    std::vector<AssertionResult> assertions;
    std::vector<StepRecord> steps;
    std::string listings;

    nlohmann::json to_json() const {
        nlohmann::json verdicts_json = nlohmann::json::array();
        for (const VerdictRecord& v : verdicts) {
            nlohmann::json j = ssosim::to_json(v.audit);
            j["step"] = v.step;
            verdicts_json.push_back(std::move(j));
        }
        nlohmann::json assertions_json = nlohmann::json::array();
        for (const AssertionResult& a : assertions) {
            assertions_json.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
        }
        nlohmann::json steps_json = nlohmann::json::array();
        for (const StepRecord& s : steps) {
            steps_json.push_back({{"index", s.index},
                                  {"actor", s.actor},
                                  {"description", s.description},
                                  {"exchanges", s.exchanges.size()},
                                  {"final_document", s.final_document_kind},
                                  {"aborted", s.aborted}});
        }
        return nlohmann::json{
            {"scenario", scenario_id},
            {"description", description},
            {"seed", seed},
            {"defences", ssosim::to_json(defences)},
            {"passed", passed},
            {"attack_succeeded", attack_succeeded},
            {"victim_bound_subject",
             victim_bound_subject ? nlohmann::json(*victim_bound_subject) : nlohmann::json()},
            {"verdicts", std::move(verdicts_json)},
            {"assertions", std::move(assertions_json)},
            {"steps", std::move(steps_json)},
            {"listings", listings},
        };
    }

    std::string to_text() const {
        std::string out = "== " + scenario_id + ": " + description + "\n";
        out += "   seed " + std::to_string(seed) + "; defences:";
        out += defences.referer_guard ? " referer-guard" : "";
        out += defences.state_check ? " state-check" : "";
        out += defences.custom_header_check ? " custom-header" : "";
        if (!defences.referer_guard && !defences.state_check && !defences.custom_header_check) {
            out += " (none)";
        }
        out += "; absent-referer ";
        out += to_string(defences.absent_referer_mode);
        out += "\n";
        out += "   attack succeeded: ";
        out += attack_succeeded ? "yes" : "no";
        out += "; victim bound to: ";
        out += victim_bound_subject ? *victim_bound_subject : "(nobody)";
        out += "\n   verdicts:\n";
        if (verdicts.empty()) out += "     (none)\n";
        for (const VerdictRecord& v : verdicts) {
            out += "     - " + std::string(to_string(v.audit.outcome)) + " at " + v.audit.endpoint;
            if (!v.audit.idp_id.empty()) out += " idp=" + v.audit.idp_id;
            if (v.audit.referer) {
                out += " referer=" + std::string(to_string(v.audit.referer->decision));
                if (v.audit.referer->observed) {
                    out += " observed=" + v.audit.referer->observed->to_string();
                }
            }
            if (v.audit.state_ok) out += std::string(" state=") + (*v.audit.state_ok ? "ok" : "bad");
            out += " during \"" + v.step + "\"\n";
        }
        out += "   assertions:\n";
        for (const AssertionResult& a : assertions) {
            out += std::string("     ") + (a.passed ? "pass " : "FAIL ") + a.name;
            if (!a.detail.empty()) out += " (" + a.detail + ")";
            out += "\n";
        }
        out += std::string("   result: ") + (passed ? "PASS" : "FAIL") + "\n";
        return out;
    }
};

} // namespace ssosim
