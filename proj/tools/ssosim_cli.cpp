// Command-line front end: run scenarios from the built-in catalog against a
// deterministic world and report the verdicts.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ssosim/ssosim.hpp"

namespace {

int fail_usage(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return 2;
}

ssosim::WorldTemplate load_template(const std::string& path) {
    return ssosim::load_world_template_file(path);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ssosim::HarnessError("cannot write " + path.string());
    out << content;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic single-sign-on sandbox: scripted OAuth flows, forged-callback "
                 "attacks, and the Referer-based callback guard"};
    app.require_subcommand(1);

    std::string world_file;
    std::uint64_t seed = 0;

    CLI::App* list = app.add_subcommand("list", "List the scenario catalog");
    bool list_json = false;
    list->add_flag("--json", list_json, "Emit the catalog as JSON");
    list->add_option("--world", world_file, "World template JSON file");

    CLI::App* run = app.add_subcommand("run", "Run scenarios and report verdicts");
    std::vector<std::string> ids;
    bool run_all = false;
    std::string format = "text";
    std::string out_dir;
    bool guard_on = true;
    bool state_on = false;
    bool header_on = false;
    std::string absent_mode;
    run->add_option("-s,--scenario", ids, "Scenario id (repeatable)");
    run->add_flag("-a,--all", run_all, "Run every scenario in the catalog");
    run->add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"text", "json"}));
    run->add_option("--seed", seed, "Deterministic seed for all generated tokens");
    run->add_option("--world", world_file, "World template JSON file");
    run->add_option("--out", out_dir, "Directory for per-scenario report and listing files");
    auto* guard_flag = run->add_flag("--referer-guard,!--no-referer-guard", guard_on,
                                     "Force the Referer guard on or off");
    auto* state_flag = run->add_flag("--state,!--no-state", state_on,
                                     "Force the state-parameter check on or off");
    auto* header_flag = run->add_flag("--custom-header,!--no-custom-header", header_on,
                                      "Force the X-Requested-With check on or off");
    run->add_option("--absent-mode", absent_mode,
                    "How the guard treats a missing Referer")
        ->check(CLI::IsMember({"fail-closed", "fail-open", "flag-only"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ssosim::WorldTemplate base =
            world_file.empty() ? ssosim::default_world_template() : load_template(world_file);
        std::vector<ssosim::Scenario> catalog = ssosim::builtin_catalog(base, seed);

        if (list->parsed()) {
            if (list_json) {
                nlohmann::json doc = nlohmann::json::array();
                for (const ssosim::Scenario& s : catalog) {
                    doc.push_back({{"id", s.id}, {"description", s.description}});
                }
                std::cout << doc.dump(2) << "\n";
            } else {
                for (const ssosim::Scenario& s : catalog) {
                    std::cout << s.id << "\t" << s.description << "\n";
                }
            }
            return 0;
        }

        ssosim::DefenceOverrides overrides;
        if (guard_flag->count() > 0) overrides.referer_guard = guard_on;
        if (state_flag->count() > 0) overrides.state_check = state_on;
        if (header_flag->count() > 0) overrides.custom_header_check = header_on;
        if (absent_mode == "fail-closed") overrides.absent_mode = ssosim::AbsentRefererMode::fail_closed;
        if (absent_mode == "fail-open") overrides.absent_mode = ssosim::AbsentRefererMode::fail_open;
        if (absent_mode == "flag-only") overrides.absent_mode = ssosim::AbsentRefererMode::flag_only;

        std::vector<ssosim::Scenario*> selected;
        if (run_all || ids.empty()) {
            for (ssosim::Scenario& s : catalog) selected.push_back(&s);
        } else {
            for (const std::string& id : ids) {
                const ssosim::Scenario* found = ssosim::find_scenario(catalog, id);
                if (!found) {
                    std::cerr << "error: unknown scenario \"" << id << "\"; available:\n";
                    for (const ssosim::Scenario& s : catalog) {
                        std::cerr << "  " << s.id << "\t" << s.description << "\n";
                    }
                    return 2;
                }
                selected.push_back(const_cast<ssosim::Scenario*>(found));
            }
        }

        std::vector<ssosim::ScenarioReport> reports;
        for (ssosim::Scenario* s : selected) {
            ssosim::apply_overrides(*s, overrides);
            reports.push_back(ssosim::run_scenario(*s));
        }

        if (!out_dir.empty()) {
            std::filesystem::path dir(out_dir);
            std::filesystem::create_directories(dir);
            for (const ssosim::ScenarioReport& report : reports) {
                write_file(dir / (report.scenario_id + ".report.json"),
                           report.to_json().dump(2) + "\n");
                write_file(dir / (report.scenario_id + ".report.txt"), report.to_text());
                write_file(dir / (report.scenario_id + ".listings.txt"), report.listings);
            }
        }

        std::size_t passed = 0;
        for (const ssosim::ScenarioReport& report : reports) {
            if (report.passed) ++passed;
        }

        if (format == "json") {
            nlohmann::json overrides_doc = nlohmann::json::object();
            if (overrides.referer_guard) overrides_doc["referer_guard"] = *overrides.referer_guard;
            if (overrides.state_check) overrides_doc["state_check"] = *overrides.state_check;
            if (overrides.custom_header_check) {
                overrides_doc["custom_header_check"] = *overrides.custom_header_check;
            }
            if (overrides.absent_mode) {
                overrides_doc["absent_referer_mode"] = ssosim::to_string(*overrides.absent_mode);
            }
            nlohmann::json doc;
            doc["seed"] = seed;
            doc["overrides"] = overrides_doc;
            doc["reports"] = nlohmann::json::array();
            for (const ssosim::ScenarioReport& report : reports) {
                doc["reports"].push_back(report.to_json());
            }
            std::cout << doc.dump(2) << "\n";
        } else {
            for (const ssosim::ScenarioReport& report : reports) {
                std::cout << report.to_text() << "\n";
            }
            std::cout << passed << "/" << reports.size() << " scenarios matched their expected "
                      << "verdicts\n";
        }
        return passed == reports.size() ? 0 : 1;
    } catch (const std::exception& e) {
        return fail_usage(e.what());
    }
}
