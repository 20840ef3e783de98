#pragma once

#include "ttlforge/backend/backend.hpp"
#include "ttlforge/util/text.hpp"

namespace ttlforge::backend {

/// One scripted behavior. All `system_contains` substrings must occur in
/// the system prompt and all `user_contains` substrings in the latest user
/// message for the rule to fire.
struct ScriptRule {
    std::vector<std::string> system_contains;
    std::vector<std::string> user_contains;
    std::string response;
};

/// Responses are templates: `{{system}}` and `{{user}}` expand to the system
/// prompt and latest user message, `{{tag:NAME}}` to the contents of the
/// first <NAME>...</NAME> span in the user message (else the system prompt).
struct ScriptedBackendSpec {
    std::vector<ScriptRule> rules;
    std::string default_response;

    static ScriptedBackendSpec from_json(const Json& j) {
        auto strings = [](const Json& v) {
            std::vector<std::string> out;
            if (v.is_string())
                out.push_back(v.get<std::string>());
            else if (v.is_array())
                for (const auto& s : v) out.push_back(s.get<std::string>());
            else if (!v.is_null())
                throw Error(ErrorKind::config, "scripted rule conditions must be strings or string arrays");
            return out;
        };
        ScriptedBackendSpec spec;
        for (const auto& r : j.value("rules", Json::array())) {
            ScriptRule rule;
            rule.system_contains = strings(r.value("system_contains", Json()));
            rule.user_contains = strings(r.value("user_contains", Json()));
            rule.response = r.at("response").get<std::string>();
            spec.rules.push_back(std::move(rule));
        }
        spec.default_response = j.value("default", std::string{});
        return spec;
    }

    [[nodiscard]] Json to_json() const {
        Json rules_json = Json::array();
        for (const auto& r : rules)
            rules_json.push_back(
                {{"system_contains", r.system_contains}, {"user_contains", r.user_contains}, {"response", r.response}});
        return Json{{"kind", "scripted"}, {"rules", rules_json}, {"default", default_response}};
    }
};

/// Deterministic rule-driven backend: first matching rule wins.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(ScriptedBackendSpec spec) : spec_(std::move(spec)) {}

    [[nodiscard]] const ScriptedBackendSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::string describe() const override { return "scripted"; }

    [[nodiscard]] std::string respond(std::string_view system, std::string_view user) const {
        for (const auto& rule : spec_.rules) {
            if (matches(rule, system, user)) return expand(rule.response, system, user);
        }
        return expand(spec_.default_response, system, user);
    }

private:
    Completion do_complete(const GenerationRequest& request) override {
        return Completion{respond(request.system_prompt(), request.latest_user_message()), false};
    }

    static bool matches(const ScriptRule& rule, std::string_view system, std::string_view user) {
        for (const auto& s : rule.system_contains)
            if (!text::contains(system, s)) return false;
        for (const auto& s : rule.user_contains)
            if (!text::contains(user, s)) return false;
        return true;
    }

    static std::string expand(const std::string& tmpl, std::string_view system, std::string_view user) {
        if (tmpl.find("{{") == std::string::npos) return tmpl;
        std::string out;
        std::size_t pos = 0;
        while (pos < tmpl.size()) {
            auto open = tmpl.find("{{", pos);
            auto close = open == std::string::npos ? std::string::npos : tmpl.find("}}", open + 2);
            if (close == std::string::npos) break;
            out.append(tmpl, pos, open - pos);
            std::string key = text::trim(std::string_view(tmpl).substr(open + 2, close - open - 2));
            if (key == "system") {
                out += system;
            } else if (key == "user") {
                out += user;
            } else if (key.rfind("tag:", 0) == 0) {
                const std::string tag = key.substr(4);
                auto found = text::between_tags(user, tag);
                if (!found) found = text::between_tags(system, tag);
                if (found) out += text::trim(*found);
            } else {
                out.append(tmpl, open, close + 2 - open);
            }
            pos = close + 2;
        }
        out.append(tmpl, pos, std::string::npos);
        return out;
    }

    ScriptedBackendSpec spec_;
};

}  // namespace ttlforge::backend
