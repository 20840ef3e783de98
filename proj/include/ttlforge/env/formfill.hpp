#pragma once

#include "ttlforge/env/environment.hpp"
#include "ttlforge/util/text.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace ttlforge::env {

struct FormField {
    std::string name;
    std::string value;  // required value
};

/// A form with required field values and distractor fields. Submitting
/// succeeds iff every required field holds its required value and every
/// distractor is left empty.
struct FormFillConfig {
    std::string title = "Form";
    std::vector<FormField> fields;
    std::vector<std::string> distractors;

    static FormFillConfig from_json(const Json& j) {
        try {
            FormFillConfig c;
            c.title = j.value("title", c.title);
            for (const auto& f : j.at("fields"))
                c.fields.push_back({text::normalize_command(f.at("name").get<std::string>()),
                                    text::trim(f.at("value").get<std::string>())});
            for (const auto& d : j.value("distractors", Json::array()))
                c.distractors.push_back(text::normalize_command(d.get<std::string>()));
            c.validate();
            return c;
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::malformed_config, std::string("formfill config: ") + e.what());
        }
    }

    [[nodiscard]] Json to_json() const {
        Json fields_json = Json::array();
        for (const auto& f : fields) fields_json.push_back({{"name", f.name}, {"value", f.value}});
        return Json{{"title", title}, {"fields", fields_json}, {"distractors", distractors}};
    }

    void validate() const {
        if (fields.empty()) throw Error(ErrorKind::malformed_config, "formfill: at least one required field");
        std::set<std::string> names;
        auto check = [&](const std::string& n) {
            if (n.empty() || n.find(' ') != std::string::npos)
                throw Error(ErrorKind::malformed_config, "formfill: field names must be single words");
            if (!names.insert(n).second)
                throw Error(ErrorKind::malformed_config, "formfill: duplicate field '" + n + "'");
        };
        for (const auto& f : fields) {
            check(f.name);
            if (f.value.empty())
                throw Error(ErrorKind::malformed_config, "formfill: field '" + f.name + "' needs a value");
        }
        for (const auto& d : distractors) check(d);
    }
};

/// Binary terminal reward: the only non-zero reward is 1 on a correct submit.
class FormFill final : public Environment {
public:
    FormFill(FormFillConfig config, int horizon) : Environment(1.0, horizon), config_(std::move(config)) {
        config_.validate();
        for (const auto& f : config_.fields) order_.push_back(f.name);
        for (const auto& d : config_.distractors) order_.push_back(d);
        std::sort(order_.begin(), order_.end());
    }

    [[nodiscard]] std::vector<std::string> reference_solution() const override {
        std::vector<std::string> script;
        for (const auto& f : config_.fields) script.push_back("fill " + f.name + " " + f.value);
        script.emplace_back("submit");
        return script;
    }

    [[nodiscard]] bool satisfied() const {
        for (const auto& f : config_.fields) {
            auto it = values_.find(f.name);
            if (it == values_.end() || it->second != f.value) return false;
        }
        return std::none_of(config_.distractors.begin(), config_.distractors.end(),
                            [&](const std::string& d) { return values_.count(d) != 0; });
    }

private:
    Observation do_reset() override {
        values_.clear();
        return {view(), false, 0.0};
    }

    Observation do_step(const std::string& raw) override {
        const std::string trimmed = text::trim(raw);
        const std::string cmd = text::normalize_command(trimmed);
        auto words = text::split(cmd, ' ');
        if (cmd == "submit") {
            return {satisfied() ? "Form submitted successfully." : "Form submitted. The submission was rejected.", true,
                    satisfied() ? 1.0 : 0.0};
        }
        if (cmd == "look") return {view(), false, 0.0};
        if (words.size() == 2 && words[0] == "clear") {
            if (!known(words[1])) return {"No such field: " + words[1] + ".\n\n" + view(), false, 0.0};
            values_.erase(words[1]);
            return {"Cleared " + words[1] + ".\n\n" + view(), false, 0.0};
        }
        // "fill <field> <value>" or "set <field> to <value>"; values keep their case.
        std::string field, value;
        if (words.size() >= 3 && words[0] == "fill") {
            field = words[1];
            value = value_after(trimmed, 2);
        } else if (words.size() >= 4 && words[0] == "set" && words[2] == "to") {
            field = words[1];
            value = value_after(trimmed, 3);
        } else {
            return {kNotUnderstood, false, 0.0};
        }
        if (!known(field)) return {"No such field: " + field + ".\n\n" + view(), false, 0.0};
        values_[field] = value;
        return {"Set " + field + ".\n\n" + view(), false, 0.0};
    }

    [[nodiscard]] bool known(const std::string& name) const {
        return std::find(order_.begin(), order_.end(), name) != order_.end();
    }

    /// Text after the first `n` whitespace-separated words, original case.
    static std::string value_after(std::string_view s, int n) {
        std::size_t pos = 0;
        for (int i = 0; i < n; ++i) {
            while (pos < s.size() && text::is_space(s[pos])) ++pos;
            while (pos < s.size() && !text::is_space(s[pos])) ++pos;
        }
        return text::trim(s.substr(pos));
    }

    [[nodiscard]] std::string view() const {
        std::string out = "Form: " + config_.title + "\nFields:\n";
        for (const auto& name : order_) {
            auto it = values_.find(name);
            out += "- " + name + ": " + (it == values_.end() ? std::string("(empty)") : it->second) + "\n";
        }
        out += "Commands: fill <field> <value>, clear <field>, submit";
        return out;
    }

    FormFillConfig config_;
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
};

}  // namespace ttlforge::env
