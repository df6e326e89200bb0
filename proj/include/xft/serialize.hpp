#pragma once

// File formats: full-precision CSV tables for histories and classes, and
// JSON encoding of reports. Numbers use 17 significant digits; infinities
// serialize as "+inf"/"-inf" (and undefined values as "nan").

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "xft/history.hpp"
#include "xft/theorems.hpp"
#include "xft/thermal.hpp"

namespace xft {

using nlohmann::json;

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "+inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// JSON has no inf/nan literals; encode them as the same string sentinels the
// CSV tables use.
inline json json_number(double x) {
    if (std::isfinite(x)) return json(x);
    return json(format_number(x));
}

inline std::string histories_csv(const HistorySet& set) {
    std::string out = "phi,chi,phi_p,chi_p,prob,q,delta_eps,delta_I,reverse_id\n";
    for (const History& h : set.histories) {
        out += std::to_string(h.phi) + ',' + std::to_string(h.chi) + ',' + std::to_string(h.phi_p) + ',' +
               std::to_string(h.chi_p) + ',' + format_number(h.prob) + ',' + format_number(h.q) + ',' +
               format_number(h.delta_eps) + ',' + format_number(h.delta_i) + ',' +
               std::to_string(h.reverse_id) + '\n';
    }
    return out;
}

inline std::string classes_csv(const ClassTable& table) {
    std::string out = "q,delta_eps,prob,delta_I_l,delta_I_u,member_count\n";
    for (const TransitionClass& cls : table.classes) {
        out += format_number(cls.q) + ',' + format_number(cls.delta_eps) + ',' + format_number(cls.prob) +
               ',' + format_number(cls.delta_i_l) + ',' + format_number(cls.delta_i_u) + ',' +
               std::to_string(cls.member_ids.size()) + '\n';
    }
    return out;
}

inline json to_json(const TheoremReport& report) {
    json j;
    j["name"] = report.name;
    j["pass"] = report.pass;
    j["tolerance"] = json_number(report.tolerance);
    j["max_violation"] = json_number(report.max_violation);
    j["skipped_pairs"] = report.skipped_pairs;
    json values = json::object();
    for (const auto& [key, value] : report.values) values[key] = json_number(value);
    j["values"] = values;
    return j;
}

inline json to_json(const MarginalReport& report) {
    json j;
    j["deviation_a"] = json_number(report.deviation_a);
    j["deviation_b"] = json_number(report.deviation_b);
    j["tolerance"] = json_number(report.tolerance);
    j["pass"] = report.pass;
    return j;
}

inline json to_json(const ValidationReport& report) {
    json j;
    j["valid_states"] = report.valid_states;
    j["closed"] = report.closed;
    j["failures"] = report.failures;
    j["pass"] = report.pass();
    return j;
}

inline json to_json(const TransitionClass& cls) {
    json j;
    j["q"] = json_number(cls.q);
    j["delta_eps"] = json_number(cls.delta_eps);
    j["prob"] = json_number(cls.prob);
    j["delta_I_l"] = json_number(cls.delta_i_l);
    j["delta_I_u"] = json_number(cls.delta_i_u);
    j["member_count"] = cls.member_ids.size();
    return j;
}

inline json to_json(const MaxWorkReport& report) {
    json j;
    j["axis"] = report.axis;
    j["value_from"] = json_number(report.value_from);
    j["value_to"] = json_number(report.value_to);
    j["dU_A"] = json_number(report.du_a);
    j["dq_mean"] = json_number(report.dq_mean);
    j["dS_A"] = json_number(report.ds_a);
    j["dI_mean"] = json_number(report.di_mean);
    j["work_bound"] = json_number(report.work_bound);
    return j;
}

// Write via a temporary in the same directory and rename, so readers never
// observe partial files.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw XftError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out.good()) throw XftError("write to " + tmp.string() + " failed");
    }
    std::filesystem::rename(tmp, path);
}

} // namespace xft
