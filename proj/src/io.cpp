#include "io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace cutsel {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) {
        ++b;
    }
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) {
        --e;
    }
    return s.substr(b, e - b);
}

// Splits one line into fields; quoted fields may contain the delimiter, and
// doubled quotes escape a literal quote.
std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == delim) {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

// Strict full-token parse; empty or partial tokens fail.
bool parse_double(const std::string& raw, double& out) {
    const std::string s = trim(raw);
    if (s.empty()) {
        return false;
    }
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc{} && res.ptr == end && std::isfinite(out);
}

std::string join_rows(const std::vector<std::int64_t>& rows) {
    std::string s;
    const std::size_t shown = std::min<std::size_t>(rows.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) {
        if (i > 0) {
            s += ", ";
        }
        s += std::to_string(rows[i]);
    }
    if (rows.size() > shown) {
        s += " and " + std::to_string(rows.size() - shown) + " more";
    }
    return s;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path + " for writing");
    }
    f << content;
    f.flush();
    if (!f) {
        throw IoError("write failed for " + path);
    }
}

}  // namespace

CsvSchema CsvSchema::default_cbc() {
    CsvSchema s;
    s.outcome = "outcome";
    for (const char* name : {"Hg", "Ht", "MCHC", "MCV", "Er", "P", "RDW-CV", "Le", "IG", "N", "B",
                             "Eo", "M", "Ly", "N%", "B%", "Eo%", "M%", "Ly%", "age"}) {
        s.predictors.push_back({name, CsvColumn::Kind::continuous});
    }
    s.predictors.push_back({"alarm", CsvColumn::Kind::binary});
    s.predictors.push_back({"sex", CsvColumn::Kind::binary});
    s.outcome_values = {{"normal", 0}, {"abnormal", 1}};
    return s;
}

void CsvSchema::validate() const {
    if (outcome.empty()) {
        throw InvalidArgument("csv schema: empty outcome column name");
    }
    std::set<std::string> seen{outcome};
    for (const CsvColumn& c : predictors) {
        if (c.name.empty()) {
            throw InvalidArgument("csv schema: empty predictor column name");
        }
        if (!seen.insert(c.name).second) {
            throw InvalidArgument("csv schema: column " + c.name + " listed twice");
        }
    }
    if (delimiter == '"' || delimiter == '\n' || delimiter == '\r') {
        throw InvalidArgument("csv schema: unsupported delimiter");
    }
    for (const auto& [text, value] : outcome_values) {
        if (value != 0 && value != 1) {
            throw InvalidArgument("csv schema: outcome coercion for '" + text +
                                  "' must map to 0 or 1");
        }
    }
}

ReadResult read_dataset(const std::string& path, const CsvSchema& schema) {
    schema.validate();
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path);
    }
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        content.erase(0, 3);  // UTF-8 byte-order mark
    }

    std::vector<std::string> lines;
    std::string cur;
    for (char c : content) {
        if (c == '\n') {
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        lines.push_back(std::move(cur));
    }
    if (lines.empty()) {
        throw DataError("no usable rows in " + path + ": file is empty");
    }

    const std::vector<std::string> header_raw = split_fields(lines[0], schema.delimiter);
    std::vector<std::string> header;
    header.reserve(header_raw.size());
    for (const std::string& h : header_raw) {
        header.push_back(trim(h));
    }
    const auto column_of = [&](const std::string& name) {
        std::int64_t found = -1;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) {
                if (found >= 0) {
                    throw DataError("column " + name + " appears twice in " + path);
                }
                found = static_cast<std::int64_t>(j);
            }
        }
        return found;
    };

    const std::int64_t outcome_col = column_of(schema.outcome);
    if (outcome_col < 0) {
        throw DataError("outcome column " + schema.outcome + " missing from " + path);
    }

    std::vector<CsvColumn> columns = schema.predictors;
    if (columns.empty()) {
        for (const std::string& h : header) {
            if (h != schema.outcome) {
                columns.push_back({h, CsvColumn::Kind::continuous});
            }
        }
        if (columns.empty()) {
            throw DataError("no predictor columns in " + path);
        }
    }
    std::vector<std::int64_t> column_index;
    std::vector<std::string> names;
    for (const CsvColumn& c : columns) {
        const std::int64_t j = column_of(c.name);
        if (j < 0) {
            throw DataError("predictor column " + c.name + " missing from " + path);
        }
        column_index.push_back(j);
        names.push_back(c.name);
    }

    std::vector<double> features;
    std::vector<std::int8_t> outcome;
    std::vector<std::int64_t> bad_outcome_lines;
    std::int64_t dropped = 0;
    std::vector<double> row(columns.size());

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string& line = lines[li];
        if (trim(line).empty()) {
            continue;  // blank line, typically trailing
        }
        const std::int64_t file_line = static_cast<std::int64_t>(li) + 1;
        const std::vector<std::string> fields = split_fields(line, schema.delimiter);
        if (fields.size() != header.size()) {
            ++dropped;
            continue;
        }
        bool usable = true;
        for (std::size_t k = 0; k < columns.size() && usable; ++k) {
            double v = 0.0;
            if (!parse_double(fields[static_cast<std::size_t>(column_index[k])], v)) {
                usable = false;
            } else if (columns[k].kind == CsvColumn::Kind::binary && v != 0.0 && v != 1.0) {
                usable = false;
            } else {
                row[k] = v;
            }
        }
        if (!usable) {
            ++dropped;
            continue;
        }
        const std::string raw = trim(fields[static_cast<std::size_t>(outcome_col)]);
        if (raw.empty()) {
            ++dropped;
            continue;
        }
        int y;
        const auto mapped = schema.outcome_values.find(raw);
        if (mapped != schema.outcome_values.end()) {
            y = mapped->second;
        } else {
            double v = 0.0;
            if (!parse_double(raw, v)) {
                ++dropped;
                continue;
            }
            if (v != 0.0 && v != 1.0) {
                bad_outcome_lines.push_back(file_line);
                continue;
            }
            y = static_cast<int>(v);
        }
        features.insert(features.end(), row.begin(), row.end());
        outcome.push_back(static_cast<std::int8_t>(y));
    }

    if (!bad_outcome_lines.empty()) {
        throw DataError("outcome column " + schema.outcome +
                        " has values outside {0,1} at lines " + join_rows(bad_outcome_lines) +
                        " of " + path);
    }
    if (outcome.empty()) {
        throw DataError("no usable rows in " + path);
    }
    ReadResult res{Dataset(std::move(features), std::move(outcome), std::move(names)), dropped};
    return res;
}

void write_dataset(const Dataset& data, const std::string& path, char delimiter,
                   const std::string& outcome_name) {
    std::string out;
    for (std::int64_t j = 0; j < data.cols(); ++j) {
        out += data.name(j);
        out.push_back(delimiter);
    }
    out += outcome_name;
    out.push_back('\n');
    for (std::int64_t i = 0; i < data.rows(); ++i) {
        for (std::int64_t j = 0; j < data.cols(); ++j) {
            out += format_exact(data.value(i, j));
            out.push_back(delimiter);
        }
        out += std::to_string(static_cast<int>(data.outcome()[static_cast<std::size_t>(i)]));
        out.push_back('\n');
    }
    write_text_file(path, out);
}

std::string format_probability(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

std::string format_exact(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

nlohmann::ordered_json report_to_json(const Report& report) {
    nlohmann::ordered_json j;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(report.config.dump())));
    j["meta"] = {{"tool", "cutpoint-select"},
                 {"version", "0.1.0"},
                 {"mode", report.mode},
                 {"timestamp", report.timestamp},
                 {"seed", report.seed},
                 {"config_hash", hash}};
    j["config"] = report.config;
    j["predictors"] = report.predictor_names;

    nlohmann::ordered_json grid = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < report.grid.cutpoints.size(); ++p) {
        grid.push_back({{"predictor", report.predictor_names.at(p)},
                        {"cutpoints", report.grid.cutpoints[p]}});
    }
    j["grid"] = std::move(grid);

    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < report.stability.probabilities.size(); ++c) {
        const ColumnInfo& info = report.stability.columns.at(c);
        table.push_back(
            {{"predictor", report.predictor_names.at(static_cast<std::size_t>(info.predictor))},
             {"cutpoint", info.cutpoint},
             {"probability", report.stability.probabilities[c]}});
    }
    j["stability"] = {{"subsamples", report.stability.subsamples},
                      {"failed", report.stability.failed},
                      {"omega", report.stability.omega},
                      {"threshold", report.threshold},
                      {"probabilities", std::move(table)},
                      {"warnings", report.stability.warnings}};

    nlohmann::ordered_json cuts = nlohmann::ordered_json::array();
    for (const CutoffRecommendation& r : report.cutoffs) {
        cuts.push_back(
            {{"predictor", report.predictor_names.at(static_cast<std::size_t>(r.predictor))},
             {"cutoff", r.cutoff},
             {"probability", r.probability},
             {"merged", r.merged},
             {"absorbed", r.absorbed}});
    }
    j["cutoffs"] = std::move(cuts);

    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < report.step_functions.size(); ++p) {
        steps.push_back({{"predictor", report.predictor_names.at(p)},
                         {"breakpoints", report.step_functions[p].breakpoints},
                         {"levels", report.step_functions[p].levels}});
    }
    j["step_functions"] = std::move(steps);
    j["notes"] = report.notes;
    if (!report.extra.is_null()) {
        j["extra"] = report.extra;
    }
    return j;
}

std::string render_selection_probabilities_csv(const Report& report) {
    std::string out = "predictor,cutpoint,probability\n";
    for (std::size_t c = 0; c < report.stability.probabilities.size(); ++c) {
        const ColumnInfo& info = report.stability.columns.at(c);
        out += report.predictor_names.at(static_cast<std::size_t>(info.predictor));
        out.push_back(',');
        out += format_exact(info.cutpoint);
        out.push_back(',');
        out += format_probability(report.stability.probabilities[c]);
        out.push_back('\n');
    }
    return out;
}

std::string render_cutoffs_csv(const Report& report) {
    std::string out = "predictor,cutoff,probability,merged,absorbed\n";
    for (const CutoffRecommendation& r : report.cutoffs) {
        out += report.predictor_names.at(static_cast<std::size_t>(r.predictor));
        out.push_back(',');
        out += format_exact(r.cutoff);
        out.push_back(',');
        out += format_probability(r.probability);
        out.push_back(',');
        out += r.merged ? "1" : "0";
        out.push_back(',');
        for (std::size_t i = 0; i < r.absorbed.size(); ++i) {
            if (i > 0) {
                out.push_back(';');
            }
            out += format_exact(r.absorbed[i]);
        }
        out.push_back('\n');
    }
    return out;
}

std::string render_selection_svg(const Report& report) {
    const int panel_w = 240;
    const int panel_h = 150;
    const int margin = 16;
    const int label_h = 16;
    const int per_row = 4;
    const std::size_t panels = report.grid.cutpoints.size();
    const int rows = static_cast<int>((panels + per_row - 1) / per_row);
    const int width = per_row * (panel_w + margin) + margin;
    const int height = std::max(1, rows) * (panel_h + label_h + margin) + margin;

    // Column probabilities keyed by (predictor, cut index).
    std::vector<std::vector<double>> probs(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        probs[p].assign(report.grid.cutpoints[p].size(), 0.0);
    }
    const bool have_probs = !report.stability.probabilities.empty();
    for (std::size_t c = 0; c < report.stability.probabilities.size(); ++c) {
        const ColumnInfo& info = report.stability.columns.at(c);
        probs.at(static_cast<std::size_t>(info.predictor))
            .at(static_cast<std::size_t>(info.cut_index)) = report.stability.probabilities[c];
    }

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
           std::to_string(width) + " " + std::to_string(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < panels; ++p) {
        const int col = static_cast<int>(p) % per_row;
        const int row = static_cast<int>(p) / per_row;
        const double x0 = margin + col * (panel_w + margin);
        const double y0 = margin + row * (panel_h + label_h + margin) + label_h;
        const std::string name =
            p < report.predictor_names.size() ? report.predictor_names[p] : std::to_string(p);

        svg += "<g>\n";
        svg += "<text x=\"" + format_coord(x0) + "\" y=\"" + format_coord(y0 - 4) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(name) +
               "</text>\n";
        svg += "<rect x=\"" + format_coord(x0) + "\" y=\"" + format_coord(y0) + "\" width=\"" +
               std::to_string(panel_w) + "\" height=\"" + std::to_string(panel_h) +
               "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

        const double thr_y = y0 + panel_h * (1.0 - report.threshold);
        svg += "<line x1=\"" + format_coord(x0) + "\" y1=\"" + format_coord(thr_y) + "\" x2=\"" +
               format_coord(x0 + panel_w) + "\" y2=\"" + format_coord(thr_y) +
               "\" stroke=\"#cc3333\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";

        const std::vector<double>& cuts = report.grid.cutpoints[p];
        if (!cuts.empty() && have_probs) {
            const double lo = cuts.front();
            const double hi = cuts.back();
            const double span = hi > lo ? hi - lo : 1.0;
            const double pad = 0.05 * span;
            const auto sx = [&](double v) {
                return x0 + (v - lo + pad) / (span + 2.0 * pad) * panel_w;
            };
            const auto sy = [&](double v) { return y0 + panel_h * (1.0 - v); };
            if (cuts.size() > 1) {
                std::string points;
                for (std::size_t k = 0; k < cuts.size(); ++k) {
                    if (k > 0) {
                        points.push_back(' ');
                    }
                    points += format_coord(sx(cuts[k])) + "," + format_coord(sy(probs[p][k]));
                }
                svg += "<polyline fill=\"none\" stroke=\"#3366bb\" stroke-width=\"1.5\" "
                       "points=\"" + points + "\"/>\n";
            }
            for (std::size_t k = 0; k < cuts.size(); ++k) {
                svg += "<circle cx=\"" + format_coord(sx(cuts[k])) + "\" cy=\"" +
                       format_coord(sy(probs[p][k])) + "\" r=\"2.2\" fill=\"#3366bb\"/>\n";
            }
        }
        svg += "</g>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write_report(const Report& report, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
    }
    const std::filesystem::path dir(out_dir);
    write_text_file((dir / "selection_probabilities.csv").string(),
                    render_selection_probabilities_csv(report));
    write_text_file((dir / "cutoffs.csv").string(), render_cutoffs_csv(report));
    write_text_file((dir / "report.json").string(), report_to_json(report).dump(2) + "\n");
    write_text_file((dir / "selection_probabilities.svg").string(),
                    render_selection_svg(report));
}

namespace {

bool type_matches(const nlohmann::json& value, const std::string& type) {
    if (type == "object") {
        return value.is_object();
    }
    if (type == "array") {
        return value.is_array();
    }
    if (type == "string") {
        return value.is_string();
    }
    if (type == "number") {
        return value.is_number();
    }
    if (type == "integer") {
        return value.is_number_integer() || value.is_number_unsigned();
    }
    if (type == "boolean") {
        return value.is_boolean();
    }
    if (type == "null") {
        return value.is_null();
    }
    return false;
}

void validate_node(const nlohmann::json& value, const nlohmann::json& schema,
                   const std::string& path, std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        const std::string type = schema["type"].get<std::string>();
        if (!type_matches(value, type)) {
            errors.push_back(path + ": expected " + type + ", got " +
                             std::string(value.type_name()));
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& candidate : schema["enum"]) {
            if (value == candidate) {
                found = true;
                break;
            }
        }
        if (!found) {
            errors.push_back(path + ": value not in enum");
        }
    }
    if (value.is_object()) {
        if (schema.contains("required")) {
            for (const auto& key : schema["required"]) {
                if (!value.contains(key.get<std::string>())) {
                    errors.push_back(path + ": missing required key " + key.get<std::string>());
                }
            }
        }
        const bool closed = schema.contains("additionalProperties") &&
                            schema["additionalProperties"].is_boolean() &&
                            !schema["additionalProperties"].get<bool>();
        const auto& props =
            schema.contains("properties") ? schema["properties"] : nlohmann::json::object();
        for (const auto& [key, sub] : value.items()) {
            if (props.contains(key)) {
                validate_node(sub, props[key], path + "." + key, errors);
            } else if (closed) {
                errors.push_back(path + ": unexpected key " + key);
            }
        }
    }
    if (value.is_array() && schema.contains("items")) {
        std::size_t i = 0;
        for (const auto& item : value) {
            validate_node(item, schema["items"], path + "[" + std::to_string(i) + "]", errors);
            ++i;
        }
    }
}

}  // namespace

std::vector<std::string> validate_json(const nlohmann::json& value,
                                       const nlohmann::json& schema) {
    std::vector<std::string> errors;
    validate_node(value, schema, "$", errors);
    return errors;
}

}  // namespace cutsel
