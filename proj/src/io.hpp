#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "design.hpp"
#include "grid.hpp"
#include "stability.hpp"

namespace cutsel {

// One expected input column.
struct CsvColumn {
    enum class Kind { continuous, binary };

    std::string name;
    Kind kind = Kind::continuous;
};

// Shape of an input CSV: comma-separated, dot decimals, header row, UTF-8.
// Only the delimiter is configurable.
struct CsvSchema {
    std::string outcome = "outcome";
    // Expected predictor columns. Empty: every non-outcome column of the
    // file, read as continuous.
    std::vector<CsvColumn> predictors;
    char delimiter = ',';
    // Textual outcome coercion, e.g. {"normal", 0}, {"abnormal", 1}. Plain
    // numeric 0/1 outcomes are always accepted.
    std::map<std::string, int> outcome_values;

    // Blood-count style schema: the 20 continuous panel columns plus the
    // binary alarm and sex flags, outcome column "outcome" with the
    // normal/abnormal coercion.
    static CsvSchema default_cbc();
    void validate() const;
};

struct ReadResult {
    Dataset data;
    std::int64_t dropped = 0;  // rows removed for missing or unparseable cells
};

// Reads a CSV into a Dataset. Rows with missing or unparseable cells are
// dropped and counted; binary columns must hold 0/1 (anything else counts as
// unparseable). A missing outcome column, zero usable rows, or outcome values
// outside {0,1} after coercion are errors; the latter lists the offending
// file lines.
ReadResult read_dataset(const std::string& path, const CsvSchema& schema);

// Writes the dataset with full floating-point precision, so reading it back
// with the matching schema reproduces it exactly.
void write_dataset(const Dataset& data, const std::string& path, char delimiter = ',',
                   const std::string& outcome_name = "outcome");

// Everything a finished run reports. Written as four files: two CSV tables,
// a JSON document, and an SVG panel plot. Output bytes depend only on the
// fields here, so a fixed timestamp makes reruns byte-identical.
struct Report {
    std::string mode = "stability";  // fit | stability | simulate
    std::string timestamp;           // ISO-8601; caller-fixed for reproducibility
    std::uint64_t seed = 0;
    nlohmann::ordered_json config;   // fully resolved run configuration
    std::vector<std::string> predictor_names;
    CutpointGrid grid;
    StabilityResult stability;       // may be empty (fit mode)
    double threshold = 0.75;
    std::vector<CutoffRecommendation> cutoffs;
    // Fitted step function per predictor; empty or one per predictor.
    std::vector<StepFunction> step_functions;
    nlohmann::ordered_json extra;    // mode-specific payload
    std::vector<std::string> notes;
};

// Probabilities are printed with 9 significant digits.
std::string format_probability(double value);
// Values that must survive a write-read round trip bit-exactly.
std::string format_exact(double value);

// FNV-1a 64-bit hash; used to fingerprint the resolved configuration.
std::uint64_t fnv1a64(std::string_view text);

nlohmann::ordered_json report_to_json(const Report& report);
std::string render_selection_probabilities_csv(const Report& report);
std::string render_cutoffs_csv(const Report& report);
// One panel per predictor in the grid: probability against cutpoint with the
// selection threshold drawn as a dashed line.
std::string render_selection_svg(const Report& report);

// Writes selection_probabilities.csv, cutoffs.csv, report.json and
// selection_probabilities.svg into out_dir (created if needed).
void write_report(const Report& report, const std::string& out_dir);

// Minimal JSON-schema check (type, required, properties, items,
// additionalProperties, enum). Returns human-readable mismatches, empty when
// the value conforms.
std::vector<std::string> validate_json(const nlohmann::json& value,
                                       const nlohmann::json& schema);

}  // namespace cutsel
